use fpcav_core::analysis::{amplitude_spectrum, cycle_phase_rms, DisplacementTrace, SpectrumOptions};
use fpcav_core::constants::PICOMETER;
use fpcav_core::synth::{builtin_scenario, synth_displacement, NoiseComponent, NoiseModel, Scenario};
use proptest::prelude::*;

fn sine(amplitude: f64, frequency: f64, phase: f64) -> NoiseComponent {
    NoiseComponent::Sine {
        amplitude,
        frequency,
        phase,
    }
}

#[test]
fn three_kilohertz_line() {
    let rms = 10.0 * PICOMETER;
    let model = NoiseModel {
        components: vec![sine(rms * 2f64.sqrt(), 3e3, 0.0)],
        seed: 0,
    };
    let d = synth_displacement(&model, 10.0, 1e6).unwrap();
    let s = amplitude_spectrum(&d.trace, &SpectrumOptions::default()).unwrap();
    let lines = s.lines(10.0, 50);
    assert_eq!(lines.len(), 1, "{lines:?}");
    assert!((lines[0] - 3e3).abs() <= s.resolution);
    let step = s.band_rms(2.9e3, 3.1e3);
    assert!((step / rms - 1.0).abs() < 0.02, "{}", step / PICOMETER);
    // Cumulative RMS below and above the line.
    let below = s.band_rms(0.0, 2.9e3);
    assert!(below < 0.05 * rms);
    assert!(s.averages >= 8);
}

#[test]
fn white_noise_is_flat() {
    let sigma = 5.0 * PICOMETER;
    for seed in 0..5 {
        let model = NoiseModel {
            components: vec![NoiseComponent::White { amplitude: sigma }],
            seed,
        };
        let d = synth_displacement(&model, 2.0, 50e3).unwrap();
        let s = amplitude_spectrum(&d.trace, &SpectrumOptions::default()).unwrap();
        assert!((s.total_rms() / sigma - 1.0).abs() < 0.05);
        let n = s.asd.len();
        let mean = |a: &[f64]| a.iter().sum::<f64>() / a.len() as f64;
        let (lo, hi) = (mean(&s.asd[1..n / 2]), mean(&s.asd[n / 2..n - 1]));
        assert!((lo / hi - 1.0).abs() < 0.05, "{lo:e} {hi:e}");
        // One-sided white ASD: σ/√(fs/2).
        assert!((lo / (sigma / (25e3f64).sqrt()) - 1.0).abs() < 0.05);
    }
}

#[test]
fn cold_head_lines() {
    let Scenario::Vibration(v) = builtin_scenario("hila-default").unwrap().scenario else {
        unreachable!()
    };
    let d = v.displacement().unwrap();
    let s = amplitude_spectrum(&d.trace, &SpectrumOptions::default()).unwrap();
    let lines = s.lines(5.0, 50);
    for f in [1.4, 2.8, 4.2, 2300.0, 2900.0, 3700.0] {
        assert!(
            lines.iter().any(|l| (l - f).abs() <= 2.0 * s.resolution),
            "no line at {f} Hz in {:?}",
            &lines[..lines.len().min(12)]
        );
    }
    assert!((s.total_rms() / d.analytic_rms - 1.0).abs() < 0.05);
}

#[test]
fn burst_localised_in_cycle_phase() {
    let model = NoiseModel {
        components: vec![
            NoiseComponent::Burst {
                amplitude: 100.0 * PICOMETER,
                frequency: 500.0,
                cycle_period: 0.7,
                phase: 0.25,
                decay: 0.03,
            },
            NoiseComponent::White {
                amplitude: 5.0 * PICOMETER,
            },
        ],
        seed: 4,
    };
    let d = synth_displacement(&model, 14.0, 20e3).unwrap();
    let bins = cycle_phase_rms(&d.trace, 0.7, 20).unwrap();
    let peak = bins.iter().max_by(|a, b| a.rms.total_cmp(&b.rms)).unwrap();
    assert!((0.25..0.35).contains(&peak.phase), "{}", peak.phase);
    // Far from the kick only the floor remains.
    let quiet = bins.iter().find(|b| (b.phase - 0.875).abs() < 0.03).unwrap();
    assert!(quiet.rms < 0.2 * peak.rms);
    assert_eq!(bins.iter().map(|b| b.count).sum::<usize>(), d.trace.samples.len());
}

#[test]
fn c2_default_kick_at_quarter_cycle() {
    let Scenario::Vibration(v) = builtin_scenario("c2-default").unwrap().scenario else {
        unreachable!()
    };
    let d = v.displacement().unwrap();
    let bins = cycle_phase_rms(&d.trace, v.cycle_period.unwrap(), 24).unwrap();
    let peak = bins.iter().max_by(|a, b| a.rms.total_cmp(&b.rms)).unwrap();
    assert!((0.25..0.30).contains(&peak.phase), "{}", peak.phase);
}

#[test]
fn concatenated_segments_give_the_same_spectrum() {
    // Spectra of a trace depend only on its samples, not on how they were
    // generated: the generator is chunk-independent.
    let model = NoiseModel {
        components: vec![NoiseComponent::White { amplitude: 1.0 }, sine(0.5, 123.0, 0.2)],
        seed: 77,
    };
    let a = synth_displacement(&model, 4.0, 40e3).unwrap();
    let b = synth_displacement(&model, 4.0, 40e3).unwrap();
    let sa = amplitude_spectrum(&a.trace, &SpectrumOptions::default()).unwrap();
    let sb = amplitude_spectrum(&b.trace, &SpectrumOptions::default()).unwrap();
    assert_eq!(sa.asd, sb.asd);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn parseval(
        amps in prop::collection::vec(0.0f64..20.0, 1..4),
        freqs in prop::collection::vec(5.0f64..4000.0, 4),
        white in 0.0f64..20.0,
        seed in 0u64..1000,
        duration in 1.0f64..3.0,
    ) {
        let mut components: Vec<NoiseComponent> = amps
            .iter()
            .zip(&freqs)
            .map(|(&a, &f)| sine(a * PICOMETER, f, 0.1 * f))
            .collect();
        components.push(NoiseComponent::White { amplitude: white * PICOMETER });
        let model = NoiseModel { components, seed };
        let d = synth_displacement(&model, duration, 10e3).unwrap();
        prop_assume!(d.trace.rms > 0.0);
        let s = amplitude_spectrum(&d.trace, &SpectrumOptions::default()).unwrap();
        prop_assert!((s.total_rms() / d.trace.rms - 1.0).abs() < 0.05, "{} vs {}", s.total_rms(), d.trace.rms);
        prop_assert!(s.integrated_rms.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn spectrum_scales_linearly(alpha in 0.01f64..100.0) {
        let model = NoiseModel { components: vec![NoiseComponent::White { amplitude: 1.0 }], seed: 3 };
        let d = synth_displacement(&model, 1.0, 4e3).unwrap();
        let scaled = DisplacementTrace::new(d.trace.samples.iter().map(|x| alpha * x).collect(), 4e3).unwrap();
        let a = amplitude_spectrum(&d.trace, &SpectrumOptions::default()).unwrap();
        let b = amplitude_spectrum(&scaled, &SpectrumOptions::default()).unwrap();
        for (x, y) in a.asd.iter().zip(&b.asd) {
            prop_assert!((y - alpha * x).abs() <= 1e-12 * alpha * x.abs().max(1e-300) + 1e-300);
        }
    }
}
