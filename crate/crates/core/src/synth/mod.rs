//! Seeded synthetic signals with known ground truth.
//!
//! Randomness comes from ChaCha8. Every random sequence is addressed by a
//! `(seed, stream)` pair; long sequences are cut into chunks of
//! [`CHUNK`] samples, chunk `k` of stream `s` drawing from ChaCha stream
//! `s << 24 | k`. Any chunk can therefore be generated independently and
//! the output does not depend on evaluation order.

mod scenario;
mod signals;

pub use scenario::{
    builtin_scenario, builtin_scenario_names, CalibrationSpec, GeometrySpec, OdmrScenario, ScanScenario, Scenario,
    ScenarioFile, SpuriousPeaks, VibrationScenario, WhiteLightScenario, SCENARIO_FORMAT_VERSION,
};
pub use signals::{
    synth_odmr, synth_swept_scan, synth_transmission_trace, synth_white_light_spectrum, OdmrLine, ScanConfig,
};

use crate::analysis::DisplacementTrace;
use crate::error::{Error, Result};
use crate::units;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Samples per independently seeded chunk.
pub const CHUNK: usize = 1 << 16;

/// Stream ids below this are reserved for noise-model components.
const COMPONENT_STREAMS: u64 = 1 << 20;
pub(crate) const DETECTOR_STREAM: u64 = COMPONENT_STREAMS;
pub(crate) const JITTER_STREAM: u64 = COMPONENT_STREAMS + 1;
pub(crate) const PHASE_STREAM: u64 = COMPONENT_STREAMS + 2;

pub(crate) fn stream_rng(seed: u64, stream: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((stream << 24) | chunk);
    rng
}

/// Standard normal draws for samples `0..out.len()` of `(seed, stream)`,
/// scaled by `sigma` and added to `out`.
pub(crate) fn add_normal(seed: u64, stream: u64, sigma: f64, out: &mut [f64]) {
    if sigma == 0.0 {
        return;
    }
    for (k, chunk) in out.chunks_mut(CHUNK).enumerate() {
        let mut rng = stream_rng(seed, stream, k as u64);
        for x in chunk {
            let z: f64 = rng.sample(StandardNormal);
            *x += sigma * z;
        }
    }
}

/// One additive displacement source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseComponent {
    /// `amplitude·sin(2πft + phase)`.
    Sine {
        #[serde(with = "units::length")]
        amplitude: f64,
        #[serde(with = "units::frequency")]
        frequency: f64,
        /// [rad]
        #[serde(default)]
        phase: f64,
    },
    /// Gaussian white noise of standard deviation `amplitude`.
    White {
        #[serde(with = "units::length")]
        amplitude: f64,
    },
    /// Once per cycle, starting at `phase·cycle_period` into the cycle, a
    /// ringdown `amplitude·e^{−u/decay}·sin(2πfu)` lasting until the next
    /// cycle starts.
    Burst {
        #[serde(with = "units::length")]
        amplitude: f64,
        #[serde(with = "units::frequency")]
        frequency: f64,
        #[serde(with = "units::time")]
        cycle_period: f64,
        /// Fraction of the cycle.
        #[serde(default)]
        phase: f64,
        #[serde(with = "units::time")]
        decay: f64,
    },
    /// Harmonics `k = 1..=harmonics` of `frequency` with amplitudes
    /// `amplitude·ratio^(k−1)` and seeded random phases.
    HarmonicComb {
        #[serde(with = "units::length")]
        amplitude: f64,
        #[serde(with = "units::frequency")]
        frequency: f64,
        harmonics: u32,
        #[serde(default = "default_ratio")]
        ratio: f64,
    },
}

fn default_ratio() -> f64 {
    1.0
}

impl NoiseComponent {
    fn validate(&self, sample_rate: f64) -> Result<()> {
        let nyquist = sample_rate / 2.0;
        let check_freq = |f: f64| -> Result<()> {
            if !(f > 0.0 && f.is_finite()) {
                return Err(Error::domain(format!(
                    "component frequency must be positive, got {f} Hz"
                )));
            }
            if f > nyquist {
                return Err(Error::domain(format!(
                    "component at {f} Hz exceeds the Nyquist frequency {nyquist} Hz"
                )));
            }
            Ok(())
        };
        let amplitude = match *self {
            NoiseComponent::Sine {
                amplitude, frequency, ..
            } => {
                check_freq(frequency)?;
                amplitude
            }
            NoiseComponent::White { amplitude } => amplitude,
            NoiseComponent::Burst {
                amplitude,
                frequency,
                cycle_period,
                decay,
                phase,
            } => {
                check_freq(frequency)?;
                if !(cycle_period > 0.0) || !(decay > 0.0) || !(0.0..1.0).contains(&phase) {
                    return Err(Error::domain(
                        "burst needs cycle_period > 0, decay > 0 and phase in [0, 1)",
                    ));
                }
                amplitude
            }
            NoiseComponent::HarmonicComb {
                amplitude,
                frequency,
                harmonics,
                ratio,
            } => {
                check_freq(frequency * f64::from(harmonics.max(1)))?;
                if !(ratio >= 0.0) {
                    return Err(Error::domain("comb ratio must be ≥ 0"));
                }
                amplitude
            }
        };
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(Error::domain(format!("amplitude must be ≥ 0, got {amplitude:e}")));
        }
        Ok(())
    }

    /// Long-time RMS of the component.
    pub fn analytic_rms(&self) -> f64 {
        match *self {
            NoiseComponent::Sine { amplitude, .. } => amplitude / 2f64.sqrt(),
            NoiseComponent::White { amplitude } => amplitude,
            NoiseComponent::Burst {
                amplitude,
                frequency,
                cycle_period,
                decay,
                ..
            } => {
                // (1/T)∫₀ᵀ e^{−βu} sin²(ωu) du with β = 2/decay.
                let (beta, w2, t) = (2.0 / decay, 2.0 * TAU * frequency, cycle_period);
                let plain = (1.0 - (-beta * t).exp()) / beta;
                let e = (-beta * t).exp();
                let re = (beta * (1.0 - e * (w2 * t).cos()) - w2 * e * (w2 * t).sin()) / (beta * beta + w2 * w2);
                let mean_sq = 0.5 * (plain - re) / t;
                amplitude * mean_sq.max(0.0).sqrt()
            }
            NoiseComponent::HarmonicComb {
                amplitude,
                harmonics,
                ratio,
                ..
            } => {
                let sum: f64 = (0..harmonics).map(|k| (amplitude * ratio.powi(k as i32)).powi(2)).sum();
                (sum / 2.0).sqrt()
            }
        }
    }

    fn add_to(&self, seed: u64, index: usize, sample_rate: f64, out: &mut [f64]) {
        let time = |i: usize| i as f64 / sample_rate;
        match *self {
            NoiseComponent::Sine {
                amplitude,
                frequency,
                phase,
            } => {
                for (i, x) in out.iter_mut().enumerate() {
                    *x += amplitude * (TAU * frequency * time(i) + phase).sin();
                }
            }
            NoiseComponent::White { amplitude } => add_normal(seed, index as u64, amplitude, out),
            NoiseComponent::Burst {
                amplitude,
                frequency,
                cycle_period,
                phase,
                decay,
            } => {
                for (i, x) in out.iter_mut().enumerate() {
                    let u = (time(i) - phase * cycle_period).rem_euclid(cycle_period);
                    *x += amplitude * (-u / decay).exp() * (TAU * frequency * u).sin();
                }
            }
            NoiseComponent::HarmonicComb {
                amplitude,
                frequency,
                harmonics,
                ratio,
            } => {
                let mut rng = stream_rng(seed, PHASE_STREAM, index as u64);
                for k in 1..=harmonics {
                    let a = amplitude * ratio.powi(k as i32 - 1);
                    let phi: f64 = rng.random_range(0.0..TAU);
                    let f = frequency * f64::from(k);
                    for (i, x) in out.iter_mut().enumerate() {
                        *x += a * (TAU * f * time(i) + phi).sin();
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub components: Vec<NoiseComponent>,
    #[serde(default)]
    pub seed: u64,
}

impl NoiseModel {
    /// RMS of the sum, assuming uncorrelated components.
    pub fn analytic_rms(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.analytic_rms().powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDisplacement {
    pub trace: DisplacementTrace,
    /// RMS predicted from the component parameters [m].
    pub analytic_rms: f64,
}

/// Sum of all components sampled at `sample_rate` for `duration`.
pub fn synth_displacement(model: &NoiseModel, duration: f64, sample_rate: f64) -> Result<SyntheticDisplacement> {
    if !(sample_rate > 0.0) || !(duration > 0.0) {
        return Err(Error::domain("duration and sample rate must be positive"));
    }
    let n = (duration * sample_rate).round();
    if n < 2.0 {
        return Err(Error::domain("duration·sample_rate must be at least 2"));
    }
    if model.components.len() as u64 >= COMPONENT_STREAMS {
        return Err(Error::domain("too many noise components"));
    }
    for c in &model.components {
        c.validate(sample_rate)?;
    }
    let mut samples = vec![0.0; n as usize];
    for (index, c) in model.components.iter().enumerate() {
        c.add_to(model.seed, index, sample_rate, &mut samples);
    }
    Ok(SyntheticDisplacement {
        trace: DisplacementTrace::new(samples, sample_rate)?,
        analytic_rms: model.analytic_rms(),
    })
}

/// Unit-amplitude Gaussian white noise, mostly for tests.
pub fn white_noise(seed: u64, sigma: f64, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    add_normal(seed, 0, sigma, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::PICOMETER;

    fn sine(a: f64, f: f64) -> NoiseComponent {
        NoiseComponent::Sine {
            amplitude: a,
            frequency: f,
            phase: 0.3,
        }
    }

    #[test]
    fn sine_rms() {
        let model = NoiseModel {
            components: vec![sine(10.0 * PICOMETER, 123.0)],
            seed: 1,
        };
        let s = synth_displacement(&model, 1.0, 10_000.0).unwrap();
        assert!((s.analytic_rms - 10.0 * PICOMETER / 2f64.sqrt()).abs() < 1e-24);
        assert!((s.trace.rms / s.analytic_rms - 1.0).abs() < 1e-3);
    }

    #[test]
    fn deterministic_and_chunk_independent() {
        let model = NoiseModel {
            components: vec![NoiseComponent::White { amplitude: 1.0 }, sine(1.0, 10.0)],
            seed: 42,
        };
        let a = synth_displacement(&model, 1.0, 200_000.0).unwrap();
        let b = synth_displacement(&model, 1.0, 200_000.0).unwrap();
        assert_eq!(a.trace.samples, b.trace.samples);
        // A prefix is the same random sequence.
        let mut short = vec![0.0; 1000];
        add_normal(42, 0, 1.0, &mut short);
        let mut long = vec![0.0; 3 * CHUNK];
        add_normal(42, 0, 1.0, &mut long);
        assert_eq!(short[..], long[..1000]);
        let other = NoiseModel { seed: 43, ..model };
        assert_ne!(
            synth_displacement(&other, 1.0, 200_000.0).unwrap().trace.samples,
            a.trace.samples
        );
    }

    #[test]
    fn aliasing_guard() {
        let model = NoiseModel {
            components: vec![sine(1.0, 600.0)],
            seed: 0,
        };
        assert_eq!(synth_displacement(&model, 1.0, 1000.0).unwrap_err().class(), "domain");
    }

    #[test]
    fn burst_rms_matches_closed_form() {
        let burst = NoiseComponent::Burst {
            amplitude: 1.0,
            frequency: 50.0,
            cycle_period: 0.7,
            phase: 0.25,
            decay: 0.05,
        };
        let model = NoiseModel {
            components: vec![burst],
            seed: 0,
        };
        let s = synth_displacement(&model, 70.0, 20_000.0).unwrap();
        // Mean removal shifts the RMS by a negligible amount.
        assert!(
            (s.trace.rms / s.analytic_rms - 1.0).abs() < 2e-3,
            "{} {}",
            s.trace.rms,
            s.analytic_rms
        );
    }

    #[test]
    fn serde_components() {
        let json = r#"{"seed": 7, "components": [
            {"kind": "harmonic_comb", "amplitude": "4pm", "frequency": "1.4Hz", "harmonics": 3, "ratio": 0.5},
            {"kind": "white", "amplitude": "22pm"}
        ]}"#;
        let model: NoiseModel = serde_json::from_str(json).unwrap();
        let want = ((16.0 + 4.0 + 1.0) / 2.0 + 22.0f64 * 22.0).sqrt() * PICOMETER;
        assert!((model.analytic_rms() - want).abs() < 1e-24);
        assert!(
            serde_json::from_str::<NoiseModel>(r#"{"components":[{"kind":"white","amplitude":"1pm","bogus":1}]}"#)
                .is_err()
        );
    }
}
