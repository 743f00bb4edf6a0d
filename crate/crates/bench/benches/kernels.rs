use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fpcav_core::analysis::{amplitude_spectrum, DisplacementTrace, SpectrumOptions};
use fpcav_core::cavity::{resonance_frequencies, CavityGeometry, FrequencyBand};
use fpcav_core::constants::SPEED_OF_LIGHT as C;
use fpcav_core::purcell::{design_curve, effective_purcell, preset};
use fpcav_core::special::erfcx;
use std::hint::black_box;

fn special(c: &mut Criterion) {
    let ts: Vec<f64> = (0..1000).map(|i| i as f64 * 0.05).collect();
    c.bench_function("erfcx/1000", |b| {
        b.iter(|| ts.iter().map(|&t| erfcx(black_box(t))).sum::<f64>())
    });
}

fn purcell(c: &mut Criterion) {
    let mode = preset("tunable-air").unwrap().mode_params();
    let params = mode.with_q(2.0e4, 25e-12);
    c.bench_function("effective_purcell", |b| {
        b.iter(|| effective_purcell(black_box(&params)).unwrap())
    });
    c.bench_function("design_curve/61", |b| {
        b.iter(|| design_curve(black_box(&mode), 1e-12, 1e-9, 61).unwrap())
    });
}

fn cavity(c: &mut Criterion) {
    let band = FrequencyBand::new(C / 700e-9, C / 600e-9).unwrap();
    let mut group = c.benchmark_group("resonance_frequencies");
    for air_um in [1.0, 5.0, 20.0] {
        let g = CavityGeometry::new(0.77e-6, air_um * 1e-6, 2.41).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(air_um), &g, |b, g| {
            b.iter(|| resonance_frequencies(black_box(g), band).unwrap())
        });
    }
    group.finish();
}

fn spectrum(c: &mut Criterion) {
    let mut group = c.benchmark_group("amplitude_spectrum");
    group.sample_size(20);
    for n in [1usize << 16, 1 << 20] {
        let samples: Vec<f64> = (0..n)
            .map(|i| 1e-11 * (i as f64 * 0.37).sin() + 3e-12 * (i as f64 * 0.011).cos())
            .collect();
        let trace = DisplacementTrace::new(samples, 200e3).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &trace, |b, t| {
            b.iter(|| amplitude_spectrum(black_box(t), &SpectrumOptions::default()).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, special, purcell, cavity, spectrum);
criterion_main!(benches);
