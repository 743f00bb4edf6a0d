mod common;

use common::integrate;
use fpcav_core::constants::{MHZ_PER_PM, PICOMETER, SPEED_OF_LIGHT};
use fpcav_core::purcell::{
    effective_purcell, max_purcell, preset, purcell_factor, spectral_overlap, vibration_pdf, ModeParams,
};
use fpcav_core::special::erfcx;
use proptest::prelude::*;

fn mode() -> impl Strategy<Value = ModeParams> {
    (550.0f64..750.0, 1.0f64..2.5, 2.0f64..100.0, 5.0f64..200.0).prop_map(|(lambda_nm, n, v, s)| {
        let lambda = lambda_nm * 1e-9;
        ModeParams {
            frequency: SPEED_OF_LIGHT / lambda,
            refractive_index: n,
            mode_volume: v * lambda.powi(3),
            dispersion_slope: -s * MHZ_PER_PM,
        }
    })
}

#[test]
fn pdf_integrates_to_one() {
    let sigma = 1e9;
    let total = integrate(
        |d| vibration_pdf(sigma, d).unwrap(),
        &[-8.0 * sigma, 0.0, 8.0 * sigma],
        1e-14,
    );
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn numeric_maximisation_lands_on_the_bound() {
    let m = preset("tunable-air").unwrap().mode_params();
    let sigma = 25.0 * PICOMETER;
    let f = |log_q: f64| effective_purcell(&m.with_q(10f64.powf(log_q), sigma)).unwrap();
    let grid: Vec<f64> = (0..=90).map(|i| 1.0 + 0.1 * i as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    assert!(values.windows(2).all(|w| w[1] > w[0]));
    // Golden-section refinement in the last grid cell.
    let (mut a, mut b) = (grid[grid.len() - 2], grid[grid.len() - 1]);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let (c, d) = (b - r * (b - a), a + r * (b - a));
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let best = f(0.5 * (a + b));
    let bound = max_purcell(&m, sigma).unwrap();
    assert!((best / bound - 1.0).abs() < 5e-3, "{best} vs {bound}");
    assert!(best < bound);
}

#[test]
fn preset_ratio_follows_the_formula() {
    let sigma = 25.0 * PICOMETER;
    let direct = |m: &ModeParams| {
        let lambda_n = SPEED_OF_LIGHT / (m.refractive_index * m.frequency);
        lambda_n.powi(3) * m.frequency / (m.mode_volume * m.dispersion_slope.abs())
    };
    let a = preset("riedel-air").unwrap().mode_params();
    let b = preset("tunable-air").unwrap().mode_params();
    let ratio = max_purcell(&a, sigma).unwrap() / max_purcell(&b, sigma).unwrap();
    assert!((ratio / (direct(&a) / direct(&b)) - 1.0).abs() < 1e-12);
}

proptest! {
    #[test]
    fn sandwich(m in mode(), log_q in 1.0f64..8.0, sigma_pm in 0.1f64..1000.0) {
        let p = m.with_q(10f64.powf(log_q), sigma_pm * PICOMETER);
        let vib = effective_purcell(&p).unwrap();
        let bare = purcell_factor(&p).unwrap();
        let bound = max_purcell(&m, sigma_pm * PICOMETER).unwrap();
        prop_assert!(vib > 0.0);
        prop_assert!(vib <= bare * (1.0 + 1e-14));
        prop_assert!(vib <= bound * (1.0 + 1e-14));
    }

    #[test]
    fn monotone_in_q(m in mode(), log_q in 1.0f64..9.0, sigma_pm in 0.1f64..1000.0) {
        let s = sigma_pm * PICOMETER;
        let lo = effective_purcell(&m.with_q(10f64.powf(log_q), s)).unwrap();
        let hi = effective_purcell(&m.with_q(10f64.powf(log_q + 0.01), s)).unwrap();
        prop_assert!(hi > lo);
    }

    #[test]
    fn homogeneity(m in mode(), sigma_pm in 0.1f64..1000.0, alpha in 0.01f64..100.0) {
        let s = sigma_pm * PICOMETER;
        let base = max_purcell(&m, s).unwrap();
        let scaled_sigma = max_purcell(&m, alpha * s).unwrap();
        prop_assert!((scaled_sigma * alpha / base - 1.0).abs() < 1e-13);
        let steeper = ModeParams { dispersion_slope: m.dispersion_slope * alpha, ..m };
        prop_assert!((max_purcell(&steeper, s).unwrap() * alpha / base - 1.0).abs() < 1e-13);
    }

    #[test]
    fn ratio_is_scaled_erfc(m in mode(), log_q in 1.0f64..9.0, sigma_pm in 0.1f64..1000.0) {
        let s = sigma_pm * PICOMETER;
        let p = m.with_q(10f64.powf(log_q), s);
        let t = p.frequency / (2.0 * 2f64.sqrt() * p.quality_factor * p.frequency_jitter());
        let ratio = effective_purcell(&p).unwrap() / max_purcell(&m, s).unwrap();
        prop_assert!((ratio / erfcx(t) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn overlap_is_even_and_bounded(nu in 4e14f64..6e14, log_q in 1.0f64..8.0, d in -1e12f64..1e12) {
        let q = 10f64.powf(log_q);
        let a = spectral_overlap(nu, q, d).unwrap();
        prop_assert_eq!(a, spectral_overlap(nu, q, -d).unwrap());
        prop_assert!(a > 0.0 && a <= 1.0);
    }

    #[test]
    fn scaled_erfc_bounded_and_decreasing(t in 0.0f64..1e8, dt in 1e-6f64..1.0) {
        let a = erfcx(t);
        prop_assert!(a > 0.0 && a <= 1.0);
        prop_assert!(erfcx(t + dt * (1.0 + t)) < a);
    }
}
