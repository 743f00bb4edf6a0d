mod common;

use common::{central_difference, dense_roots, transfer_matrix_end_field};
use fpcav_core::cavity::{
    dispersion_slope, resonance_frequencies, solve_order, CavityGeometry, CavityMode, FrequencyBand, ModeCharacter,
};
use fpcav_core::constants::{MHZ_PER_PM, MICROMETER, NANOMETER, PICOMETER, SPEED_OF_LIGHT, THZ};
use proptest::prelude::*;

fn visible() -> FrequencyBand {
    FrequencyBand::from_wavelengths(600.0 * NANOMETER, 700.0 * NANOMETER).unwrap()
}

fn grid_steps(g: &CavityGeometry, band: FrequencyBand) -> usize {
    let fsr = SPEED_OF_LIGHT / (2.0 * (g.air_gap + g.refractive_index * g.diamond_thickness));
    ((band.max - band.min) / (fsr / 50.0)).ceil() as usize
}

#[test]
fn membrane_roots_match_dense_scan() {
    let g = CavityGeometry::new(0.8 * MICROMETER, 2.6 * MICROMETER, 2.41).unwrap();
    let band = FrequencyBand::new(420.0 * THZ, 520.0 * THZ).unwrap();
    let modes = resonance_frequencies(&g, band).unwrap();
    let oracle = dense_roots(&g, band.min, band.max, 100_000);
    assert_eq!(modes.len(), oracle.len());
    for (m, o) in modes.iter().zip(&oracle) {
        assert!((m.frequency - o).abs() < 1e6, "{} vs {o}", m.frequency);
    }
}

#[test]
fn bare_slope_identity() {
    for length in [2.0, 5.0, 20.0] {
        let g = CavityGeometry::bare_air(length * MICROMETER).unwrap();
        for m in resonance_frequencies(&g, visible()).unwrap() {
            let s = dispersion_slope(&g, &m).unwrap();
            assert!(s.0 < 0.0);
            let expected = m.frequency / (length * MICROMETER);
            assert!((s.magnitude() / expected - 1.0).abs() < 1e-6);
        }
    }
}

#[test]
fn five_micron_bare_cavity() {
    let g = CavityGeometry::bare_air(5.0 * MICROMETER).unwrap();
    let modes = resonance_frequencies(&g, FrequencyBand::new(400.0 * THZ, 700.0 * THZ).unwrap()).unwrap();
    assert_eq!(modes[0].order, 14);
    assert!((modes[0].frequency / THZ - 419.7).abs() < 0.01);
    let m15 = modes.iter().find(|m| m.order == 15).unwrap();
    let s = dispersion_slope(&g, m15).unwrap();
    assert!((s.mhz_per_pm() - 89.94).abs() < 0.01);
}

/// Classification from derivatives of the transfer-matrix roots under
/// finite perturbations of each layer.
fn oracle_character(g: &CavityGeometry, mode: &CavityMode) -> ModeCharacter {
    let h = 10.0 * PICOMETER;
    let track = |geom: CavityGeometry| {
        let w = 0.02 * mode.frequency;
        dense_roots(&geom, mode.frequency - w, mode.frequency + w, 4000)
            .into_iter()
            .min_by(|a, b| (a - mode.frequency).abs().total_cmp(&(b - mode.frequency).abs()))
            .unwrap()
    };
    let with = |ta: f64, td: f64| CavityGeometry::new(td, ta, g.refractive_index).unwrap();
    let d_air = central_difference(|ta| track(with(ta, g.diamond_thickness)), g.air_gap, h);
    let d_dia = central_difference(|td| track(with(g.air_gap, td)), g.diamond_thickness, h);
    if d_air.abs() >= d_dia.abs() / g.refractive_index {
        ModeCharacter::AirLike
    } else {
        ModeCharacter::DiamondLike
    }
}

#[test]
fn thick_membrane_classification_matches_oracle() {
    let g = CavityGeometry::new(3.7 * MICROMETER, 8.0 * MICROMETER, 2.41).unwrap();
    let modes = resonance_frequencies(&g, visible()).unwrap();
    let mut seen = [false, false];
    for m in &modes {
        assert_eq!(m.character, oracle_character(&g, m), "mode {}", m.order);
        seen[(m.character == ModeCharacter::AirLike) as usize] = true;
    }
    assert!(seen[0] && seen[1]);
}

#[test]
fn thin_membrane_air_like_regime() {
    // Air gap tuned so that an air-like mode near 637 nm has ν/|s| ≈ 3.4 µm.
    let td = 0.8 * MICROMETER;
    let target = SPEED_OF_LIGHT / (637.0 * NANOMETER);
    let band = FrequencyBand::new(target * 0.995, target * 1.005).unwrap();
    let mut best: Option<(f64, f64)> = None;
    for i in 0..2500 {
        let ta = 1.5 * MICROMETER + i as f64 * NANOMETER;
        let g = CavityGeometry::new(td, ta, 2.41).unwrap();
        for m in resonance_frequencies(&g, band).unwrap() {
            if m.character != ModeCharacter::AirLike {
                continue;
            }
            let s = dispersion_slope(&g, &m).unwrap().magnitude();
            let eff = m.frequency / s;
            if best.is_none_or(|(e, _)| (e - 3.4 * MICROMETER).abs() > (eff - 3.4 * MICROMETER).abs()) {
                best = Some((eff, s));
            }
        }
    }
    let (eff, s) = best.unwrap();
    assert!((eff / MICROMETER - 3.4).abs() < 0.05, "{eff:e} {s:e}");
    assert!((s / MHZ_PER_PM / 139.0 - 1.0).abs() < 0.02, "{}", s / MHZ_PER_PM);
}

fn geometry() -> impl Strategy<Value = CavityGeometry> {
    (0.0f64..6.0, 0.5f64..15.0)
        .prop_map(|(td, ta)| CavityGeometry::new(td * MICROMETER, ta * MICROMETER, 2.41).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn root_completeness(g in geometry()) {
        let band = visible();
        let modes = resonance_frequencies(&g, band).unwrap();
        let oracle = dense_roots(&g, band.min, band.max, grid_steps(&g, band));
        prop_assert_eq!(modes.len(), oracle.len());
        for (m, o) in modes.iter().zip(&oracle) {
            prop_assert!((m.frequency - o).abs() < 1e6);
            prop_assert!(transfer_matrix_end_field(&g, m.frequency).abs() < 1e-6);
        }
        prop_assert!(modes.windows(2).all(|w| w[1].frequency > w[0].frequency && w[1].order == w[0].order + 1));
    }

    #[test]
    fn slope_continuity(g in geometry()) {
        let modes = resonance_frequencies(&g, visible()).unwrap();
        prop_assume!(!modes.is_empty());
        let m = modes[modes.len() / 2];
        let s = dispersion_slope(&g, &m).unwrap().0;
        let mut previous = f64::INFINITY;
        for dt in [100.0, 10.0, 1.0].map(|d| d * PICOMETER) {
            let moved = CavityGeometry::new(g.diamond_thickness, g.air_gap + dt, g.refractive_index).unwrap();
            let dnu = solve_order(&moved, m.order).unwrap() - m.frequency;
            let rel = (dnu - s * dt).abs() / (s * dt).abs();
            // Two roots, each bisected to a 4ε·ν bracket.
            let resolution = 8.0 * f64::EPSILON * m.frequency / (s * dt).abs();
            // Second-order remainder: shrinks with Δt_a down to the root resolution.
            prop_assert!(rel < 1e-3 && rel < previous.max(resolution), "Δt={dt:e} rel={rel:e} res={resolution:e}");
            previous = rel;
        }
    }

    /// Air-like means `Φ' ≤ 1`, and `|s|/ν = 1/(t_a + n·t_d·Φ')`, so the
    /// ordering is exact for the slope per unit frequency. Raw `|s|` can
    /// reorder across a wide band because of the factor `ν`.
    #[test]
    fn diamond_like_modes_are_less_dispersive(td in 0.3f64..6.0, ta in 1.0f64..12.0) {
        let g = CavityGeometry::new(td * MICROMETER, ta * MICROMETER, 2.41).unwrap();
        let modes = resonance_frequencies(&g, visible()).unwrap();
        let slopes: Vec<(ModeCharacter, f64)> = modes
            .iter()
            .map(|m| (m.character, dispersion_slope(&g, m).unwrap().magnitude() / m.frequency))
            .collect();
        let air_min = slopes.iter().filter(|c| c.0 == ModeCharacter::AirLike).map(|c| c.1).fold(f64::INFINITY, f64::min);
        let dia_max = slopes.iter().filter(|c| c.0 == ModeCharacter::DiamondLike).map(|c| c.1).fold(0.0, f64::max);
        prop_assume!(air_min.is_finite() && dia_max > 0.0);
        prop_assert!(dia_max < air_min, "{dia_max:e} vs {air_min:e}");
        let bare = 1.0 / g.optical_length();
        prop_assert!(dia_max < bare * (1.0 + 1e-6) && air_min > bare * (1.0 - 1e-6));
    }
}
