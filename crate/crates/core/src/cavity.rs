//! One-dimensional two-layer Fabry-Pérot mode model.
//!
//! The cavity is a diamond membrane of thickness `t_d` (index `n`) bonded to a
//! flat mirror, followed by an air gap `t_a` closed by the fiber mirror. Both
//! mirrors are perfect and lossless, so the field vanishes on them and the
//! resonances satisfy
//!
//! ```text
//! tan(k·t_a) = −(1/n)·tan(n·k·t_d),   k = 2πν/c.
//! ```
//!
//! Writing `tan Φ(b) = tan(b)/n` with `b = n·k·t_d` and `Φ` unwrapped so that
//! `Φ(jπ) = jπ`, the condition becomes `θ(k) = k·t_a + Φ(b) = mπ`. `θ` is
//! strictly increasing in `k`, so each longitudinal order `m` owns exactly one
//! root and the bracket `k·(t_a + n·t_d) ∈ (mπ − π/2, mπ + π/2)`.

use crate::constants::{DIAMOND_INDEX, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

/// Bisection stops once the bracket is narrower than this [Hz].
const FREQUENCY_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityGeometry {
    /// Diamond membrane thickness [m].
    pub diamond_thickness: f64,
    /// Air gap [m].
    pub air_gap: f64,
    pub refractive_index: f64,
    /// Radius of curvature of the fiber mirror [m]; only needed for mode volumes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius_of_curvature: Option<f64>,
}

impl CavityGeometry {
    pub fn new(diamond_thickness: f64, air_gap: f64, refractive_index: f64) -> Result<Self> {
        let geometry = Self {
            diamond_thickness,
            air_gap,
            refractive_index,
            radius_of_curvature: None,
        };
        geometry.validate()?;
        Ok(geometry)
    }

    /// Bare air cavity of length `length`.
    pub fn bare_air(length: f64) -> Result<Self> {
        Self::new(0.0, length, DIAMOND_INDEX)
    }

    pub fn with_radius_of_curvature(mut self, radius: f64) -> Result<Self> {
        self.radius_of_curvature = Some(radius);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let (td, ta, n) = (self.diamond_thickness, self.air_gap, self.refractive_index);
        if !(td.is_finite() && ta.is_finite() && n.is_finite()) {
            return Err(Error::domain("cavity geometry must be finite"));
        }
        if td < 0.0 || ta < 0.0 {
            return Err(Error::domain(format!(
                "layer thicknesses must be non-negative (diamond {td:e} m, air {ta:e} m)"
            )));
        }
        if td + ta <= 0.0 {
            return Err(Error::domain("cavity must have a positive total length"));
        }
        if n < 1.0 {
            return Err(Error::domain(format!("refractive index {n} is below 1")));
        }
        if let Some(r) = self.radius_of_curvature {
            if !(r.is_finite() && r > self.geometric_length()) {
                return Err(Error::domain(format!(
                    "radius of curvature {r:e} m violates the stability condition R > t_a + t_d/n = {:e} m",
                    self.geometric_length()
                )));
            }
        }
        Ok(())
    }

    /// `t_a + n·t_d`.
    pub fn optical_length(&self) -> f64 {
        self.air_gap + self.refractive_index * self.diamond_thickness
    }

    /// `t_a + t_d/n`, the length that sets the Gaussian beam waist.
    pub fn geometric_length(&self) -> f64 {
        self.air_gap + self.diamond_thickness / self.refractive_index
    }

    /// Free spectral range of a bare cavity with the same optical length.
    pub fn bare_fsr(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.optical_length())
    }

    fn with_air_gap(&self, air_gap: f64) -> Self {
        Self { air_gap, ..*self }
    }

    fn with_diamond_thickness(&self, diamond_thickness: f64) -> Self {
        Self {
            diamond_thickness,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeCharacter {
    AirLike,
    DiamondLike,
}

impl std::fmt::Display for ModeCharacter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModeCharacter::AirLike => "air-like",
            ModeCharacter::DiamondLike => "diamond-like",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityMode {
    /// Resonance frequency [Hz].
    pub frequency: f64,
    /// Longitudinal order: the mode is the `order`-th root above zero frequency.
    pub order: u32,
    pub character: ModeCharacter,
}

impl CavityMode {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.frequency
    }
}

/// Resonance shift per unit air-gap change, `dν/dt_a` [Hz/m]. Negative for
/// every physical mode: lengthening the gap lowers the frequency.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DispersionSlope(pub f64);

impl DispersionSlope {
    pub fn from_mhz_per_pm(value: f64) -> Self {
        Self(value * crate::constants::MHZ_PER_PM)
    }

    pub fn hz_per_m(self) -> f64 {
        self.0
    }

    pub fn magnitude(self) -> f64 {
        self.0.abs()
    }

    /// `|s|` in MHz/pm.
    pub fn mhz_per_pm(self) -> f64 {
        self.0.abs() / crate::constants::MHZ_PER_PM
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeVolume {
    /// [m³]
    pub volume: f64,
    /// `V/λ³`
    pub volume_lambda3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyBand {
    pub min: f64,
    pub max: f64,
}

impl FrequencyBand {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min > 0.0 && max > min) {
            return Err(Error::domain(format!(
                "frequency band [{min:e}, {max:e}] Hz must be positive and non-empty"
            )));
        }
        Ok(Self { min, max })
    }

    /// Band spanned by two vacuum wavelengths, in either order.
    pub fn from_wavelengths(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::domain("wavelengths must be positive"));
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        Self::new(SPEED_OF_LIGHT / hi, SPEED_OF_LIGHT / lo)
    }

    pub fn contains(&self, frequency: f64) -> bool {
        frequency >= self.min && frequency <= self.max
    }
}

fn wavenumber(frequency: f64) -> f64 {
    2.0 * PI * frequency / SPEED_OF_LIGHT
}

/// Pole-free form of the resonance condition,
/// `n·sin(k t_a)·cos(n k t_d) + cos(k t_a)·sin(n k t_d)`.
pub fn resonance_function(geometry: &CavityGeometry, frequency: f64) -> f64 {
    let k = wavenumber(frequency);
    let n = geometry.refractive_index;
    let a = k * geometry.air_gap;
    let b = n * k * geometry.diamond_thickness;
    n * a.sin() * b.cos() + a.cos() * b.sin()
}

/// `Φ(b) − b`, bounded in (−π/2, π/2).
fn interface_phase_offset(b: f64, n: f64) -> f64 {
    let (s, c) = b.sin_cos();
    ((1.0 - n) * s * c / (n * c * c + s * s)).atan()
}

/// Derivative `dΦ/db = n/(n² cos²b + sin²b)`.
fn interface_phase_derivative(b: f64, n: f64) -> f64 {
    let (s, c) = b.sin_cos();
    n / (n * n * c * c + s * s)
}

/// Unwrapped round-trip phase `θ(ν)`; resonances sit at integer multiples of π.
pub fn phase_function(geometry: &CavityGeometry, frequency: f64) -> f64 {
    let k = wavenumber(frequency);
    let n = geometry.refractive_index;
    let b = n * k * geometry.diamond_thickness;
    k * geometry.optical_length() + interface_phase_offset(b, n)
}

/// Resonance frequency of longitudinal order `order`.
pub fn solve_order(geometry: &CavityGeometry, order: u32) -> Result<f64> {
    if order == 0 {
        return Err(Error::domain("mode order starts at 1"));
    }
    let target = order as f64 * PI;
    let per_rad = SPEED_OF_LIGHT / (2.0 * PI * geometry.optical_length());
    let mut lo = ((target - FRAC_PI_2) * per_rad).max(0.0);
    let mut hi = (target + FRAC_PI_2) * per_rad;
    let residual = |nu: f64| phase_function(geometry, nu) - target;
    let (r_lo, r_hi) = (residual(lo), residual(hi));
    if !(r_lo <= 0.0 && r_hi >= 0.0) {
        return Err(Error::Numerical(format!(
            "order {order}: bracket [{lo:e}, {hi:e}] Hz does not enclose a root"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let r = residual(mid);
        if !r.is_finite() {
            return Err(Error::Numerical(format!(
                "order {order}: non-finite phase in bracket [{lo:e}, {hi:e}] Hz"
            )));
        }
        if r < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= FREQUENCY_TOLERANCE.max(4.0 * f64::EPSILON * hi) {
            return Ok(0.5 * (lo + hi));
        }
    }
    Err(Error::Numerical(format!(
        "order {order}: bisection did not converge in bracket [{lo:e}, {hi:e}] Hz"
    )))
}

/// All cavity resonances in `band`, ascending in frequency.
pub fn resonance_frequencies(geometry: &CavityGeometry, band: FrequencyBand) -> Result<Vec<CavityMode>> {
    geometry.validate()?;
    let first = (phase_function(geometry, band.min) / PI).ceil().max(1.0) as u32;
    let last = (phase_function(geometry, band.max) / PI).floor();
    if last < first as f64 {
        return Ok(Vec::new());
    }
    let last = last as u32;
    let mut modes = Vec::with_capacity((last - first + 1) as usize);
    for order in first..=last {
        let frequency = solve_order(geometry, order)?;
        if !band.contains(frequency) {
            continue;
        }
        modes.push(CavityMode {
            frequency,
            order,
            character: classify(geometry, frequency),
        });
    }
    Ok(modes)
}

/// Mode of `geometry` closest to `frequency`.
pub fn nearest_mode(geometry: &CavityGeometry, frequency: f64) -> Result<CavityMode> {
    geometry.validate()?;
    if !(frequency > 0.0) {
        return Err(Error::domain("frequency must be positive"));
    }
    let guess = (phase_function(geometry, frequency) / PI).round().max(1.0) as u32;
    let mut best: Option<CavityMode> = None;
    for order in guess.saturating_sub(1).max(1)..=guess + 1 {
        let nu = solve_order(geometry, order)?;
        if best.is_none_or(|b| (nu - frequency).abs() < (b.frequency - frequency).abs()) {
            best = Some(CavityMode {
                frequency: nu,
                order,
                character: classify(geometry, nu),
            });
        }
    }
    Ok(best.expect("at least one order is solved"))
}

fn check_resonant(geometry: &CavityGeometry, mode: &CavityMode) -> Result<()> {
    let residual = phase_function(geometry, mode.frequency) / PI - mode.order as f64;
    if !(residual.abs() < 1e-6) {
        return Err(Error::domain(format!(
            "{:e} Hz is not a resonance of order {} (phase residual {residual:e}·π)",
            mode.frequency, mode.order
        )));
    }
    Ok(())
}

/// Implicit derivatives `(∂ν/∂t_a, ∂ν/∂t_d)` at a resonance.
pub fn frequency_derivatives(geometry: &CavityGeometry, frequency: f64) -> (f64, f64) {
    let n = geometry.refractive_index;
    let b = n * wavenumber(frequency) * geometry.diamond_thickness;
    let phi_prime = interface_phase_derivative(b, n);
    let denom = geometry.air_gap + n * geometry.diamond_thickness * phi_prime;
    (-frequency / denom, -frequency * n * phi_prime / denom)
}

fn classify(geometry: &CavityGeometry, frequency: f64) -> ModeCharacter {
    if geometry.diamond_thickness == 0.0 {
        return ModeCharacter::AirLike;
    }
    if geometry.air_gap == 0.0 {
        return ModeCharacter::DiamondLike;
    }
    let (d_air, d_diamond) = frequency_derivatives(geometry, frequency);
    if d_air.abs() >= d_diamond.abs() / geometry.refractive_index {
        ModeCharacter::AirLike
    } else {
        ModeCharacter::DiamondLike
    }
}

/// Air-like iff `|∂ν/∂t_a| ≥ |∂ν/∂t_d|/n`; ties go to air-like. Cavities
/// without a membrane are air-like, cavities without a gap diamond-like.
pub fn mode_character(geometry: &CavityGeometry, mode: &CavityMode) -> Result<ModeCharacter> {
    geometry.validate()?;
    check_resonant(geometry, mode)?;
    Ok(classify(geometry, mode.frequency))
}

/// `dν/dt_a` by re-solving the resonance at `t_a ± δ`, `δ = max(1 pm, 1e-6·t_a)`.
pub fn dispersion_slope(geometry: &CavityGeometry, mode: &CavityMode) -> Result<DispersionSlope> {
    geometry.validate()?;
    check_resonant(geometry, mode)?;
    let delta = (1e-12f64).max(geometry.air_gap * 1e-6);
    let track = |air_gap: f64| -> Result<f64> {
        let perturbed = geometry.with_air_gap(air_gap);
        let nu = solve_order(&perturbed, mode.order)?;
        // The order label must still name the root nearest the unperturbed mode.
        let nearest = nearest_mode(&perturbed, mode.frequency)?;
        if nearest.order != mode.order {
            return Err(Error::Numerical(format!(
                "mode branch of order {} lost at air gap {air_gap:e} m",
                mode.order
            )));
        }
        Ok(nu)
    };
    let slope = if geometry.air_gap >= delta {
        (track(geometry.air_gap + delta)? - track(geometry.air_gap - delta)?) / (2.0 * delta)
    } else {
        (track(geometry.air_gap + delta)? - mode.frequency) / delta
    };
    if !slope.is_finite() {
        return Err(Error::Numerical("non-finite dispersion slope".into()));
    }
    Ok(DispersionSlope(slope))
}

/// Slope with respect to the membrane thickness, same scheme as
/// [`dispersion_slope`].
pub fn diamond_slope(geometry: &CavityGeometry, mode: &CavityMode) -> Result<f64> {
    geometry.validate()?;
    check_resonant(geometry, mode)?;
    let delta = (1e-12f64).max(geometry.diamond_thickness * 1e-6);
    let at = |t: f64| solve_order(&geometry.with_diamond_thickness(t), mode.order);
    if geometry.diamond_thickness >= delta {
        Ok((at(geometry.diamond_thickness + delta)? - at(geometry.diamond_thickness - delta)?) / (2.0 * delta))
    } else {
        Ok((at(geometry.diamond_thickness + delta)? - mode.frequency) / delta)
    }
}

/// Gaussian-beam mode volume of a plano-concave cavity:
/// `V = (π/4)·w0²·L_opt`, `w0² = (λ/π)·√(L_geo·(R − L_geo))`.
pub fn mode_volume(geometry: &CavityGeometry, mode: &CavityMode) -> Result<ModeVolume> {
    geometry.validate()?;
    let radius = geometry
        .radius_of_curvature
        .ok_or_else(|| Error::domain("mode volume needs the mirror radius of curvature"))?;
    mode_volume_at(geometry, radius, mode.wavelength())
}

/// [`mode_volume`] for an explicit wavelength.
pub fn mode_volume_at(geometry: &CavityGeometry, radius: f64, wavelength: f64) -> Result<ModeVolume> {
    let l_geo = geometry.geometric_length();
    if !(radius > l_geo) {
        return Err(Error::domain(format!(
            "unstable resonator: R = {radius:e} m ≤ L_geo = {l_geo:e} m"
        )));
    }
    if !(wavelength > 0.0) {
        return Err(Error::domain("wavelength must be positive"));
    }
    let waist_sq = wavelength / PI * (l_geo * (radius - l_geo)).sqrt();
    let volume = PI / 4.0 * waist_sq * geometry.optical_length();
    Ok(ModeVolume {
        volume,
        volume_lambda3: volume / wavelength.powi(3),
    })
}

/// Optical cavity length from the free spectral range, `L = c/(2·FSR)`.
///
/// For a hybrid cavity this is, to first order, `t_a + n·t_d`.
pub fn length_from_fsr(fsr: f64) -> Result<f64> {
    if !(fsr > 0.0 && fsr.is_finite()) {
        return Err(Error::domain(format!(
            "free spectral range must be positive, got {fsr:e} Hz"
        )));
    }
    Ok(SPEED_OF_LIGHT / (2.0 * fsr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{MICROMETER, NANOMETER, THZ};

    fn band(lo_thz: f64, hi_thz: f64) -> FrequencyBand {
        FrequencyBand::new(lo_thz * THZ, hi_thz * THZ).unwrap()
    }

    #[test]
    fn bare_air_cavity_orders() {
        let g = CavityGeometry::bare_air(5.0 * MICROMETER).unwrap();
        let modes = resonance_frequencies(&g, band(400.0, 700.0)).unwrap();
        assert_eq!(modes[0].order, 14);
        for m in &modes {
            let want = m.order as f64 * SPEED_OF_LIGHT / (2.0 * 5.0 * MICROMETER);
            assert!(((m.frequency - want) / want).abs() < 1e-10);
            assert_eq!(m.character, ModeCharacter::AirLike);
        }
        assert!((modes[0].frequency / THZ - 419.709_441).abs() < 1e-5);
    }

    #[test]
    fn bare_diamond_cavity_orders() {
        let g = CavityGeometry::new(2.0 * MICROMETER, 0.0, 2.41).unwrap();
        let modes = resonance_frequencies(&g, band(400.0, 700.0)).unwrap();
        assert!(!modes.is_empty());
        for m in &modes {
            let want = m.order as f64 * SPEED_OF_LIGHT / (2.0 * 2.41 * 2.0 * MICROMETER);
            assert!(((m.frequency - want) / want).abs() < 1e-10);
            assert_eq!(m.character, ModeCharacter::DiamondLike);
        }
    }

    #[test]
    fn modes_are_strictly_ordered_and_resonant() {
        let g = CavityGeometry::new(0.8 * MICROMETER, 2.6 * MICROMETER, 2.41).unwrap();
        let modes = resonance_frequencies(&g, band(400.0, 700.0)).unwrap();
        for pair in modes.windows(2) {
            assert!(pair[0].frequency < pair[1].frequency);
            assert_eq!(pair[0].order + 1, pair[1].order);
        }
        for m in &modes {
            assert!(resonance_function(&g, m.frequency).abs() < 1e-6);
        }
    }

    #[test]
    fn bare_cavity_slope() {
        let g = CavityGeometry::bare_air(5.0 * MICROMETER).unwrap();
        let mode = nearest_mode(&g, 449.97 * THZ).unwrap();
        let s = dispersion_slope(&g, &mode).unwrap();
        assert!(s.hz_per_m() < 0.0);
        let want = mode.frequency / (5.0 * MICROMETER);
        assert!(((s.magnitude() - want) / want).abs() < 1e-6);
        assert!((s.mhz_per_pm() - 89.94).abs() < 0.01);
    }

    #[test]
    fn central_difference_matches_implicit_derivative() {
        let g = CavityGeometry::new(3.7 * MICROMETER, 8.0 * MICROMETER, 2.41).unwrap();
        for m in resonance_frequencies(&g, band(470.0, 500.0)).unwrap() {
            let numeric = dispersion_slope(&g, &m).unwrap().hz_per_m();
            let (implicit, implicit_d) = frequency_derivatives(&g, m.frequency);
            assert!(((numeric - implicit) / implicit).abs() < 1e-5);
            let numeric_d = diamond_slope(&g, &m).unwrap();
            assert!(((numeric_d - implicit_d) / implicit_d).abs() < 1e-5);
        }
    }

    #[test]
    fn non_resonant_mode_is_rejected() {
        let g = CavityGeometry::bare_air(5.0 * MICROMETER).unwrap();
        let mut mode = nearest_mode(&g, 450.0 * THZ).unwrap();
        mode.frequency += 1.0 * THZ;
        assert!(matches!(mode_character(&g, &mode), Err(Error::Domain(_))));
        assert!(matches!(dispersion_slope(&g, &mode), Err(Error::Domain(_))));
    }

    #[test]
    fn invalid_geometry() {
        assert!(CavityGeometry::new(-1e-6, 1e-6, 2.4).is_err());
        assert!(CavityGeometry::new(0.0, 0.0, 2.4).is_err());
        assert!(CavityGeometry::new(1e-6, 1e-6, 0.9).is_err());
        let g = CavityGeometry::bare_air(3e-6).unwrap();
        assert!(g.with_radius_of_curvature(2e-6).is_err());
        assert!(FrequencyBand::new(5.0, 4.0).is_err());
    }

    #[test]
    fn mode_volume_closed_form() {
        let g = CavityGeometry::bare_air(3.0 * MICROMETER)
            .unwrap()
            .with_radius_of_curvature(16.0 * MICROMETER)
            .unwrap();
        let mv = mode_volume_at(&g, 16.0 * MICROMETER, 637.0 * NANOMETER).unwrap();
        // Reference from a 40-digit re-evaluation of the same closed form.
        assert!((mv.volume - 2.983_547_793_734_835e-18).abs() / mv.volume < 1e-12);
        assert!((mv.volume_lambda3 - 11.542_893_860_296_87).abs() < 1e-9);
        let g_no_r = CavityGeometry::bare_air(3.0 * MICROMETER).unwrap();
        let m = nearest_mode(&g_no_r, 470.0 * THZ).unwrap();
        assert!(mode_volume(&g_no_r, &m).is_err());
    }

    #[test]
    fn mode_volume_scales_with_wavelength_and_radius() {
        let g = CavityGeometry::new(1.0 * MICROMETER, 4.0 * MICROMETER, 2.41).unwrap();
        let r = 20.0 * MICROMETER;
        let v1 = mode_volume_at(&g, r, 600.0 * NANOMETER).unwrap().volume;
        let v2 = mode_volume_at(&g, r, 1200.0 * NANOMETER).unwrap().volume;
        assert!((v2 / v1 - 2.0).abs() < 1e-12);
        let mut prev = 0.0;
        for radius in [20.0, 50.0, 100.0, 1e3, 1e5] {
            let v = mode_volume_at(&g, radius * MICROMETER, 600.0 * NANOMETER)
                .unwrap()
                .volume;
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn length_from_fsr_examples() {
        assert!((length_from_fsr(5.0 * THZ).unwrap() / MICROMETER - 29.979_245_8).abs() < 1e-6);
        assert!((length_from_fsr(2.998 * THZ).unwrap() / MICROMETER - 50.0).abs() < 0.01);
        assert!(length_from_fsr(0.0).is_err());
        assert!(length_from_fsr(-1.0).is_err());
    }
}
