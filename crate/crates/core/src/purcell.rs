//! Purcell enhancement of a narrow emitter coupled to a vibrating cavity.
//!
//! Length fluctuations of RMS `σ` shift the resonance by a Gaussian detuning
//! of standard deviation `σ_ν = |s|·σ`. Averaging the Lorentzian spectral
//! overlap over that distribution gives
//!
//! ```text
//! F_P,vib = F_P · √π · t · erfcx(t),   t = ν / (2√2·Q·σ_ν)
//! ```
//!
//! which increases monotonically in `Q` towards the finite supremum
//! `F_P,max = (3/4π²)(c/nν)³ (1/V) √(π/2) ν/(2σ_ν)`.

use crate::constants::{MHZ_PER_PM, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::special::erfcx;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Cavity mode parameters that do not depend on `Q` or on the vibration level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeParams {
    /// Resonance frequency [Hz].
    pub frequency: f64,
    pub refractive_index: f64,
    /// Mode volume [m³].
    pub mode_volume: f64,
    /// Dispersion slope `dν/dt_a` [Hz/m]; only the magnitude is used.
    pub dispersion_slope: f64,
}

impl ModeParams {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.frequency
    }

    pub fn with_q(self, quality_factor: f64, rms_length_fluctuation: f64) -> PurcellParams {
        PurcellParams {
            frequency: self.frequency,
            refractive_index: self.refractive_index,
            mode_volume: self.mode_volume,
            quality_factor,
            dispersion_slope: self.dispersion_slope,
            rms_length_fluctuation,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.frequency > 0.0 && self.frequency.is_finite()) {
            return Err(Error::domain(format!(
                "frequency must be positive, got {:e} Hz",
                self.frequency
            )));
        }
        if !(self.refractive_index >= 1.0) {
            return Err(Error::domain(format!(
                "refractive index must be ≥ 1, got {}",
                self.refractive_index
            )));
        }
        if !(self.mode_volume > 0.0 && self.mode_volume.is_finite()) {
            return Err(Error::domain(format!(
                "mode volume must be positive, got {:e} m³",
                self.mode_volume
            )));
        }
        if !self.dispersion_slope.is_finite() {
            return Err(Error::domain("dispersion slope must be finite"));
        }
        Ok(())
    }

    /// `(3/4π²)(c/nν)³/V`, the Purcell factor per unit `Q`.
    fn prefactor(&self) -> f64 {
        let lambda_medium = SPEED_OF_LIGHT / (self.refractive_index * self.frequency);
        3.0 / (4.0 * PI * PI) * lambda_medium.powi(3) / self.mode_volume
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PurcellParams {
    /// Resonance frequency [Hz].
    pub frequency: f64,
    pub refractive_index: f64,
    /// Mode volume [m³].
    pub mode_volume: f64,
    pub quality_factor: f64,
    /// Dispersion slope `dν/dt_a` [Hz/m].
    pub dispersion_slope: f64,
    /// RMS cavity length fluctuation `σ` [m].
    pub rms_length_fluctuation: f64,
}

impl PurcellParams {
    pub fn mode(&self) -> ModeParams {
        ModeParams {
            frequency: self.frequency,
            refractive_index: self.refractive_index,
            mode_volume: self.mode_volume,
            dispersion_slope: self.dispersion_slope,
        }
    }

    /// Frequency jitter `σ_ν = |s|·σ` [Hz].
    pub fn frequency_jitter(&self) -> f64 {
        self.dispersion_slope.abs() * self.rms_length_fluctuation
    }

    fn validate(&self) -> Result<()> {
        self.mode().validate()?;
        if !(self.quality_factor > 0.0 && self.quality_factor.is_finite()) {
            return Err(Error::domain(format!(
                "quality factor must be positive, got {}",
                self.quality_factor
            )));
        }
        if !(self.rms_length_fluctuation >= 0.0 && self.rms_length_fluctuation.is_finite()) {
            return Err(Error::domain(format!(
                "RMS length fluctuation must be ≥ 0, got {:e} m",
                self.rms_length_fluctuation
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PurcellResult {
    pub bare: f64,
    pub effective: f64,
    /// `None` when `σ_ν = 0`, where the bound diverges.
    pub bound: Option<f64>,
}

/// `F_P = (3/4π²)(c/nν)³ Q/V`.
pub fn purcell_factor(params: &PurcellParams) -> Result<f64> {
    params.validate()?;
    Ok(params.mode().prefactor() * params.quality_factor)
}

/// Lorentzian overlap `ξ = 1/(1 + 4Q²Δν²/ν²)` between a narrow emitter
/// detuned by `detuning` and a mode of quality factor `quality_factor`.
pub fn spectral_overlap(frequency: f64, quality_factor: f64, detuning: f64) -> Result<f64> {
    if !(frequency > 0.0) || !(quality_factor > 0.0) {
        return Err(Error::domain("spectral overlap needs ν > 0 and Q > 0"));
    }
    let x = 2.0 * quality_factor * detuning / frequency;
    Ok(1.0 / (1.0 + x * x))
}

/// Gaussian detuning density of standard deviation `sigma_nu` [1/Hz].
pub fn vibration_pdf(sigma_nu: f64, detuning: f64) -> Result<f64> {
    if !(sigma_nu > 0.0 && sigma_nu.is_finite()) {
        return Err(Error::domain(format!(
            "frequency jitter must be positive, got {sigma_nu:e} Hz"
        )));
    }
    let z = detuning / sigma_nu;
    Ok((-0.5 * z * z).exp() / ((2.0 * PI).sqrt() * sigma_nu))
}

/// Vibration-averaged Purcell factor. Returns `F_P` unchanged for `σ_ν = 0`.
pub fn effective_purcell(params: &PurcellParams) -> Result<f64> {
    let bare = purcell_factor(params)?;
    let sigma_nu = params.frequency_jitter();
    if sigma_nu == 0.0 {
        return Ok(bare);
    }
    let t = params.frequency / (2.0 * std::f64::consts::SQRT_2 * params.quality_factor * sigma_nu);
    Ok(bare * PI.sqrt() * t * erfcx(t))
}

/// Supremum of [`effective_purcell`] over `Q > 0` at RMS fluctuation `sigma`.
/// It is approached as `Q → ∞` and never attained.
pub fn max_purcell(mode: &ModeParams, sigma: f64) -> Result<f64> {
    mode.validate()?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::domain(format!(
            "RMS length fluctuation must be positive, got {sigma:e} m"
        )));
    }
    let sigma_nu = mode.dispersion_slope.abs() * sigma;
    if sigma_nu == 0.0 {
        return Err(Error::domain("zero dispersion slope: the bound diverges"));
    }
    Ok(mode.prefactor() * (PI / 2.0).sqrt() * mode.frequency / (2.0 * sigma_nu))
}

/// Bare, effective and maximum Purcell factors in one call.
pub fn evaluate(params: &PurcellParams) -> Result<PurcellResult> {
    let bare = purcell_factor(params)?;
    let effective = effective_purcell(params)?;
    let bound = if params.frequency_jitter() > 0.0 {
        Some(max_purcell(&params.mode(), params.rms_length_fluctuation)?)
    } else {
        None
    };
    Ok(PurcellResult { bare, effective, bound })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignPoint {
    /// RMS length fluctuation [m].
    pub sigma: f64,
    pub max_purcell: f64,
}

/// [`max_purcell`] on `points` log-spaced values of `σ` in `[sigma_min, sigma_max]`.
pub fn design_curve(mode: &ModeParams, sigma_min: f64, sigma_max: f64, points: usize) -> Result<Vec<DesignPoint>> {
    if !(sigma_min > 0.0 && sigma_max >= sigma_min && sigma_max.is_finite()) {
        return Err(Error::domain(format!(
            "σ range must be positive and ordered, got [{sigma_min:e}, {sigma_max:e}] m"
        )));
    }
    if points == 0 || (points == 1 && sigma_max > sigma_min) {
        return Err(Error::domain(
            "design curve needs at least two points for a non-degenerate range",
        ));
    }
    let (lo, hi) = (sigma_min.ln(), sigma_max.ln());
    (0..points)
        .map(|i| {
            let sigma = if i == 0 {
                sigma_min
            } else if i == points - 1 {
                sigma_max
            } else {
                (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp()
            };
            Ok(DesignPoint {
                sigma,
                max_purcell: max_purcell(mode, sigma)?,
            })
        })
        .collect()
}

/// Named parameter set for [`design_curve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preset {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Vacuum wavelength [m].
    pub wavelength: f64,
    pub refractive_index: f64,
    /// Mode volume in units of `λ³`.
    pub volume_lambda3: f64,
    /// `|s|` in MHz/pm.
    pub dispersion_mhz_per_pm: f64,
}

impl Preset {
    pub fn mode_params(&self) -> ModeParams {
        ModeParams {
            frequency: SPEED_OF_LIGHT / self.wavelength,
            refractive_index: self.refractive_index,
            mode_volume: self.volume_lambda3 * self.wavelength.powi(3),
            dispersion_slope: -self.dispersion_mhz_per_pm * MHZ_PER_PM,
        }
    }
}

pub const PRESET_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetRegistry {
    pub version: u32,
    pub presets: Vec<Preset>,
}

impl PresetRegistry {
    pub fn from_json(text: &str) -> Result<Self> {
        let registry: Self = serde_json::from_str(text)?;
        if registry.version != PRESET_FORMAT_VERSION {
            return Err(Error::Parse(format!(
                "unsupported preset format version {} (expected {PRESET_FORMAT_VERSION})",
                registry.version
            )));
        }
        for preset in &registry.presets {
            preset.mode_params().validate()?;
            if !(preset.dispersion_mhz_per_pm > 0.0) {
                return Err(Error::domain(format!(
                    "preset {}: dispersion must be positive",
                    preset.name
                )));
            }
        }
        Ok(registry)
    }

    pub fn get(&self, name: &str) -> Option<&Preset> {
        self.presets.iter().find(|p| p.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.presets.iter().map(|p| p.name.as_str())
    }
}

const BUILTIN_PRESETS: &str = include_str!("../assets/presets.json");

/// Presets shipped with the crate.
pub fn builtin_presets() -> &'static PresetRegistry {
    static REGISTRY: OnceLock<PresetRegistry> = OnceLock::new();
    REGISTRY.get_or_init(|| PresetRegistry::from_json(BUILTIN_PRESETS).expect("built-in presets are valid"))
}

pub fn preset(name: &str) -> Result<&'static Preset> {
    let registry = builtin_presets();
    registry.get(name).ok_or_else(|| {
        let known: Vec<&str> = registry.names().collect();
        Error::domain(format!("unknown preset {name:?}; known: {}", known.join(", ")))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{GHZ, NANOMETER, PICOMETER};

    fn riedel(q: f64, sigma: f64) -> PurcellParams {
        preset("riedel-air").unwrap().mode_params().with_q(q, sigma)
    }

    #[test]
    fn bare_purcell_value() {
        // Exact value of (3/4π²)/(9·2.41³)·1e4.
        let f = purcell_factor(&riedel(1e4, 0.0)).unwrap();
        assert!((f - 6.032090946814664).abs() < 1e-9, "{f}");
        let half = PurcellParams {
            mode_volume: 2.0 * riedel(1e4, 0.0).mode_volume,
            ..riedel(1e4, 0.0)
        };
        assert!((purcell_factor(&half).unwrap() - f / 2.0).abs() < 1e-12);
        assert!(purcell_factor(&riedel(1e-300, 0.0)).unwrap() < 1e-290);
        assert!(purcell_factor(&riedel(0.0, 0.0)).is_err());
    }

    #[test]
    fn overlap_values() {
        let (nu, q) = (470e12, 1e4);
        assert_eq!(spectral_overlap(nu, q, 0.0).unwrap(), 1.0);
        assert!((spectral_overlap(nu, q, nu / (2.0 * q)).unwrap() - 0.5).abs() < 1e-15);
        assert!((spectral_overlap(nu, q, nu / q).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(
            spectral_overlap(nu, q, 3e9).unwrap(),
            spectral_overlap(nu, q, -3e9).unwrap()
        );
    }

    #[test]
    fn pdf_values() {
        let f0 = vibration_pdf(GHZ, 0.0).unwrap();
        assert!((f0 - 3.989422804014327e-10).abs() < 1e-22);
        assert_eq!(vibration_pdf(GHZ, 2.5e9).unwrap(), vibration_pdf(GHZ, -2.5e9).unwrap());
        assert!(vibration_pdf(0.0, 1.0).is_err());
    }

    #[test]
    fn ratio_to_bound_is_scaled_erfc() {
        let mode = preset("tunable-air").unwrap().mode_params();
        for &(q, sigma) in &[(1e4, 25.0), (1e6, 1.0), (1e8, 100.0)] {
            let p = mode.with_q(q, sigma * PICOMETER);
            let t = p.frequency / (2.0 * 2f64.sqrt() * q * p.frequency_jitter());
            let ratio = effective_purcell(&p).unwrap() / max_purcell(&mode, p.rms_length_fluctuation).unwrap();
            assert!((ratio - erfcx(t)).abs() < 1e-14, "{ratio} vs {}", erfcx(t));
        }
    }

    #[test]
    fn scaled_erfc_at_one_hundredth() {
        assert!((erfcx(0.01) - 0.98881).abs() < 1e-5);
    }

    #[test]
    fn zero_sigma_is_bare() {
        let p = riedel(3e4, 0.0);
        assert_eq!(effective_purcell(&p).unwrap(), purcell_factor(&p).unwrap());
        let r = evaluate(&p).unwrap();
        assert!(r.bound.is_none());
        assert!(max_purcell(&p.mode(), 0.0).is_err());
    }

    #[test]
    fn huge_quality_factor_stays_finite() {
        let p = riedel(1e300, 1e-15);
        let f = effective_purcell(&p).unwrap();
        let bound = max_purcell(&p.mode(), 1e-15).unwrap();
        assert!(f.is_finite() && (f / bound - 1.0).abs() < 1e-9);
        let tiny = effective_purcell(&riedel(1e2, 1e-20)).unwrap();
        assert!((tiny / purcell_factor(&riedel(1e2, 1e-20)).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn tunable_air_at_25_pm() {
        let f = max_purcell(&preset("tunable-air").unwrap().mode_params(), 25.0 * PICOMETER).unwrap();
        assert!((22.0..=29.0).contains(&f), "{f}");
    }

    #[test]
    fn design_curve_is_decreasing() {
        let mode = preset("flagan-diamond").unwrap().mode_params();
        let curve = design_curve(&mode, PICOMETER, 1000.0 * PICOMETER, 31).unwrap();
        assert_eq!(curve.len(), 31);
        assert_eq!(curve[0].sigma, PICOMETER);
        assert_eq!(curve[30].sigma, 1000.0 * PICOMETER);
        assert!(curve.windows(2).all(|w| w[1].max_purcell < w[0].max_purcell));
        assert!(design_curve(&mode, 0.0, 1.0, 10).is_err());
    }

    #[test]
    fn registry_round_trip() {
        let reg = builtin_presets();
        assert_eq!(reg.presets.len(), 4);
        let text = serde_json::to_string(reg).unwrap();
        assert_eq!(&PresetRegistry::from_json(&text).unwrap(), reg);
        let p = preset("tunable-diamond").unwrap();
        assert!((p.wavelength - 619.0 * NANOMETER).abs() < 1e-18);
        assert!(preset("nope").is_err());
        assert!(PresetRegistry::from_json(r#"{"version": 2, "presets": []}"#).is_err());
    }
}
