use super::{
    synth_displacement, synth_odmr, synth_swept_scan, synth_transmission_trace, synth_white_light_spectrum, NoiseModel,
    OdmrLine, ScanConfig, SyntheticDisplacement,
};
use crate::analysis::{LorentzianResonance, Side, TransmissionTrace};
use crate::cavity::{CavityGeometry, DispersionSlope, FrequencyBand};
use crate::constants::DIAMOND_INDEX;
use crate::error::{Error, Result};
use crate::io::SampledCurve;
use crate::units;
use serde::{Deserialize, Serialize};

pub const SCENARIO_FORMAT_VERSION: u32 = 1;

/// A named, versioned scenario document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub version: u32,
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub scenario: Scenario,
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if file.version != SCENARIO_FORMAT_VERSION {
            return Err(Error::Parse(format!(
                "unsupported scenario version {} (expected {SCENARIO_FORMAT_VERSION})",
                file.version
            )));
        }
        file.scenario.validate()?;
        Ok(file)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Scenario {
    Vibration(VibrationScenario),
    Scan(ScanScenario),
    WhiteLight(WhiteLightScenario),
    Odmr(OdmrScenario),
}

impl Scenario {
    pub fn kind(&self) -> &'static str {
        match self {
            Scenario::Vibration(_) => "vibration",
            Scenario::Scan(_) => "scan",
            Scenario::WhiteLight(_) => "white-light",
            Scenario::Odmr(_) => "odmr",
        }
    }

    /// Checks everything that can be checked without generating data.
    pub fn validate(&self) -> Result<()> {
        match self {
            Scenario::Vibration(v) => {
                v.calibration()?;
                if !(v.duration > 0.0 && v.sample_rate > 0.0) {
                    return Err(Error::domain("duration and sample_rate must be positive"));
                }
                Ok(())
            }
            Scenario::Scan(s) => {
                s.resonance();
                if s.scans == 0 {
                    return Err(Error::domain("scans must be ≥ 1"));
                }
                if !(s.dispersion != 0.0) {
                    return Err(Error::domain("dispersion must be non-zero"));
                }
                Ok(())
            }
            Scenario::WhiteLight(w) => {
                w.geometry.to_geometry()?;
                w.band()?;
                Ok(())
            }
            Scenario::Odmr(o) => {
                o.axis()?;
                Ok(())
            }
        }
    }
}

/// Lorentzian resonance used to convert displacement to transmission.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSpec {
    /// Peak transmission above background T0 [V].
    #[serde(with = "units::voltage")]
    pub amplitude: f64,
    #[serde(default, with = "units::voltage")]
    pub background: f64,
    /// κ_x [m]
    #[serde(with = "units::length")]
    pub fwhm_spatial: f64,
    #[serde(default)]
    pub side: Side,
    /// Unperturbed transmission as a fraction of T0.
    #[serde(default = "half")]
    pub operating_point: f64,
}

fn half() -> f64 {
    0.5
}

impl CalibrationSpec {
    pub fn resonance(&self) -> Result<LorentzianResonance> {
        LorentzianResonance::spatial(self.amplitude, self.fwhm_spatial, self.background)
    }
}

/// Displacement noise seen through the flank of a cavity resonance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VibrationScenario {
    pub noise: NoiseModel,
    #[serde(with = "units::time")]
    pub duration: f64,
    #[serde(with = "units::frequency")]
    pub sample_rate: f64,
    pub calibration: CalibrationSpec,
    #[serde(default, with = "units::voltage")]
    pub detector_noise: f64,
    /// Cryocooler cycle, for phase-resolved analysis [s].
    #[serde(default, with = "units::time::option", skip_serializing_if = "Option::is_none")]
    pub cycle_period: Option<f64>,
}

impl VibrationScenario {
    pub fn calibration(&self) -> Result<LorentzianResonance> {
        self.calibration.resonance()
    }

    pub fn displacement(&self) -> Result<SyntheticDisplacement> {
        synth_displacement(&self.noise, self.duration, self.sample_rate)
    }

    pub fn transmission(&self, disp: &SyntheticDisplacement) -> Result<TransmissionTrace> {
        let mut trace = synth_transmission_trace(
            &disp.trace,
            &self.calibration()?,
            self.calibration.side,
            self.calibration.operating_point,
            self.detector_noise,
            self.noise.seed,
        )?;
        trace.meta.duration = Some(self.duration);
        Ok(trace)
    }
}

/// Repeated laser sweeps across a jittering resonance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanScenario {
    /// Lorentzian full width κ [Hz].
    #[serde(with = "units::frequency")]
    pub linewidth: f64,
    #[serde(with = "units::voltage")]
    pub amplitude: f64,
    #[serde(default, with = "units::voltage")]
    pub background: f64,
    /// RMS cavity-length jitter [m].
    #[serde(with = "units::length")]
    pub length_jitter: f64,
    /// Dispersion slope [Hz/m].
    #[serde(with = "units::frequency_per_length")]
    pub dispersion: f64,
    pub config: ScanConfig,
    #[serde(default = "one")]
    pub scans: usize,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> usize {
    1
}

impl ScanScenario {
    pub fn resonance(&self) -> LorentzianResonance {
        LorentzianResonance {
            amplitude: self.amplitude,
            center: 0.0,
            fwhm_spectral: self.linewidth,
            fwhm_spatial: None,
            background: self.background,
        }
    }

    pub fn slope(&self) -> DispersionSlope {
        DispersionSlope(self.dispersion)
    }

    /// Frequency jitter `σ_L·|s|` [Hz].
    pub fn sigma_freq(&self) -> f64 {
        self.length_jitter * self.dispersion.abs()
    }

    /// Scan `index` uses seed `seed + index`.
    pub fn scan(&self, index: usize) -> Result<SampledCurve> {
        synth_swept_scan(
            &self.resonance(),
            self.sigma_freq(),
            &self.config,
            self.seed.wrapping_add(index as u64),
        )
    }
}

/// Hybrid cavity as written in scenario files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    #[serde(default, with = "units::length")]
    pub diamond_thickness: f64,
    #[serde(with = "units::length")]
    pub air_gap: f64,
    #[serde(default = "diamond_index")]
    pub refractive_index: f64,
    #[serde(default, with = "units::length::option", skip_serializing_if = "Option::is_none")]
    pub radius_of_curvature: Option<f64>,
}

fn diamond_index() -> f64 {
    DIAMOND_INDEX
}

impl GeometrySpec {
    pub fn to_geometry(&self) -> Result<CavityGeometry> {
        let g = CavityGeometry::new(self.diamond_thickness, self.air_gap, self.refractive_index)?;
        match self.radius_of_curvature {
            Some(r) => g.with_radius_of_curvature(r),
            None => Ok(g),
        }
    }
}

/// Transverse-mode peaks placed between the fundamentals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpuriousPeaks {
    /// Height relative to the unit-height fundamentals.
    pub relative_amplitude: f64,
    /// Position above each fundamental as a fraction of the local FSR.
    pub offset_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhiteLightScenario {
    pub geometry: GeometrySpec,
    #[serde(with = "units::length")]
    pub wavelength_min: f64,
    #[serde(with = "units::length")]
    pub wavelength_max: f64,
    /// Lorentzian full width of every peak [Hz].
    #[serde(with = "units::frequency")]
    pub linewidth: f64,
    pub points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spurious: Option<SpuriousPeaks>,
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
}

impl WhiteLightScenario {
    pub fn band(&self) -> Result<FrequencyBand> {
        FrequencyBand::from_wavelengths(self.wavelength_min, self.wavelength_max)
    }

    pub fn spectrum(&self) -> Result<SampledCurve> {
        synth_white_light_spectrum(
            &self.geometry.to_geometry()?,
            self.band()?,
            self.linewidth,
            self.points,
            self.spurious,
            self.noise,
            self.seed,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdmrScenario {
    pub lines: Vec<OdmrLine>,
    #[serde(default = "unit_baseline")]
    pub baseline: f64,
    /// Additive noise in baseline units.
    #[serde(default)]
    pub noise: f64,
    #[serde(with = "units::frequency")]
    pub start: f64,
    #[serde(with = "units::frequency")]
    pub stop: f64,
    pub points: usize,
    #[serde(default)]
    pub seed: u64,
}

fn unit_baseline() -> f64 {
    1.0
}

impl OdmrScenario {
    pub fn axis(&self) -> Result<Vec<f64>> {
        if !(self.stop > self.start) || self.points < 8 {
            return Err(Error::domain("ODMR sweep needs stop > start and at least 8 points"));
        }
        let step = (self.stop - self.start) / (self.points - 1) as f64;
        Ok((0..self.points).map(|i| self.start + step * i as f64).collect())
    }

    pub fn spectrum(&self) -> Result<SampledCurve> {
        synth_odmr(&self.lines, self.baseline, self.noise, &self.axis()?, self.seed)
    }
}

const BUILTIN: &[(&str, &str)] = &[
    ("hila-default", include_str!("../../assets/scenarios/hila-default.json")),
    ("c2-default", include_str!("../../assets/scenarios/c2-default.json")),
    ("scan-default", include_str!("../../assets/scenarios/scan-default.json")),
    (
        "white-light-default",
        include_str!("../../assets/scenarios/white-light-default.json"),
    ),
    ("odmr-field", include_str!("../../assets/scenarios/odmr-field.json")),
    (
        "odmr-zero-field",
        include_str!("../../assets/scenarios/odmr-zero-field.json"),
    ),
];

pub fn builtin_scenario_names() -> Vec<&'static str> {
    BUILTIN.iter().map(|(n, _)| *n).collect()
}

pub fn builtin_scenario(name: &str) -> Result<ScenarioFile> {
    let (_, text) = BUILTIN.iter().find(|(n, _)| *n == name).ok_or_else(|| {
        Error::domain(format!(
            "unknown scenario {name:?}; built-ins: {}",
            builtin_scenario_names().join(", ")
        ))
    })?;
    ScenarioFile::from_json(text)
}
