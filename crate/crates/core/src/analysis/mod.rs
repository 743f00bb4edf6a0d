//! Analysis of measured (or synthetic) cavity traces.

mod displacement;
mod lorentz;
mod odmr;
mod spectrum;
mod voigt;
mod white_light;

pub use displacement::{
    gaussianity_check, transmission_to_displacement, ConversionOptions, DisplacementConversion, GaussianityOptions,
    GaussianityReport,
};
pub use lorentz::{calibrate_scan_axis, fit_lorentzian_peaks, lorentzian, CalibratedScan, PeakFit};
pub use odmr::{odmr_fit, OdmrOptions, OdmrResult};
pub use spectrum::{amplitude_spectrum, cycle_phase_rms, PhaseBin, SpectrumOptions, SpectrumResult};
pub use voigt::{combine_scans, voigt_scan_fit, Estimate, VoigtFit, VoigtOptions, VoigtSummary};
pub use white_light::{length_from_white_light, WhiteLightOptions, WhiteLightPeak, WhiteLightResult};

use crate::error::{Error, Result};
use crate::io::SampledCurve;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    /// Acquisition duration [s].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    /// Detector bandwidth [Hz].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector_bandwidth: Option<f64>,
}

/// Uniformly sampled photodiode signal [V].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionTrace {
    pub samples: Vec<f64>,
    /// [Hz]
    pub sample_rate: f64,
    #[serde(default)]
    pub meta: TraceMeta,
}

fn check_samples(samples: &[f64], sample_rate: f64) -> Result<()> {
    if !(sample_rate > 0.0 && sample_rate.is_finite()) {
        return Err(Error::domain(format!(
            "sample rate must be positive, got {sample_rate}"
        )));
    }
    if samples.len() < 2 {
        return Err(Error::InsufficientData("a trace needs at least two samples".into()));
    }
    if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
        return Err(Error::domain(format!("non-finite sample at index {i}")));
    }
    Ok(())
}

impl TransmissionTrace {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        check_samples(&samples, sample_rate)?;
        let duration = samples.len() as f64 / sample_rate;
        Ok(Self {
            samples,
            sample_rate,
            meta: TraceMeta {
                duration: Some(duration),
                detector_bandwidth: None,
            },
        })
    }

    /// Requires a uniformly sampled axis.
    pub fn from_curve(curve: &SampledCurve) -> Result<Self> {
        let rate = curve.uniform_sample_rate()?;
        Self::new(curve.values.clone(), rate)
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn to_curve(&self) -> SampledCurve {
        SampledCurve::from_samples(self.samples.clone(), self.sample_rate).with_units("s", "V")
    }
}

/// Cavity length fluctuation time series [m], mean removed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplacementTrace {
    pub samples: Vec<f64>,
    /// [Hz]
    pub sample_rate: f64,
    /// RMS of the mean-subtracted samples [m].
    pub rms: f64,
}

impl DisplacementTrace {
    /// Subtracts the mean and computes the RMS.
    pub fn new(mut samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        check_samples(&samples, sample_rate)?;
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        for x in &mut samples {
            *x -= mean;
        }
        let rms = (samples.iter().map(|x| x * x).sum::<f64>() / samples.len() as f64).sqrt();
        Ok(Self {
            samples,
            sample_rate,
            rms,
        })
    }

    pub fn from_curve(curve: &SampledCurve) -> Result<Self> {
        let rate = curve.uniform_sample_rate()?;
        Self::new(curve.values.clone(), rate)
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn to_curve(&self) -> SampledCurve {
        SampledCurve::from_samples(self.samples.clone(), self.sample_rate).with_units("s", "m")
    }
}

/// Flank of the resonance on which the cavity sits.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    /// Shorter than resonant length; displacements are negative.
    Left,
    /// Longer than resonant length; displacements are positive.
    #[default]
    Right,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Left => -1.0,
            Side::Right => 1.0,
        }
    }
}

impl std::str::FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            _ => Err(Error::Parse(format!("side must be \"left\" or \"right\", got {s:?}"))),
        }
    }
}

/// Lorentzian transmission resonance
/// `T(x) = background + amplitude / (1 + (2(x − center)/fwhm)²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzianResonance {
    /// Peak height above background [V].
    pub amplitude: f64,
    /// Center in axis units ([Hz] once calibrated).
    pub center: f64,
    /// Full width at half maximum in axis units ([Hz] once calibrated).
    pub fwhm_spectral: f64,
    /// Full width at half maximum in cavity length [m].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fwhm_spatial: Option<f64>,
    /// [V]
    pub background: f64,
}

impl LorentzianResonance {
    /// Length-domain calibration used by the displacement conversion.
    pub fn spatial(amplitude: f64, fwhm_spatial: f64, background: f64) -> Result<Self> {
        let r = Self {
            amplitude,
            center: 0.0,
            fwhm_spectral: f64::NAN,
            fwhm_spatial: Some(fwhm_spatial),
            background,
        };
        if !(amplitude > 0.0) || !(fwhm_spatial > 0.0) || !(background >= 0.0) {
            return Err(Error::domain("calibration needs T0 > 0, κ_x > 0 and background ≥ 0"));
        }
        Ok(r)
    }

    /// Fills `fwhm_spatial = fwhm_spectral / |s|`.
    pub fn with_dispersion(mut self, slope: crate::cavity::DispersionSlope) -> Self {
        self.fwhm_spatial = Some(self.fwhm_spectral / slope.magnitude());
        self
    }

    pub fn value_at(&self, x: f64) -> f64 {
        self.background + self.amplitude * lorentzian(x - self.center, self.fwhm_spectral)
    }
}

/// Standard errors matching the fields of [`LorentzianResonance`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceErrors {
    pub amplitude: f64,
    pub center: f64,
    pub fwhm_spectral: f64,
    pub background: f64,
}

/// Flat photoluminescence baseline with inverted Lorentzian dips, or a sum of
/// Lorentzian peaks, share the same parameter layout: one offset followed by
/// `(amplitude, center, fwhm)` triples.
pub(crate) fn peaks_model(params: &[f64], x: f64) -> f64 {
    params[1..]
        .chunks_exact(3)
        .map(|p| p[0] * lorentzian(x - p[1], p[2]))
        .sum()
}

/// Scales an axis and values to O(1) for fitting.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Normalizer {
    pub x0: f64,
    pub xs: f64,
    pub y0: f64,
    pub ys: f64,
}

impl Normalizer {
    pub fn new(axis: &[f64], values: &[f64]) -> Self {
        let (xmin, xmax) = min_max(axis);
        let (ymin, ymax) = min_max(values);
        let xs = if xmax > xmin { xmax - xmin } else { 1.0 };
        let ys = if ymax > ymin { ymax - ymin } else { ymax.abs().max(1.0) };
        Self {
            x0: 0.5 * (xmin + xmax),
            xs,
            y0: ymin,
            ys,
        }
    }

    pub fn x(&self, x: f64) -> f64 {
        (x - self.x0) / self.xs
    }

    pub fn y(&self, y: f64) -> f64 {
        (y - self.y0) / self.ys
    }
}

pub(crate) fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)))
}

/// Axis step around sample `i`.
pub(crate) fn local_step(axis: &[f64], i: usize) -> f64 {
    if axis.len() < 2 {
        return 1.0;
    }
    let j = i.min(axis.len() - 2);
    (axis[j + 1] - axis[j]).abs()
}
