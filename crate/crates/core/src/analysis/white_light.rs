use crate::cavity::length_from_fsr;
use crate::constants::SPEED_OF_LIGHT;
use crate::error::{Error, Result};
use crate::io::SampledCurve;
use crate::peaks::{find_peaks, median, robust_sigma, PeakOptions};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhiteLightOptions {
    pub peaks: PeakOptions,
    /// Peaks lower than this fraction of the tallest are treated as
    /// transverse modes.
    pub height_fraction: f64,
    /// Spacings further than this many robust standard deviations from the
    /// median are rejected.
    pub mad_factor: f64,
}

impl Default for WhiteLightOptions {
    fn default() -> Self {
        Self {
            peaks: PeakOptions::default(),
            height_fraction: 0.5,
            mad_factor: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhiteLightPeak {
    /// [m]
    pub wavelength: f64,
    /// [Hz]
    pub frequency: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhiteLightResult {
    /// Optical length `c/(2·FSR)` [m].
    pub length: f64,
    /// Median accepted spacing [Hz].
    pub fsr: f64,
    /// Fundamental modes, ascending in frequency.
    pub modes: Vec<WhiteLightPeak>,
    /// Peaks dropped by the height filter.
    pub rejected_peaks: Vec<WhiteLightPeak>,
    /// Adjacent spacings used for the FSR [Hz].
    pub spacings: Vec<f64>,
    pub rejected_spacings: Vec<f64>,
}

/// Free spectral range and optical length from the fundamental modes of a
/// broadband transmission spectrum. `spectrum.axis` is the wavelength [m].
pub fn length_from_white_light(spectrum: &SampledCurve, options: &WhiteLightOptions) -> Result<WhiteLightResult> {
    let (axis, values) = (&spectrum.axis, &spectrum.values);
    if axis.len() != values.len() || axis.len() < 3 {
        return Err(Error::InsufficientData("spectrum needs at least three samples".into()));
    }
    let increasing = axis.windows(2).all(|w| w[1] > w[0]);
    let decreasing = axis.windows(2).all(|w| w[1] < w[0]);
    if !(increasing || decreasing) || !(axis.iter().all(|&l| l > 0.0)) {
        return Err(Error::domain("wavelength axis must be positive and strictly monotone"));
    }

    let found: Vec<WhiteLightPeak> = find_peaks(values, &options.peaks)
        .iter()
        .map(|p| {
            let wavelength = refine(axis, values, p.index);
            WhiteLightPeak {
                wavelength,
                frequency: SPEED_OF_LIGHT / wavelength,
                height: p.height,
            }
        })
        .collect();
    let tallest = found.iter().map(|p| p.height).fold(f64::NEG_INFINITY, f64::max);
    let (mut modes, mut rejected_peaks): (Vec<_>, Vec<_>) = found
        .into_iter()
        .partition(|p| p.height >= options.height_fraction * tallest);
    modes.sort_by(|a, b| a.frequency.total_cmp(&b.frequency));
    rejected_peaks.sort_by(|a, b| a.frequency.total_cmp(&b.frequency));
    if modes.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} fundamental peak(s) found, at least two are needed",
            modes.len()
        )));
    }

    let all: Vec<f64> = modes.windows(2).map(|w| w[1].frequency - w[0].frequency).collect();
    let center = median(&mut all.clone());
    let spread = robust_sigma(&all);
    let (spacings, rejected_spacings): (Vec<f64>, Vec<f64>) = all
        .iter()
        .partition(|&&s| (s - center).abs() <= options.mad_factor * spread);
    let fsr = median(&mut spacings.clone());
    Ok(WhiteLightResult {
        length: length_from_fsr(fsr)?,
        fsr,
        modes,
        rejected_peaks,
        spacings,
        rejected_spacings,
    })
}

/// Vertex of the parabola through the three samples around `i`.
fn refine(axis: &[f64], values: &[f64], i: usize) -> f64 {
    if i == 0 || i + 1 >= axis.len() {
        return axis[i];
    }
    let (x0, x1, x2) = (axis[i - 1], axis[i], axis[i + 1]);
    let (y0, y1, y2) = (values[i - 1], values[i], values[i + 1]);
    let denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
    let a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
    let b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
    if a < 0.0 {
        let v = -b / (2.0 * a);
        if (x0.min(x2)..=x0.max(x2)).contains(&v) {
            return v;
        }
    }
    x1
}
