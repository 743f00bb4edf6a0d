use super::{local_step, min_max};
use crate::cavity::DispersionSlope;
use crate::error::{Error, Result};
use crate::fit::{levenberg_marquardt, FitOptions};
use crate::io::SampledCurve;
use crate::peaks::{all_peaks, moving_average};
use crate::special::{voigt_peak_normalized, GAUSS_FWHM_PER_SIGMA};
use serde::{Deserialize, Serialize};

/// A fitted quantity, or only an upper bound when the data cannot
/// distinguish it from zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Estimate {
    Value { value: f64, uncertainty: f64 },
    UpperBound { limit: f64 },
}

impl Estimate {
    pub fn value(&self) -> Option<f64> {
        match *self {
            Estimate::Value { value, .. } => Some(value),
            Estimate::UpperBound { .. } => None,
        }
    }

    pub fn is_upper_bound(&self) -> bool {
        matches!(self, Estimate::UpperBound { .. })
    }

    fn scaled(self, factor: f64) -> Self {
        match self {
            Estimate::Value { value, uncertainty } => Estimate::Value {
                value: value * factor,
                uncertainty: uncertainty * factor,
            },
            Estimate::UpperBound { limit } => Estimate::UpperBound { limit: limit * factor },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoigtOptions {
    /// The Gaussian variance must exceed this many standard errors to be
    /// reported as a value.
    pub significance: f64,
    /// Moving-average width used only to locate the peak.
    pub smoothing: usize,
}

impl Default for VoigtOptions {
    fn default() -> Self {
        Self {
            significance: 3.0,
            smoothing: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoigtFit {
    pub amplitude: f64,
    /// [Hz]
    pub center: f64,
    pub background: f64,
    /// Lorentzian full width held fixed during the fit [Hz].
    pub lorentzian_fwhm: f64,
    /// Raw fitted Gaussian standard deviation and its standard error [Hz].
    pub sigma_freq_fit: f64,
    pub sigma_freq_error: f64,
    pub sigma_freq: Estimate,
    /// `σ_freq / |s|` [m].
    pub sigma_length: Estimate,
    pub residual_rms: f64,
    /// Axis step, the smallest resolvable Gaussian width [Hz].
    pub resolution: f64,
}

/// Fits `background + A·V(ν − ν0; σ, κ/2)` with the Lorentzian width frozen
/// at `lorentzian_fwhm`. The Gaussian width converts to a length jitter via
/// the dispersion slope.
pub fn voigt_scan_fit(
    scan: &SampledCurve,
    lorentzian_fwhm: f64,
    slope: DispersionSlope,
    options: &VoigtOptions,
) -> Result<VoigtFit> {
    if !(lorentzian_fwhm > 0.0 && lorentzian_fwhm.is_finite()) {
        return Err(Error::domain("Lorentzian linewidth must be positive"));
    }
    if !(slope.magnitude() > 0.0 && slope.magnitude().is_finite()) {
        return Err(Error::domain("dispersion slope must be non-zero"));
    }
    let (axis, values) = (&scan.axis, &scan.values);
    if axis.len() != values.len() || axis.len() < 8 {
        return Err(Error::InsufficientData("scan needs at least 8 samples".into()));
    }
    let (xmin, xmax) = min_max(axis);
    if xmax - xmin < 5.0 * lorentzian_fwhm {
        return Err(Error::domain(format!(
            "scan span {:e} Hz is shorter than 5 linewidths",
            xmax - xmin
        )));
    }

    let smooth = moving_average(values, options.smoothing);
    let peak = all_peaks(&smooth)
        .into_iter()
        .max_by(|a, b| a.prominence.total_cmp(&b.prominence))
        .ok_or_else(|| Error::Detection("no peak found in scan".into()))?;
    let step = local_step(axis, peak.index);
    let observed_fwhm = (peak.width * step).max(lorentzian_fwhm);
    // Olivero–Longbothum inverted for the Gaussian part.
    let fg_sq = (observed_fwhm - 0.5346 * lorentzian_fwhm).powi(2) - 0.2166 * lorentzian_fwhm.powi(2);
    let sigma_guess = (fg_sq.max(0.0).sqrt() / GAUSS_FWHM_PER_SIGMA).max(0.1 * lorentzian_fwhm);

    let (ymin, ymax) = min_max(values);
    let ys = if ymax > ymin { ymax - ymin } else { 1.0 };
    let x0 = axis[peak.index];
    let k = lorentzian_fwhm;
    let u: Vec<f64> = axis.iter().map(|x| (x - x0) / k).collect();
    let y: Vec<f64> = values.iter().map(|v| (v - ymin) / ys).collect();
    let base = (smooth[peak.index] - peak.prominence - ymin) / ys;
    let initial = [base.max(0.0), peak.prominence / ys, 0.0, sigma_guess / k];
    let fit = levenberg_marquardt(
        |p, r| {
            for ((ri, &ui), &yi) in r.iter_mut().zip(&u).zip(&y) {
                *ri = p[0] + p[1] * voigt_peak_normalized(ui - p[2], p[3].abs(), 0.5) - yi;
            }
        },
        &initial,
        &[1.0, 1.0, 1.0, 1.0],
        u.len(),
        FitOptions::default(),
    )?;
    let sigma = fit.params[3].abs() * k;
    let sigma_err = fit.std_errors[3] * k;
    let resolution = (xmax - xmin) / (axis.len() - 1) as f64;
    let sigma_freq = classify(sigma, sigma_err, resolution, options.significance);
    Ok(VoigtFit {
        amplitude: fit.params[1] * ys,
        center: x0 + fit.params[2] * k,
        background: fit.params[0] * ys + ymin,
        lorentzian_fwhm,
        sigma_freq_fit: sigma,
        sigma_freq_error: sigma_err,
        sigma_freq,
        sigma_length: sigma_freq.scaled(1.0 / slope.magnitude()),
        residual_rms: fit.residual_rms * ys,
        resolution,
    })
}

/// The fit is effectively linear in `σ²` near zero, so significance is
/// judged there: `σ² > z·δ(σ²)` with `δ(σ²) = 2σ·δσ`.
fn classify(sigma: f64, err: f64, resolution: f64, z: f64) -> Estimate {
    if sigma > 2.0 * z * err && sigma > resolution {
        Estimate::Value {
            value: sigma,
            uncertainty: err,
        }
    } else {
        Estimate::UpperBound {
            limit: (sigma * sigma + 2.0 * z * sigma * err).sqrt().max(resolution),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoigtSummary {
    pub scans: usize,
    /// Scans whose Gaussian width was significant.
    pub resolved: usize,
    pub sigma_freq: Estimate,
    pub sigma_length: Estimate,
}

/// Random-effects weighted mean over scans: each scan is weighted by
/// `1/(δσ_i² + τ²)`, where `τ²` is the DerSimonian–Laird estimate of the
/// scan-to-scan variance in excess of the fit errors. When at most half the
/// scans resolve a Gaussian width the result is the largest single-scan
/// upper bound.
pub fn combine_scans(fits: &[VoigtFit], slope: DispersionSlope) -> Result<VoigtSummary> {
    if fits.is_empty() {
        return Err(Error::InsufficientData("no scans to combine".into()));
    }
    let resolved: Vec<(f64, f64)> = fits
        .iter()
        .filter_map(|f| match f.sigma_freq {
            Estimate::Value { value, uncertainty } => Some((value, uncertainty)),
            Estimate::UpperBound { .. } => None,
        })
        .collect();
    let sigma_freq = if 2 * resolved.len() > fits.len() {
        let (value, uncertainty) = random_effects_mean(&resolved);
        Estimate::Value { value, uncertainty }
    } else {
        let limit = fits
            .iter()
            .map(|f| match f.sigma_freq {
                Estimate::UpperBound { limit } => limit,
                Estimate::Value { value, uncertainty } => value + 2.0 * uncertainty,
            })
            .fold(0.0, f64::max);
        Estimate::UpperBound { limit }
    };
    Ok(VoigtSummary {
        scans: fits.len(),
        resolved: resolved.len(),
        sigma_freq,
        sigma_length: sigma_freq.scaled(1.0 / slope.magnitude()),
    })
}

fn random_effects_mean(values: &[(f64, f64)]) -> (f64, f64) {
    let fixed: Vec<f64> = values
        .iter()
        .map(|(_, e)| 1.0 / (e * e).max(f64::MIN_POSITIVE))
        .collect();
    let sw: f64 = fixed.iter().sum();
    let mean_fixed = values.iter().zip(&fixed).map(|((v, _), w)| v * w).sum::<f64>() / sw;
    let q: f64 = values
        .iter()
        .zip(&fixed)
        .map(|((v, _), w)| w * (v - mean_fixed).powi(2))
        .sum();
    let k = values.len() as f64;
    let c = sw - fixed.iter().map(|w| w * w).sum::<f64>() / sw;
    let tau2 = if c > 0.0 { ((q - (k - 1.0)) / c).max(0.0) } else { 0.0 };
    let weights: Vec<f64> = values
        .iter()
        .map(|(_, e)| 1.0 / (e * e + tau2).max(f64::MIN_POSITIVE))
        .collect();
    let wsum: f64 = weights.iter().sum();
    let mean = values.iter().zip(&weights).map(|((v, _), w)| v * w).sum::<f64>() / wsum;
    (mean, 1.0 / wsum.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{GHZ, MHZ};

    fn scan(sigma: f64) -> SampledCurve {
        let axis: Vec<f64> = (0..3001).map(|i| -7.5 * GHZ + i as f64 * 5.0 * MHZ).collect();
        let values = axis
            .iter()
            .map(|&x| 0.02 + 0.9 * voigt_peak_normalized(x - 0.3 * GHZ, sigma, 0.5 * GHZ))
            .collect();
        SampledCurve::new(axis, values)
    }

    #[test]
    fn noise_free_recovery() {
        let s = DispersionSlope::from_mhz_per_pm(20.0);
        let fit = voigt_scan_fit(&scan(502.0 * MHZ), GHZ, s, &VoigtOptions::default()).unwrap();
        let v = fit.sigma_freq.value().unwrap();
        assert!((v / (502.0 * MHZ) - 1.0).abs() < 1e-6, "{v}");
        assert!((fit.sigma_length.value().unwrap() - 25.1e-12).abs() < 1e-16);
        assert!((fit.center - 0.3 * GHZ).abs() < 1e3);
    }

    #[test]
    fn pure_lorentzian_is_upper_bound() {
        let s = DispersionSlope::from_mhz_per_pm(20.0);
        let fit = voigt_scan_fit(&scan(0.0), GHZ, s, &VoigtOptions::default()).unwrap();
        assert!(fit.sigma_freq.is_upper_bound(), "{:?}", fit.sigma_freq);
        assert!((fit.amplitude - 0.9).abs() < 1e-6);
    }

    #[test]
    fn short_scan_rejected() {
        let axis: Vec<f64> = (0..100).map(|i| i as f64 * 10.0 * MHZ).collect();
        let curve = SampledCurve::new(axis.clone(), vec![0.0; 100]);
        let err = voigt_scan_fit(
            &curve,
            GHZ,
            DispersionSlope::from_mhz_per_pm(20.0),
            &VoigtOptions::default(),
        );
        assert_eq!(err.unwrap_err().class(), "domain");
    }

    #[test]
    fn random_effects_limits() {
        // Consistent scans: plain inverse-variance mean.
        let (m, e) = random_effects_mean(&[(1.0, 0.1), (1.0, 0.2)]);
        assert!((m - 1.0).abs() < 1e-15);
        assert!((e - 1.0 / (100.0f64 + 25.0).sqrt()).abs() < 1e-12);
        // Scatter far above the fit errors: close to the unweighted mean.
        let (m, e) = random_effects_mean(&[(1.0, 1e-3), (2.0, 2e-3), (3.0, 3e-3)]);
        assert!((m - 2.0).abs() < 1e-3, "{m}");
        assert!((e / (1.0f64 / 3.0).sqrt() - 1.0).abs() < 0.05, "{e}");
    }
}
