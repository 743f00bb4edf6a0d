use super::{local_step, min_max, peaks_model};
use crate::constants::NV_GYROMAGNETIC_RATIO;
use crate::error::{Error, Result};
use crate::fit::{levenberg_marquardt, FitOptions};
use crate::io::SampledCurve;
use crate::peaks::{all_peaks, median, moving_average, noise_estimate};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdmrOptions {
    /// Minimum dip depth relative to the baseline.
    pub contrast_threshold: f64,
    /// Minimum dip depth in units of the noise estimate.
    pub noise_factor: f64,
    /// Doublets split by less than this are not attributed to a field [Hz].
    pub field_threshold: f64,
    /// Never attribute a field, whatever the splitting.
    pub zero_field: bool,
    /// Moving-average width used only for dip detection.
    pub smoothing: usize,
}

impl Default for OdmrOptions {
    fn default() -> Self {
        Self {
            contrast_threshold: 0.005,
            noise_factor: 5.0,
            field_threshold: 20e6,
            zero_field: false,
            smoothing: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdmrResult {
    /// Ascending [Hz].
    pub dip_centers: Vec<f64>,
    pub center_errors: Vec<f64>,
    /// Fractional depth of each dip.
    pub contrasts: Vec<f64>,
    /// Full widths [Hz].
    pub linewidths: Vec<f64>,
    pub baseline: f64,
    /// `|c2 − c1|` for a doublet [Hz].
    pub splitting: Option<f64>,
    pub splitting_error: Option<f64>,
    /// `splitting / (2γ_e)` [T]; absent for single dips, for doublets below
    /// the attribution threshold and when zero field is declared.
    pub inferred_field: Option<f64>,
    pub field_error: Option<f64>,
    pub residual_rms: f64,
}

/// Fits `baseline·(1 − Σ C_i·L_i(ν))` with one or two dips.
pub fn odmr_fit(spectrum: &SampledCurve, n_dips: usize, options: &OdmrOptions) -> Result<OdmrResult> {
    if !(1..=2).contains(&n_dips) {
        return Err(Error::domain(format!(
            "one or two dips can be fitted, {n_dips} requested"
        )));
    }
    let (axis, values) = (&spectrum.axis, &spectrum.values);
    if axis.len() != values.len() || axis.len() < 3 * n_dips + 2 {
        return Err(Error::InsufficientData("spectrum too short".into()));
    }
    let smooth = moving_average(values, options.smoothing);
    let baseline = median(&mut smooth.clone());
    let inverted: Vec<f64> = smooth.iter().map(|v| baseline - v).collect();
    let threshold = (options.contrast_threshold * baseline.abs()).max(options.noise_factor * noise_estimate(values));
    let mut dips: Vec<_> = all_peaks(&inverted)
        .into_iter()
        .filter(|p| p.prominence >= threshold && inverted[p.index] >= threshold)
        .collect();
    if dips.len() < n_dips {
        return Err(Error::Detection(format!(
            "{n_dips} dip(s) requested, {} found above the contrast threshold",
            dips.len()
        )));
    }
    dips.sort_by(|a, b| b.prominence.total_cmp(&a.prominence));
    dips.truncate(n_dips);
    dips.sort_by_key(|p| p.index);

    let (xmin, xmax) = min_max(axis);
    let x0 = 0.5 * (xmin + xmax);
    let xs = (xmax - xmin).max(f64::MIN_POSITIVE);
    let u: Vec<f64> = axis.iter().map(|x| (x - x0) / xs).collect();
    let y: Vec<f64> = values.iter().map(|v| v / baseline).collect();
    let mut initial = vec![1.0];
    let mut scales = vec![1.0];
    for d in &dips {
        let step = local_step(axis, d.index) / xs;
        let width = (d.width * step).max(2.0 * step);
        initial.extend([inverted[d.index] / baseline, u[d.index], width]);
        scales.extend([0.1, width, width]);
    }
    let fit = levenberg_marquardt(
        |p, r| {
            let mut q = p.to_vec();
            for c in q[1..].chunks_exact_mut(3) {
                c[2] = c[2].abs();
            }
            for ((ri, &ui), &yi) in r.iter_mut().zip(&u).zip(&y) {
                *ri = p[0] * (1.0 - peaks_model(&q, ui)) - yi;
            }
        },
        &initial,
        &scales,
        u.len(),
        FitOptions::default(),
    )?;
    let p = &fit.params;
    let mut dips: Vec<(f64, f64, f64, f64, usize)> = (0..n_dips)
        .map(|i| {
            let j = 1 + 3 * i;
            (
                p[j + 1] * xs + x0,
                fit.std_errors[j + 1] * xs,
                p[j],
                p[j + 2].abs() * xs,
                j + 1,
            )
        })
        .collect();
    dips.sort_by(|a, b| a.0.total_cmp(&b.0));
    if dips.iter().any(|d| !(d.2 > 0.0)) {
        return Err(Error::Detection("fitted dip has non-positive contrast".into()));
    }

    let (splitting, splitting_error) = if n_dips == 2 {
        let (a, b) = (&dips[0], &dips[1]);
        let cov = fit.covariance[(a.4, b.4)] * xs * xs;
        let var = a.1 * a.1 + b.1 * b.1 - 2.0 * cov;
        (Some(b.0 - a.0), Some(var.max(0.0).sqrt()))
    } else {
        (None, None)
    };
    let attribute = !options.zero_field && splitting.is_some_and(|s| s >= options.field_threshold);
    let (inferred_field, field_error) = if attribute {
        (
            splitting.map(|s| s / (2.0 * NV_GYROMAGNETIC_RATIO)),
            splitting_error.map(|e| e / (2.0 * NV_GYROMAGNETIC_RATIO)),
        )
    } else {
        (None, None)
    };
    Ok(OdmrResult {
        dip_centers: dips.iter().map(|d| d.0).collect(),
        center_errors: dips.iter().map(|d| d.1).collect(),
        contrasts: dips.iter().map(|d| d.2).collect(),
        linewidths: dips.iter().map(|d| d.3).collect(),
        baseline: p[0] * baseline,
        splitting,
        splitting_error,
        inferred_field,
        field_error,
        residual_rms: fit.residual_rms * baseline,
    })
}
