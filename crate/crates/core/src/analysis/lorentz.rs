use super::{local_step, peaks_model, LorentzianResonance, Normalizer, ResonanceErrors};
use crate::error::{Error, Result};
use crate::fit::{levenberg_marquardt, FitOptions};
use crate::io::SampledCurve;
use crate::peaks::{find_peaks, PeakOptions};
use serde::{Deserialize, Serialize};

/// Unit-height Lorentzian of full width `fwhm`.
pub fn lorentzian(dx: f64, fwhm: f64) -> f64 {
    let u = 2.0 * dx / fwhm;
    1.0 / (1.0 + u * u)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakFit {
    /// Ordered by center.
    pub peaks: Vec<LorentzianResonance>,
    pub errors: Vec<ResonanceErrors>,
    pub residual_rms: f64,
    pub iterations: usize,
}

/// Least-squares fit of `n_peaks` Lorentzians on a shared constant background.
/// Starting values come from prominence-based peak detection, which must find
/// exactly `n_peaks` peaks.
pub fn fit_lorentzian_peaks(axis: &[f64], values: &[f64], n_peaks: usize, options: &PeakOptions) -> Result<PeakFit> {
    if n_peaks == 0 {
        return Err(Error::domain("at least one peak must be requested"));
    }
    if axis.len() != values.len() {
        return Err(Error::domain("axis and values differ in length"));
    }
    if values.iter().chain(axis).any(|v| !v.is_finite()) {
        return Err(Error::domain("trace contains non-finite values"));
    }
    let found = find_peaks(values, options);
    if found.len() != n_peaks {
        return Err(Error::Detection(format!(
            "expected {n_peaks} peak(s) above the prominence threshold, found {}",
            found.len()
        )));
    }
    let norm = Normalizer::new(axis, values);
    let xs: Vec<f64> = axis.iter().map(|&x| norm.x(x)).collect();
    let ys: Vec<f64> = values.iter().map(|&y| norm.y(y)).collect();

    let mut initial = vec![0.0];
    let mut scales = vec![1.0];
    let (lo, hi) = super::min_max(&ys);
    let base = found
        .iter()
        .map(|p| norm.y(p.height) - p.prominence / norm.ys)
        .fold(hi, f64::min)
        .max(lo);
    initial[0] = base;
    for p in &found {
        let step = local_step(axis, p.index) / norm.xs;
        let width = (p.width * step).max(2.0 * step);
        initial.extend([p.prominence / norm.ys, xs[p.index], width]);
        scales.extend([1.0, width, width]);
    }
    let fit = levenberg_marquardt(
        |p, r| {
            for ((ri, &x), &y) in r.iter_mut().zip(&xs).zip(&ys) {
                *ri = p[0] + peaks_model(&abs_widths(p), x) - y;
            }
        },
        &initial,
        &scales,
        xs.len(),
        FitOptions::default(),
    )?;

    let mut out: Vec<(LorentzianResonance, ResonanceErrors)> = fit.params[1..]
        .chunks_exact(3)
        .zip(fit.std_errors[1..].chunks_exact(3))
        .map(|(p, e)| {
            (
                LorentzianResonance {
                    amplitude: p[0] * norm.ys,
                    center: p[1] * norm.xs + norm.x0,
                    fwhm_spectral: p[2].abs() * norm.xs,
                    fwhm_spatial: None,
                    background: fit.params[0] * norm.ys + norm.y0,
                },
                ResonanceErrors {
                    amplitude: e[0] * norm.ys,
                    center: e[1] * norm.xs,
                    fwhm_spectral: e[2] * norm.xs,
                    background: fit.std_errors[0] * norm.ys,
                },
            )
        })
        .collect();
    out.sort_by(|a, b| a.0.center.total_cmp(&b.0.center));
    if out.iter().any(|(p, _)| !(p.amplitude > 0.0)) {
        return Err(Error::Detection("fitted peak has non-positive amplitude".into()));
    }
    let (peaks, errors) = out.into_iter().unzip();
    Ok(PeakFit {
        peaks,
        errors,
        residual_rms: fit.residual_rms * norm.ys,
        iterations: fit.iterations,
    })
}

fn abs_widths(p: &[f64]) -> Vec<f64> {
    let mut q = p.to_vec();
    for c in q[1..].chunks_exact_mut(3) {
        c[2] = c[2].abs();
    }
    q
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratedScan {
    /// Frequency per unit of the scan axis [Hz per axis unit].
    pub scale: f64,
    /// Scan-axis position mapped to zero frequency (the first peak).
    pub origin: f64,
    /// Calibrated axis [Hz].
    pub frequency_axis: Vec<f64>,
    /// Both resonances in frequency units.
    pub peaks: Vec<LorentzianResonance>,
    pub errors: Vec<ResonanceErrors>,
    /// The same fits in scan-axis units.
    pub raw: PeakFit,
}

impl CalibratedScan {
    pub fn linewidths(&self) -> Vec<f64> {
        self.peaks.iter().map(|p| p.fwhm_spectral).collect()
    }
}

/// Two lasers separated by `laser_detuning` produce two transmission peaks
/// in one piezo scan; their separation fixes the affine voltage→frequency map.
pub fn calibrate_scan_axis(scan: &SampledCurve, laser_detuning: f64, options: &PeakOptions) -> Result<CalibratedScan> {
    if !(laser_detuning > 0.0 && laser_detuning.is_finite()) {
        return Err(Error::domain(format!(
            "laser detuning must be positive, got {laser_detuning:e} Hz"
        )));
    }
    let raw = fit_lorentzian_peaks(&scan.axis, &scan.values, 2, options).map_err(|e| match e {
        Error::Detection(msg) => Error::Calibration(msg),
        other => other,
    })?;
    let (a, b) = (&raw.peaks[0], &raw.peaks[1]);
    let separation = b.center - a.center;
    if separation < a.fwhm_spectral + b.fwhm_spectral {
        return Err(Error::Calibration(format!(
            "peaks overlap: separation {separation:e} < sum of widths {:e}",
            a.fwhm_spectral + b.fwhm_spectral
        )));
    }
    let scale = laser_detuning / separation;
    let origin = a.center;
    let to_freq = |p: &LorentzianResonance| LorentzianResonance {
        center: (p.center - origin) * scale,
        fwhm_spectral: p.fwhm_spectral * scale,
        ..*p
    };
    let errors = raw
        .errors
        .iter()
        .map(|e| ResonanceErrors {
            center: e.center * scale,
            fwhm_spectral: e.fwhm_spectral * scale,
            ..*e
        })
        .collect();
    Ok(CalibratedScan {
        scale,
        origin,
        frequency_axis: scan.axis.iter().map(|v| (v - origin) * scale).collect(),
        peaks: raw.peaks.iter().map(to_freq).collect(),
        errors,
        raw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(axis: &[f64], f: impl Fn(f64) -> f64) -> Vec<f64> {
        axis.iter().map(|&x| f(x)).collect()
    }

    #[test]
    fn single_peak_exact() {
        let axis: Vec<f64> = (0..2001).map(|i| 473.118e12 + i as f64 * 5e6).collect();
        let truth = LorentzianResonance {
            amplitude: 1.0,
            center: 473.1234e12,
            fwhm_spectral: 1e9,
            fwhm_spatial: None,
            background: 0.0,
        };
        let values = curve(&axis, |x| truth.value_at(x));
        let fit = fit_lorentzian_peaks(&axis, &values, 1, &PeakOptions::default()).unwrap();
        let p = fit.peaks[0];
        assert!((p.amplitude - 1.0).abs() < 1e-8);
        assert!((p.center - truth.center).abs() < 1e-8 * truth.fwhm_spectral);
        assert!((p.fwhm_spectral / truth.fwhm_spectral - 1.0).abs() < 1e-8);
        assert!(p.background.abs() < 1e-8);
    }

    #[test]
    fn flat_trace_is_detection_error() {
        let axis: Vec<f64> = (0..100).map(f64::from).collect();
        let err = fit_lorentzian_peaks(&axis, &[0.3; 100], 1, &PeakOptions::default()).unwrap_err();
        assert_eq!(err.class(), "detection");
    }

    #[test]
    fn amplitude_rescaling_invariance() {
        let axis: Vec<f64> = (0..1000).map(|i| i as f64 * 1e-3).collect();
        let values = curve(&axis, |x| {
            0.05 + 0.8 * lorentzian(x - 0.3, 0.02) + 0.5 * lorentzian(x - 0.7, 0.03)
        });
        let a = fit_lorentzian_peaks(&axis, &values, 2, &PeakOptions::default()).unwrap();
        let scaled: Vec<f64> = values.iter().map(|v| 7.5 * v).collect();
        let b = fit_lorentzian_peaks(&axis, &scaled, 2, &PeakOptions::default()).unwrap();
        for (p, q) in a.peaks.iter().zip(&b.peaks) {
            assert!((p.center - q.center).abs() < 1e-9);
            assert!((p.fwhm_spectral / q.fwhm_spectral - 1.0).abs() < 1e-8);
            assert!((q.amplitude / p.amplitude - 7.5).abs() < 1e-7);
        }
    }

    #[test]
    fn two_laser_calibration() {
        let axis: Vec<f64> = (0..4001).map(|i| i as f64 / 4000.0).collect();
        let w = 5e9 / 150e9;
        let values = curve(&axis, |x| lorentzian(x - 0.3, w) + lorentzian(x - 0.7, w));
        let scan = SampledCurve::new(axis, values);
        let cal = calibrate_scan_axis(&scan, 60e9, &PeakOptions::default()).unwrap();
        assert!((cal.scale / 150e9 - 1.0).abs() < 1e-8);
        for lw in cal.linewidths() {
            assert!((lw / 5e9 - 1.0).abs() < 1e-6, "{lw}");
        }
        assert_eq!(
            calibrate_scan_axis(&scan, 0.0, &PeakOptions::default())
                .unwrap_err()
                .class(),
            "domain"
        );
    }

    #[test]
    fn three_peaks_is_calibration_error() {
        let axis: Vec<f64> = (0..3000).map(|i| i as f64 / 3000.0).collect();
        let values = curve(&axis, |x| {
            lorentzian(x - 0.2, 0.01) + lorentzian(x - 0.5, 0.01) + lorentzian(x - 0.8, 0.01)
        });
        let err = calibrate_scan_axis(&SampledCurve::new(axis, values), 60e9, &PeakOptions::default()).unwrap_err();
        assert_eq!(err.class(), "calibration");
    }
}
