use super::{DisplacementTrace, LorentzianResonance, Side, TransmissionTrace};
use crate::error::{Error, Result};
use crate::special::normal_cdf;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConversionOptions {
    /// Samples with `T − background ≤ floor·T0` are clipped.
    pub floor: f64,
    /// Excursion assigned to clipped samples [m]; defaults to the excursion
    /// at the floor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_excursion: Option<f64>,
    /// Fraction of clipped samples above which the conversion is rejected.
    pub max_clipped_fraction: f64,
}

impl Default for ConversionOptions {
    fn default() -> Self {
        Self {
            floor: 1e-3,
            max_excursion: None,
            max_clipped_fraction: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplacementConversion {
    pub trace: DisplacementTrace,
    pub clipped: usize,
    /// Samples at or above the peak, mapped to zero excursion.
    pub saturated: usize,
}

/// Inverts the Lorentzian flank:
/// `x = ±(κ_x/2)·√(T0/(T − bg) − 1)`, sign from `side`.
pub fn transmission_to_displacement(
    trace: &TransmissionTrace,
    cal: &LorentzianResonance,
    side: Side,
    options: &ConversionOptions,
) -> Result<DisplacementConversion> {
    let kappa_x = cal
        .fwhm_spatial
        .ok_or_else(|| Error::domain("calibration lacks the spatial linewidth κ_x"))?;
    if !(kappa_x > 0.0) || !(cal.amplitude > 0.0) {
        return Err(Error::domain("calibration needs T0 > 0 and κ_x > 0"));
    }
    if !(options.floor > 0.0 && options.floor < 1.0) {
        return Err(Error::domain("clipping floor must lie in (0, 1)"));
    }
    let t0 = cal.amplitude;
    let half = 0.5 * kappa_x;
    let max_excursion = options
        .max_excursion
        .unwrap_or_else(|| half * (1.0 / options.floor - 1.0).sqrt());
    let sign = side.sign();
    let mut clipped = 0;
    let mut saturated = 0;
    let samples: Vec<f64> = trace
        .samples
        .iter()
        .map(|&t| {
            let y = t - cal.background;
            if y >= t0 {
                saturated += 1;
                0.0
            } else if y <= options.floor * t0 {
                clipped += 1;
                sign * max_excursion
            } else {
                sign * half * (t0 / y - 1.0).sqrt()
            }
        })
        .collect();
    let n = samples.len();
    if clipped as f64 > options.max_clipped_fraction * n as f64 {
        return Err(Error::Quality(format!(
            "{clipped} of {n} samples ({:.2}%) fell below the transmission floor; the vibration level would be underestimated",
            100.0 * clipped as f64 / n as f64
        )));
    }
    Ok(DisplacementConversion {
        trace: DisplacementTrace::new(samples, trace.sample_rate)?,
        clipped,
        saturated,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianityOptions {
    /// Pass iff the Kolmogorov–Smirnov distance is below this.
    pub ks_threshold: f64,
    pub bins: usize,
}

impl Default for GaussianityOptions {
    fn default() -> Self {
        Self {
            ks_threshold: 0.05,
            bins: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianityReport {
    pub mean: f64,
    pub std_dev: f64,
    pub excess_kurtosis: f64,
    pub ks_distance: f64,
    pub passed: bool,
    /// Bin centers [m].
    pub bin_centers: Vec<f64>,
    /// Empirical probability density per bin [1/m].
    pub density: Vec<f64>,
}

/// Compares the displacement distribution with a Gaussian of matched mean and
/// standard deviation.
pub fn gaussianity_check(disp: &DisplacementTrace, options: &GaussianityOptions) -> Result<GaussianityReport> {
    let x = &disp.samples;
    let n = x.len();
    if n < 1000 {
        return Err(Error::domain(format!(
            "gaussianity check needs ≥ 1000 samples, got {n}"
        )));
    }
    if options.bins == 0 {
        return Err(Error::domain("histogram needs at least one bin"));
    }
    let nf = n as f64;
    let mean = x.iter().sum::<f64>() / nf;
    let m2 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / nf;
    let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / nf;
    let std_dev = m2.sqrt();
    if !(std_dev > 0.0) {
        return Ok(GaussianityReport {
            mean,
            std_dev,
            excess_kurtosis: f64::NAN,
            ks_distance: 1.0,
            passed: false,
            bin_centers: vec![mean],
            density: vec![f64::INFINITY],
        });
    }
    let excess_kurtosis = m4 / (m2 * m2) - 3.0;

    let mut sorted = x.clone();
    sorted.sort_unstable_by(f64::total_cmp);
    let mut ks: f64 = 0.0;
    for (i, &v) in sorted.iter().enumerate() {
        let f = normal_cdf((v - mean) / std_dev);
        ks = ks.max((i + 1) as f64 / nf - f).max(f - i as f64 / nf);
    }

    let (lo, hi) = (sorted[0], sorted[n - 1]);
    let width = (hi - lo) / options.bins as f64;
    let mut counts = vec![0usize; options.bins];
    for &v in x {
        let b = (((v - lo) / width) as usize).min(options.bins - 1);
        counts[b] += 1;
    }
    Ok(GaussianityReport {
        mean,
        std_dev,
        excess_kurtosis,
        ks_distance: ks,
        passed: ks < options.ks_threshold,
        bin_centers: (0..options.bins).map(|b| lo + (b as f64 + 0.5) * width).collect(),
        density: counts.iter().map(|&c| c as f64 / (nf * width)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cal() -> LorentzianResonance {
        LorentzianResonance::spatial(1.0, 500e-12, 0.0).unwrap()
    }

    #[test]
    fn fixed_points() {
        let trace = TransmissionTrace::new(vec![1.0, 0.5, 1.2], 1.0).unwrap();
        let opts = ConversionOptions {
            max_clipped_fraction: 1.0,
            ..Default::default()
        };
        let out = transmission_to_displacement(&trace, &cal(), Side::Right, &opts).unwrap();
        // Raw excursions 0, κ_x/2, 0 before mean removal.
        let mean = 250e-12 / 3.0;
        assert!((out.trace.samples[0] + mean).abs() < 1e-24);
        assert!((out.trace.samples[1] - (250e-12 - mean)).abs() < 1e-24);
        assert_eq!(out.saturated, 2);
    }

    #[test]
    fn clipping_is_quality_error() {
        let mut samples = vec![0.5; 1000];
        for s in samples.iter_mut().take(20) {
            *s = 0.0;
        }
        let trace = TransmissionTrace::new(samples, 1e3).unwrap();
        let err = transmission_to_displacement(&trace, &cal(), Side::Left, &ConversionOptions::default()).unwrap_err();
        assert_eq!(err.class(), "quality");
    }

    #[test]
    fn missing_spatial_width() {
        let mut c = cal();
        c.fwhm_spatial = None;
        let trace = TransmissionTrace::new(vec![0.5; 4], 1.0).unwrap();
        assert!(transmission_to_displacement(&trace, &c, Side::Right, &ConversionOptions::default()).is_err());
    }

    #[test]
    fn uniform_fails_gaussianity() {
        let samples: Vec<f64> = (0..20000).map(|i| (i as f64 * 0.618_033_988_75).fract()).collect();
        let d = DisplacementTrace::new(samples, 1.0).unwrap();
        let r = gaussianity_check(&d, &GaussianityOptions::default()).unwrap();
        assert!(!r.passed);
        assert!((r.excess_kurtosis + 1.2).abs() < 0.01, "{}", r.excess_kurtosis);
        let integral: f64 = r.density.iter().sum::<f64>() * (r.bin_centers[1] - r.bin_centers[0]);
        assert!((integral - 1.0).abs() < 1e-9);
    }

    #[test]
    fn too_few_samples() {
        let d = DisplacementTrace::new(vec![0.0, 1.0, 2.0], 1.0).unwrap();
        assert_eq!(
            gaussianity_check(&d, &GaussianityOptions::default())
                .unwrap_err()
                .class(),
            "domain"
        );
    }
}
