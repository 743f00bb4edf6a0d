use super::{add_normal, stream_rng, SpuriousPeaks, DETECTOR_STREAM, JITTER_STREAM};
use crate::analysis::{lorentzian, DisplacementTrace, LorentzianResonance, Side, TransmissionTrace};
use crate::cavity::{resonance_frequencies, CavityGeometry, FrequencyBand};
use crate::constants::SPEED_OF_LIGHT;
use crate::error::{Error, Result};
use crate::io::SampledCurve;
use crate::units;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Cavity on the flank of a Lorentzian resonance:
/// `T = bg + T0/(1 + (2(x_op + x)/κ_x)²) + noise`, where the operating offset
/// `x_op` puts the unperturbed transmission at `operating_point·T0` on `side`.
pub fn synth_transmission_trace(
    disp: &DisplacementTrace,
    cal: &LorentzianResonance,
    side: Side,
    operating_point: f64,
    detector_noise: f64,
    seed: u64,
) -> Result<TransmissionTrace> {
    let kappa_x = cal
        .fwhm_spatial
        .ok_or_else(|| Error::domain("calibration lacks the spatial linewidth κ_x"))?;
    if !(kappa_x > 0.0) || !(cal.amplitude > 0.0) {
        return Err(Error::domain("calibration needs T0 > 0 and κ_x > 0"));
    }
    if !(operating_point > 0.0 && operating_point <= 1.0) {
        return Err(Error::domain("operating point must lie in (0, 1]"));
    }
    if !(detector_noise >= 0.0) {
        return Err(Error::domain("detector noise must be ≥ 0"));
    }
    let offset = side.sign() * 0.5 * kappa_x * (1.0 / operating_point - 1.0).sqrt();
    let mut samples: Vec<f64> = disp
        .samples
        .iter()
        .map(|x| cal.background + cal.amplitude * lorentzian(offset + x, kappa_x))
        .collect();
    add_normal(seed, DETECTOR_STREAM, detector_noise, &mut samples);
    TransmissionTrace::new(samples, disp.sample_rate)
}

/// Laser sweep across one resonance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    /// [Hz/s]
    #[serde(with = "units::frequency_per_time")]
    pub scan_rate: f64,
    /// Total frequency excursion, centred on the resonance [Hz].
    #[serde(with = "units::frequency")]
    pub span: f64,
    /// Detector sample rate [Hz].
    #[serde(with = "units::frequency")]
    pub sample_rate: f64,
    /// [V]
    #[serde(with = "units::voltage")]
    pub detector_noise_rms: f64,
    /// The jitter is redrawn once per correlation time [s].
    #[serde(default = "default_correlation_time", with = "units::time")]
    pub correlation_time: f64,
}

fn default_correlation_time() -> f64 {
    1e-3
}

impl ScanConfig {
    pub fn duration(&self) -> f64 {
        self.span / self.scan_rate
    }
}

/// Swept-laser transmission with the resonance jittering by a Gaussian of
/// standard deviation `jitter`, constant within each correlation time. The
/// returned axis is the laser detuning from `cal.center` [Hz].
pub fn synth_swept_scan(
    cal: &LorentzianResonance,
    jitter: f64,
    config: &ScanConfig,
    seed: u64,
) -> Result<SampledCurve> {
    let kappa = cal.fwhm_spectral;
    if !(kappa > 0.0) || !(cal.amplitude > 0.0) {
        return Err(Error::domain("scan needs a positive linewidth and amplitude"));
    }
    if !(jitter >= 0.0) {
        return Err(Error::domain("jitter must be ≥ 0"));
    }
    if !(config.scan_rate > 0.0 && config.sample_rate > 0.0 && config.correlation_time > 0.0) {
        return Err(Error::domain(
            "scan rate, sample rate and correlation time must be positive",
        ));
    }
    if !(config.span >= 5.0 * (kappa + 4.0 * jitter)) {
        return Err(Error::domain(format!(
            "span {:e} Hz is below 5·(κ + 4σ) = {:e} Hz",
            config.span,
            5.0 * (kappa + 4.0 * jitter)
        )));
    }
    let n = (config.duration() * config.sample_rate).round() as usize + 1;
    if n < 8 {
        return Err(Error::domain("scan has fewer than 8 samples"));
    }
    let blocks_per_chunk = super::CHUNK as u64;
    let mut rng_chunk = u64::MAX;
    let mut rng = stream_rng(seed, JITTER_STREAM, 0);
    let mut current_block = u64::MAX;
    let mut delta = 0.0;
    let mut axis = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / config.sample_rate;
        let detuning = -0.5 * config.span + config.scan_rate * t;
        let block = (t / config.correlation_time) as u64;
        if block != current_block {
            // Blocks are consecutive, so each chunk's stream is read in order.
            let chunk = block / blocks_per_chunk;
            if chunk != rng_chunk {
                rng = stream_rng(seed, JITTER_STREAM, chunk);
                for _ in 0..block % blocks_per_chunk {
                    let _: f64 = rng.sample(StandardNormal);
                }
                rng_chunk = chunk;
            }
            let z: f64 = rng.sample(StandardNormal);
            delta = jitter * z;
            current_block = block;
        }
        axis.push(detuning);
        values.push(cal.background + cal.amplitude * lorentzian(detuning - delta, kappa));
    }
    add_normal(seed, DETECTOR_STREAM, config.detector_noise_rms, &mut values);
    Ok(SampledCurve::new(axis, values).with_units("Hz", "V"))
}

/// Unit-height Lorentzian transmission peaks at the cavity resonances in
/// `band`, sampled on `points` wavelengths spanning the band in ascending
/// wavelength (descending frequency).
pub fn synth_white_light_spectrum(
    geometry: &CavityGeometry,
    band: FrequencyBand,
    linewidth: f64,
    points: usize,
    spurious: Option<SpuriousPeaks>,
    noise: f64,
    seed: u64,
) -> Result<SampledCurve> {
    if !(linewidth > 0.0) {
        return Err(Error::domain("linewidth must be positive"));
    }
    if points < 3 {
        return Err(Error::domain("spectrum needs at least three points"));
    }
    // Include neighbours just outside the band so edge tails are right.
    let margin = 10.0 * linewidth;
    let wide = FrequencyBand::new((band.min - margin).max(band.min * 0.5), band.max + margin)?;
    let modes = resonance_frequencies(geometry, wide)?;
    let mut lines: Vec<(f64, f64)> = modes.iter().map(|m| (m.frequency, 1.0)).collect();
    if let Some(sp) = spurious {
        for w in modes.windows(2) {
            let fsr = w[1].frequency - w[0].frequency;
            lines.push((w[0].frequency + sp.offset_fraction * fsr, sp.relative_amplitude));
        }
    }
    let (l_lo, l_hi) = (SPEED_OF_LIGHT / band.max, SPEED_OF_LIGHT / band.min);
    let axis: Vec<f64> = (0..points)
        .map(|i| l_lo + (l_hi - l_lo) * i as f64 / (points - 1) as f64)
        .collect();
    let mut values: Vec<f64> = axis
        .iter()
        .map(|&l| {
            let nu = SPEED_OF_LIGHT / l;
            lines.iter().map(|&(c, a)| a * lorentzian(nu - c, linewidth)).sum()
        })
        .collect();
    add_normal(seed, DETECTOR_STREAM, noise, &mut values);
    Ok(SampledCurve::new(axis, values).with_units("m", ""))
}

/// One ODMR resonance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdmrLine {
    #[serde(with = "units::frequency")]
    pub center: f64,
    /// Fractional dip depth in (0, 1).
    pub contrast: f64,
    /// Full width [Hz].
    #[serde(with = "units::frequency")]
    pub linewidth: f64,
}

/// `baseline·(1 − Σ C_i·L_i(ν)) + noise` on `axis` [Hz].
pub fn synth_odmr(lines: &[OdmrLine], baseline: f64, noise: f64, axis: &[f64], seed: u64) -> Result<SampledCurve> {
    for l in lines {
        if !(0.0..1.0).contains(&l.contrast) || !(l.linewidth > 0.0) {
            return Err(Error::domain(
                "ODMR lines need contrast in [0, 1) and positive linewidth",
            ));
        }
    }
    if !(baseline > 0.0) || !(noise >= 0.0) {
        return Err(Error::domain("baseline must be positive and noise ≥ 0"));
    }
    let mut values: Vec<f64> = axis
        .iter()
        .map(|&x| {
            baseline
                * (1.0
                    - lines
                        .iter()
                        .map(|l| l.contrast * lorentzian(x - l.center, l.linewidth))
                        .sum::<f64>())
        })
        .collect();
    add_normal(seed, DETECTOR_STREAM, noise, &mut values);
    Ok(SampledCurve::new(axis.to_vec(), values).with_units("Hz", "counts"))
}
