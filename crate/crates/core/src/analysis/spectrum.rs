use super::DisplacementTrace;
use crate::error::{Error, Result};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumOptions {
    /// Welch segment length in samples. By default `⌊2N/9⌋`, which gives
    /// at least 8 half-overlapping segments.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment_length: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    /// [Hz]
    pub frequencies: Vec<f64>,
    /// One-sided amplitude spectral density [m/√Hz].
    pub asd: Vec<f64>,
    /// `sqrt(Σ_{f' ≤ f} PSD·Δf)` [m].
    pub integrated_rms: Vec<f64>,
    /// Frequency resolution Δf [Hz].
    pub resolution: f64,
    pub segment_length: usize,
    pub averages: usize,
}

impl SpectrumResult {
    pub fn total_rms(&self) -> f64 {
        self.integrated_rms.last().copied().unwrap_or(0.0)
    }

    /// RMS contained in `[f_lo, f_hi]`.
    pub fn band_rms(&self, f_lo: f64, f_hi: f64) -> f64 {
        let df = self.resolution;
        self.frequencies
            .iter()
            .zip(&self.asd)
            .filter(|(f, _)| (f_lo..=f_hi).contains(*f))
            .map(|(_, a)| a * a * df)
            .sum::<f64>()
            .sqrt()
    }

    /// Local maxima of the ASD standing `factor` above the median of the
    /// `±half_window` bins around them, strongest first. Maxima more than
    /// 120 dB below the strongest bin are rounding noise and never count.
    pub fn lines(&self, factor: f64, half_window: usize) -> Vec<f64> {
        let n = self.asd.len();
        let floor = 1e-6 * self.asd.iter().cloned().fold(0.0, f64::max);
        let mut out: Vec<(f64, f64)> = Vec::new();
        for i in 1..n.saturating_sub(1) {
            let a = self.asd[i];
            if !(a > self.asd[i - 1] && a >= self.asd[i + 1]) {
                continue;
            }
            let lo = i.saturating_sub(half_window);
            let hi = (i + half_window + 1).min(n);
            let mut around: Vec<f64> = self.asd[lo..hi].to_vec();
            let local = crate::peaks::median(&mut around);
            if a > factor * local && a > floor {
                out.push((self.frequencies[i], a));
            }
        }
        out.sort_by(|x, y| y.1.total_cmp(&x.1));
        out.into_iter().map(|(f, _)| f).collect()
    }
}

/// Welch estimate with a Hann window and 50% overlap.
pub fn amplitude_spectrum(disp: &DisplacementTrace, options: &SpectrumOptions) -> Result<SpectrumResult> {
    let n = disp.samples.len();
    if n < 2 {
        return Err(Error::InsufficientData("spectrum needs at least two samples".into()));
    }
    let len = match options.segment_length {
        Some(l) if l >= 2 && l <= n => l,
        Some(l) => return Err(Error::domain(format!("segment length {l} outside [2, {n}]"))),
        None => (2 * n / 9).max(16).min(n),
    };
    let hop = (len / 2).max(1);
    let averages = (n - len) / hop + 1;
    // Periodic Hann window.
    let window: Vec<f64> = (0..len)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / len as f64).cos())
        .collect();
    let window_power: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(len);
    let bins = len / 2 + 1;
    let mut power = vec![0.0; bins];
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for s in 0..averages {
        let seg = &disp.samples[s * hop..s * hop + len];
        for ((b, x), w) in buf.iter_mut().zip(seg).zip(&window) {
            *b = Complex64::new(x * w, 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for (p, b) in power.iter_mut().zip(&buf) {
            *p += b.norm_sqr();
        }
    }
    let fs = disp.sample_rate;
    let df = fs / len as f64;
    let mut psd = Vec::with_capacity(bins);
    for (k, p) in power.iter().enumerate() {
        let one_sided = if k == 0 || (len % 2 == 0 && k == len / 2) {
            1.0
        } else {
            2.0
        };
        psd.push(one_sided * p / (averages as f64 * fs * window_power));
    }
    let mut acc = 0.0;
    let integrated_rms = psd
        .iter()
        .map(|p| {
            acc += p * df;
            acc.sqrt()
        })
        .collect();
    Ok(SpectrumResult {
        frequencies: (0..bins).map(|k| k as f64 * df).collect(),
        asd: psd.iter().map(|p| p.sqrt()).collect(),
        integrated_rms,
        resolution: df,
        segment_length: len,
        averages,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseBin {
    /// Bin center as a fraction of the cycle.
    pub phase: f64,
    /// [m]
    pub rms: f64,
    pub count: usize,
}

/// RMS displacement folded on the cold-head cycle.
pub fn cycle_phase_rms(disp: &DisplacementTrace, cycle_period: f64, bins: usize) -> Result<Vec<PhaseBin>> {
    if bins == 0 {
        return Err(Error::domain("at least one phase bin is needed"));
    }
    let duration = disp.duration();
    if !(cycle_period > 0.0) || 3.0 * cycle_period > duration {
        return Err(Error::domain(format!(
            "cycle period {cycle_period} s must be positive and at most a third of the trace ({duration} s)"
        )));
    }
    let mut sum_sq = vec![0.0; bins];
    let mut counts = vec![0usize; bins];
    for (i, x) in disp.samples.iter().enumerate() {
        let t = i as f64 / disp.sample_rate;
        let phase = (t / cycle_period).fract();
        let b = ((phase * bins as f64) as usize).min(bins - 1);
        sum_sq[b] += x * x;
        counts[b] += 1;
    }
    Ok((0..bins)
        .map(|b| PhaseBin {
            phase: (b as f64 + 0.5) / bins as f64,
            rms: if counts[b] > 0 {
                (sum_sq[b] / counts[b] as f64).sqrt()
            } else {
                0.0
            },
            count: counts[b],
        })
        .collect())
}
