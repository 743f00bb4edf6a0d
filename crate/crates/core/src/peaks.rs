//! Peak detection by topographic prominence.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub index: usize,
    pub height: f64,
    /// Height above the higher of the two surrounding minima.
    pub prominence: f64,
    /// Full width at half prominence, in samples (linearly interpolated).
    pub width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeakOptions {
    /// Minimum prominence in units of the robust noise estimate.
    pub noise_factor: f64,
    /// Minimum prominence as a fraction of the data range.
    pub relative_floor: f64,
    /// Moving-average width (samples) applied before detection; 0 or 1 disables.
    pub smoothing: usize,
}

impl Default for PeakOptions {
    fn default() -> Self {
        Self {
            noise_factor: 5.0,
            relative_floor: 0.1,
            smoothing: 0,
        }
    }
}

pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty());
    let mid = values.len() / 2;
    let (_, &mut upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    if values.len() % 2 == 1 {
        upper
    } else {
        let lower = values[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Median absolute deviation scaled to a Gaussian standard deviation.
pub fn robust_sigma(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    let m = median(&mut v);
    for x in &mut v {
        *x = (*x - m).abs();
    }
    1.4826 * median(&mut v)
}

/// White-noise level of a slowly varying signal, from second differences.
pub fn noise_estimate(values: &[f64]) -> f64 {
    if values.len() < 4 {
        return 0.0;
    }
    let d2: Vec<f64> = values.windows(3).map(|w| w[2] - 2.0 * w[1] + w[0]).collect();
    robust_sigma(&d2) / 6f64.sqrt()
}

pub fn moving_average(values: &[f64], width: usize) -> Vec<f64> {
    if width <= 1 || values.is_empty() {
        return values.to_vec();
    }
    let half = width / 2;
    let mut prefix = Vec::with_capacity(values.len() + 1);
    prefix.push(0.0);
    for v in values {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(values.len());
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Prominence threshold implied by `options` for `values`.
pub fn prominence_threshold(values: &[f64], options: &PeakOptions) -> f64 {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let range = if hi > lo { hi - lo } else { 0.0 };
    (options.noise_factor * noise_estimate(values)).max(options.relative_floor * range)
}

/// Local maxima whose prominence exceeds the threshold of `options`,
/// ordered by position.
pub fn find_peaks(values: &[f64], options: &PeakOptions) -> Vec<Peak> {
    let data = moving_average(values, options.smoothing);
    let threshold = prominence_threshold(&data, options);
    if !(threshold > 0.0) {
        return Vec::new();
    }
    let mut peaks: Vec<Peak> = all_peaks(&data)
        .into_iter()
        .filter(|p| p.prominence >= threshold)
        .collect();
    for p in &mut peaks {
        p.height = values[p.index];
    }
    peaks
}

/// Every strict local maximum (plateaus collapse to their middle sample)
/// with its prominence and width.
pub fn all_peaks(data: &[f64]) -> Vec<Peak> {
    let n = data.len();
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if data[i] > data[i - 1] {
            let mut j = i;
            while j + 1 < n && data[j + 1] == data[i] {
                j += 1;
            }
            if j + 1 < n && data[j + 1] < data[i] {
                let index = (i + j) / 2;
                out.push(describe(data, index));
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

fn describe(data: &[f64], index: usize) -> Peak {
    let h = data[index];
    let mut left_min = h;
    let mut l = index;
    while l > 0 && data[l - 1] <= h {
        l -= 1;
        left_min = left_min.min(data[l]);
    }
    let mut right_min = h;
    let mut r = index;
    while r + 1 < data.len() && data[r + 1] <= h {
        r += 1;
        right_min = right_min.min(data[r]);
    }
    let base = left_min.max(right_min);
    let prominence = h - base;
    let half = h - 0.5 * prominence;
    let mut a = index;
    while a > l && data[a] > half {
        a -= 1;
    }
    let left = if data[a] < half && a < index {
        a as f64 + (half - data[a]) / (data[a + 1] - data[a])
    } else {
        a as f64
    };
    let mut b = index;
    while b < r && data[b] > half {
        b += 1;
    }
    let right = if data[b] < half && b > index {
        b as f64 - (half - data[b]) / (data[b - 1] - data[b])
    } else {
        b as f64
    };
    Peak {
        index,
        height: h,
        prominence,
        width: right - left,
    }
}
