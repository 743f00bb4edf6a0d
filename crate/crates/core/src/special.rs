//! Scaled complementary error function and the Faddeeva function.
//!
//! `erfcx(t) = exp(t²)·erfc(t)` is the kernel of the closed-form vibration
//! average and, evaluated on the imaginary axis, equals the Faddeeva function
//! `w(iy)`. Both are evaluated without ever forming `exp(t²)` for large
//! arguments.

#![allow(clippy::excessive_precision)]

use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::OnceLock;

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// Below this argument the power series for erf is used, above it the
/// continued fraction.
const SERIES_LIMIT: f64 = 1.5;

/// Scaled complementary error function `exp(t²)·erfc(t)`.
///
/// Relative error is at the 1e-15 level for `t ≥ 0`. For negative arguments
/// the reflection `2·exp(t²) − erfcx(−t)` is used and overflows to `+inf`
/// below about −26.6.
pub fn erfcx(t: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t < 0.0 {
        return 2.0 * (t * t).exp() - erfcx(-t);
    }
    if t < SERIES_LIMIT {
        erfcx_series(t)
    } else {
        erfcx_continued_fraction(t)
    }
}

/// `exp(t²) − (2/√π)·t·Σ (2t²)ⁿ/(2n+1)!!`; every series term is positive.
fn erfcx_series(t: f64) -> f64 {
    let t2 = t * t;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= 2.0 * t2 / (2.0 * n + 1.0);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    t2.exp() - 2.0 * FRAC_1_SQRT_PI * t * sum
}

/// Laplace continued fraction `1/√π · 1/(t + ½/(t + 1/(t + 3/2/(t + …))))`,
/// evaluated with the modified Lentz method.
fn erfcx_continued_fraction(t: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    const TINY: f64 = 1e-300;
    let mut f = t;
    let mut c = f;
    let mut d = 0.0;
    for k in 1..5000 {
        let a = 0.5 * k as f64;
        d = t + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        d = 1.0 / d;
        c = t + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    FRAC_1_SQRT_PI / f
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    if x >= 0.0 {
        if x > 27.3 {
            return 0.0;
        }
        erfcx(x) * (-x * x).exp()
    } else {
        2.0 - erfc(-x)
    }
}

pub fn erf(x: f64) -> f64 {
    if x.abs() < 0.5 {
        // erfc(x) ≈ 1 here; compute erf directly to keep relative accuracy.
        let t2 = x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut n = 0.0;
        loop {
            n += 1.0;
            term *= 2.0 * t2 / (2.0 * n + 1.0);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        2.0 * FRAC_1_SQRT_PI * x * (-t2).exp() * sum
    } else {
        1.0 - erfc(x)
    }
}

/// Standard normal cumulative distribution function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Number of rational terms in the Faddeeva approximation.
const FADDEEVA_TERMS: usize = 40;

struct FaddeevaCoefficients {
    l: f64,
    /// Polynomial coefficients, constant term first.
    a: Vec<f64>,
}

fn faddeeva_coefficients() -> &'static FaddeevaCoefficients {
    static COEFFS: OnceLock<FaddeevaCoefficients> = OnceLock::new();
    COEFFS.get_or_init(|| {
        let n = FADDEEVA_TERMS;
        let m = 2 * n;
        let m2 = 2 * m;
        let l = (n as f64 / std::f64::consts::SQRT_2).sqrt();
        // f has length 2M: a leading zero followed by samples k = -M+1..M-1.
        let mut f = vec![0.0; m2];
        for (i, k) in (-(m as i64) + 1..m as i64).enumerate() {
            let theta = k as f64 * PI / m as f64;
            let t = l * (theta / 2.0).tan();
            f[i + 1] = (-t * t).exp() * (l * l + t * t);
        }
        // fftshift, then the real part of the DFT. Size is tiny; a direct sum
        // keeps this free of an FFT dependency.
        let shifted: Vec<f64> = (0..m2).map(|j| f[(j + m2 / 2) % m2]).collect();
        let a = (1..=n)
            .map(|freq| {
                let mut re = 0.0;
                for (j, v) in shifted.iter().enumerate() {
                    let phase = -2.0 * PI * (j * freq) as f64 / m2 as f64;
                    re += v * phase.cos();
                }
                re / m2 as f64
            })
            .collect();
        FaddeevaCoefficients { l, a }
    })
}

/// Faddeeva function `w(z) = exp(−z²)·erfc(−iz)`.
///
/// Uses a rational expansion in `(L + iz)/(L − iz)` for the upper half plane
/// and the reflection `w(z) = 2·exp(−z²) − w(−z)` below it. On the imaginary
/// axis the real [`erfcx`] is returned, so the two routes agree exactly there.
pub fn faddeeva(z: Complex64) -> Complex64 {
    if z.re == 0.0 && z.im >= 0.0 {
        return Complex64::new(erfcx(z.im), 0.0);
    }
    if z.im < 0.0 {
        return 2.0 * (-z * z).exp() - faddeeva(-z);
    }
    let coeffs = faddeeva_coefficients();
    let i = Complex64::i();
    let l = Complex64::new(coeffs.l, 0.0);
    let denom = l - i * z;
    let big_z = (l + i * z) / denom;
    let p = coeffs
        .a
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * big_z + c);
    2.0 * p / (denom * denom) + FRAC_1_SQRT_PI / denom
}

/// Voigt profile normalised to unit height at its centre.
///
/// `sigma` is the Gaussian standard deviation, `gamma` the Lorentzian half
/// width at half maximum. A vanishing `sigma` reduces to the Lorentzian.
pub fn voigt_peak_normalized(x: f64, sigma: f64, gamma: f64) -> f64 {
    let sigma = sigma.abs();
    if sigma <= 1e-12 * gamma {
        let u = x / gamma;
        return 1.0 / (1.0 + u * u);
    }
    let scale = std::f64::consts::SQRT_2 * sigma;
    let y = gamma / scale;
    let w = faddeeva(Complex64::new(x / scale, y));
    w.re / erfcx(y)
}

/// Area-normalised Voigt profile.
pub fn voigt_density(x: f64, sigma: f64, gamma: f64) -> f64 {
    let sigma = sigma.abs();
    if sigma <= 1e-12 * gamma {
        return gamma / (PI * (x * x + gamma * gamma));
    }
    let scale = std::f64::consts::SQRT_2 * sigma;
    let w = faddeeva(Complex64::new(x / scale, gamma / scale));
    w.re / (sigma * (2.0 * PI).sqrt())
}

/// Approximate Voigt FWHM from the Lorentzian and Gaussian FWHMs
/// (Olivero–Longbothum, ~0.02 % accuracy).
pub fn voigt_fwhm(lorentz_fwhm: f64, gauss_fwhm: f64) -> f64 {
    0.5346 * lorentz_fwhm + (0.2166 * lorentz_fwhm * lorentz_fwhm + gauss_fwhm * gauss_fwhm).sqrt()
}

/// Ratio between the FWHM and standard deviation of a Gaussian.
pub const GAUSS_FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;
