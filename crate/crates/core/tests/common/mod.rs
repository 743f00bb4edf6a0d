//! Independent numerical oracles shared by the integration tests.

#![allow(dead_code, clippy::excessive_precision)]

use fpcav_core::cavity::CavityGeometry;
use fpcav_core::constants::SPEED_OF_LIGHT;
use std::f64::consts::PI;

// Gauss–Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod quadrature with interior breakpoints.
pub fn integrate(f: impl Fn(f64) -> f64, points: &[f64], rel_tol: f64) -> f64 {
    let mut stack: Vec<(f64, f64, u32)> = points.windows(2).map(|w| (w[0], w[1], 0)).collect();
    let rough: f64 = points.windows(2).map(|w| gk15(&f, w[0], w[1]).0).sum::<f64>().abs();
    let mut total = 0.0;
    while let Some((a, b, depth)) = stack.pop() {
        let (value, err) = gk15(&f, a, b);
        let budget = rel_tol * rough * (b - a) / (points[points.len() - 1] - points[0]);
        if err <= budget.max(1e-300) || depth > 60 {
            total += value;
        } else {
            let m = 0.5 * (a + b);
            stack.push((a, m, depth + 1));
            stack.push((m, b, depth + 1));
        }
    }
    total
}

/// Electric field at the top mirror for a unit-slope field at the bottom
/// mirror, by characteristic matrices: mirror | diamond | air | mirror.
/// Zero at a resonance.
pub fn transfer_matrix_end_field(g: &CavityGeometry, frequency: f64) -> f64 {
    let k = 2.0 * PI * frequency / SPEED_OF_LIGHT;
    // State (E, E'/k) propagated through a layer of index n and thickness t.
    let layer = |state: (f64, f64), n: f64, t: f64| {
        let d = n * k * t;
        let (s, c) = d.sin_cos();
        (state.0 * c + state.1 * s / n, -state.0 * n * s + state.1 * c)
    };
    let after_diamond = layer((0.0, 1.0), g.refractive_index, g.diamond_thickness);
    layer(after_diamond, 1.0, g.air_gap).0
}

/// Resonances in `[lo, hi]` from sign changes of the transfer-matrix field on
/// a grid of `steps` intervals, refined by bisection.
pub fn dense_roots(g: &CavityGeometry, lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    let f = |nu: f64| transfer_matrix_end_field(g, nu);
    let mut roots = Vec::new();
    let step = (hi - lo) / steps as f64;
    let mut a = lo;
    let mut fa = f(a);
    for i in 1..=steps {
        let b = lo + step * i as f64;
        let fb = f(b);
        if fa == 0.0 {
            roots.push(a);
        } else if fa * fb < 0.0 {
            let (mut x0, mut x1) = (a, b);
            for _ in 0..200 {
                let m = 0.5 * (x0 + x1);
                if f(m) * f(x0) <= 0.0 {
                    x1 = m;
                } else {
                    x0 = m;
                }
                if x1 - x0 < 1e-6 {
                    break;
                }
            }
            roots.push(0.5 * (x0 + x1));
        }
        a = b;
        fa = fb;
    }
    roots
}

/// Central difference of `f` at `x` with step `h`.
pub fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
