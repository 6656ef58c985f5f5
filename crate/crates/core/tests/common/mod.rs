//! Independent reference computations for the integration tests.

#![allow(dead_code, clippy::excessive_precision)]

use std::f64::consts::PI;

use radial_chirp::trace::TraceProfile;

const XK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WK: [f64; 8] = [
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

/// Gauss-Kronrod 7/15 estimate and error on `[a, b]`.
fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let x = h * XK[i];
        let s = f(c - x) + f(c + x);
        k += WK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive bisection until each piece meets its share of `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, e) = gk15(f, a, b);
        if e <= tol || depth >= 48 {
            return v;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth + 1) + rec(f, m, b, 0.5 * tol, depth + 1)
    }
    rec(f, a, b, tol, 0)
}

/// `int_{-1/2}^{1/2} tr(x) cos(2 pi k x) dx` for an even trace, split at the
/// given interior breakpoints of `[0, 1/2]`.
pub fn cosine_coefficient(trace: &TraceProfile, k: i64, breaks: &[f64], tol: f64) -> f64 {
    let f = |x: f64| trace.value(x) * (2.0 * PI * k as f64 * x).cos();
    let mut pts = vec![0.0];
    pts.extend(breaks.iter().copied().filter(|&b| b > 0.0 && b < 0.5));
    pts.push(0.5);
    pts.sort_by(f64::total_cmp);
    2.0 * pts.windows(2).map(|w| integrate(&f, w[0], w[1], tol)).sum::<f64>()
}
