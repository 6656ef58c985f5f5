//! Sobolev-type norms of one-dimensional traces and the dyadic condition
//! `sup_j ||tr_j||_{1/2 + eps, 2} < inf` on the localised traces of an
//! `m = 2` radial symbol.
//!
//! Traces live on the period-1 torus; the norm used is the periodic proxy
//! `(sum_k (1 + k^2)^s |c_k|^2)^{1/2}`, equivalent to the line norm for
//! functions supported strictly inside the period.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cutoff::{smooth_step, DyadicBump};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Exec};
use crate::spectral::{fourier_coefficients, CoefficientTable, QuadratureRule};
use crate::symbols::RadialSymbolSpec;
use crate::trace::{dyadic_localize, Extension, TraceProfile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LadderConfig {
    pub k_start: usize,
    /// Stop once doubling `K` changes the norm by less than this fraction.
    pub rel_tol: f64,
    pub k_cap: usize,
    pub rule: QuadratureRule,
}

impl Default for LadderConfig {
    fn default() -> Self {
        Self { k_start: 64, rel_tol: 1e-3, k_cap: 1 << 16, rule: QuadratureRule { exec: Exec::Sequential, ..Default::default() } }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderValue {
    pub norm: f64,
    /// Truncation of the final rung.
    pub k: usize,
    /// Norm at `k / 2`.
    pub previous: f64,
    pub converged: bool,
}

/// `(sum_{|k| <= K} (1 + k^2)^s |c_k|^2)^{1/2}` over the stored coefficients.
pub fn weighted_norm(table: &CoefficientTable, s: f64) -> f64 {
    weighted_norm_upto(table, s, table.k_max())
}

fn weighted_norm_upto(table: &CoefficientTable, s: f64, k_max: usize) -> f64 {
    let k_max = k_max.min(table.k_max()) as i64;
    (-k_max..=k_max)
        .map(|k| (1.0 + (k * k) as f64).powf(s) * table.get(k).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn check_trace(trace: &TraceProfile, s: f64) -> Result<()> {
    if !(s.is_finite() && s >= 0.0) {
        return Err(Error::param("s", format!("must be >= 0, got {s}")));
    }
    if trace.support_half_width().is_some_and(|w| w >= 0.5) {
        return Err(Error::param("trace", "support must lie strictly inside [-1/2, 1/2]"));
    }
    Ok(())
}

/// Norm from coefficients `|k| <= k`.
pub fn sobolev_norm_at(trace: &TraceProfile, s: f64, k: usize, rule: &QuadratureRule) -> Result<f64> {
    check_trace(trace, s)?;
    Ok(weighted_norm(&fourier_coefficients(trace, k, rule)?, s))
}

/// Doubling ladder on `K`; each rung compares the norm at `K` with the norm
/// at `K / 2` from the same table. A ladder that reaches `k_cap` without
/// converging is reported with `converged = false`.
pub fn sobolev_ladder(trace: &TraceProfile, s: f64, cfg: &LadderConfig) -> Result<LadderValue> {
    check_trace(trace, s)?;
    let mut k = cfg.k_start.max(2);
    loop {
        let table = fourier_coefficients(trace, k, &cfg.rule)?;
        let norm = weighted_norm(&table, s);
        let previous = weighted_norm_upto(&table, s, k / 2);
        let converged = (norm - previous).abs() <= cfg.rel_tol * norm;
        if converged || 2 * k > cfg.k_cap {
            return Ok(LadderValue { norm, k, previous, converged });
        }
        k *= 2;
    }
}

/// Converged periodic Sobolev norm of order `s`.
pub fn sobolev_norm_1d(trace: &TraceProfile, s: f64, cfg: &LadderConfig) -> Result<f64> {
    let v = sobolev_ladder(trace, s, cfg)?;
    if v.converged {
        Ok(v.norm)
    } else {
        Err(Error::LadderDiverged { k: v.k, previous: v.previous, last: v.norm })
    }
}

/// `chi`: 1 on `[0, 1/2]`, 0 on `[1, inf)`.
pub fn chi(r: f64) -> f64 {
    1.0 - smooth_step(2.0 * r - 1.0)
}

/// Low cutoff `Psi_0(xi) = chi(|xi|)`.
pub fn psi0(xi: f64) -> f64 {
    chi(xi.abs())
}

/// Shell cutoff `Psi(xi) = chi(|xi| / 2) (1 - chi(2 |xi|))`: 1 on
/// `1/2 <= |xi| <= 1`, supported in `1/4 < |xi| < 2`, `Psi(0) = 0`.
pub fn psi(xi: f64) -> f64 {
    let r = xi.abs();
    chi(r / 2.0) * (1.0 - chi(2.0 * r))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquareFunctionValue {
    pub norm: f64,
    pub j_max: i32,
    /// Norm with shells up to `j_max - 1`.
    pub truncated: f64,
    pub truncation_change: f64,
    /// The top shell changed the value by more than 1%.
    pub flagged: bool,
}

/// `|| (|Delta_0 f|^2 + sum_{1 <= j <= j_max} (2^{js} |Delta_j f|)^2)^{1/2} ||_2`
/// with `Delta_0 = Psi_0(D)`, `Delta_j = Psi(2^-j D)`. By Fubini and
/// Parseval the square is `sum_k |c_k|^2 (Psi_0(k)^2 + sum_j 4^{js} Psi(2^-j k)^2)`,
/// which is how it is evaluated. `j_max` defaults to the last shell meeting
/// the stored coefficients.
pub fn square_function_norm(table: &CoefficientTable, s: f64, j_max: Option<i32>) -> SquareFunctionValue {
    let k_max = table.k_max();
    let j_max = j_max.unwrap_or_else(|| ((k_max.max(1) as f64).log2().ceil() as i32) + 2).max(1);
    let mut top = 0.0;
    let mut total = 0.0;
    for k in -(k_max as i64)..=(k_max as i64) {
        let c2 = table.get(k).norm_sqr();
        if c2 == 0.0 {
            continue;
        }
        let kf = k as f64;
        let mut w = psi0(kf).powi(2);
        for j in 1..=j_max {
            let v = psi(kf * (-j as f64).exp2());
            if v != 0.0 {
                let t = (2.0 * j as f64 * s).exp2() * v * v;
                w += t;
                if j == j_max {
                    top += t * c2;
                }
            }
        }
        total += w * c2;
    }
    let norm = total.sqrt();
    let truncated = (total - top).max(0.0).sqrt();
    let truncation_change = if norm > 0.0 { (norm - truncated) / norm } else { 0.0 };
    SquareFunctionValue { norm, j_max, truncated, truncation_change, flagged: truncation_change > 0.01 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SobolevMethod {
    FourierWeight,
    SquareFunction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Resolution {
    /// Doubling ladder to convergence.
    Ladder,
    /// Fixed truncation `K`.
    Fixed { k: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConditionConfig {
    pub ladder: LadderConfig,
    pub resolution: Resolution,
    /// Also evaluate the square-function norm per block.
    pub square_function: bool,
    pub exec: Exec,
}

impl Default for ConditionConfig {
    fn default() -> Self {
        Self { ladder: LadderConfig::default(), resolution: Resolution::Ladder, square_function: true, exec: Exec::Parallel }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockNorm {
    pub j: i32,
    pub norm: f64,
    pub k: usize,
    pub previous: f64,
    pub converged: bool,
    pub square_function: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolevReport {
    pub s: f64,
    pub eps: f64,
    pub method: SobolevMethod,
    pub per_j: BTreeMap<i32, BlockNorm>,
    pub supremum: f64,
    /// Every block converged.
    pub finite: bool,
    /// (min, max) of square-function over Fourier-weight norms.
    pub method_equivalence_ratio: Option<(f64, f64)>,
    pub diagnostics: Vec<String>,
}

impl SobolevReport {
    /// CSV with header `j,norm,k,converged,square_function`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "j,norm,k,converged,square_function")?;
        for b in self.per_j.values() {
            let sf = b.square_function.map(|v| v.to_string()).unwrap_or_default();
            writeln!(w, "{},{},{},{},{}", b.j, b.norm, b.k, b.converged, sf)?;
        }
        Ok(())
    }

    pub fn norm_at(&self, j: i32) -> f64 {
        self.per_j.get(&j).map_or(0.0, |b| b.norm)
    }
}

/// Blocks `[need_min, need_max]` that a `j` range must cover for a symbol of
/// support radius `R`.
pub fn required_j_range(radius: f64) -> (i32, i32) {
    let l = radius.log2();
    (l.floor() as i32 - 4, l.ceil() as i32 + 2)
}

/// Per-block norms `||tr_j||_{1/2 + eps}` of the localised traces.
pub fn condition_check(
    spec: &RadialSymbolSpec,
    eps: f64,
    j_range: Option<(i32, i32)>,
    bump: DyadicBump,
    cfg: &ConditionConfig,
) -> Result<SobolevReport> {
    if spec.m() != 2 {
        return Err(Error::param("m", "the dyadic condition is stated for m = 2"));
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::param("eps", format!("must lie in (0, 1/2), got {eps}")));
    }
    let (need_min, need_max) = required_j_range(spec.support_radius());
    let (j_min, j_max) = j_range.unwrap_or((need_min, need_max));
    if j_min > need_min || j_max < need_max {
        return Err(Error::JRangeIncomplete { j_min, j_max, need_min, need_max });
    }
    let s = 0.5 + eps;
    let js: Vec<i32> = (j_min..=j_max).collect();
    let blocks = map_indexed(cfg.exec, js.len(), |i| -> Result<BlockNorm> {
        let j = js[i];
        let trace = dyadic_localize(spec, j, bump, Extension::Even)?.trace;
        let (value, table_k) = match cfg.resolution {
            Resolution::Ladder => {
                let v = sobolev_ladder(&trace, s, &cfg.ladder)?;
                (v, v.k)
            }
            Resolution::Fixed { k } => {
                let table = fourier_coefficients(&trace, k, &cfg.ladder.rule)?;
                let norm = weighted_norm(&table, s);
                let previous = weighted_norm_upto(&table, s, k / 2);
                (LadderValue { norm, k, previous, converged: (norm - previous).abs() <= cfg.ladder.rel_tol * norm }, k)
            }
        };
        let square_function = if cfg.square_function {
            let table = fourier_coefficients(&trace, table_k, &cfg.ladder.rule)?;
            Some(square_function_norm(&table, s, None).norm)
        } else {
            None
        };
        Ok(BlockNorm { j, norm: value.norm, k: value.k, previous: value.previous, converged: value.converged, square_function })
    });
    let mut per_j = BTreeMap::new();
    let mut diagnostics = Vec::new();
    for b in blocks {
        let b = b?;
        if !b.converged {
            diagnostics.push(format!("block {} not converged at K = {}: {} -> {}", b.j, b.k, b.previous, b.norm));
        }
        per_j.insert(b.j, b);
    }
    let supremum = per_j.values().map(|b| b.norm).fold(0.0, f64::max);
    let ratios: Vec<f64> = per_j
        .values()
        .filter_map(|b| b.square_function.filter(|_| b.norm > 0.0).map(|sf| sf / b.norm))
        .collect();
    let method_equivalence_ratio = if ratios.is_empty() {
        None
    } else {
        Some((ratios.iter().cloned().fold(f64::INFINITY, f64::min), ratios.iter().cloned().fold(0.0, f64::max)))
    };
    Ok(SobolevReport {
        s,
        eps,
        method: SobolevMethod::FourierWeight,
        finite: per_j.values().all(|b| b.converged),
        per_j,
        supremum,
        method_equivalence_ratio,
        diagnostics,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegerSobolevConfig {
    /// Simpson subintervals on the window (rounded up to even).
    pub intervals: usize,
    /// Largest tolerated relative change of a derivative under step halving.
    pub diff_tol: f64,
    pub window: (f64, f64),
}

impl Default for IntegerSobolevConfig {
    fn default() -> Self {
        Self { intervals: 4096, diff_tol: 1e-3, window: (0.25, 4.0) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegerSobolevReport {
    /// `||r^{(d - 2 + 2i)/4} g^{(i)}||_{L^2(window)}` for `i = 0..=order`.
    pub terms: Vec<f64>,
    pub total: f64,
    /// Same sum with half the integration step.
    pub refined_total: f64,
    pub change: f64,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Central difference of order `i` with step `h`.
fn central_difference(g: &dyn Fn(f64) -> f64, r: f64, i: usize, h: f64) -> f64 {
    if i == 0 {
        return g(r);
    }
    let sum: f64 = (0..=i)
        .map(|l| {
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            sign * binomial(i, l) * g(r + (i as f64 / 2.0 - l as f64) * h)
        })
        .sum();
    sum / h.powi(i as i32)
}

/// Richardson-extrapolated derivative and the relative change between the
/// two steps.
fn derivative(g: &dyn Fn(f64) -> f64, r: f64, i: usize) -> (f64, f64) {
    if i == 0 {
        return (g(r), 0.0);
    }
    let h = f64::EPSILON.powf(1.0 / (i as f64 + 2.0)) * r.abs().max(1.0);
    let a = central_difference(g, r, i, h);
    let b = central_difference(g, r, i, h / 2.0);
    ((4.0 * b - a) / 3.0, (a - b).abs())
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// `sum_{i=0}^{order} ||r^{(d - 2 + 2i)/4} (profile(2^scale r))^{(i)}||_{L^2(window)}`
/// for a radial profile in the squared-radius variable.
pub fn radial_integer_sobolev(
    profile: &dyn Fn(f64) -> f64,
    d: usize,
    order: usize,
    scale: i32,
    cfg: &IntegerSobolevConfig,
) -> Result<IntegerSobolevReport> {
    let (a, b) = cfg.window;
    if !(0.0 < a && a < b) {
        return Err(Error::param("window", "need 0 < a < b"));
    }
    let factor = (scale as f64).exp2();
    let g = move |r: f64| profile(factor * r);
    let mut terms = Vec::with_capacity(order + 1);
    let mut refined = 0.0;
    for i in 0..=order {
        let p = (d as f64 - 2.0 + 2.0 * i as f64) / 2.0;
        let mut worst = 0.0f64;
        let mut peak = 0.0f64;
        let integrand = |r: f64| {
            let (v, _) = derivative(&g, r, i);
            r.powf(p) * v * v
        };
        // scan the noise on the coarse nodes
        let n = cfg.intervals + cfg.intervals % 2;
        for k in 0..=n {
            let r = a + (b - a) * k as f64 / n as f64;
            let (v, change) = derivative(&g, r, i);
            worst = worst.max(change);
            peak = peak.max(v.abs());
        }
        if i > 0 && worst > cfg.diff_tol * peak.max(1e-300) {
            return Err(Error::DifferentiationNoise { order: i, change: worst / peak.max(1e-300) });
        }
        terms.push(simpson(integrand, a, b, n).max(0.0).sqrt());
        refined += simpson(integrand, a, b, 2 * n).max(0.0).sqrt();
    }
    let total: f64 = terms.iter().sum();
    let change = if total > 0.0 { (refined - total).abs() / total } else { 0.0 };
    Ok(IntegerSobolevReport { terms, total, refined_total: refined, change })
}
