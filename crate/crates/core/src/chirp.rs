//! Separable chirp decomposition of a compactly supported radial symbol:
//!
//! `sigma(xi_1, ..., xi_m) = sum_k c_k prod_j sigma^k(xi_j)`,
//! `sigma^k(xi) = exp((pi/m) k i |xi/R|^2) phi(|xi|/R)`,
//!
//! where `c_k` are the Fourier coefficients of the even trace. On the product
//! support of the cutoffs the product of chirps collapses to
//! `exp(2 pi i k x)` with `x = sum |xi_j|^2 / (2 m R^2)`, which is how
//! [`reconstruct`] evaluates the sum.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cutoff::ChirpCutoff;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Exec};
use crate::spectral::{fourier_coefficients, tail_bound, CoefficientTable, QuadratureMeta, QuadratureRule, TailBound};
use crate::symbols::{RadialSymbolSpec, SymbolDocument};
use crate::trace::{extract_trace, Extension};

/// Re-evaluate `w^k` directly every this many recurrence steps.
const RESYNC: usize = 512;

/// `exp(2 pi i f)`, reducing `f` modulo 1 first.
#[inline]
pub(crate) fn unit_phase(f: f64) -> Complex64 {
    let (s, c) = (2.0 * PI * (f - f.round())).sin_cos();
    Complex64::new(c, s)
}

#[derive(Debug, Clone)]
pub struct ChirpDecomposition {
    spec: RadialSymbolSpec,
    table: CoefficientTable,
    cutoff: ChirpCutoff,
    k: usize,
    tail: TailBound,
}

impl ChirpDecomposition {
    pub fn spec(&self) -> &RadialSymbolSpec {
        &self.spec
    }

    pub fn m(&self) -> usize {
        self.spec.m()
    }

    pub fn n(&self) -> usize {
        self.spec.n()
    }

    pub fn radius(&self) -> f64 {
        self.spec.support_radius()
    }

    pub fn table(&self) -> &CoefficientTable {
        &self.table
    }

    pub fn cutoff(&self) -> ChirpCutoff {
        self.cutoff
    }

    /// Truncation `K`: the sum runs over `|k| <= K`.
    pub fn k_max(&self) -> usize {
        self.k
    }

    pub fn tail(&self) -> &TailBound {
        &self.tail
    }

    /// Largest quadrature error estimate over the stored coefficients.
    pub fn quadrature_error(&self) -> f64 {
        self.table.meta().map_or(0.0, |m| m.max_error)
    }

    #[inline]
    pub fn coefficient(&self, k: i64) -> Complex64 {
        self.table.get(k)
    }

    pub fn to_document(&self) -> DecompositionDocument {
        DecompositionDocument {
            symbol: self.spec.to_document(),
            m: self.m(),
            n: self.n(),
            radius: self.radius(),
            k_max: self.k,
            cutoff: self.cutoff,
            coefficients: self.table.values().iter().map(|c| [c.re, c.im]).collect(),
            tail: self.tail.clone(),
            quadrature: self.table.meta().cloned(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_document()).expect("plain data")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: DecompositionDocument = serde_json::from_str(s)?;
        let spec = RadialSymbolSpec::try_from(doc.symbol)?;
        doc.cutoff.validate(spec.m())?;
        if doc.coefficients.len() != 2 * doc.k_max + 1 {
            return Err(Error::Format(format!("expected {} coefficients", 2 * doc.k_max + 1)));
        }
        let c = doc.coefficients.iter().map(|c| Complex64::new(c[0], c[1])).collect();
        let table = CoefficientTable::from_values(c, "json")?;
        Ok(Self { spec, table, cutoff: doc.cutoff, k: doc.k_max, tail: doc.tail })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionDocument {
    pub symbol: SymbolDocument,
    pub m: usize,
    pub n: usize,
    #[serde(rename = "R")]
    pub radius: f64,
    #[serde(rename = "K")]
    pub k_max: usize,
    pub cutoff: ChirpCutoff,
    /// `[re, im]` for `k = -K..=K`.
    pub coefficients: Vec<[f64; 2]>,
    pub tail: TailBound,
    pub quadrature: Option<QuadratureMeta>,
}

/// Decomposition with `|k| <= k_max` from the even trace of `spec`.
pub fn build_decomposition(spec: &RadialSymbolSpec, k_max: usize, cutoff: ChirpCutoff, rule: &QuadratureRule) -> Result<ChirpDecomposition> {
    cutoff.validate(spec.m())?;
    if k_max < 1 {
        return Err(Error::param("K", "must be >= 1"));
    }
    let table = fourier_coefficients(&extract_trace(spec, Extension::Even), k_max, rule)?;
    Ok(from_table(spec, table, k_max, cutoff))
}

/// Decomposition with an arbitrary cutoff radius, bypassing the aliasing
/// guard. Only for demonstrating the wrap-around error of large cutoffs.
pub fn build_unguarded(spec: &RadialSymbolSpec, k_max: usize, c_sup: f64, rule: &QuadratureRule) -> Result<ChirpDecomposition> {
    if !(c_sup > 1.0 && c_sup.is_finite()) {
        return Err(Error::param("c_sup", "must be > 1"));
    }
    let table = fourier_coefficients(&extract_trace(spec, Extension::Even), k_max, rule)?;
    Ok(from_table(spec, table, k_max, ChirpCutoff { c_sup }))
}

fn from_table(spec: &RadialSymbolSpec, table: CoefficientTable, k_max: usize, cutoff: ChirpCutoff) -> ChirpDecomposition {
    let tail = tail_bound(&table, k_max);
    ChirpDecomposition { spec: spec.clone(), table, cutoff, k: k_max, tail }
}

/// `sigma^k(xi) = exp((pi/m) k i |xi/R|^2) phi(|xi|/R)`.
pub fn eval_chirp(decomp: &ChirpDecomposition, k: i64, xi: &[f64]) -> Complex64 {
    chirp_factor(decomp.m(), decomp.radius(), decomp.cutoff, k, xi)
}

#[inline]
pub(crate) fn chirp_factor(m: usize, radius: f64, cutoff: ChirpCutoff, k: i64, xi: &[f64]) -> Complex64 {
    let t = xi.iter().map(|v| v * v).sum::<f64>() / (radius * radius);
    let phi = cutoff.eval(t.sqrt());
    if phi == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    // (pi/m) k t = 2 pi * (k t / 2m)
    unit_phase(k as f64 * t / (2 * m) as f64) * phi
}

/// `sum_{|k| <= K} c_k w^k`, ascending `|k|`, `-k` before `+k`.
pub(crate) fn chirp_series(table: &CoefficientTable, k_max: usize, x: f64) -> Complex64 {
    let w = unit_phase(x);
    let mut acc = table.get(0);
    let mut pos = Complex64::new(1.0, 0.0);
    for k in 1..=k_max {
        if k % RESYNC == 0 {
            pos = unit_phase(k as f64 * x);
        } else {
            pos *= w;
        }
        let ki = k as i64;
        acc += table.get(-ki) * pos.conj();
        acc += table.get(ki) * pos;
    }
    acc
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub values: Vec<Complex64>,
    /// `|sigma - value|` per point.
    pub errors: Vec<f64>,
    pub sup_error: f64,
    /// Tail beyond `K` (partial plus extrapolated).
    pub tail: f64,
    pub quadrature_error: f64,
}

impl Reconstruction {
    /// `sup_error <= tail + slack`.
    pub fn within(&self, slack: f64) -> bool {
        self.sup_error <= self.tail + slack
    }
}

/// Truncated sum at each point; a point is `m` vectors of length `n`.
pub fn reconstruct(decomp: &ChirpDecomposition, points: &[Vec<Vec<f64>>], exec: Exec) -> Result<Reconstruction> {
    let (m, n) = (decomp.m(), decomp.n());
    for (i, p) in points.iter().enumerate() {
        if p.len() != m || p.iter().any(|x| x.len() != n) {
            return Err(Error::param("points", format!("point {i} is not {m} vectors of length {n}")));
        }
    }
    let r2 = decomp.radius().powi(2);
    let pairs: Vec<(Complex64, f64)> = map_indexed(exec, points.len(), |i| {
        let p = &points[i];
        let mut phi = 1.0;
        let mut t = 0.0;
        for xi in p {
            let tj = xi.iter().map(|v| v * v).sum::<f64>() / r2;
            phi *= decomp.cutoff.eval(tj.sqrt());
            t += tj;
        }
        let value = if phi == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            chirp_series(&decomp.table, decomp.k, t / (2 * m) as f64) * phi
        };
        let flat: Vec<f64> = p.iter().flatten().copied().collect();
        (value, (value - decomp.spec.eval_point(&flat)).norm())
    });
    let (values, errors): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    let sup_error = errors.iter().cloned().fold(0.0, f64::max);
    Ok(Reconstruction { values, errors, sup_error, tail: decomp.tail.total(), quadrature_error: decomp.quadrature_error() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationChoice {
    pub k: usize,
    pub tail: TailBound,
}

/// Smallest `K` on the ladder 1, 2, 4, ... whose extrapolated tail is at most
/// `eps`, capped at the last nonzero `|k|` of the table. The table must reach
/// far enough for a decay fit.
pub fn choose_truncation_from_table(table: &CoefficientTable, eps: f64) -> Result<TruncationChoice> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::param("eps_tail", "must be > 0"));
    }
    let last_nonzero = (0..=table.k_max())
        .rev()
        .find(|&k| table.get(k as i64).norm() > 0.0 || table.get(-(k as i64)).norm() > 0.0)
        .unwrap_or(0);
    let mut k = 1usize;
    let mut last = None;
    while k <= 2 * table.k_max().max(1) {
        let tb = tail_bound(table, k);
        if tb.is_extrapolated() && tb.total() <= eps {
            return Ok(TruncationChoice { k: k.min(last_nonzero.max(1)), tail: tb });
        }
        last = Some(tb);
        k *= 2;
    }
    let tb = last.expect("ladder has at least one rung");
    Err(Error::TruncationUnreachable { requested: eps, achieved: tb.total(), k: tb.k_prime })
}

/// Doubling ladder on `K` from `k_start`, recomputing coefficients at each
/// rung, until the extrapolated tail is at most `eps`.
pub fn choose_truncation(spec: &RadialSymbolSpec, eps: f64, cutoff: ChirpCutoff, rule: &QuadratureRule) -> Result<ChirpDecomposition> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::param("eps_tail", "must be > 0"));
    }
    cutoff.validate(spec.m())?;
    let trace = extract_trace(spec, Extension::Even);
    let mut k = 64usize;
    let mut achieved = f64::INFINITY;
    let mut reached = 0;
    while rule.nodes_for(k) <= rule.max_nodes {
        let table = fourier_coefficients(&trace, k, rule)?;
        let tb = tail_bound(&table, k);
        if tb.is_extrapolated() && tb.total() <= eps {
            let choice = choose_truncation_from_table(&table, eps)?;
            let table = table.truncated(choice.k.max(k / 2 + 1).min(k));
            let k_final = table.k_max();
            return Ok(from_table(spec, table, k_final, cutoff));
        }
        achieved = tb.total();
        reached = k;
        k *= 2;
    }
    Err(Error::TruncationUnreachable { requested: eps, achieved, k: reached })
}

/// Localized chirp `exp((pi/2) k i |2^{-j-2} xi|^2) phi(|2^{-j-2} xi|)`,
/// i.e. the `m = 2` factor with `R = 2^{j+2}`.
pub fn localized_chirp(j: i32, k: i64, xi: &[f64], cutoff: ChirpCutoff) -> Complex64 {
    chirp_factor(2, ((j + 2) as f64).exp2(), cutoff, k, xi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rule() -> QuadratureRule {
        QuadratureRule { exec: Exec::Sequential, ..Default::default() }
    }

    #[test]
    fn chirp_examples() {
        let s = RadialSymbolSpec::bochner_riesz(1.0, 2, 1).unwrap();
        let d = build_decomposition(&s, 64, ChirpCutoff::default(), &rule()).unwrap();
        assert_eq!(eval_chirp(&d, 0, &[0.7]), Complex64::new(1.0, 0.0));
        let z = eval_chirp(&d, 1, &[1.0]);
        assert!((z - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        assert_eq!(eval_chirp(&d, 5, &[1.2]), Complex64::new(0.0, 0.0));
        for k in -8..8 {
            for i in 0..50 {
                let xi = [1.3 * i as f64 / 50.0];
                let a = eval_chirp(&d, k, &xi);
                assert!(a.norm() <= 1.0 + 1e-15);
                assert_eq!(eval_chirp(&d, -k, &xi), a.conj());
                if xi[0] <= 1.0 {
                    assert!((a.norm() - 1.0).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn localized_examples() {
        let c = ChirpCutoff::default();
        assert_eq!(localized_chirp(3, 0, &[30.0], c), Complex64::new(1.0, 0.0));
        for k in [-3, 1, 7, 64] {
            for x in [0.1, 1.7, 3.9, 4.4] {
                assert_eq!(localized_chirp(1, k, &[2.0 * x], c), localized_chirp(0, k, &[x], c));
            }
        }
        assert!((localized_chirp(0, 4, &[4.0], c).norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_symbol_reconstructs_zero() {
        let s = RadialSymbolSpec::custom(&[(0.0, 0.0), (1.0, 0.0)], 1.0, 2, 1, Default::default()).unwrap();
        let d = build_decomposition(&s, 32, ChirpCutoff::default(), &rule()).unwrap();
        assert!(d.table().values().iter().all(|c| c.norm() == 0.0));
        let pts: Vec<Vec<Vec<f64>>> = (0..20).map(|i| vec![vec![i as f64 / 20.0], vec![0.3]]).collect();
        let r = reconstruct(&d, &pts, Exec::Sequential).unwrap();
        assert!(r.values.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn series_matches_product_of_chirps() {
        let s = RadialSymbolSpec::bochner_riesz(1.0, 2, 1).unwrap();
        let d = build_decomposition(&s, 600, ChirpCutoff::default(), &rule()).unwrap();
        let p = vec![vec![0.31], vec![0.52]];
        let direct: Complex64 = (-600..=600i64)
            .map(|k| d.coefficient(k) * eval_chirp(&d, k, &p[0]) * eval_chirp(&d, k, &p[1]))
            .sum();
        let r = reconstruct(&d, &[p], Exec::Sequential).unwrap();
        assert!((r.values[0] - direct).norm() < 1e-12);
    }

    #[test]
    fn truncation_examples() {
        let t = CoefficientTable::from_fn(4096, |k| if k == 0 { 0.0 } else { (k.abs() as f64).powi(-2) }, "k^-2");
        let c = choose_truncation_from_table(&t, 0.04).unwrap();
        assert!((50..=128).contains(&c.k), "{}", c.k);
        let f = CoefficientTable::from_fn(64, |k| if k.abs() <= 5 { 1.0 } else { 0.0 }, "finite");
        assert_eq!(choose_truncation_from_table(&f, 1e-9).unwrap().k, 5);
    }

    #[test]
    fn aliasing_guard_is_enforced() {
        let s = RadialSymbolSpec::bochner_riesz(1.0, 2, 1).unwrap();
        let bad = ChirpCutoff { c_sup: 2f64.sqrt() };
        assert!(matches!(build_decomposition(&s, 8, bad, &rule()), Err(Error::AliasingGuard { .. })));
    }

    #[test]
    fn json_round_trip() {
        let s = RadialSymbolSpec::bochner_riesz(2.0, 3, 1).unwrap();
        let d = build_decomposition(&s, 16, ChirpCutoff::default(), &rule()).unwrap();
        let back = ChirpDecomposition::from_json(&d.to_json()).unwrap();
        assert_eq!(back.table().values(), d.table().values());
        assert_eq!(back.k_max(), 16);
    }
}
