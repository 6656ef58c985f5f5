//! Fourier coefficients of traces on the period-1 torus and the summary
//! statistics built from them: dyadic block sums, decay-exponent fits, tail
//! bounds and `l^q` norms.
//!
//! Coefficients come from the uniform trapezoid rule, evaluated for all `k`
//! at once by a real FFT. Nodes sit at `x_n = n / M` (wrapped into
//! `[-1/2, 1/2)`), a set symmetric about 0, so negative-`k` coefficients are
//! conjugates of the positive ones bit for bit.

use std::io::Write;

use num_complex::Complex64;
use realfft::RealFftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{fill_indexed, Exec};
use crate::trace::TraceProfile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureRule {
    /// Nodes per unit of the highest requested frequency.
    pub oversample: usize,
    pub min_nodes: usize,
    /// Memory cap on the node count.
    pub max_nodes: usize,
    /// Node doubling must move `c_k`, `|k| <= consistency_k`, by less than
    /// `consistency_tol`.
    pub consistency_k: usize,
    pub consistency_tol: f64,
    pub exec: Exec,
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self {
            oversample: 64,
            min_nodes: 1 << 14,
            max_nodes: 1 << 27,
            consistency_k: 16,
            consistency_tol: 1e-4,
            exec: Exec::Parallel,
        }
    }
}

impl QuadratureRule {
    pub fn nodes_for(&self, k_max: usize) -> usize {
        (self.oversample.max(4) * k_max.max(1)).next_power_of_two().max(self.min_nodes.next_power_of_two())
    }

    /// Largest `K` the memory cap allows.
    pub fn max_k(&self) -> usize {
        self.max_nodes / self.oversample.max(4)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureMeta {
    pub rule: String,
    pub nodes: usize,
    /// `|c_k(M) - c_k(M/2)|` for `k = 0..=K`; a conservative error estimate.
    pub errors: Vec<f64>,
    pub max_error: f64,
    /// Trapezoid value of `int |tr|^2`.
    pub l2_squared: f64,
    /// Trapezoid value of `int |tr|`.
    pub l1: f64,
}

/// Coefficients `c_k`, `k in [-K, K]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    k_max: usize,
    c: Vec<Complex64>,
    meta: Option<QuadratureMeta>,
    source: String,
    peak: f64,
}

fn peak_of(c: &[Complex64]) -> f64 {
    c.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

impl CoefficientTable {
    /// Table from explicit values `c[i] = c_{i - K}`, `c.len() == 2K + 1`.
    pub fn from_values(c: Vec<Complex64>, source: impl Into<String>) -> Result<Self> {
        if c.len().is_multiple_of(2) {
            return Err(Error::param("c", "need 2K + 1 coefficients"));
        }
        Ok(Self { k_max: c.len() / 2, peak: peak_of(&c), c, meta: None, source: source.into() })
    }

    /// Real table from a function of `k`.
    pub fn from_fn(k_max: usize, f: impl Fn(i64) -> f64, source: impl Into<String>) -> Self {
        let k = k_max as i64;
        let c: Vec<Complex64> = (-k..=k).map(|i| Complex64::new(f(i), 0.0)).collect();
        Self { k_max, peak: peak_of(&c), c, meta: None, source: source.into() }
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn meta(&self) -> Option<&QuadratureMeta> {
        self.meta.as_ref()
    }

    /// `c_k`, or zero outside the stored range.
    #[inline]
    pub fn get(&self, k: i64) -> Complex64 {
        if k.unsigned_abs() as usize > self.k_max {
            Complex64::new(0.0, 0.0)
        } else {
            self.c[(k + self.k_max as i64) as usize]
        }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.c
    }

    /// Whether every stored coefficient is real.
    pub fn is_real(&self) -> bool {
        self.c.iter().all(|c| c.im == 0.0)
    }

    /// Copy truncated to `|k| <= k_max`.
    pub fn truncated(&self, k_max: usize) -> Self {
        let k_max = k_max.min(self.k_max);
        let off = self.k_max - k_max;
        let meta = self.meta.as_ref().map(|m| QuadratureMeta {
            errors: m.errors[..=k_max].to_vec(),
            max_error: m.errors[..=k_max].iter().cloned().fold(0.0, f64::max),
            ..m.clone()
        });
        let c = self.c[off..off + 2 * k_max + 1].to_vec();
        Self { k_max, peak: peak_of(&c), c, meta, source: self.source.clone() }
    }

    /// Quadrature error estimate at `|k|`; 0 for exact tables.
    pub fn error_at(&self, k: usize) -> f64 {
        self.meta.as_ref().map_or(0.0, |m| m.errors.get(k).copied().unwrap_or(m.max_error))
    }

    fn abs_floor(&self) -> f64 {
        self.peak * 1e-15
    }

    /// Coefficients indistinguishable from quadrature noise.
    pub fn noise_floor(&self, k: usize, noise_mult: f64) -> f64 {
        (noise_mult * self.error_at(k)).max(self.abs_floor())
    }

    /// CSV with header `k,re,im,abs`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "k,re,im,abs")?;
        let k = self.k_max as i64;
        for i in -k..=k {
            let c = self.get(i);
            writeln!(w, "{i},{},{},{}", c.re, c.im, c.norm())?;
        }
        Ok(())
    }
}

fn trapezoid_spectrum(samples: &mut [f64], keep: usize) -> Vec<Complex64> {
    let len = samples.len();
    let mut planner = RealFftPlanner::<f64>::new();
    let r2c = planner.plan_fft_forward(len);
    let mut out = r2c.make_output_vec();
    r2c.process(samples, &mut out).expect("buffer sizes come from the plan");
    let scale = 1.0 / len as f64;
    out.truncate(keep + 1);
    out.shrink_to_fit();
    for c in &mut out {
        *c *= scale;
    }
    out
}

/// Trapezoid-rule Fourier coefficients `c_k = int_{-1/2}^{1/2} tr(x) e^{-2 pi i k x} dx`
/// for `|k| <= k_max`.
pub fn fourier_coefficients(trace: &TraceProfile, k_max: usize, rule: &QuadratureRule) -> Result<CoefficientTable> {
    let nodes = rule.nodes_for(k_max);
    if nodes > rule.max_nodes {
        return Err(Error::MemoryCap { requested: k_max, nodes, cap: rule.max_nodes });
    }
    let half = nodes / 2;
    let mut samples = vec![0.0f64; nodes];
    fill_indexed(rule.exec, &mut samples, |i| {
        let x = if i < half { i as f64 / nodes as f64 } else { i as f64 / nodes as f64 - 1.0 };
        trace.value(x)
    });
    let l2_squared = samples.iter().map(|v| v * v).sum::<f64>() / nodes as f64;
    let l1 = samples.iter().map(|v| v.abs()).sum::<f64>() / nodes as f64;

    // Coarse pass on every other node: x_{2i} on M nodes is x_i on M/2 nodes.
    let coarse = {
        let mut even: Vec<f64> = samples.iter().step_by(2).copied().collect();
        trapezoid_spectrum(&mut even, k_max)
    };
    let fine = trapezoid_spectrum(&mut samples, k_max);
    drop(samples);

    let even = trace.is_even();
    let errors: Vec<f64> = fine.iter().zip(&coarse).map(|(a, b)| (a - b).norm()).collect();
    for (k, &e) in errors.iter().enumerate().take(rule.consistency_k.min(k_max) + 1) {
        if e > rule.consistency_tol {
            return Err(Error::QuadratureInconsistent { k: k as i64, change: e, tolerance: rule.consistency_tol });
        }
    }
    let max_error = errors.iter().cloned().fold(0.0, f64::max);

    let mut c = vec![Complex64::new(0.0, 0.0); 2 * k_max + 1];
    for (k, v) in fine.into_iter().enumerate() {
        // Real even data has a real spectrum; the imaginary part is roundoff.
        let v = if even { Complex64::new(v.re, 0.0) } else { v };
        c[k_max + k] = v;
        c[k_max - k] = v.conj();
    }
    Ok(CoefficientTable {
        k_max,
        peak: peak_of(&c),
        c,
        meta: Some(QuadratureMeta { rule: "trapezoid".into(), nodes, errors, max_error, l2_squared, l1 }),
        source: trace.label(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockSum {
    pub j: u32,
    /// `sum_{k in D_j} |c_k|` over the stored coefficients.
    pub sum: f64,
    /// False when `D_j` reaches past `K`.
    pub complete: bool,
}

/// Sums of `|c_k|` over `D_0 = {0}` and `D_j = {2^{j-1} <= |k| < 2^j}`.
/// Blocks with no stored coefficient are absent.
pub fn block_sums(table: &CoefficientTable) -> Vec<BlockSum> {
    let mut out = vec![BlockSum { j: 0, sum: table.get(0).norm(), complete: true }];
    let k_max = table.k_max();
    let mut j = 1u32;
    loop {
        let lo = 1usize << (j - 1);
        if lo > k_max {
            break;
        }
        let hi = (1usize << j) - 1;
        let sum: f64 = (lo..=hi.min(k_max))
            .map(|k| table.get(k as i64).norm() + table.get(-(k as i64)).norm())
            .sum();
        out.push(BlockSum { j, sum, complete: hi <= k_max });
        j += 1;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    /// Consecutive coefficients per envelope group.
    pub group: usize,
    /// Groups whose peak is below `noise_mult * quadrature error` are dropped.
    pub noise_mult: f64,
    pub min_coefficients: usize,
    pub min_points: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { group: 8, noise_mult: 10.0, min_coefficients: 16, min_points: 4 }
    }
}

/// Least-squares power law `|c_k| ~ C k^-alpha` on the upper envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub alpha: f64,
    pub prefactor: f64,
    /// RMS of the log deviations.
    pub residual: f64,
    pub points: usize,
    pub k_lo: usize,
    pub k_hi: usize,
}

impl DecayFit {
    pub fn model(&self, k: f64) -> f64 {
        self.prefactor * k.powf(-self.alpha)
    }
}

/// Peak `(k, |c_k|)` of each group of `group` consecutive nonnegative `k`;
/// oscillating coefficient patterns (e.g. zeros at every fourth k) collapse
/// onto their envelope.
pub fn envelope(table: &CoefficientTable, k_lo: usize, k_hi: usize, group: usize) -> Vec<(usize, f64)> {
    let group = group.max(1);
    let mut out = Vec::new();
    let mut start = k_lo;
    while start <= k_hi {
        let end = (start + group - 1).min(k_hi);
        let (k, v) = (start..=end)
            .map(|k| (k, table.get(k as i64).norm()))
            .fold((start, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        out.push((k, v));
        start = end + 1;
    }
    out
}

/// Fits the decay exponent over `k in [k_lo, k_hi]` (positive side).
pub fn fit_decay_exponent(table: &CoefficientTable, k_lo: usize, k_hi: usize, cfg: &FitConfig) -> Result<DecayFit> {
    let k_lo = k_lo.max(1);
    let available = if k_hi >= k_lo && k_hi <= table.k_max() { k_hi - k_lo + 1 } else { 0 };
    if available < cfg.min_coefficients {
        return Err(Error::FitRangeTooSmall { k_lo, k_hi, available, required: cfg.min_coefficients });
    }
    let mut floor_seen = 0.0f64;
    let pts: Vec<(f64, f64)> = envelope(table, k_lo, k_hi, cfg.group)
        .into_iter()
        .filter(|&(k, v)| {
            let floor = table.noise_floor(k, cfg.noise_mult);
            floor_seen = floor_seen.max(floor);
            v > floor
        })
        .map(|(k, v)| ((k as f64).ln(), v.ln()))
        .collect();
    if pts.len() < cfg.min_points {
        return Err(Error::NoiseFloor { k_lo, k_hi, usable: pts.len(), floor: floor_seen });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Ok(DecayFit { alpha: -slope, prefactor: intercept.exp(), residual, points: pts.len(), k_lo, k_hi })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailMethod {
    /// `sum_{k > K} C k^{-alpha q}`, with `C` the window mean of
    /// `|c_k|^q k^{alpha q}` so oscillating patterns are not overcounted.
    PowerLaw { alpha: f64, mean_prefactor: f64, window: (usize, usize) },
    /// Every coefficient in the fit window is below the noise floor.
    Exhausted,
    /// No usable fit; only the stored partial sum is reported.
    Unextrapolated { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideTail {
    pub extrapolated: Option<f64>,
    pub method: TailMethod,
}

/// Extrapolated remainder for one side of the table.
fn side_remainder(table: &CoefficientTable, negative: bool, q: f64, from: usize, cfg: &FitConfig) -> SideTail {
    let k_max = table.k_max();
    let lo = (k_max / 8).max(1);
    let sign = if negative { -1i64 } else { 1 };
    let mirrored;
    let view = if negative {
        mirrored = CoefficientTable {
            k_max,
            c: table.c.iter().rev().copied().collect(),
            meta: table.meta.clone(),
            source: table.source.clone(),
            peak: table.peak,
        };
        &mirrored
    } else {
        table
    };
    let all_quiet = (lo..=k_max).all(|k| table.get(sign * k as i64).norm() <= view.noise_floor(k, cfg.noise_mult));
    if k_max >= 1 && all_quiet {
        return SideTail { extrapolated: Some(0.0), method: TailMethod::Exhausted };
    }
    match fit_decay_exponent(view, lo, k_max, cfg) {
        Err(e) => SideTail { extrapolated: None, method: TailMethod::Unextrapolated { reason: e.to_string() } },
        Ok(fit) if fit.alpha * q <= 1.0 => SideTail {
            extrapolated: None,
            method: TailMethod::Unextrapolated { reason: format!("alpha * q = {} <= 1", fit.alpha * q) },
        },
        Ok(fit) => {
            let p = fit.alpha * q;
            let mean = (lo..=k_max)
                .map(|k| view.get(k as i64).norm().powf(q) * (k as f64).powf(p))
                .sum::<f64>()
                / (k_max - lo + 1) as f64;
            let start = from.max(k_max) as f64 + 0.5;
            SideTail {
                extrapolated: Some(mean * start.powf(1.0 - p) / (p - 1.0)),
                method: TailMethod::PowerLaw { alpha: fit.alpha, mean_prefactor: mean, window: (lo, k_max) },
            }
        }
    }
}

/// `sum_{|k| > K'} |c_k|`: stored part plus extrapolated remainder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    pub k_prime: usize,
    /// `sum_{K' < |k| <= K} |c_k|`.
    pub partial: f64,
    pub positive: SideTail,
    pub negative: SideTail,
}

impl TailBound {
    pub fn extrapolated(&self) -> Option<f64> {
        Some(self.positive.extrapolated? + self.negative.extrapolated?)
    }

    pub fn is_extrapolated(&self) -> bool {
        self.extrapolated().is_some()
    }

    /// Partial sum plus the remainder when available.
    pub fn total(&self) -> f64 {
        self.partial + self.extrapolated().unwrap_or(0.0)
    }
}

/// Tail beyond `k_prime`. `k_prime >= K` is allowed; the partial sum is then
/// empty and the remainder starts at `k_prime`.
pub fn tail_bound(table: &CoefficientTable, k_prime: usize) -> TailBound {
    tail_bound_with(table, k_prime, &FitConfig::default())
}

pub fn tail_bound_with(table: &CoefficientTable, k_prime: usize, cfg: &FitConfig) -> TailBound {
    let k_max = table.k_max();
    let partial = (k_prime + 1..=k_max)
        .map(|k| table.get(k as i64).norm() + table.get(-(k as i64)).norm())
        .sum();
    TailBound {
        k_prime,
        partial,
        positive: side_remainder(table, false, 1.0, k_prime, cfg),
        negative: side_remainder(table, true, 1.0, k_prime, cfg),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllQ {
    pub q: f64,
    /// `sum |c_k|^q` over stored coefficients.
    pub partial_sum: f64,
    /// Extrapolated `sum_{|k| > K} |c_k|^q`, when both sides extrapolate.
    pub extrapolated_sum: Option<f64>,
    pub positive: SideTail,
    pub negative: SideTail,
}

impl EllQ {
    pub fn partial_norm(&self) -> f64 {
        self.partial_sum.powf(1.0 / self.q)
    }

    pub fn norm(&self) -> f64 {
        (self.partial_sum + self.extrapolated_sum.unwrap_or(0.0)).powf(1.0 / self.q)
    }
}

/// `(sum_k |c_k|^q)^{1/q}` with the extrapolated tail reported separately.
pub fn ell_q_norm(table: &CoefficientTable, q: f64) -> Result<EllQ> {
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::param("q", format!("must be > 0, got {q}")));
    }
    let cfg = FitConfig::default();
    let partial_sum = table.values().iter().map(|c| c.norm().powf(q)).sum();
    let positive = side_remainder(table, false, q, table.k_max(), &cfg);
    let negative = side_remainder(table, true, q, table.k_max(), &cfg);
    let extrapolated_sum = match (positive.extrapolated, negative.extrapolated) {
        (Some(a), Some(b)) => Some(a + b),
        _ => None,
    };
    Ok(EllQ { q, partial_sum, extrapolated_sum, positive, negative })
}
