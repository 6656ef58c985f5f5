//! One-dimensional rescaled traces of radial symbols.
//!
//! For a symbol supported in `B(0, R)` on R^{mn}, the trace
//! `tr(x) = profile(2 m R^2 |x|)` lives on the period-1 torus `[-1/2, 1/2)` and
//! is supported in `|x| <= 1/(2m)`. Its Fourier series in `x` is what the chirp
//! decomposition expands.
//!
//! Dyadic localisations use the partition member `Phi` on R^{2n}: the block
//! `sigma_j = sigma * Phi(2^-j .)` is read at `2^{j+3} xi` with `x = |xi|^2`,
//! giving `tr_j(x) = profile(4^{j+3} |x|) * Phi(8 sqrt|x|)`, supported in
//! `2^-10 <= |x| <= 1/4`.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cutoff::DyadicBump;
use crate::error::{Error, Result};
use crate::symbols::RadialSymbolSpec;

/// Default resolution of sampled trace exports.
pub const DEFAULT_SAMPLES: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Extension {
    /// `tr(-x) = tr(x)`; real cosine series.
    #[default]
    Even,
    /// `tr(x) = 0` for `x < 0`.
    Zero,
}

#[derive(Clone)]
enum Source {
    Symbol { spec: Arc<RadialSymbolSpec>, t_scale: f64 },
    Localized { spec: Arc<RadialSymbolSpec>, j: i32, bump: DyadicBump, t_scale: f64 },
    Function { label: String, f: Arc<dyn Fn(f64) -> f64 + Send + Sync>, even: bool },
}

/// A real function on the period-1 torus, evaluated lazily.
#[derive(Clone)]
pub struct TraceProfile {
    source: Source,
    extension: Extension,
}

impl fmt::Debug for TraceProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("TraceProfile");
        match &self.source {
            Source::Symbol { spec, .. } => d.field("symbol", &spec.family().tag()),
            Source::Localized { spec, j, .. } => d.field("symbol", &spec.family().tag()).field("j", j),
            Source::Function { label, .. } => d.field("function", label),
        };
        d.field("extension", &self.extension).finish()
    }
}

impl TraceProfile {
    /// Wraps an arbitrary function of `x in [-1/2, 1/2)`; used for synthetic
    /// spectra in tests and experiments.
    pub fn from_fn(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { source: Source::Function { label: label.into(), f: Arc::new(f), even: false }, extension: Extension::Zero }
    }

    /// Like [`TraceProfile::from_fn`] for a function known to be even.
    pub fn from_even_fn(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { source: Source::Function { label: label.into(), f: Arc::new(f), even: true }, extension: Extension::Even }
    }

    pub fn zero() -> Self {
        Self::from_even_fn("zero", |_| 0.0)
    }

    /// Whether `tr(-x) = tr(x)` by construction.
    pub fn is_even(&self) -> bool {
        match &self.source {
            Source::Function { even, .. } => *even,
            _ => self.extension == Extension::Even,
        }
    }

    pub fn extension(&self) -> Extension {
        self.extension
    }

    pub fn origin(&self) -> Option<&RadialSymbolSpec> {
        match &self.source {
            Source::Symbol { spec, .. } | Source::Localized { spec, .. } => Some(spec),
            Source::Function { .. } => None,
        }
    }

    pub fn localization_index(&self) -> Option<i32> {
        match &self.source {
            Source::Localized { j, .. } => Some(*j),
            _ => None,
        }
    }

    /// Radius scaling between trace and symbol: `sqrt(2m) R`, or `2^{j+3}`
    /// for a localised block.
    pub fn rescale_factor(&self) -> Option<f64> {
        match &self.source {
            Source::Symbol { spec, .. } => Some((2.0 * spec.m() as f64).sqrt() * spec.support_radius()),
            Source::Localized { j, .. } => Some(((*j + 3) as f64).exp2()),
            Source::Function { .. } => None,
        }
    }

    /// Half-width of an interval `[-w, w]` containing the support, if known.
    pub fn support_half_width(&self) -> Option<f64> {
        match &self.source {
            Source::Symbol { spec, .. } => Some(0.5 / spec.m() as f64),
            Source::Localized { .. } => Some(0.25),
            Source::Function { .. } => None,
        }
    }

    pub fn label(&self) -> String {
        match &self.source {
            Source::Symbol { spec, .. } => format!("{}-m{}", spec.family().tag(), spec.m()),
            Source::Localized { spec, j, .. } => format!("{}-m{}-j{}", spec.family().tag(), spec.m(), j),
            Source::Function { label, .. } => label.clone(),
        }
    }

    /// Value at `x`, read periodically.
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        let x = if (-0.5..0.5).contains(&x) { x } else { x - x.round() };
        if let Source::Function { f, .. } = &self.source {
            return f(x);
        }
        if x < 0.0 && self.extension == Extension::Zero {
            return 0.0;
        }
        let ax = x.abs();
        match &self.source {
            Source::Symbol { spec, t_scale } => spec.profile(t_scale * ax),
            Source::Localized { spec, bump, t_scale, .. } => {
                let ring = bump.member(8.0 * ax.sqrt());
                if ring == 0.0 {
                    0.0
                } else {
                    spec.profile(t_scale * ax) * ring
                }
            }
            Source::Function { .. } => unreachable!(),
        }
    }

    /// `resolution` uniform samples on `[-1/2, 1/2)`.
    pub fn sample(&self, resolution: usize) -> Vec<(f64, f64)> {
        (0..resolution)
            .map(|i| {
                let x = -0.5 + i as f64 / resolution as f64;
                (x, self.value(x))
            })
            .collect()
    }

    /// CSV with header `x,value`.
    pub fn write_csv<W: Write>(&self, mut w: W, resolution: usize) -> Result<()> {
        writeln!(w, "x,value")?;
        for (x, v) in self.sample(resolution) {
            writeln!(w, "{x},{v}")?;
        }
        Ok(())
    }
}

/// Rescaled trace of the whole symbol.
pub fn extract_trace(spec: &RadialSymbolSpec, extension: Extension) -> TraceProfile {
    let r = spec.support_radius();
    let t_scale = 2.0 * spec.m() as f64 * r * r;
    TraceProfile { source: Source::Symbol { spec: Arc::new(spec.clone()), t_scale }, extension }
}

/// The dyadic block `j` and its rescaled trace.
#[derive(Debug, Clone)]
pub struct DyadicLocalization {
    pub j: i32,
    pub bump: DyadicBump,
    pub trace: TraceProfile,
}

/// Localises `spec` to the dyadic block `j` of the radial partition `bump`.
pub fn dyadic_localize(spec: &RadialSymbolSpec, j: i32, bump: DyadicBump, extension: Extension) -> Result<DyadicLocalization> {
    let (lo, hi) = bump.variant.support();
    if lo < 0.25 || hi > 4.0 {
        return Err(Error::param("Phi", format!("support [{lo}, {hi}] leaves the annulus [1/4, 4]")));
    }
    bump.verify(-12, 12, 16, 1e-10)?;
    let t_scale = (2 * (j + 3)) as f64;
    let trace = TraceProfile {
        source: Source::Localized { spec: Arc::new(spec.clone()), j, bump, t_scale: t_scale.exp2() },
        extension,
    };
    Ok(DyadicLocalization { j, bump, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutoff::AnnulusVariant;

    #[test]
    fn trace_examples() {
        let br1 = RadialSymbolSpec::bochner_riesz(1.0, 2, 1).unwrap();
        let tr = extract_trace(&br1, Extension::Even);
        assert_eq!(tr.value(0.125), 0.5);
        assert_eq!(tr.value(-0.125), 0.5);
        assert_eq!(extract_trace(&br1, Extension::Zero).value(-0.125), 0.0);
        let br2 = RadialSymbolSpec::bochner_riesz(2.0, 3, 1).unwrap();
        assert!((extract_trace(&br2, Extension::Even).value(1.0 / 12.0) - 0.25).abs() < 1e-15);
        for m in 1..5 {
            let s = RadialSymbolSpec::bochner_riesz(0.5, m, 2).unwrap();
            let tr = extract_trace(&s, Extension::Even);
            for i in 1..100 {
                let x = 0.5 / m as f64 + i as f64 * 1e-3;
                if x < 0.5 {
                    assert_eq!(tr.value(x), 0.0);
                }
            }
        }
    }

    #[test]
    fn trace_matches_symbol_on_same_squared_radius() {
        let s = RadialSymbolSpec::modified_br(1.5, 1).unwrap();
        let tr = extract_trace(&s, Extension::Even);
        for i in 0..100 {
            let x = i as f64 / 400.0;
            let t = 4.0 * x;
            assert_eq!(tr.value(x), s.profile(t));
        }
    }

    #[test]
    fn localized_bochner_riesz_matches_direct_product() {
        let s = RadialSymbolSpec::bochner_riesz(1.0, 2, 1).unwrap();
        let bump = DyadicBump::new(AnnulusVariant::Wide);
        let loc = dyadic_localize(&s, -1, bump, Extension::Even).unwrap();
        for i in 0..100 {
            let x = i as f64 / 400.0;
            let direct = (1.0 - 16.0 * x).max(0.0) * bump.member(8.0 * x.sqrt());
            assert!((loc.trace.value(x) - direct).abs() <= 1e-12);
        }
    }

    #[test]
    fn localized_support_and_vanishing_blocks() {
        let s = RadialSymbolSpec::bochner_riesz(1.0, 2, 1).unwrap();
        let bump = DyadicBump::new(AnnulusVariant::Wide);
        for j in -6..6 {
            let loc = dyadic_localize(&s, j, bump, Extension::Even).unwrap();
            for i in 0..4000 {
                let x = -0.5 + i as f64 / 4000.0;
                let v = loc.trace.value(x);
                if x.abs() <= 2f64.powi(-10) || x.abs() >= 0.25 {
                    assert_eq!(v, 0.0);
                }
                if j >= 3 {
                    assert_eq!(v, 0.0);
                }
            }
        }
    }

    #[test]
    fn unit_symbol_gives_bare_ring() {
        let s = RadialSymbolSpec::custom(&[(0.0, 1.0), (1e8, 1.0), (1.0e12, 0.0)], 1e6, 2, 1, Default::default()).unwrap();
        let bump = DyadicBump::new(AnnulusVariant::Wide);
        let loc = dyadic_localize(&s, 0, bump, Extension::Even).unwrap();
        for i in 0..200 {
            let x = i as f64 / 800.0;
            assert!((loc.trace.value(x) - bump.member(8.0 * x.sqrt())).abs() < 1e-12);
        }
    }

    #[test]
    fn partition_reassembles_symbol() {
        let s = RadialSymbolSpec::bochner_riesz(1.0, 2, 1).unwrap();
        let bump = DyadicBump::new(AnnulusVariant::Wide);
        for i in 1..200 {
            let r = 1.1 * i as f64 / 200.0;
            let mut total = 0.0;
            let active: Vec<i32> = bump.active_range(r).collect();
            for &j in &active {
                let loc = dyadic_localize(&s, j, bump, Extension::Even).unwrap();
                // read block j at xi = r, i.e. x = (r / 2^{j+3})^2
                let x = (r / ((j + 3) as f64).exp2()).powi(2);
                // edge indices of the range sit outside the block, where x may wrap
                if x < 0.25 {
                    total += loc.trace.value(x);
                }
            }
            assert!((total - s.profile(r * r)).abs() < 1e-10, "r={r}");
            assert!(active.iter().filter(|&&j| bump.scaled(j, r) != 0.0).count() <= 5);
        }
    }
}
