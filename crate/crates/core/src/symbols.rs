//! Radial symbols on R^{mn} described by a profile in the squared radius.
//!
//! A [`RadialSymbolSpec`] evaluates `sigma(xi_1, .., xi_m) = profile(|xi_1|^2 + .. + |xi_m|^2)`.
//! Everything downstream (traces, chirp phases) is quadratic in the radius,
//! so profiles are stored in `t = |xi|^2` and no square roots are taken.

use serde::{Deserialize, Serialize};

use crate::cutoff::CenterSplit;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    #[default]
    Linear,
    /// Natural cubic spline.
    Cubic,
}

/// Symbol family together with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `(1 - t)_+^lambda`, support radius 1.
    BochnerRiesz { lambda: f64 },
    /// `(1 - log(1 - t))^-gamma` for `t < 1`, 0 otherwise; bilinear only.
    ModifiedBr { gamma: f64 },
    Custom(CustomProfile),
}

impl Family {
    pub fn tag(&self) -> &'static str {
        match self {
            Family::BochnerRiesz { .. } => "bochner_riesz",
            Family::ModifiedBr { .. } => "modified_br",
            Family::Custom(_) => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitPart {
    /// `profile * w(t)`: vanishes near the origin.
    Edge,
    /// `profile * (1 - w(t))`: vanishes near the edge.
    Center,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Split {
    pub part: SplitPart,
    #[serde(default)]
    pub window: CenterSplit,
}

/// Interpolated profile from `(t, value)` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomProfile {
    t: Vec<f64>,
    v: Vec<f64>,
    /// Second derivatives at the knots (cubic only).
    m2: Vec<f64>,
    interpolation: Interpolation,
}

impl CustomProfile {
    fn new(samples: &[(f64, f64)], r2: f64, interpolation: Interpolation) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::param("samples", "need at least two samples"));
        }
        for (i, &(t, v)) in samples.iter().enumerate() {
            if !(t.is_finite() && v.is_finite()) || t < 0.0 {
                return Err(Error::param("samples", format!("sample {i} = ({t}, {v}) is not a finite point with t >= 0")));
            }
            if i > 0 && t <= samples[i - 1].0 {
                return Err(Error::NonMonotoneSamples { index: i });
            }
            if t >= r2 && v != 0.0 {
                return Err(Error::NonzeroBeyondSupport { t, r2, value: v });
            }
        }
        let t: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let v: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let m2 = match interpolation {
            Interpolation::Linear => Vec::new(),
            Interpolation::Cubic => natural_spline_moments(&t, &v),
        };
        Ok(Self { t, v, m2, interpolation })
    }

    pub fn samples(&self) -> Vec<(f64, f64)> {
        self.t.iter().copied().zip(self.v.iter().copied()).collect()
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    fn eval(&self, t: f64) -> f64 {
        let n = self.t.len();
        if t <= self.t[0] {
            return self.v[0];
        }
        if t > self.t[n - 1] {
            return 0.0;
        }
        // first knot >= t
        let hi = self.t.partition_point(|&x| x < t).max(1);
        let lo = hi - 1;
        let (t0, t1) = (self.t[lo], self.t[hi]);
        let h = t1 - t0;
        let a = (t1 - t) / h;
        let b = (t - t0) / h;
        let lin = a * self.v[lo] + b * self.v[hi];
        match self.interpolation {
            Interpolation::Linear => lin,
            Interpolation::Cubic => {
                lin + ((a * a * a - a) * self.m2[lo] + (b * b * b - b) * self.m2[hi]) * h * h / 6.0
            }
        }
    }
}

/// Tridiagonal solve for natural cubic spline second derivatives.
fn natural_spline_moments(t: &[f64], v: &[f64]) -> Vec<f64> {
    let n = t.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    let mut diag = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = t[i] - t[i - 1];
        let h1 = t[i + 1] - t[i];
        diag[i] = 2.0 * (h0 + h1);
        upper[i] = h1;
        rhs[i] = 6.0 * ((v[i + 1] - v[i]) / h1 - (v[i] - v[i - 1]) / h0);
    }
    // Thomas algorithm on rows 1..n-1
    for i in 2..n - 1 {
        let w = (t[i] - t[i - 1]) / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    for i in (1..n - 1).rev() {
        m[i] = (rhs[i] - upper[i] * m[i + 1]) / diag[i];
    }
    m
}

/// Compactly supported radial symbol on R^{mn}.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSymbolSpec {
    m: usize,
    n: usize,
    /// Support radius before dilation.
    base_radius: f64,
    family: Family,
    split: Option<Split>,
    /// Frequency dilation: the symbol is `sigma_0(scale * xi)`.
    scale: f64,
}

fn check_dims(m: usize, n: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::param("m", "linearity degree must be >= 1"));
    }
    if n == 0 {
        return Err(Error::param("n", "dimension must be >= 1"));
    }
    Ok(())
}

impl RadialSymbolSpec {
    pub fn bochner_riesz(lambda: f64, m: usize, n: usize) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::param("lambda", format!("must be >= 0, got {lambda}")));
        }
        check_dims(m, n)?;
        Ok(Self { m, n, base_radius: 1.0, family: Family::BochnerRiesz { lambda }, split: None, scale: 1.0 })
    }

    /// Log-modified bilinear Bochner-Riesz symbol. Any `gamma > 0` is
    /// accepted; [`Self::hypothesis_met`] reports whether `gamma > 1`.
    pub fn modified_br(gamma: f64, n: usize) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::param("gamma", format!("must be > 0, got {gamma}")));
        }
        check_dims(2, n)?;
        Ok(Self { m: 2, n, base_radius: 1.0, family: Family::ModifiedBr { gamma }, split: None, scale: 1.0 })
    }

    pub fn custom(samples: &[(f64, f64)], radius: f64, m: usize, n: usize, interpolation: Interpolation) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::param("R", format!("must be > 0, got {radius}")));
        }
        check_dims(m, n)?;
        let profile = CustomProfile::new(samples, radius * radius, interpolation)?;
        Ok(Self { m, n, base_radius: radius, family: Family::Custom(profile), split: None, scale: 1.0 })
    }

    /// Multiplies the profile by a smooth window in `t` (before dilation).
    pub fn with_split(mut self, part: SplitPart, window: CenterSplit) -> Result<Self> {
        window.validate()?;
        self.split = Some(Split { part, window });
        Ok(self)
    }

    /// The symbol `xi -> sigma(factor * xi)`; the support radius becomes `R / factor`.
    pub fn dilated(mut self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::param("scale", format!("must be > 0, got {factor}")));
        }
        self.scale *= factor;
        Ok(self)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn split(&self) -> Option<Split> {
        self.split
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Support radius `R` of the (dilated) symbol.
    pub fn support_radius(&self) -> f64 {
        self.base_radius / self.scale
    }

    /// Whether the profile has a jump (the ball indicator, or a custom
    /// profile whose last sample is nonzero). Sobolev checks warn on these.
    pub fn is_discontinuous(&self) -> bool {
        match &self.family {
            Family::BochnerRiesz { lambda } => *lambda == 0.0 && self.split.is_none_or(|s| s.part == SplitPart::Edge),
            Family::ModifiedBr { .. } => false,
            Family::Custom(p) => {
                let last = *p.v.last().expect("validated non-empty");
                last != 0.0 && self.split.is_none_or(|s| s.part == SplitPart::Edge || s.window.hi > *p.t.last().unwrap())
            }
        }
    }

    /// Whether the parameter lies in the range where the operator is bounded
    /// from `L^2 x ... x L^2` to `L^{2/m}`: `lambda > m/2 - 1` for Bochner-Riesz, `gamma > 1` for the modified symbol.
    pub fn hypothesis_met(&self) -> Option<bool> {
        match &self.family {
            Family::BochnerRiesz { lambda } => Some(*lambda > self.m as f64 / 2.0 - 1.0),
            Family::ModifiedBr { gamma } => Some(*gamma > 1.0),
            Family::Custom(_) => None,
        }
    }

    fn base_profile(&self, u: f64) -> f64 {
        let raw = match &self.family {
            Family::BochnerRiesz { lambda } => {
                if u >= 1.0 {
                    0.0
                } else if *lambda == 0.0 {
                    1.0
                } else if lambda.fract() == 0.0 && *lambda <= 16.0 {
                    (1.0 - u).powi(*lambda as i32)
                } else {
                    (1.0 - u).powf(*lambda)
                }
            }
            Family::ModifiedBr { gamma } => {
                if u >= 1.0 {
                    0.0
                } else {
                    (1.0 - (-u).ln_1p()).powf(-*gamma)
                }
            }
            Family::Custom(p) => {
                if u > self.base_radius * self.base_radius {
                    0.0
                } else {
                    p.eval(u)
                }
            }
        };
        match self.split {
            None => raw,
            Some(Split { part: SplitPart::Edge, window }) => raw * window.edge_weight(u),
            Some(Split { part: SplitPart::Center, window }) => raw * window.center_weight(u),
        }
    }

    /// Profile at squared radius `t >= 0`; exactly 0 for `t > R^2`.
    #[inline]
    pub fn profile(&self, t: f64) -> f64 {
        if self.scale == 1.0 {
            self.base_profile(t)
        } else {
            self.base_profile(self.scale * self.scale * t)
        }
    }

    /// Value at one point given as the concatenation `(xi_1, .., xi_m)` of
    /// length `m * n`.
    pub fn eval_point(&self, xi: &[f64]) -> f64 {
        debug_assert_eq!(xi.len(), self.m * self.n);
        self.profile(xi.iter().map(|x| x * x).sum())
    }

    pub fn eval_symbol(&self, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        let d = self.m * self.n;
        points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                if p.len() != d {
                    Err(Error::param("points", format!("point {i} has {} coordinates, expected m*n = {d}", p.len())))
                } else {
                    Ok(self.eval_point(p))
                }
            })
            .collect()
    }

    pub fn to_document(&self) -> SymbolDocument {
        let (params, samples) = match &self.family {
            Family::BochnerRiesz { lambda } => (SymbolParams { lambda: Some(*lambda), ..Default::default() }, None),
            Family::ModifiedBr { gamma } => (SymbolParams { gamma: Some(*gamma), ..Default::default() }, None),
            Family::Custom(p) => (
                SymbolParams { interpolation: Some(p.interpolation), ..Default::default() },
                Some(p.samples()),
            ),
        };
        SymbolDocument {
            family: self.family.tag().to_string(),
            m: self.m,
            n: self.n,
            radius: Some(self.base_radius),
            params,
            samples,
            split: self.split,
            scale: (self.scale != 1.0).then_some(self.scale),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("symbol documents always serialise")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: SymbolDocument = serde_json::from_str(s)?;
        Self::try_from(doc)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interpolation: Option<Interpolation>,
}

/// JSON form: `{family, m, n, R, params, samples?, split?, scale?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolDocument {
    pub family: String,
    pub m: usize,
    pub n: usize,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default)]
    pub params: SymbolParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<(f64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

impl TryFrom<SymbolDocument> for RadialSymbolSpec {
    type Error = Error;

    fn try_from(doc: SymbolDocument) -> Result<Self> {
        let unit_radius = |r: Option<f64>| match r {
            None => Ok(()),
            Some(1.0) => Ok(()),
            Some(r) => Err(Error::param("R", format!("family `{}` has R = 1, got {r}", doc.family))),
        };
        let mut spec = match doc.family.as_str() {
            "bochner_riesz" => {
                unit_radius(doc.radius)?;
                let lambda = doc.params.lambda.ok_or_else(|| Error::param("params.lambda", "required for bochner_riesz"))?;
                Self::bochner_riesz(lambda, doc.m, doc.n)?
            }
            "modified_br" => {
                unit_radius(doc.radius)?;
                if doc.m != 2 {
                    return Err(Error::param("m", "modified_br is bilinear (m = 2)"));
                }
                let gamma = doc.params.gamma.ok_or_else(|| Error::param("params.gamma", "required for modified_br"))?;
                Self::modified_br(gamma, doc.n)?
            }
            "custom" => {
                let radius = doc.radius.ok_or_else(|| Error::param("R", "required for custom"))?;
                let samples = doc.samples.as_deref().ok_or_else(|| Error::param("samples", "required for custom"))?;
                Self::custom(samples, radius, doc.m, doc.n, doc.params.interpolation.unwrap_or_default())?
            }
            other => return Err(Error::param("family", format!("unknown family `{other}`"))),
        };
        if let Some(split) = doc.split {
            spec = spec.with_split(split.part, split.window)?;
        }
        if let Some(scale) = doc.scale {
            spec = spec.dilated(scale)?;
        }
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bochner_riesz_examples() {
        let s = RadialSymbolSpec::bochner_riesz(0.0, 2, 1).unwrap();
        assert_eq!(s.profile(0.5), 1.0);
        assert_eq!(s.profile(1.5), 0.0);
        assert!(s.is_discontinuous());
        let s = RadialSymbolSpec::bochner_riesz(1.0, 2, 1).unwrap();
        assert_eq!(s.profile(0.25), 0.75);
        let s = RadialSymbolSpec::bochner_riesz(2.0, 3, 2).unwrap();
        assert_eq!(s.profile(0.5), 0.25);
        assert!(RadialSymbolSpec::bochner_riesz(-0.1, 2, 1).is_err());
    }

    #[test]
    fn modified_br_examples() {
        let s = RadialSymbolSpec::modified_br(1.0, 1).unwrap();
        assert_eq!(s.profile(0.0), 1.0);
        assert_eq!(s.hypothesis_met(), Some(false));
        let s = RadialSymbolSpec::modified_br(2.0, 1).unwrap();
        assert!((s.profile(1.0 - (-1.0f64).exp()) - 0.25).abs() < 1e-15);
        assert!(s.profile(1.0 - 1e-12) < 1.5e-3);
        assert!(s.profile(1.0 - 1e-300) < s.profile(1.0 - 1e-12));
        assert_eq!(s.profile(1.0), 0.0);
        assert_eq!(s.hypothesis_met(), Some(true));
        assert!(RadialSymbolSpec::modified_br(0.0, 1).is_err());
    }

    #[test]
    fn custom_examples_and_errors() {
        let s = RadialSymbolSpec::custom(&[(0.0, 1.0), (1.0, 0.0)], 1.0, 2, 1, Interpolation::Linear).unwrap();
        assert_eq!(s.profile(0.5), 0.5);
        let z = RadialSymbolSpec::custom(&[(0.0, 0.0), (0.5, 0.0), (1.0, 0.0)], 1.0, 2, 1, Interpolation::Cubic).unwrap();
        for i in 0..50 {
            assert_eq!(z.profile(i as f64 / 40.0), 0.0);
        }
        assert_eq!(
            RadialSymbolSpec::custom(&[(0.0, 1.0), (0.5, 0.5), (0.4, 0.0)], 1.0, 2, 1, Interpolation::Linear),
            Err(Error::NonMonotoneSamples { index: 2 })
        );
        assert!(matches!(
            RadialSymbolSpec::custom(&[(0.0, 1.0), (1.0, 0.1)], 1.0, 2, 1, Interpolation::Linear),
            Err(Error::NonzeroBeyondSupport { .. })
        ));
    }

    #[test]
    fn custom_interpolation_matches_closed_form() {
        let br = RadialSymbolSpec::bochner_riesz(2.0, 2, 1).unwrap();
        let n = 200;
        let h = 1.0 / n as f64;
        let samples: Vec<(f64, f64)> = (0..=n).map(|i| (i as f64 * h, br.profile(i as f64 * h))).collect();
        let lin = RadialSymbolSpec::custom(&samples, 1.0, 2, 1, Interpolation::Linear).unwrap();
        let cub = RadialSymbolSpec::custom(&samples, 1.0, 2, 1, Interpolation::Cubic).unwrap();
        for i in 0..997 {
            let t = i as f64 / 997.0;
            assert!((lin.profile(t) - br.profile(t)).abs() <= h * h);
            // the natural end condition costs O(h^2) near the ends only
            assert!((cub.profile(t) - br.profile(t)).abs() <= h * h);
        }
    }

    #[test]
    fn eval_symbol_examples() {
        let s = RadialSymbolSpec::bochner_riesz(1.0, 2, 1).unwrap();
        let pts = vec![vec![0.5, 0.5], vec![1.0, 1.0]];
        assert_eq!(s.eval_symbol(&pts).unwrap(), vec![0.5, 0.0]);
        let s = RadialSymbolSpec::modified_br(2.0, 1).unwrap();
        let r = (1.0 - (-1.0f64).exp()).sqrt();
        assert!((s.eval_point(&[r, 0.0]) - 0.25).abs() < 1e-15);
        assert!(s.eval_symbol(&[vec![0.1]]).is_err());
    }

    #[test]
    fn dilation_rescales_support() {
        let s = RadialSymbolSpec::bochner_riesz(1.0, 2, 1).unwrap().dilated(2.0).unwrap();
        assert_eq!(s.support_radius(), 0.5);
        assert_eq!(s.profile(0.25), 0.0);
        assert_eq!(s.profile(0.125), 0.5);
    }

    #[test]
    fn json_round_trip_and_rejection() {
        let s = RadialSymbolSpec::bochner_riesz(1.5, 3, 2)
            .unwrap()
            .with_split(SplitPart::Edge, CenterSplit::NARROW)
            .unwrap();
        assert_eq!(RadialSymbolSpec::from_json(&s.to_json()).unwrap(), s);
        let c = RadialSymbolSpec::custom(&[(0.0, 1.0), (0.5, 0.3), (4.0, 0.0)], 2.0, 2, 1, Interpolation::Cubic).unwrap();
        assert_eq!(RadialSymbolSpec::from_json(&c.to_json()).unwrap(), c);
        assert!(RadialSymbolSpec::from_json(r#"{"family":"bochner_riesz","m":2,"n":1,"params":{"lambda":1},"bogus":1}"#).is_err());
        assert!(RadialSymbolSpec::from_json(r#"{"family":"modified_br","m":3,"n":1,"params":{"gamma":2}}"#).is_err());
    }
}
