//! Smooth cutoffs shared by every module.
//!
//! All bumps are built from the C^inf transition `h(u) = exp(-1/u)` (u > 0),
//! normalised into a step `S(u) = h(u) / (h(u) + h(1 - u))` that is exactly 0
//! for `u <= 0` and exactly 1 for `u >= 1`. Exact zeros matter: the
//! support-splitting checks compare products against literal `0.0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[inline]
fn h(u: f64) -> f64 {
    if u > 0.0 {
        (-1.0 / u).exp()
    } else {
        0.0
    }
}

/// Smooth step: 0 on `(-inf, 0]`, 1 on `[1, inf)`.
#[inline]
pub fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        let a = h(u);
        a / (a + h(1.0 - u))
    }
}

/// Which annulus the dyadic partition member is supported in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AnnulusVariant {
    /// Support `[1/4, 4]`, at most 5 overlapping members.
    #[default]
    Wide,
    /// Support `[1/2, 2]`, at most 3 overlapping members.
    Narrow,
}

impl AnnulusVariant {
    /// (inner, outer) support radii of the partition member.
    pub fn support(self) -> (f64, f64) {
        match self {
            AnnulusVariant::Wide => (0.25, 4.0),
            AnnulusVariant::Narrow => (0.5, 2.0),
        }
    }

    pub fn max_overlap(self) -> usize {
        match self {
            AnnulusVariant::Wide => 5,
            AnnulusVariant::Narrow => 3,
        }
    }

    /// Plateau/fall-off radii `(a, b)` of the low-pass generator.
    fn generator(self) -> (f64, f64) {
        match self {
            AnnulusVariant::Wide => (0.5, 4.0),
            AnnulusVariant::Narrow => (1.0, 2.0),
        }
    }
}

/// Radial dyadic partition of unity.
///
/// With the low-pass generator `psi(r) = 1 - S(log2(r/a) / log2(b/a))` (1 for
/// `r <= a`, 0 for `r >= b`), the member is `Phi(r) = psi(r) - psi(2r)`. The
/// partial sums telescope: `sum_{j <= J} Phi(2^-j r) = psi(2^-J r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DyadicBump {
    pub variant: AnnulusVariant,
}

impl DyadicBump {
    pub fn new(variant: AnnulusVariant) -> Self {
        Self { variant }
    }

    /// Low-pass generator `psi`.
    pub fn low_pass(&self, r: f64) -> f64 {
        let (a, b) = self.variant.generator();
        if r <= a {
            return 1.0;
        }
        if r >= b {
            return 0.0;
        }
        1.0 - smooth_step((r / a).log2() / (b / a).log2())
    }

    /// Partition member at radius `r >= 0`.
    pub fn member(&self, r: f64) -> f64 {
        let (lo, hi) = self.variant.support();
        if r <= lo || r >= hi {
            return 0.0;
        }
        self.low_pass(r) - self.low_pass(2.0 * r)
    }

    /// `Phi(2^-j r)`.
    pub fn scaled(&self, j: i32, r: f64) -> f64 {
        self.member(r * (-j as f64).exp2())
    }

    /// `sum_{j <= cut} Phi(2^-j r)`.
    pub fn low_pass_at(&self, cut: i32, r: f64) -> f64 {
        self.low_pass(r * (-cut as f64).exp2())
    }

    /// Indices `j` with `Phi(2^-j r) != 0`.
    pub fn active_range(&self, r: f64) -> std::ops::RangeInclusive<i32> {
        if r <= 0.0 {
            return std::ops::RangeInclusive::new(1, 0);
        }
        let (lo, hi) = self.variant.support();
        let l = r.log2();
        let j_lo = (l - hi.log2()).floor() as i32;
        let j_hi = (l - lo.log2()).ceil() as i32;
        j_lo..=j_hi
    }

    /// `sum_j Phi(2^-j r)` over the active indices.
    pub fn partition_sum(&self, r: f64) -> f64 {
        self.active_range(r).map(|j| self.scaled(j, r)).sum()
    }

    /// Checks the partition property on `samples` log-spaced radii per octave
    /// across `[2^lo_exp, 2^hi_exp]` to `tol`.
    pub fn verify(&self, lo_exp: i32, hi_exp: i32, samples: usize, tol: f64) -> Result<()> {
        let total = ((hi_exp - lo_exp) as usize) * samples.max(1);
        for i in 0..=total {
            let r = (lo_exp as f64 + (hi_exp - lo_exp) as f64 * i as f64 / total as f64).exp2();
            let dev = (self.partition_sum(r) - 1.0).abs();
            if dev > tol {
                return Err(Error::PartitionViolation { radius: r, deviation: dev });
            }
        }
        Ok(())
    }
}

/// Radial cutoff equal to 1 on `|x| <= 1` and 0 on `|x| >= c_sup`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChirpCutoff {
    pub c_sup: f64,
}

impl Default for ChirpCutoff {
    fn default() -> Self {
        Self { c_sup: 1.2 }
    }
}

impl ChirpCutoff {
    /// Enforces `1 < c_sup` and `c_sup^2 < 2 - 1/m`. Beyond that radius the
    /// periodised trace series wraps back onto the support of the trace.
    pub fn validate(&self, m: usize) -> Result<()> {
        let c = self.c_sup;
        let ok = m >= 1 && c.is_finite() && c > 1.0 && c * c < 2.0 - 1.0 / m as f64;
        if ok {
            Ok(())
        } else {
            Err(Error::AliasingGuard { c_sup: c, m })
        }
    }

    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        if r <= 1.0 {
            1.0
        } else if r >= self.c_sup {
            0.0
        } else {
            1.0 - smooth_step((r - 1.0) / (self.c_sup - 1.0))
        }
    }
}

/// Split of a radial profile into a part vanishing near the origin and a
/// part vanishing near the edge, in the squared-radius variable `t`.
///
/// `edge_weight(t)` is 0 for `t <= lo` and 1 for `t >= hi`; the centre weight
/// is its complement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CenterSplit {
    pub lo: f64,
    pub hi: f64,
}

impl CenterSplit {
    /// Transition on `t in [1/4, 1/2]`.
    pub const NARROW: CenterSplit = CenterSplit { lo: 0.25, hi: 0.5 };
    /// Transition on `t in [1/32, 7/8]`; its Fourier tail is negligible from
    /// |k| ~ 32 on, so coefficient decay shows up at moderate k.
    pub const WIDE: CenterSplit = CenterSplit { lo: 1.0 / 32.0, hi: 0.875 };

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && 0.0 < self.lo && self.lo < self.hi) {
            return Err(Error::param("split", format!("need 0 < lo < hi, got [{}, {}]", self.lo, self.hi)));
        }
        Ok(())
    }

    #[inline]
    pub fn edge_weight(&self, t: f64) -> f64 {
        smooth_step((t - self.lo) / (self.hi - self.lo))
    }

    #[inline]
    pub fn center_weight(&self, t: f64) -> f64 {
        1.0 - self.edge_weight(t)
    }
}

impl Default for CenterSplit {
    fn default() -> Self {
        Self::WIDE
    }
}
