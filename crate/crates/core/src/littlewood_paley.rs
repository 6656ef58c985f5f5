//! Littlewood-Paley machinery on periodic grids: dyadic projections, the
//! support-splitting predicate for bilinear blocks, the discrete centred
//! maximal function and the maximal-domination probe.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chirp::localized_chirp;
use crate::cutoff::{AnnulusVariant, ChirpCutoff, DyadicBump};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, NdFft};
use crate::operator::apply_linear_multiplier;

/// Verified radial partition `sum_j Phi(2^-j xi) = 1`, `xi != 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DyadicPartition {
    pub bump: DyadicBump,
}

/// Partition tolerance enforced by [`build_partition`].
pub const PARTITION_TOL: f64 = 1e-10;

pub fn build_partition(variant: AnnulusVariant) -> Result<DyadicPartition> {
    let bump = DyadicBump::new(variant);
    bump.verify(-40, 40, 64, PARTITION_TOL)?;
    Ok(DyadicPartition { bump })
}

impl DyadicPartition {
    /// `Phi(2^-j |xi|)`.
    pub fn weight(&self, j: i32, xi: &[f64]) -> f64 {
        self.bump.scaled(j, norm(xi))
    }

    /// Shells touching the nonzero frequencies of `grid`.
    pub fn grid_range(&self, grid: &GridFunction) -> std::ops::RangeInclusive<i32> {
        let lo = 1.0 / grid.period();
        let hi = grid.nyquist() * (grid.n() as f64).sqrt();
        let (inner, _) = self.bump.variant.support();
        let mut end = *self.bump.active_range(hi).end();
        while inner * (end as f64).exp2() > hi {
            end -= 1;
        }
        *self.bump.active_range(lo).start()..=end
    }
}

fn norm(xi: &[f64]) -> f64 {
    xi.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `Delta_j f = (Phi(2^-j .) f^)^vee`. Rejects shells that start beyond the
/// grid's Nyquist frequency.
pub fn lp_project(f: &GridFunction, j: i32, partition: &DyadicPartition) -> Result<GridFunction> {
    let (lo, _) = partition.bump.variant.support();
    let shell_start = lo * (j as f64).exp2();
    if shell_start > f.nyquist() * (f.n() as f64).sqrt() {
        return Err(Error::ShellBeyondNyquist { j, shell_start, nyquist: f.nyquist() });
    }
    Ok(apply_linear_multiplier(f, |xi| Complex64::new(partition.weight(j, xi), 0.0)))
}

/// `(j, ||Delta_j f||_2^2)` over the shells of the grid.
pub fn shell_energies(f: &GridFunction, partition: &DyadicPartition) -> Result<Vec<(i32, f64)>> {
    partition.grid_range(f).map(|j| Ok((j, lp_project(f, j, partition)?.norm_l2().powi(2)))).collect()
}

/// True when `sigma_j (Delta_r f_1 (x) Delta_s f_2)^ = 0` is forced by
/// supports alone.
pub fn support_split_predicate(j: i32, r: i32, s: i32) -> bool {
    r > j + 4 || s > j + 4 || (r < j - 4 && s < j - 4)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitCheck {
    pub j: i32,
    pub r: i32,
    pub s: i32,
    pub predicate: bool,
    /// `sup |sigma_j(xi, eta) Phi_r(xi) Phi_s(eta)|` over the lattice.
    pub sup: f64,
}

/// Evaluates `sigma(xi, eta) Phi(2^-j |(xi, eta)|) Phi(2^-r |xi|) Phi(2^-s |eta|)`
/// over a lattice of magnitudes `|xi|, |eta|` (the product only depends on
/// them): 0 and `per_octave` log-spaced values per octave covering the
/// support of the block `j` and of both shells.
pub fn verify_support_split(
    j: i32,
    r: i32,
    s: i32,
    partition: &DyadicPartition,
    sigma: impl Fn(f64, f64) -> f64,
    per_octave: usize,
) -> SplitCheck {
    let (lo, hi) = partition.bump.variant.support();
    let e_lo = (lo.log2() as i32) + j.min(r).min(s) - 1;
    let e_hi = (hi.log2() as i32) + j.max(r).max(s) + 1;
    let steps = (e_hi - e_lo) as usize * per_octave;
    let mut radii = vec![0.0];
    radii.extend((0..=steps).map(|i| (e_lo as f64 + i as f64 / per_octave as f64).exp2()));
    let b = &partition.bump;
    let mut sup = 0.0f64;
    for &a in &radii {
        let wa = b.scaled(r, a);
        if wa == 0.0 {
            continue;
        }
        for &c in &radii {
            let v = wa * b.scaled(s, c) * b.scaled(j, a.hypot(c)) * sigma(a, c);
            sup = sup.max(v.abs());
        }
    }
    SplitCheck { j, r, s, predicate: support_split_predicate(j, r, s), sup }
}

/// Radii used by [`hl_maximal`]: 0, then `h 2^i` up to half the period.
pub fn maximal_radii(grid: &GridFunction) -> Vec<f64> {
    let h = grid.period() / grid.size() as f64;
    let mut out = vec![0.0];
    let mut rho = h;
    while rho <= 0.5 * grid.period() * (grid.n() as f64).sqrt() {
        out.push(rho);
        rho *= 2.0;
    }
    out
}

/// Discrete centred maximal function: the largest average of `|f|` over the
/// periodic lattice balls `{y : |y - x| <= rho}`, `rho` in [`maximal_radii`].
/// The radius 0 ball is the point itself.
pub fn hl_maximal(f: &GridFunction) -> GridFunction {
    let (n, size) = (f.n(), f.size());
    let h = f.period() / size as f64;
    let len = f.len();
    let abs: Vec<Complex64> = f.samples().iter().map(|v| Complex64::new(v.norm(), 0.0)).collect();
    let mut fwd = NdFft::new(n, size, false);
    let mut inv = NdFft::new(n, size, true);
    let mut abs_hat = abs.clone();
    fwd.process(&mut abs_hat);
    let mut best: Vec<f64> = abs.iter().map(|v| v.re).collect();
    let offsets: Vec<Vec<i64>> = (0..len)
        .map(|i| {
            let mut rest = i;
            let mut o = vec![0i64; n];
            for a in (0..n).rev() {
                o[a] = crate::grid::wavenumber(rest % size, size);
                rest /= size;
            }
            o
        })
        .collect();
    for rho in maximal_radii(f).into_iter().skip(1) {
        let mut ball: Vec<Complex64> = offsets
            .iter()
            .map(|o| {
                let d2 = o.iter().map(|&k| (k as f64 * h).powi(2)).sum::<f64>();
                Complex64::new(if d2 <= rho * rho * (1.0 + 1e-12) { 1.0 } else { 0.0 }, 0.0)
            })
            .collect();
        let count: f64 = ball.iter().map(|v| v.re).sum();
        fwd.process(&mut ball);
        let mut conv: Vec<Complex64> = abs_hat.iter().zip(&ball).map(|(a, b)| a * b).collect();
        inv.process(&mut conv);
        let scale = (len as f64).sqrt() / count;
        for (b, c) in best.iter_mut().zip(&conv) {
            *b = b.max(c.re * scale);
        }
    }
    let data = best.into_iter().map(|v| Complex64::new(v.max(0.0), 0.0)).collect();
    GridFunction::from_samples(n, size, f.period(), data).expect("shape taken from f")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominationProbe {
    pub j: i32,
    pub k: i64,
    pub m_block: u32,
    /// Low-pass cut `j - 6 - ceil(m_block / 2)`.
    pub cut: i32,
    pub sup_output: f64,
    /// `sup_x |T f_low (x)| / max(M f(x), floor)`.
    pub ratio: f64,
}

/// Dyadic block index of `k`: `k in D_m`.
pub fn block_of(k: i64) -> u32 {
    if k == 0 {
        0
    } else {
        64 - k.unsigned_abs().leading_zeros()
    }
}

/// Applies the localised chirp `sigma_j^k` to the low-pass part of `f` below
/// the cut and compares it pointwise with the maximal function of `f`.
pub fn maximal_domination_check(
    j: i32,
    k: i64,
    m_block: u32,
    f: &GridFunction,
    partition: &DyadicPartition,
    cutoff: ChirpCutoff,
    floor: f64,
) -> Result<DominationProbe> {
    if block_of(k) != m_block {
        return Err(Error::param("k", format!("{k} is not in block D_{m_block}")));
    }
    if f.nyquist() < ((j + 1) as f64).exp2() {
        return Err(Error::GridTooCoarse { reason: format!("Nyquist {} below shell 2^{}", f.nyquist(), j + 1) });
    }
    let cut = j - 6 - m_block.div_ceil(2) as i32;
    let (_, b) = match partition.bump.variant {
        AnnulusVariant::Wide => (0.5, 4.0),
        AnnulusVariant::Narrow => (1.0, 2.0),
    };
    if b * (cut as f64).exp2() <= 1.0 / f.period() {
        return Err(Error::GridTooCoarse { reason: format!("low-pass cut {cut} keeps only the mean") });
    }
    let low = apply_linear_multiplier(f, |xi| Complex64::new(partition.bump.low_pass_at(cut, norm(xi)), 0.0));
    let out = apply_linear_multiplier(&low, |xi| localized_chirp(j, k, xi, cutoff));
    let mf = hl_maximal(f);
    let ratio = out
        .samples()
        .iter()
        .zip(mf.samples())
        .map(|(t, m)| t.norm() / m.re.max(floor))
        .fold(0.0, f64::max);
    Ok(DominationProbe { j, k, m_block, cut, sup_output: out.sup_norm(), ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn partition() -> DyadicPartition {
        build_partition(AnnulusVariant::Wide).unwrap()
    }

    #[test]
    fn partition_examples() {
        let p = partition();
        let total: f64 = p.bump.active_range(1.0).map(|j| p.weight(j, &[1.0])).sum();
        assert!((total - 1.0).abs() < 1e-10);
        for j0 in -3..3 {
            let r = 1.5 * (j0 as f64).exp2();
            for j in -10..10 {
                if p.bump.scaled(j, r) != 0.0 {
                    assert!((j0 - 2..=j0 + 2).contains(&j));
                }
            }
        }
        assert!(build_partition(AnnulusVariant::Narrow).is_ok());
    }

    #[test]
    fn single_mode_inside_flat_part_is_fixed() {
        let p = partition();
        let g = GridFunction::mode(1, 64, 1.0, &[3]).unwrap();
        let sum: GridFunction = p
            .bump
            .active_range(3.0)
            .map(|j| lp_project(&g, j, &p).unwrap())
            .reduce(|a, b| a.add(&b).unwrap())
            .unwrap();
        assert!(sum.sub(&g).unwrap().sup_norm() < 1e-12);
        assert!(matches!(lp_project(&g, 10, &p), Err(Error::ShellBeyondNyquist { .. })));
    }

    #[test]
    fn projections_sum_to_mean_free_part() {
        let p = partition();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = GridFunction::random_band_limited(1, 128, 2.0, 16.0, &mut rng).unwrap();
        let mut sum = GridFunction::zeros(1, 128, 2.0).unwrap();
        for j in p.grid_range(&f) {
            sum = sum.add(&lp_project(&f, j, &p).unwrap()).unwrap();
        }
        let mean = f.series_coefficients()[0];
        let expect = GridFunction::from_fn(1, 128, 2.0, |_| -mean).unwrap().add(&f).unwrap();
        assert!(sum.sub(&expect).unwrap().sup_norm() < 1e-10);
        let energy: f64 = shell_energies(&f, &p).unwrap().iter().map(|e| e.1).sum();
        let total = f.norm_l2().powi(2);
        assert!(energy <= 5.0 * total + 1e-10 && energy >= total / 5.0);
    }

    #[test]
    fn predicate_examples() {
        assert!(support_split_predicate(0, 6, 0));
        assert!(support_split_predicate(0, -6, -6));
        assert!(!support_split_predicate(0, 0, 0));
        assert!(!support_split_predicate(0, -6, 0));
        let p = partition();
        assert_eq!(verify_support_split(0, 6, 0, &p, |_, _| 1.0, 16).sup, 0.0);
        assert_eq!(verify_support_split(0, -6, -6, &p, |_, _| 1.0, 16).sup, 0.0);
        assert!(verify_support_split(0, 0, 0, &p, |_, _| 1.0, 16).sup > 0.1);
    }

    #[test]
    fn maximal_examples() {
        let mut cell = GridFunction::zeros(1, 64, 1.0).unwrap();
        cell.samples_mut()[10] = Complex64::new(1.0, 0.0);
        let m = hl_maximal(&cell);
        assert!((m.samples()[10].re - 1.0).abs() < 1e-12);
        // distance d cells: best ball is radius 2^ceil(log2 d) cells
        let d = 5usize;
        let v = m.samples()[10 + d].re;
        assert!((v - 1.0 / 17.0).abs() < 1e-12, "{v}");
        let c = GridFunction::from_fn(2, 16, 1.0, |_| Complex64::new(-2.5, 0.0)).unwrap();
        assert!(hl_maximal(&c).samples().iter().all(|v| (v.re - 2.5).abs() < 1e-12));
    }

    #[test]
    fn domination_examples() {
        let p = partition();
        let zero = GridFunction::zeros(1, 512, 1.0).unwrap();
        let r = maximal_domination_check(7, 1, 1, &zero, &p, ChirpCutoff::default(), 1e-12).unwrap();
        assert_eq!(r.ratio, 0.0);
        assert_eq!(r.cut, 0);
        assert!(maximal_domination_check(7, 3, 1, &zero, &p, ChirpCutoff::default(), 1e-12).is_err());
        assert_eq!(block_of(1), 1);
        assert_eq!(block_of(-3), 2);
        assert_eq!(block_of(64), 7);
    }
}
