//! Multilinear multiplier operators on periodic grids:
//! `T(f_1, ..., f_m)(x) = sum sigma(xi_1, ..., xi_m) prod_j f_j^(xi_j) exp(2 pi i x . sum xi_j)`.
//!
//! [`apply_direct`] sums over all frequency tuples and is the reference;
//! [`apply_fast`] evaluates the chirp sum `sum_k c_k prod_j T_{sigma^k} f_j`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::chirp::{unit_phase, ChirpDecomposition};
use crate::error::{Error, Result};
use crate::exec::{chunked_reduce, map_indexed, Exec};
use crate::grid::{index_of, GridFunction, NdFft};
use crate::symbols::RadialSymbolSpec;

/// Default work budget for [`apply_direct`], in `N^{mn} * N^n` units.
pub const DEFAULT_DIRECT_BUDGET: u128 = 1 << 26;

/// `(symbol * f^)^vee`; `symbol` receives the frequency `xi = kappa / L`.
pub fn apply_linear_multiplier(f: &GridFunction, symbol: impl Fn(&[f64]) -> Complex64) -> GridFunction {
    let mut spec = f.spectrum();
    for (i, v) in spec.iter_mut().enumerate() {
        *v *= symbol(&f.frequency(i));
    }
    GridFunction::from_spectrum(f.n(), f.size(), f.period(), spec).expect("shape taken from f")
}

fn check_inputs(m: usize, n: usize, fs: &[GridFunction]) -> Result<()> {
    if fs.len() != m {
        return Err(Error::GridMismatch { reason: format!("{} inputs for an {m}-linear operator", fs.len()) });
    }
    for f in fs {
        fs[0].require_same_grid(f)?;
    }
    if fs[0].n() != n {
        return Err(Error::GridMismatch { reason: format!("grid dimension {} but symbol acts on R^{n}", fs[0].n()) });
    }
    Ok(())
}

/// Explicit summation over all `m`-tuples of grid frequencies. Output
/// frequencies `sum kappa_j` are read modulo `N` per axis, as the grid's
/// pointwise products do.
pub fn apply_direct(spec: &RadialSymbolSpec, fs: &[GridFunction], budget: u128) -> Result<GridFunction> {
    let (m, n) = (spec.m(), spec.n());
    check_inputs(m, n, fs)?;
    let g = &fs[0];
    let size = g.size();
    let required = (size as u128).pow((m * n) as u32) * (size as u128).pow(n as u32);
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    let modes = g.len();
    let coeffs: Vec<Vec<Complex64>> = fs.iter().map(|f| f.series_coefficients()).collect();
    let kappas: Vec<Vec<i64>> = (0..modes).map(|i| g.wavenumbers(i)).collect();
    let norms: Vec<f64> = (0..modes).map(|i| g.frequency_norm_sq(i)).collect();
    let active: Vec<Vec<usize>> = coeffs
        .iter()
        .map(|c| (0..modes).filter(|&i| c[i] != Complex64::new(0.0, 0.0)).collect())
        .collect();

    let mut out = vec![Complex64::new(0.0, 0.0); modes];
    let mut tuple = vec![0usize; m];
    let mut target = vec![0i64; n];
    let counts: Vec<usize> = active.iter().map(Vec::len).collect();
    if counts.iter().all(|&c| c > 0) {
        loop {
            let mut t = 0.0;
            let mut prod = Complex64::new(1.0, 0.0);
            target.iter_mut().for_each(|v| *v = 0);
            for (j, &pos) in tuple.iter().enumerate() {
                let i = active[j][pos];
                t += norms[i];
                prod *= coeffs[j][i];
                for (a, k) in kappas[i].iter().enumerate() {
                    target[a] += k;
                }
            }
            let s = spec.profile(t);
            if s != 0.0 {
                let idx = target.iter().fold(0, |acc, &k| acc * size + index_of(k, size));
                out[idx] += prod * s;
            }
            // odometer over the tuple
            let mut j = m;
            loop {
                if j == 0 {
                    break;
                }
                j -= 1;
                tuple[j] += 1;
                if tuple[j] < counts[j] {
                    break;
                }
                tuple[j] = 0;
                if j == 0 {
                    j = usize::MAX;
                    break;
                }
            }
            if j == usize::MAX {
                break;
            }
        }
    }
    let scale = (modes as f64).sqrt();
    out.iter_mut().for_each(|v| *v *= scale);
    GridFunction::from_spectrum(n, size, g.period(), out)
}

/// Chirp-sum evaluation `sum_{|k| <= K} c_k prod_j T_{sigma^k} f_j`.
///
/// Sequential mode adds the terms in ascending `|k|`, `-k` before `+k`;
/// parallel mode sums contiguous blocks of that order and combines the block
/// sums as a tree.
pub fn apply_fast(decomp: &ChirpDecomposition, fs: &[GridFunction], exec: Exec) -> Result<GridFunction> {
    let (m, n) = (decomp.m(), decomp.n());
    check_inputs(m, n, fs)?;
    let g = &fs[0];
    let (size, modes) = (g.size(), g.len());
    let r2 = decomp.radius().powi(2);
    let cutoff = decomp.cutoff();
    // Per mode: phase rate t / 2m and cutoff value; only modes with phi != 0
    // and some nonzero input coefficient matter.
    let spectra: Vec<Vec<Complex64>> = fs.iter().map(|f| f.spectrum()).collect();
    let mut rate = vec![0.0; modes];
    let mut weighted: Vec<Vec<Complex64>> = spectra.clone();
    for i in 0..modes {
        let t = g.frequency_norm_sq(i) / r2;
        rate[i] = t / (2 * m) as f64;
        let phi = cutoff.eval(t.sqrt());
        for w in &mut weighted {
            w[i] *= phi;
        }
    }
    let support: Vec<usize> = (0..modes).filter(|&i| weighted.iter().any(|w| w[i] != Complex64::new(0.0, 0.0))).collect();

    let k_max = decomp.k_max() as i64;
    // Term order: 0, -1, 1, -2, 2, ...
    let terms = 2 * k_max as usize + 1;
    let order = |t: usize| -> i64 {
        if t == 0 {
            0
        } else {
            let a = t.div_ceil(2) as i64;
            if t % 2 == 1 {
                -a
            } else {
                a
            }
        }
    };
    let chunk = 256usize;
    let chunks = terms.div_ceil(chunk);
    let zero = || vec![Complex64::new(0.0, 0.0); modes];

    let sum = chunked_reduce(
        exec,
        chunks,
        zero,
        |c, mut acc| {
            let mut ifft = NdFft::new(n, size, true);
            let mut buf = zero();
            let mut prod = zero();
            for t in c * chunk..((c + 1) * chunk).min(terms) {
                let k = order(t);
                let ck = decomp.coefficient(k);
                if ck == Complex64::new(0.0, 0.0) {
                    continue;
                }
                prod.iter_mut().for_each(|v| *v = ck);
                for w in &weighted {
                    buf.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
                    for &i in &support {
                        buf[i] = w[i] * unit_phase(k as f64 * rate[i]);
                    }
                    ifft.process(&mut buf);
                    for (p, v) in prod.iter_mut().zip(&buf) {
                        *p *= v;
                    }
                }
                for (a, p) in acc.iter_mut().zip(&prod) {
                    *a += p;
                }
            }
            acc
        },
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(&b) {
                *x += y;
            }
            a
        },
    );
    GridFunction::from_samples(n, size, g.period(), sum)
}

/// Which implementation [`norm_probe`] drives.
#[derive(Debug, Clone, Copy)]
pub enum Applier<'a> {
    Direct { spec: &'a RadialSymbolSpec, budget: u128 },
    Fast { decomp: &'a ChirpDecomposition },
}

impl Applier<'_> {
    fn m(&self) -> usize {
        match self {
            Applier::Direct { spec, .. } => spec.m(),
            Applier::Fast { decomp } => decomp.m(),
        }
    }

    fn n(&self) -> usize {
        match self {
            Applier::Direct { spec, .. } => spec.n(),
            Applier::Fast { decomp } => decomp.n(),
        }
    }

    pub fn apply(&self, fs: &[GridFunction], exec: Exec) -> Result<GridFunction> {
        match self {
            Applier::Direct { spec, budget } => apply_direct(spec, fs, *budget),
            Applier::Fast { decomp } => apply_fast(decomp, fs, exec),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    #[serde(rename = "N")]
    pub size: usize,
    #[serde(rename = "L")]
    pub period: f64,
    /// Inputs carry modes with `|xi| <= band`.
    pub band: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeStats {
    pub trials: usize,
    /// `||T(f_1..f_m)||_{2/m} / prod ||f_j||_2` per trial.
    pub ratios: Vec<f64>,
    pub max: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Random inputs of trial `t`: stream `t` of a ChaCha20 generator seeded
/// with `seed`, so trials are independent of scheduling.
pub fn probe_inputs(m: usize, n: usize, cfg: &ProbeConfig, trial: u64) -> Result<Vec<GridFunction>> {
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    rng.set_stream(trial);
    (0..m).map(|_| GridFunction::random_band_limited(n, cfg.size, cfg.period, cfg.band, &mut rng)).collect()
}

/// Ratio `||T(f)||_{2/m} / prod ||f_j||_2` over random band-limited inputs.
pub fn norm_probe(applier: Applier<'_>, trials: usize, cfg: &ProbeConfig, exec: Exec) -> Result<ProbeStats> {
    if trials == 0 {
        return Err(Error::param("trials", "must be >= 1"));
    }
    let (m, n) = (applier.m(), applier.n());
    let q = 2.0 / m as f64;
    let results = map_indexed(exec, trials, |t| -> Result<f64> {
        let fs = probe_inputs(m, n, cfg, t as u64)?;
        let denom: f64 = fs.iter().map(GridFunction::norm_l2).product();
        if denom == 0.0 {
            return Ok(0.0);
        }
        let out = applier.apply(&fs, Exec::Sequential)?;
        Ok(out.norm_lp(q) / denom)
    });
    let ratios = results.into_iter().collect::<Result<Vec<f64>>>()?;
    let mut sorted = ratios.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(ProbeStats {
        trials,
        max: *sorted.last().expect("trials >= 1"),
        median: quantile(&sorted, 0.5),
        q1: quantile(&sorted, 0.25),
        q3: quantile(&sorted, 0.75),
        ratios,
    })
}

/// Relative L2 distance `||a - b|| / ||b||`.
pub fn relative_l2_error(a: &GridFunction, b: &GridFunction) -> Result<f64> {
    let d = a.sub(b)?.norm_l2();
    let r = b.norm_l2();
    Ok(if r == 0.0 { d } else { d / r })
}
