//! Execution policy for the data-parallel loops.
//!
//! Every hot loop in the crate (coefficient sampling, reconstruction over
//! points, chirp sums over `k`, probe trials) takes an [`Exec`]. With the
//! `parallel` feature disabled, [`Exec::Parallel`] silently runs the
//! sequential path, so results never depend on the feature set except for
//! the tree-ordered reductions in [`Exec::Parallel`] mode.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exec {
    /// Fixed evaluation order; bit-reproducible.
    #[default]
    Sequential,
    /// Rayon work stealing. Gathers stay ordered; sums over `k` become tree
    /// reductions whose rounding differs from the sequential order by a few ulps
    /// per term.
    Parallel,
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Ordered map over `0..len`.
pub fn map_indexed<T, F>(exec: Exec, len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..len).map(f).collect()
}

/// Fill `out[i] = f(i)` in place.
pub fn fill_indexed<T, F>(exec: Exec, out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        out.par_iter_mut().enumerate().for_each(|(i, v)| *v = f(i));
        return;
    }
    let _ = exec;
    for (i, v) in out.iter_mut().enumerate() {
        *v = f(i);
    }
}

/// Fold `chunks` independent partial results and combine them.
///
/// Sequential mode folds chunk 0, 1, 2, ... left to right. Parallel mode
/// combines chunk results as a tree.
pub fn chunked_reduce<T, F, C>(exec: Exec, chunks: usize, init: impl Fn() -> T + Sync + Send, fold: F, combine: C) -> T
where
    T: Send,
    F: Fn(usize, T) -> T + Sync + Send,
    C: Fn(T, T) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..chunks)
            .into_par_iter()
            .map(|c| fold(c, init()))
            .reduce(&init, &combine);
    }
    let _ = (exec, &combine);
    let mut acc = init();
    for c in 0..chunks {
        acc = fold(c, acc);
    }
    acc
}
