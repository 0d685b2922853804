//! Execution strategy for the data-parallel loops.
//!
//! With the `parallel` feature (default) work is spread over the rayon
//! pool; without it every strategy runs sequentially. Results never depend
//! on the choice.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// `(0..n).map(f).collect()`, in index order.
pub(crate) fn map_indices<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Maps each fixed-size chunk of `items` to an accumulator and merges them.
/// `merge` must be associative and commutative for the result to be
/// independent of scheduling.
pub(crate) fn fold_chunks<I, A, F, M>(
    exec: Execution,
    items: &[I],
    chunk: usize,
    init: impl Fn() -> A + Sync + Send,
    fold: F,
    merge: M,
) -> A
where
    I: Sync,
    A: Send,
    F: Fn(&mut A, usize, &I) + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    let chunk = chunk.max(1);
    let run = |(ci, part): (usize, &[I])| {
        let mut acc = init();
        for (j, item) in part.iter().enumerate() {
            fold(&mut acc, ci * chunk + j, item);
        }
        acc
    };
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return items
            .par_chunks(chunk)
            .enumerate()
            .map(run)
            .reduce(&init, &merge);
    }
    let _ = exec;
    items.chunks(chunk).enumerate().map(run).fold(init(), merge)
}
