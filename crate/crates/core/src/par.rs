//! Execution backend for node evaluation and reductions.
//!
//! Every reduction in the crate goes through [`pairwise_sum`], whose split
//! points depend only on the input length. The parallel and the sequential
//! backends therefore produce bitwise identical sums, whatever the number of
//! worker threads.

use std::sync::atomic::{AtomicBool, Ordering};

static PARALLEL: AtomicBool = AtomicBool::new(cfg!(feature = "parallel"));

/// Below this many items a reduction or a map runs on the calling thread.
const SEQ_CUTOFF: usize = 1024;
const LEAF: usize = 8;

/// Turns the rayon backend on or off at runtime. Without the `parallel`
/// feature this is a no-op and everything runs sequentially.
pub fn set_parallel(on: bool) {
    PARALLEL.store(on && cfg!(feature = "parallel"), Ordering::Relaxed);
}

pub fn is_parallel() -> bool {
    PARALLEL.load(Ordering::Relaxed)
}

/// Runs `f` with the backend temporarily switched, restoring the previous
/// setting afterwards.
pub fn with_parallel<T>(on: bool, f: impl FnOnce() -> T) -> T {
    let prev = is_parallel();
    set_parallel(on);
    let out = f();
    set_parallel(prev);
    out
}

/// Order-preserving map over `0..len`.
pub fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_indexed_min(len, SEQ_CUTOFF, f)
}

/// As [`map_indexed`], going parallel once there are `min_len` items. Use a
/// small threshold when each item is itself expensive.
pub fn map_indexed_min<T, F>(len: usize, min_len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() && len >= min_len.max(2) {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = min_len;
    (0..len).map(f).collect()
}

/// Order-preserving map over a slice.
pub fn map_slice<S, T, F>(items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    map_indexed(items.len(), |i| f(&items[i]))
}

/// Fixed-shape tree reduction.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    let (lo, hi) = values.split_at(mid);
    #[cfg(feature = "parallel")]
    if is_parallel() && values.len() >= SEQ_CUTOFF {
        let (a, b) = rayon::join(|| pairwise_sum(lo), || pairwise_sum(hi));
        return a + b;
    }
    pairwise_sum(lo) + pairwise_sum(hi)
}

/// Component-wise [`pairwise_sum`] over rows of `K` values.
pub fn pairwise_sum_rows<const K: usize>(rows: &[[f64; K]]) -> [f64; K] {
    if rows.len() <= LEAF {
        let mut acc = [0.0; K];
        for row in rows {
            for (a, v) in acc.iter_mut().zip(row) {
                *a += v;
            }
        }
        return acc;
    }
    let mid = rows.len() / 2;
    let (lo, hi) = rows.split_at(mid);
    #[cfg(feature = "parallel")]
    let (a, b) = if is_parallel() && rows.len() >= SEQ_CUTOFF {
        rayon::join(|| pairwise_sum_rows(lo), || pairwise_sum_rows(hi))
    } else {
        (pairwise_sum_rows(lo), pairwise_sum_rows(hi))
    };
    #[cfg(not(feature = "parallel"))]
    let (a, b) = (pairwise_sum_rows(lo), pairwise_sum_rows(hi));
    let mut out = a;
    for (o, v) in out.iter_mut().zip(b) {
        *o += v;
    }
    out
}
