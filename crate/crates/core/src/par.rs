//! Internal dispatch between rayon and sequential execution.
//!
//! Every caller reduces with an associative, commutative merge over
//! per-index results, so the parallel and sequential paths produce
//! identical values.

#[cfg(feature = "parallel")]
pub(crate) fn map_reduce_with<S, R, I, F, M>(n: usize, init: I, f: F, identity: R, merge: M) -> R
where
    S: Send,
    R: Send + Sync + Clone,
    I: Fn() -> S + Send + Sync,
    F: Fn(&mut S, usize) -> R + Send + Sync,
    M: Fn(R, R) -> R + Send + Sync,
{
    use rayon::prelude::*;
    (0..n)
        .into_par_iter()
        .map_init(&init, |scratch, i| f(scratch, i))
        .reduce(|| identity.clone(), &merge)
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_reduce_with<S, R, I, F, M>(n: usize, init: I, f: F, identity: R, merge: M) -> R
where
    S: Send,
    R: Send + Sync + Clone,
    I: Fn() -> S + Send + Sync,
    F: Fn(&mut S, usize) -> R + Send + Sync,
    M: Fn(R, R) -> R + Send + Sync,
{
    let mut scratch = init();
    let mut acc = identity;
    for i in 0..n {
        acc = merge(acc, f(&mut scratch, i));
    }
    acc
}
