//! Order-preserving map helpers. With the `parallel` feature these run on the
//! current rayon pool; without it they are plain iterators.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
pub(crate) fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

#[cfg(feature = "parallel")]
pub(crate) fn map_range<R, F>(range: std::ops::Range<i64>, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(i64) -> R + Sync + Send,
{
    range.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_range<R, F>(range: std::ops::Range<i64>, f: F) -> Vec<R>
where
    F: Fn(i64) -> R,
{
    range.map(f).collect()
}
