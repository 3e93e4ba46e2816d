//! Order-preserving map over row indices, parallel when the `parallel`
//! feature is on.

#[cfg(feature = "parallel")]
pub(crate) fn map<T, F>(items: &[usize], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(|&i| f(i)).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map<T, F>(items: &[usize], f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    items.iter().map(|&i| f(i)).collect()
}

/// Caps the worker pool used by audits. Must run before the first parallel
/// call; later calls are rejected by the pool and reported as an error.
#[cfg(feature = "parallel")]
pub fn set_threads(n: usize) -> crate::Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| crate::Error::Config(format!("thread pool: {e}")))
}
