//! Order-preserving parallel map with a sequential fallback when the
//! `parallel` feature is disabled.

use crate::Result;

/// Applies `f` to every item; the result order always matches the input order.
#[cfg(feature = "parallel")]
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

/// Applies `f` to every item; the result order always matches the input order.
#[cfg(not(feature = "parallel"))]
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

/// Runs `f` inside a scoped pool of `n` worker threads; `None` uses the
/// ambient pool. Ignores `n` when compiled without the `parallel` feature.
#[cfg(feature = "parallel")]
pub fn with_threads<R, F>(n: Option<usize>, f: F) -> Result<R>
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    match n {
        None => Ok(f()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| crate::Error::Config(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Runs `f` directly; thread counts have no effect in sequential builds.
#[cfg(not(feature = "parallel"))]
pub fn with_threads<R, F>(n: Option<usize>, f: F) -> Result<R>
where
    F: FnOnce() -> R,
{
    let _ = n;
    Ok(f())
}
