//! Batch execution of independent runs.
//!
//! With the `parallel` feature the batch is spread over a rayon pool of at
//! most `jobs` threads; without it every batch runs in order on the calling
//! thread. Results keep the order of the inputs either way.

/// Maps `f` over `items`, using up to `jobs` threads (`0` picks the
/// number of available cores).
#[cfg(feature = "parallel")]
pub fn map_jobs<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    if jobs == 1 || items.len() < 2 {
        return map_sequential(items, f);
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(_) => map_sequential(items, f),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_jobs<T, R, F>(items: &[T], _jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    map_sequential(items, f)
}

pub fn map_sequential<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

/// Whether [`map_jobs`] can use more than one thread in this build.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
