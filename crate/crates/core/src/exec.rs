//! Replica-parallel execution with a sequential fallback.
//!
//! Every Monte Carlo driver maps a pure function over replica indices and then
//! reduces the resulting `Vec` in index order, so results are bitwise
//! identical whatever the worker count. The `parallel` feature (on by
//! default) backs [`map_replicas`] with rayon; without it the crate is fully
//! sequential. [`map_replicas_seq`] is always available so benchmarks can
//! compare both paths in one build.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Size the global worker pool; 0 keeps the library default. Only the first
/// call in a process takes effect. Returns the active worker count.
pub fn configure_threads(n: usize) -> usize {
    #[cfg(feature = "parallel")]
    {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
        1
    }
}

/// Map `f` over `0..n` sequentially.
pub fn map_replicas_seq<T, F>(n: u64, f: F) -> Vec<T>
where
    F: Fn(u64) -> T + Sync + Send,
    T: Send,
{
    (0..n).map(f).collect()
}

/// Map `f` over `0..n` on the rayon pool, results in index order.
#[cfg(feature = "parallel")]
pub fn map_replicas_par<T, F>(n: u64, f: F) -> Vec<T>
where
    F: Fn(u64) -> T + Sync + Send,
    T: Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Map `f` over replica indices `0..n`; parallel when the feature is enabled.
pub fn map_replicas<T, F>(n: u64, f: F) -> Vec<T>
where
    F: Fn(u64) -> T + Sync + Send,
    T: Send,
{
    #[cfg(feature = "parallel")]
    {
        map_replicas_par(n, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_replicas_seq(n, f)
    }
}
