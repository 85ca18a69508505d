//! Worker-level fan-out.
//!
//! Per-worker closures may run on several threads, but results always come
//! back indexed by worker so callers reduce in ascending worker order and
//! stay bit-identical to a sequential run.

use std::sync::OnceLock;

/// Environment variable capping worker parallelism.
pub const THREADS_ENV: &str = "BIDIOPT_THREADS";

/// Thread cap from `BIDIOPT_THREADS`; defaults to 1.
pub fn thread_cap() -> usize {
    static CAP: OnceLock<usize> = OnceLock::new();
    *CAP.get_or_init(|| {
        std::env::var(THREADS_ENV).ok().and_then(|s| s.trim().parse::<usize>().ok()).filter(|&t| t >= 1).unwrap_or(1)
    })
}

/// Evaluates `f(i)` for `i in 0..n`, returning results in index order.
pub fn map_indexed<T, F>(n: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let threads = threads.clamp(1, n.max(1));
    if threads == 1 {
        return (0..n).map(f).collect();
    }
    let chunk = n.div_ceil(threads);
    let f = &f;
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|c| {
                let lo = c * chunk;
                let hi = ((c + 1) * chunk).min(n);
                scope.spawn(move || (lo..hi).map(f).collect::<Vec<T>>())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker thread panicked")).collect()
    })
}
