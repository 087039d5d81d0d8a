//! Thread-count control for the data-parallel loops.

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "PENTABEND_THREADS";

/// Thread cap from the environment, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
}

/// Runs `op` on a pool limited by [`thread_cap`], or on the global pool.
pub fn install<T: Send>(op: impl FnOnce() -> T + Send) -> T {
    match thread_cap().and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(op),
        None => op(),
    }
}
