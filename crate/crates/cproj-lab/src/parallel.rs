//! One shared rayon pool, capped by `CPROJ_LAB_JOBS`.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::OnceLock;

pub const JOBS_ENV: &str = "CPROJ_LAB_JOBS";

static REQUESTED: AtomicUsize = AtomicUsize::new(0);
static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();

/// The cap from the environment, if set to a positive integer.
pub fn env_cap() -> Option<usize> {
    std::env::var(JOBS_ENV).ok()?.trim().parse::<usize>().ok().filter(|&n| n > 0)
}

/// Number of worker threads for a request (`None` = all cores), after the cap.
pub fn effective_jobs(requested: Option<usize>) -> usize {
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let want = requested.filter(|&n| n > 0).unwrap_or(cores);
    env_cap().map_or(want, |c| want.min(c))
}

/// Asks for `jobs` workers. Only effective before the pool is first used.
pub fn request_jobs(jobs: usize) {
    REQUESTED.store(jobs, Ordering::SeqCst);
}

pub fn pool() -> &'static rayon::ThreadPool {
    POOL.get_or_init(|| {
        let r = REQUESTED.load(Ordering::SeqCst);
        let n = effective_jobs((r > 0).then_some(r));
        rayon::ThreadPoolBuilder::new().num_threads(n).build().expect("thread pool")
    })
}

pub fn install<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    pool().install(f)
}
