//! Multifidelity sequential tempered MCMC for stochastic reaction networks.
//!
//! Likelihoods come from finite-state-projection solutions of surrogate
//! chemical master equations whose propensities vanish outside a copy-number
//! box. A hierarchy of nested boxes provides cheap approximations that the
//! sampler bridges through on its way to the top-fidelity posterior.

pub mod error;
pub mod fsp;
pub mod integrate;
pub mod likelihood;
pub mod model;
pub mod multifi;
pub mod ssa;
pub mod stmcmc;

pub use error::{Error, Result};

/// Runs `f` on a private rayon pool with `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::config(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(f))
}
