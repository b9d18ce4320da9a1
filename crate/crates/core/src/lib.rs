//! Heat statistics of the two-time measurement protocol for quasi-free
//! fermion and boson models, their van Hove limit and classical analogues.

pub mod error;
pub mod classical;
pub mod cli;
pub mod config;
pub mod fockttm;
pub mod formfactor;
pub mod linalg;
pub mod numerics;
pub mod oneparticle;
pub mod stats;
pub mod vanhove;

pub use error::{Error, Result};

/// Maps `f` over `items`, in parallel when the `parallel` feature is on.
/// Output order follows input order.
#[cfg(feature = "parallel")]
pub(crate) fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    items.iter().map(f).collect()
}

/// Caps the worker threads of the global pool. Must run before any parallel
/// work; later calls fail.
#[cfg(feature = "parallel")]
pub fn set_threads(n: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidArgument(e.to_string()))
}

#[cfg(not(feature = "parallel"))]
pub fn set_threads(_n: usize) -> Result<()> {
    Ok(())
}
