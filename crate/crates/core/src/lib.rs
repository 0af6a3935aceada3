//! Iterative simulation for Bayesian and lattice models: Metropolis and
//! Gibbs kernels, data augmentation, Swendsen-Wang cluster moves, MCMC
//! estimators, exact oracles and deterministic baselines.
//!
//! The crate is `no_std` and needs only `alloc`.

// negated comparisons are used on purpose so that NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod augmentation;
pub mod baselines;
pub mod chain;
pub mod dist;
pub mod error;
pub mod estimators;
pub mod kernels;
pub mod models;
pub mod oracle;
pub mod rng;
pub mod swendsen_wang;

pub use chain::{run_chain, ChainTrace, Kernel};
pub use error::{Error, Result};
pub use rng::{make_rng, RngStream};
