use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by samplers, estimators and oracles.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("parameter `{name}` out of domain: {value}")]
    ParameterDomain { name: &'static str, value: f64 },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("model does not provide {0}")]
    Capability(&'static str),

    #[error("kernel failed at iteration {iteration}: {source}")]
    Kernel { iteration: u64, source: Box<Error> },

    #[error("conditional sampler for component {component} failed: {source}")]
    Component { component: usize, source: Box<Error> },

    #[error("population slot {slot} failed: {source}")]
    Slot { slot: usize, source: Box<Error> },

    #[error("matrix is numerically rank deficient")]
    NumericalRank,

    #[error("all importance ratios are -inf")]
    DegenerateWeights,

    #[error("only {finite} draws have finite weight, {requested} requested")]
    InsufficientSupport { finite: usize, requested: usize },

    #[error("EM log-likelihood decreased by {drop:e} at iteration {iteration}")]
    NonMonotone { iteration: usize, drop: f64 },

    #[error("state space of {states} exceeds capacity {capacity}")]
    Capacity { states: usize, capacity: usize },

    #[error("transition row {row} sums to {sum}")]
    BrokenKernel { row: usize, sum: f64 },

    #[error("grid does not cover posterior mass: endpoint density ratio {ratio:e}")]
    GridCoverage { ratio: f64 },

    #[error("mode search did not converge: {0}")]
    Optimization(String),

    #[error("Hessian at the mode is not positive definite")]
    Curvature,

    #[error("non-finite integrand at node {node:?}")]
    Evaluation { node: Vec<f64> },

    #[error("series has zero variance")]
    DegenerateSeries,

    #[error("distributions have mismatched support ({left} vs {right} states)")]
    MismatchedSupport { left: usize, right: usize },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

impl Error {
    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}
