//! Brute-force oracles: exact enumeration of small discrete laws, dense
//! transition matrices, and grid quadrature for the Morris scale marginal.

use alloc::vec::Vec;

use libm::{exp, log};

use crate::error::{Error, Result};
use crate::models::morris::MorrisModel;

/// A fully enumerated, normalised law over states `0..len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDistribution {
    probs: Vec<f64>,
}

impl ExactDistribution {
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::argument("weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::argument("weights sum to zero"));
        }
        Ok(ExactDistribution {
            probs: weights.iter().map(|w| w / total).collect(),
        })
    }

    /// Normalise log weights with max subtraction.
    pub fn from_log_weights(log_weights: &[f64]) -> Result<Self> {
        let max = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::argument("no finite log weight"));
        }
        let w: Vec<f64> = log_weights.iter().map(|l| exp(l - max)).collect();
        Self::from_weights(&w)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn expectation(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.probs.iter().enumerate().map(|(i, p)| p * f(i)).sum()
    }
}

/// A finite state space with unnormalised log weights.
pub trait FiniteModel {
    /// `None` when the count overflows `usize`.
    fn n_states(&self) -> Option<usize>;
    fn log_weight(&self, state: usize) -> f64;
}

pub const ENUMERATION_CAPACITY: usize = 1 << 20;

/// Exact law of a finite model by summing all weights.
pub fn enumerate_discrete<M: FiniteModel + ?Sized>(model: &M) -> Result<ExactDistribution> {
    let n = model.n_states().unwrap_or(usize::MAX);
    if n > ENUMERATION_CAPACITY {
        return Err(Error::Capacity {
            states: n,
            capacity: ENUMERATION_CAPACITY,
        });
    }
    let lw: Vec<f64> = (0..n).map(|s| model.log_weight(s)).collect();
    ExactDistribution::from_log_weights(&lw)
}

/// A kernel whose transition probabilities can be listed exhaustively.
pub trait ExactKernel {
    fn n_states(&self) -> usize;

    /// Nonzero transition probabilities out of `from`, possibly with
    /// repeated destinations.
    fn transition_row(&self, from: usize) -> Result<Vec<(usize, f64)>>;
}

/// Identity transition matrix on `n` states.
#[derive(Debug, Clone, Copy)]
pub struct IdentityKernel(pub usize);

impl ExactKernel for IdentityKernel {
    fn n_states(&self) -> usize {
        self.0
    }

    fn transition_row(&self, from: usize) -> Result<Vec<(usize, f64)>> {
        Ok(alloc::vec![(from, 1.0)])
    }
}

pub const STATIONARY_CAPACITY: usize = 4096;

/// Dense row-major transition matrix; rows must sum to 1 within 1e-9.
pub fn transition_matrix<K: ExactKernel + ?Sized>(kernel: &K) -> Result<Vec<f64>> {
    let n = kernel.n_states();
    if n > STATIONARY_CAPACITY {
        return Err(Error::Capacity {
            states: n,
            capacity: STATIONARY_CAPACITY,
        });
    }
    let mut p = alloc::vec![0.0; n * n];
    for i in 0..n {
        let row = &mut p[i * n..(i + 1) * n];
        for (j, w) in kernel.transition_row(i)? {
            row[j] += w;
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || row.iter().any(|&v| v < 0.0) {
            return Err(Error::BrokenKernel { row: i, sum });
        }
    }
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationarityGaps {
    /// `max_j |(pi^T P)_j - pi_j|`.
    pub stationarity: f64,
    /// `max_ij |pi_i P_ij - pi_j P_ji|`.
    pub detailed_balance: f64,
}

pub fn stationary_check<K: ExactKernel + ?Sized>(
    kernel: &K,
    target: &ExactDistribution,
) -> Result<StationarityGaps> {
    let n = kernel.n_states();
    if n != target.len() {
        return Err(Error::MismatchedSupport {
            left: n,
            right: target.len(),
        });
    }
    let p = transition_matrix(kernel)?;
    let pi = target.probs();
    let mut moved = alloc::vec![0.0; n];
    let mut balance: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let flow = pi[i] * p[i * n + j];
            moved[j] += flow;
            if j > i {
                balance = balance.max((flow - pi[j] * p[j * n + i]).abs());
            }
        }
    }
    let stationarity = moved
        .iter()
        .zip(pi)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(StationarityGaps {
        stationarity,
        detailed_balance: balance,
    })
}

/// Log-spaced grid of positive values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositiveGrid {
    pub lower: f64,
    pub upper: f64,
    pub points: usize,
}

impl PositiveGrid {
    pub fn new(lower: f64, upper: f64, points: usize) -> Result<Self> {
        if !(lower > 0.0 && upper > lower && upper.is_finite()) || points < 3 {
            return Err(Error::argument("grid needs 0 < lower < upper and >= 3 points"));
        }
        Ok(PositiveGrid { lower, upper, points })
    }

    /// Wide enough for the tails of every Morris posterior with `k + q > 1`.
    pub fn wide() -> Self {
        PositiveGrid {
            lower: 1e-8,
            upper: 1e30,
            points: 513,
        }
    }
}

/// A posterior discretised on grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPosterior {
    pub nodes: Vec<f64>,
    pub dist: ExactDistribution,
    pub mean: f64,
    pub variance: f64,
    pub refinements: usize,
}

impl GridPosterior {
    pub fn expectation(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.dist.expectation(|i| g(self.nodes[i]))
    }

    /// Grid node with the largest density in A.
    pub fn mode(&self) -> f64 {
        // probs are density-in-log-A times trapezoid weights; undo the Jacobian
        let mut best = (0, f64::NEG_INFINITY);
        for (i, (&a, &p)) in self.nodes.iter().zip(self.dist.probs()).enumerate() {
            let d = p / a;
            if d > best.1 {
                best = (i, d);
            }
        }
        self.nodes[best.0]
    }
}

/// Unnormalised `ln p(A | y)` after integrating out the effects:
/// `y_i | A ~ N(0, V_i + A)`, `A ~ lambda / chi-square(q)`.
fn morris_log_marginal(model: &MorrisModel, a: f64) -> f64 {
    let (lambda, q) = (model.lambda(), model.prior_dof());
    let mut lp = -(0.5 * q + 1.0) * log(a) - 0.5 * lambda / a;
    for (&y, &v) in model.y().iter().zip(model.v()) {
        let s = v + a;
        lp += -0.5 * log(s) - 0.5 * y * y / s;
    }
    lp
}

const MAX_REFINEMENTS: usize = 16;
const MOMENT_RTOL: f64 = 1e-8;
const COVERAGE_RATIO: f64 = 1e-8;

/// Normalised `p(A | y)` on a log-spaced grid. The grid is halved until the
/// posterior mean and variance are stable to 1e-8 relative.
pub fn quadrature_marginal_a(model: &MorrisModel, grid: PositiveGrid) -> Result<GridPosterior> {
    let (lo, hi) = (log(grid.lower), log(grid.upper));
    let mut intervals = grid.points - 1;
    let mut previous: Option<(f64, f64)> = None;
    for refinements in 0..=MAX_REFINEMENTS {
        let h = (hi - lo) / intervals as f64;
        let mut nodes = Vec::with_capacity(intervals + 1);
        let mut lw = Vec::with_capacity(intervals + 1);
        for j in 0..=intervals {
            let u = lo + j as f64 * h;
            let a = exp(u);
            nodes.push(a);
            // density in u = log A, with trapezoid end weights
            let end = if j == 0 || j == intervals { log(0.5) } else { 0.0 };
            lw.push(morris_log_marginal(model, a) + u + end);
        }
        let peak = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let edge = (lw[0] - log(0.5)).max(lw[intervals] - log(0.5));
        if exp(edge - peak) >= COVERAGE_RATIO {
            return Err(Error::GridCoverage {
                ratio: exp(edge - peak),
            });
        }
        let dist = ExactDistribution::from_log_weights(&lw)?;
        let mean = dist.expectation(|i| nodes[i]);
        let variance = dist.expectation(|i| (nodes[i] - mean) * (nodes[i] - mean));
        let settled = previous.is_some_and(|(m0, v0)| {
            ((mean - m0) / mean).abs() < MOMENT_RTOL && ((variance - v0) / variance).abs() < MOMENT_RTOL
        });
        if settled || refinements == MAX_REFINEMENTS {
            return Ok(GridPosterior {
                nodes,
                dist,
                mean,
                variance,
                refinements,
            });
        }
        previous = Some((mean, variance));
        intervals *= 2;
    }
    unreachable!("loop returns on the last refinement")
}
