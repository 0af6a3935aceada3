//! Adaptive Gauss-Hermite product rules.
//!
//! Each pass places the product rule at `mean + L z` with `L L' = cov` from
//! the previous pass and reweights the nodes by `p(x) / phi(z)`.

use alloc::vec::Vec;

use libm::{exp, log, sqrt};
use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use super::optim::find_mode;
use crate::error::{Error, Result};
use crate::kernels::TargetDensity;

pub const MAX_GH_DIM: usize = 6;
const MAX_NODES: usize = 1 << 24;
const RELATIVE_CHANGE: f64 = 1e-8;

/// Nodes and weights for `integral f(z) phi(z) dz` with `phi` the standard
/// normal density; weights sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Orthonormal Hermite values `h_{n-1}(x), h_n(x)` with
/// `h_k = He_k / sqrt(k!)`.
fn orthonormal_pair(n: usize, x: f64) -> (f64, f64) {
    let (mut prev, mut cur) = (0.0, 1.0);
    for k in 0..n {
        let next = (x * cur - sqrt(k as f64) * prev) / sqrt((k + 1) as f64);
        prev = cur;
        cur = next;
    }
    (prev, cur)
}

impl HermiteRule {
    /// Degree-`n` rule, exact for polynomials up to degree `2 n - 1`.
    /// Nodes start from the eigenvalues of the Jacobi matrix and are
    /// polished by Newton steps on `He_n`.
    pub fn new(n: usize) -> Result<Self> {
        if !(1..=200).contains(&n) {
            return Err(Error::argument("Hermite degree must be in 1..=200"));
        }
        let jacobi = DMatrix::from_fn(n, n, |i, j| {
            if i + 1 == j || j + 1 == i {
                sqrt(i.max(j) as f64)
            } else {
                0.0
            }
        });
        let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.as_slice().to_vec();
        nodes.sort_by(f64::total_cmp);
        let mut weights = Vec::with_capacity(n);
        for x in &mut nodes {
            for _ in 0..3 {
                let (hm1, hn) = orthonormal_pair(n, *x);
                // He_n / He_n' = h_n / (sqrt(n) h_{n-1})
                let step = hn / (sqrt(n as f64) * hm1);
                if step.is_finite() {
                    *x -= step;
                }
            }
            let (hm1, _) = orthonormal_pair(n, *x);
            weights.push(1.0 / (n as f64 * hm1 * hm1));
        }
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        Ok(HermiteRule { nodes, weights })
    }

    pub fn degree(&self) -> usize {
        self.nodes.len()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Moments from an adaptive Gauss-Hermite run.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermiteFit {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    /// Passes of the rule, including the last one.
    pub iterations: usize,
    pub converged: bool,
    rule: HermiteRule,
}

/// Node `x = center + L z` and its log weight `ln w + ln p(x) + |z|^2 / 2`.
fn placed_nodes<T: TargetDensity + ?Sized>(
    target: &T,
    rule: &HermiteRule,
    center: &DVector<f64>,
    chol_l: &DMatrix<f64>,
) -> Result<(Vec<DVector<f64>>, Vec<f64>)> {
    let d = center.len();
    let n = rule.degree();
    let total = n.checked_pow(d as u32).filter(|&t| t <= MAX_NODES).ok_or(Error::Capacity {
        states: n.saturating_pow(d as u32),
        capacity: MAX_NODES,
    })?;
    let mut xs = Vec::with_capacity(total);
    let mut lw = Vec::with_capacity(total);
    let mut idx = alloc::vec![0usize; d];
    for _ in 0..total {
        let z = DVector::from_fn(d, |i, _| rule.nodes[idx[i]]);
        let x = center + chol_l * &z;
        let lp = target.log_density(x.as_slice());
        if lp.is_nan() || lp == f64::INFINITY {
            return Err(Error::Evaluation {
                node: x.as_slice().to_vec(),
            });
        }
        let w: f64 = idx.iter().map(|&k| log(rule.weights[k])).sum();
        lw.push(w + lp + 0.5 * z.norm_squared());
        xs.push(x);
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < n {
                break;
            }
            *slot = 0;
        }
    }
    Ok((xs, lw))
}

fn normalized(lw: &[f64]) -> Result<Vec<f64>> {
    let max = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::DegenerateWeights);
    }
    let w: Vec<f64> = lw.iter().map(|l| exp(l - max)).collect();
    let total: f64 = w.iter().sum();
    Ok(w.into_iter().map(|v| v / total).collect())
}

fn moments(xs: &[DVector<f64>], w: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
    let d = xs[0].len();
    let mut mean = DVector::zeros(d);
    for (x, &wi) in xs.iter().zip(w) {
        mean.axpy(wi, x, 1.0);
    }
    let mut cov = DMatrix::zeros(d, d);
    for (x, &wi) in xs.iter().zip(w) {
        let c = x - &mean;
        cov.ger(wi, &c, &c, 1.0);
    }
    (mean, cov)
}

fn relative_change(old: &(DVector<f64>, DMatrix<f64>), new: &(DVector<f64>, DMatrix<f64>)) -> f64 {
    let d = new.0.len();
    let mut worst: f64 = 0.0;
    for i in 0..d {
        let sd = sqrt(new.1[(i, i)]);
        worst = worst.max((new.0[i] - old.0[i]).abs() / sd);
        for j in 0..d {
            let scale = sqrt(new.1[(i, i)] * new.1[(j, j)]);
            worst = worst.max((new.1[(i, j)] - old.1[(i, j)]).abs() / scale);
        }
    }
    worst
}

/// Adaptive Gauss-Hermite posterior mean and covariance.
///
/// The first rule is centred at the mode found from `start` and scaled by
/// the inverse negative Hessian there. Each later pass is centred and
/// scaled by the previous pass's moments, until the relative change falls
/// below 1e-8 or `adapt_iters` passes have run.
pub fn gauss_hermite_moments<T: TargetDensity + ?Sized>(
    target: &T,
    degree: usize,
    adapt_iters: usize,
    start: &[f64],
) -> Result<GaussHermiteFit> {
    let d = target.dim();
    if d == 0 || d > MAX_GH_DIM {
        return Err(Error::argument("Gauss-Hermite supports 1 to 6 dimensions"));
    }
    if degree < 3 {
        return Err(Error::argument("Gauss-Hermite degree must be at least 3"));
    }
    if adapt_iters == 0 {
        return Err(Error::argument("at least one pass required"));
    }
    let rule = HermiteRule::new(degree)?;
    let mode = find_mode(target, start)?;
    let mut current = (DVector::from_vec(mode.point.clone()), mode.covariance()?);
    for iteration in 1..=adapt_iters {
        let chol = Cholesky::new(current.1.clone()).ok_or(Error::Curvature)?;
        let (xs, lw) = placed_nodes(target, &rule, &current.0, &chol.l())?;
        let next = moments(&xs, &normalized(&lw)?);
        let change = relative_change(&current, &next);
        current = next;
        if change < RELATIVE_CHANGE || iteration == adapt_iters {
            return Ok(GaussHermiteFit {
                mean: current.0,
                cov: current.1,
                iterations: iteration,
                converged: change < RELATIVE_CHANGE,
                rule,
            });
        }
    }
    unreachable!("loop returns on the last pass")
}

impl GaussHermiteFit {
    /// `E[g(x)]` with the rule placed at the fitted moments.
    pub fn expectation<T: TargetDensity + ?Sized>(
        &self,
        target: &T,
        g: impl Fn(&[f64]) -> f64,
    ) -> Result<f64> {
        let chol = Cholesky::new(self.cov.clone()).ok_or(Error::Curvature)?;
        let (xs, lw) = placed_nodes(target, &self.rule, &self.mean, &chol.l())?;
        let w = normalized(&lw)?;
        let mut total = 0.0;
        for (x, wi) in xs.iter().zip(w) {
            let v = g(x.as_slice());
            if !v.is_finite() {
                return Err(Error::Evaluation {
                    node: x.as_slice().to_vec(),
                });
            }
            total += wi * v;
        }
        Ok(total)
    }
}
