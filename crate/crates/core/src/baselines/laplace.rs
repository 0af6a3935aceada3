//! Fully exponential Laplace approximation of posterior expectations.
//!
//! `E[g] ~ sqrt(det(-H) / det(-H*)) exp(L*(x*) - L(x^))` where `L` is the
//! log target with mode `x^` and Hessian `H`, and `L* = L + ln g` with mode
//! `x*` and Hessian `H*`.

use libm::{exp, log};

use super::optim::{maximize, Mode};
use crate::error::{Error, Result};
use crate::kernels::TargetDensity;

fn log_det_neg(mode: &Mode) -> Result<f64> {
    let chol = mode.neg_hessian_cholesky()?;
    Ok(2.0 * chol.l().diagonal().iter().map(|v| log(*v)).sum::<f64>())
}

/// Laplace estimate of `E[g(x)]` for a positive `g`, both modes searched
/// from `start`.
pub fn laplace_moments<T: TargetDensity + ?Sized>(
    target: &T,
    g: impl Fn(&[f64]) -> f64,
    start: &[f64],
) -> Result<f64> {
    if start.len() != target.dim() {
        return Err(Error::argument("start point has the wrong dimension"));
    }
    if !(g(start) > 0.0) {
        return Err(Error::argument("g must be positive on the support"));
    }
    let base = maximize(&|x: &[f64]| target.log_density(x), start)?;
    let tilted = maximize(
        &|x: &[f64]| {
            let gx = g(x);
            if gx > 0.0 {
                target.log_density(x) + log(gx)
            } else {
                f64::NEG_INFINITY
            }
        },
        &base.point,
    )?;
    let half = 0.5 * (log_det_neg(&base)? - log_det_neg(&tilted)?);
    Ok(exp(half + tilted.value - base.value))
}

/// `E[g] = E[g + shift] - shift` for a `g` that is only bounded below by
/// `-shift`.
pub fn laplace_moments_shifted<T: TargetDensity + ?Sized>(
    target: &T,
    g: impl Fn(&[f64]) -> f64,
    shift: f64,
    start: &[f64],
) -> Result<f64> {
    Ok(laplace_moments(target, |x: &[f64]| g(x) + shift, start)? - shift)
}
