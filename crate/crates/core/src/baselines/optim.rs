//! Mode finding by BFGS with central-difference gradients.

use alloc::format;
use alloc::vec::Vec;

use libm::sqrt;
use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernels::TargetDensity;

const MAX_ITER: usize = 500;
const GRAD_TOL: f64 = 1e-6;
const DIVERGENCE: f64 = 1e12;

fn step_size(x: f64, rel: f64) -> f64 {
    rel * x.abs().max(1.0)
}

pub(crate) fn gradient(f: &impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = step_size(x[i], 1e-6);
            p[i] = x[i] + h;
            let up = f(&p);
            p[i] = x[i] - h;
            let down = f(&p);
            p[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Central second differences of `target.log_density` at `x`.
pub fn hessian<T: TargetDensity + ?Sized>(target: &T, x: &[f64]) -> DMatrix<f64> {
    hessian_of(&|p: &[f64]| target.log_density(p), x)
}

pub(crate) fn hessian_of(f: &impl Fn(&[f64]) -> f64, x: &[f64]) -> DMatrix<f64> {
    let d = x.len();
    let h: Vec<f64> = x.iter().map(|&v| step_size(v, 1e-4)).collect();
    let mut p = x.to_vec();
    let f0 = f(x);
    let mut out = DMatrix::zeros(d, d);
    for i in 0..d {
        p[i] = x[i] + h[i];
        let up = f(&p);
        p[i] = x[i] - h[i];
        let down = f(&p);
        p[i] = x[i];
        out[(i, i)] = (up - 2.0 * f0 + down) / (h[i] * h[i]);
        for j in 0..i {
            let mut corner = |si: f64, sj: f64| {
                p[i] = x[i] + si * h[i];
                p[j] = x[j] + sj * h[j];
                let v = f(&p);
                p[i] = x[i];
                p[j] = x[j];
                v
            };
            let v = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0))
                / (4.0 * h[i] * h[j]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// A local maximum of a log density with its curvature.
#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    pub point: Vec<f64>,
    pub value: f64,
    /// Hessian of the log density at the mode.
    pub hessian: DMatrix<f64>,
    pub iterations: usize,
}

impl Mode {
    /// `(-H)^-1`, or a curvature error when `-H` is not positive definite.
    pub fn covariance(&self) -> Result<DMatrix<f64>> {
        Ok(self.neg_hessian_cholesky()?.inverse())
    }

    pub(crate) fn neg_hessian_cholesky(&self) -> Result<Cholesky<f64, nalgebra::Dyn>> {
        Cholesky::new(-self.hessian.clone()).ok_or(Error::Curvature)
    }
}

/// Maximise `f` from `start` by BFGS with a backtracking line search.
pub(crate) fn maximize(f: &impl Fn(&[f64]) -> f64, start: &[f64]) -> Result<Mode> {
    let d = start.len();
    let mut x = DVector::from_column_slice(start);
    let scale0 = x.amax();
    let mut fx = f(x.as_slice());
    if !fx.is_finite() {
        return Err(Error::Optimization(format!("log density at start is {fx}")));
    }
    let mut g = DVector::from_vec(gradient(f, x.as_slice()));
    // inverse Hessian approximation of -f
    let mut h_inv = DMatrix::<f64>::identity(d, d);
    for iteration in 0..MAX_ITER {
        // finite-difference noise in g is about 1e-10 |f| / max(1, |x|)
        if g.amax() * x.amax().max(1.0) < GRAD_TOL + 1e-9 * fx.abs() {
            return Ok(Mode {
                point: x.as_slice().to_vec(),
                value: fx,
                hessian: hessian_of(f, x.as_slice()),
                iterations: iteration,
            });
        }
        let mut dir = &h_inv * &g;
        if dir.dot(&g) <= 0.0 {
            h_inv = DMatrix::identity(d, d);
            dir = g.clone();
        }
        let mut t = 1.0;
        let (x_new, f_new) = loop {
            let cand = &x + &dir * t;
            let fc = f(cand.as_slice());
            if fc.is_finite() && fc >= fx + 1e-4 * t * dir.dot(&g) {
                break (cand, fc);
            }
            t *= 0.5;
            if t < 1e-20 {
                // no ascent possible at this resolution: accept the point
                return Ok(Mode {
                    point: x.as_slice().to_vec(),
                    value: fx,
                    hessian: hessian_of(f, x.as_slice()),
                    iterations: iteration,
                });
            }
        };
        let g_new = DVector::from_vec(gradient(f, x_new.as_slice()));
        let s = &x_new - &x;
        // y for the minimisation of -f
        let y = &g - &g_new;
        let sy = s.dot(&y);
        if sy > 1e-300 {
            let rho = 1.0 / sy;
            let eye = DMatrix::<f64>::identity(d, d);
            let a = &eye - &s * y.transpose() * rho;
            let b = &eye - &y * s.transpose() * rho;
            h_inv = &a * &h_inv * &b + &s * s.transpose() * rho;
        }
        if x_new.amax() > DIVERGENCE * (1.0 + scale0) {
            return Err(Error::Optimization(format!("iterates diverged at iteration {iteration}")));
        }
        x = x_new;
        fx = f_new;
        g = g_new;
    }
    Err(Error::Optimization(format!(
        "no convergence in {MAX_ITER} iterations, gradient norm {}",
        sqrt(g.norm_squared())
    )))
}

/// Mode of a target density by quasi-Newton ascent from `start`.
pub fn find_mode<T: TargetDensity + ?Sized>(target: &T, start: &[f64]) -> Result<Mode> {
    if start.len() != target.dim() {
        return Err(Error::argument("start point has the wrong dimension"));
    }
    maximize(&|p: &[f64]| target.log_density(p), start)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::FnTarget;

    #[test]
    fn gaussian_mode_and_curvature() {
        let t = FnTarget::new(2, |x: &[f64]| {
            let (a, b) = (x[0] - 1.0, x[1] + 2.0);
            -0.5 * (2.0 * a * a + 2.0 * 0.6 * a * b + b * b)
        });
        let m = find_mode(&t, &[0.0, 0.0]).unwrap();
        assert!((m.point[0] - 1.0).abs() < 1e-6 && (m.point[1] + 2.0).abs() < 1e-6);
        assert!((m.hessian[(0, 0)] + 2.0).abs() < 1e-5);
        assert!((m.hessian[(0, 1)] + 0.6).abs() < 1e-5);
    }

    #[test]
    fn saddle_has_no_covariance() {
        let t = FnTarget::new(2, |x: &[f64]| -x[0] * x[0] + 0.1 * x[1] * x[1] - x[1] * x[1] * x[1] * x[1]);
        let m = find_mode(&t, &[0.3, 0.0]).unwrap();
        assert_eq!(m.covariance(), Err(Error::Curvature));
    }

    #[test]
    fn unbounded_target_fails() {
        let t = FnTarget::new(1, |x: &[f64]| x[0]);
        let r = find_mode(&t, &[0.0]);
        assert!(matches!(r, Err(Error::Optimization(_))), "{r:?}");
    }
}
