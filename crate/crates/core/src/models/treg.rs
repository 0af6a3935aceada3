//! Linear regression with unit-scale Student-t errors and a flat prior.
//!
//! Writing each error as `N(0, 1 / w_i)` with `w_i ~ Gamma(nu / 2, nu / 2)`
//! gives the augmented form: `w_i | beta ~ Gamma((nu + 1) / 2, (nu + r_i^2) / 2)`
//! and `beta | w ~ N((X'WX)^-1 X'Wy, (X'WX)^-1)`, a joint move of the whole
//! coefficient vector.

use alloc::vec::Vec;

use core::f64::consts::PI;

use libm::{log, sqrt};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::augmentation::{AugmentedModel, EmModel};
use crate::dist::{gamma_ln_pdf, normal_ln_pdf, student_t_ln_pdf, Dist};
use crate::error::{Error, Result};
use crate::kernels::TargetDensity;
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq)]
pub struct TRegressionModel {
    x: DMatrix<f64>,
    y: DVector<f64>,
    nu: f64,
}

/// Relative eigenvalue floor below which `X'X` counts as rank deficient.
const RANK_TOL: f64 = 1e-12;

impl TRegressionModel {
    /// An empty design (`n = 0`) is accepted and gives a flat target.
    pub fn new(x: DMatrix<f64>, y: Vec<f64>, nu: f64) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::argument("design rows must match responses"));
        }
        if x.ncols() == 0 {
            return Err(Error::argument("design needs at least one column"));
        }
        if !(nu > 0.0) {
            return Err(Error::ParameterDomain { name: "nu", value: nu });
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::argument("design and responses must be finite"));
        }
        if x.nrows() > 0 {
            let gram = x.transpose() * &x;
            let eig = gram.symmetric_eigenvalues();
            let max = eig.max();
            if !(eig.min() > RANK_TOL * max) {
                return Err(Error::NumericalRank);
            }
        }
        Ok(TRegressionModel {
            x,
            y: DVector::from_vec(y),
            nu,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], y: Vec<f64>, nu: f64) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::argument("ragged design rows"));
        }
        let x = DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]);
        Self::new(x, y, nu)
    }

    /// Two centred columns with sample correlation exactly `correlation`,
    /// responses `X beta + t_nu` noise.
    pub fn collinear(
        n: usize,
        correlation: f64,
        nu: f64,
        beta: [f64; 2],
        rng: &mut RngStream,
    ) -> Result<Self> {
        if !(correlation.abs() < 1.0) || n < 3 {
            return Err(Error::argument("need |correlation| < 1 and n >= 3"));
        }
        let unit = |v: DVector<f64>| {
            let c = &v - DVector::from_element(v.len(), v.mean());
            let norm = c.norm();
            c / norm
        };
        let a = unit(DVector::from_fn(n, |_, _| rng.standard_normal()));
        let e = DVector::from_fn(n, |_, _| rng.standard_normal());
        let e = unit(&e - &a * a.dot(&e));
        let e = unit(&e - &a * a.dot(&e));
        // scale columns to unit sample variance
        let s = sqrt((n - 1) as f64);
        let x1 = &a * s;
        let x2 = (&a * correlation + &e * sqrt(1.0 - correlation * correlation)) * s;
        let mut x = DMatrix::zeros(n, 2);
        x.set_column(0, &x1);
        x.set_column(1, &x2);
        let chi = Dist::ChiSquare { dof: nu };
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let noise = rng.standard_normal() / sqrt(chi.sample(rng)? / nu);
            y.push(beta[0] * x[(i, 0)] + beta[1] * x[(i, 1)] + noise);
        }
        Self::new(x, y, nu)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn responses(&self) -> &[f64] {
        self.y.as_slice()
    }

    pub fn residuals(&self, beta: &[f64]) -> DVector<f64> {
        &self.y - &self.x * DVector::from_column_slice(beta)
    }

    /// Sample correlation of two design columns.
    pub fn column_correlation(&self, a: usize, b: usize) -> f64 {
        let center = |j: usize| {
            let c = self.x.column(j).into_owned();
            let m = c.mean();
            c.map(|v| v - m)
        };
        let (ca, cb) = (center(a), center(b));
        ca.dot(&cb) / (ca.norm() * cb.norm())
    }

    /// Posterior of `beta` given weights: mean and Cholesky factor of the
    /// precision `X'WX`.
    pub fn weighted_posterior(&self, w: &[f64]) -> Result<(DVector<f64>, Cholesky<f64, Dyn>)> {
        let mut xw = self.x.clone();
        for (i, &wi) in w.iter().enumerate() {
            xw.row_mut(i).scale_mut(wi);
        }
        let precision = self.x.transpose() * &xw;
        let rhs = xw.transpose() * &self.y;
        let chol = Cholesky::new(precision).ok_or(Error::NumericalRank)?;
        let mean = chol.solve(&rhs);
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalRank);
        }
        Ok((mean, chol))
    }

    /// Generalised least squares fixed point used by EM.
    pub fn weighted_least_squares(&self, w: &[f64]) -> Result<Vec<f64>> {
        Ok(self.weighted_posterior(w)?.0.as_slice().to_vec())
    }

    /// `ln p(y, w | beta)` of the augmented model (flat prior on beta).
    pub fn log_joint(&self, beta: &[f64], w: &[f64]) -> f64 {
        let r = self.residuals(beta);
        r.iter()
            .zip(w)
            .map(|(&ri, &wi)| {
                normal_ln_pdf(ri, 0.0, 1.0 / sqrt(wi)) + gamma_ln_pdf(wi, 0.5 * self.nu, 0.5 * self.nu)
            })
            .sum()
    }

    /// Posterior mode by EM from the least-squares start.
    pub fn posterior_mode(&self) -> Result<Vec<f64>> {
        let start = self.weighted_least_squares(&alloc::vec![1.0; self.n()])?;
        Ok(crate::augmentation::em_fit(self, start, 1e-14, 10_000)?.theta)
    }

    pub fn direct_target(&self) -> TRegDirect<'_> {
        TRegDirect(self)
    }

    pub fn augmented(&self) -> TRegAugmented<'_> {
        TRegAugmented(self)
    }
}

/// `beta -> sum_i ln t_nu(y_i - x_i' beta)`.
pub fn treg_direct_target(model: &TRegressionModel) -> TRegDirect<'_> {
    model.direct_target()
}

/// Gamma-mixture augmentation of the t-regression.
pub fn treg_augmented(model: &TRegressionModel) -> TRegAugmented<'_> {
    model.augmented()
}

#[derive(Debug, Clone, Copy)]
pub struct TRegDirect<'a>(pub &'a TRegressionModel);

impl TargetDensity for TRegDirect<'_> {
    fn dim(&self) -> usize {
        self.0.p()
    }

    fn log_density(&self, beta: &[f64]) -> f64 {
        let nu = self.0.nu;
        self.0
            .residuals(beta)
            .iter()
            .map(|&r| student_t_ln_pdf(r, nu))
            .sum()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TRegAugmented<'a>(pub &'a TRegressionModel);

impl AugmentedModel for TRegAugmented<'_> {
    type Theta = Vec<f64>;
    type Latent = Vec<f64>;

    fn sample_theta(&self, w: &Vec<f64>, rng: &mut RngStream) -> Result<Vec<f64>> {
        let (mean, chol) = self.0.weighted_posterior(w)?;
        let z = DVector::from_fn(mean.len(), |_, _| rng.standard_normal());
        let offset = chol
            .l()
            .transpose()
            .solve_upper_triangular(&z)
            .ok_or(Error::NumericalRank)?;
        Ok((mean + offset).as_slice().to_vec())
    }

    fn sample_latent(&self, beta: &Vec<f64>, rng: &mut RngStream) -> Result<Vec<f64>> {
        let nu = self.0.nu;
        let shape = 0.5 * (nu + 1.0);
        self.0
            .residuals(beta)
            .iter()
            .map(|&r| {
                Dist::Gamma {
                    shape,
                    rate: 0.5 * (nu + r * r),
                }
                .sample(rng)
            })
            .collect()
    }

    fn log_theta_density(&self, beta: &Vec<f64>, w: &Vec<f64>) -> Option<f64> {
        let (mean, chol) = self.0.weighted_posterior(w).ok()?;
        let d = DVector::from_column_slice(beta) - mean;
        // (beta - mu)' P (beta - mu) = |L' (beta - mu)|^2
        let q = (chol.l().transpose() * &d).norm_squared();
        let half_log_det: f64 = chol.l().diagonal().iter().map(|v| log(*v)).sum();
        Some(half_log_det - 0.5 * d.len() as f64 * log(2.0 * PI) - 0.5 * q)
    }

    fn conditional_mean(&self, w: &Vec<f64>) -> Option<Vec<f64>> {
        self.0.weighted_least_squares(w).ok()
    }
}

impl EmModel for TRegressionModel {
    type Param = Vec<f64>;
    /// Expected weights `E[w_i | beta, y] = (nu + 1) / (nu + r_i^2)`.
    type Stats = Vec<f64>;

    fn expected_stats(&self, beta: &Vec<f64>) -> Result<Vec<f64>> {
        let nu = self.nu;
        Ok(self
            .residuals(beta)
            .iter()
            .map(|&r| (nu + 1.0) / (nu + r * r))
            .collect())
    }

    fn maximize(&self, w: &Vec<f64>) -> Result<Vec<f64>> {
        self.weighted_least_squares(w)
    }

    fn observed_loglik(&self, beta: &Vec<f64>) -> f64 {
        self.direct_target().log_density(beta)
    }
}
