//! Adaptive importance sampling with a multivariate Student-t proposal.

use alloc::vec::Vec;

use core::f64::consts::PI;

use libm::{exp, lgamma, log, log1p, sqrt};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::kernels::TargetDensity;
use crate::rng::RngStream;

/// Weight ESS below which the result carries a warning.
pub const MIN_WEIGHT_ESS: f64 = 10.0;

/// Multivariate t with location `mu`, scatter `S` and `dof` degrees of
/// freedom; its covariance is `S dof / (dof - 2)`.
#[derive(Debug, Clone)]
pub struct StudentTProposal {
    location: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    dof: f64,
}

impl StudentTProposal {
    pub fn new(location: Vec<f64>, scatter: DMatrix<f64>, dof: f64) -> Result<Self> {
        if !(dof > 2.0 && dof.is_finite()) {
            return Err(Error::ParameterDomain { name: "dof", value: dof });
        }
        if scatter.nrows() != location.len() || scatter.ncols() != location.len() {
            return Err(Error::argument("scatter must be square and match the location"));
        }
        let chol = Cholesky::new(scatter).ok_or(Error::NumericalRank)?;
        Ok(StudentTProposal {
            location: DVector::from_vec(location),
            chol,
            dof,
        })
    }

    /// Proposal whose covariance equals `cov`.
    pub fn with_covariance(location: Vec<f64>, cov: DMatrix<f64>, dof: f64) -> Result<Self> {
        let scale = (dof - 2.0) / dof;
        Self::new(location, cov * scale, dof)
    }

    pub fn dim(&self) -> usize {
        self.location.len()
    }

    pub fn dof(&self) -> f64 {
        self.dof
    }

    pub fn location(&self) -> &[f64] {
        self.location.as_slice()
    }

    pub fn sample(&self, rng: &mut RngStream) -> Vec<f64> {
        let d = self.dim();
        let z = DVector::from_fn(d, |_, _| rng.standard_normal());
        let chi = Dist::ChiSquare { dof: self.dof }.sample_unchecked(rng);
        let x = &self.location + self.chol.l() * z / sqrt(chi / self.dof);
        x.as_slice().to_vec()
    }

    pub fn ln_pdf(&self, x: &[f64]) -> f64 {
        let d = self.dim() as f64;
        let nu = self.dof;
        let diff = DVector::from_column_slice(x) - &self.location;
        let u = self
            .chol
            .l()
            .solve_lower_triangular(&diff)
            .expect("factor is nonsingular");
        let log_det: f64 = self.chol.l().diagonal().iter().map(|v| log(*v)).sum();
        lgamma(0.5 * (nu + d)) - lgamma(0.5 * nu) - 0.5 * d * log(nu * PI) - log_det
            - 0.5 * (nu + d) * log1p(u.norm_squared() / nu)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IsWarning {
    /// Weight ESS after the final round was below [`MIN_WEIGHT_ESS`].
    DegenerateImportance { ess: f64 },
}

#[derive(Debug, Clone)]
pub struct IsResult {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    /// `(sum w)^2 / sum w^2` of the final round.
    pub ess: f64,
    /// Weight ESS of every round.
    pub round_ess: Vec<f64>,
    pub warning: Option<IsWarning>,
    /// Final-round draws and their normalised weights.
    pub draws: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Log importance ratios of the final round.
    pub log_ratios: Vec<f64>,
}

impl IsResult {
    /// Self-normalised estimate of `E[g]` with its delta-method standard
    /// error `sqrt(sum w_i^2 (g_i - estimate)^2)`.
    pub fn expectation(&self, g: impl Fn(&[f64]) -> f64) -> (f64, f64) {
        let vals: Vec<f64> = self.draws.iter().map(|x| g(x)).collect();
        let est: f64 = vals.iter().zip(&self.weights).map(|(v, w)| v * w).sum();
        let var: f64 = vals
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| w * w * (v - est) * (v - est))
            .sum();
        (est, sqrt(var))
    }
}

/// Runs `adapt_rounds` rounds of `n_draws` each. After every round the
/// proposal location becomes the weighted mean and the scatter becomes
/// the weighted covariance times `(dof - 2) / dof`.
pub fn importance_sampling_student_t<T: TargetDensity + ?Sized>(
    target: &T,
    initial: StudentTProposal,
    n_draws: usize,
    adapt_rounds: usize,
    rng: &mut RngStream,
) -> Result<IsResult> {
    if initial.dim() != target.dim() {
        return Err(Error::argument("proposal and target dimensions differ"));
    }
    if n_draws < 2 || adapt_rounds == 0 {
        return Err(Error::argument("need n_draws >= 2 and adapt_rounds >= 1"));
    }
    let mut proposal = initial;
    let mut round_ess = Vec::with_capacity(adapt_rounds);
    for round in 1..=adapt_rounds {
        let draws: Vec<Vec<f64>> = (0..n_draws).map(|_| proposal.sample(rng)).collect();
        let log_ratios: Vec<f64> = draws
            .iter()
            .map(|x| target.log_density(x) - proposal.ln_pdf(x))
            .collect();
        if log_ratios.iter().any(|l| l.is_nan() || *l == f64::INFINITY) {
            return Err(Error::argument("target log density must not be NaN or +inf"));
        }
        let max = log_ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(Error::DegenerateWeights);
        }
        let raw: Vec<f64> = log_ratios.iter().map(|l| exp(l - max)).collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let ess = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        round_ess.push(ess);

        let d = proposal.dim();
        let mut mean = DVector::zeros(d);
        for (x, &w) in draws.iter().zip(&weights) {
            mean.axpy(w, &DVector::from_column_slice(x), 1.0);
        }
        let mut cov = DMatrix::zeros(d, d);
        for (x, &w) in draws.iter().zip(&weights) {
            let c = DVector::from_column_slice(x) - &mean;
            cov.ger(w, &c, &c, 1.0);
        }
        if round == adapt_rounds {
            let warning = (ess < MIN_WEIGHT_ESS).then_some(IsWarning::DegenerateImportance { ess });
            return Ok(IsResult {
                mean,
                cov,
                ess,
                round_ess,
                warning,
                draws,
                weights,
                log_ratios,
            });
        }
        let dof = proposal.dof();
        proposal = StudentTProposal::with_covariance(mean.as_slice().to_vec(), cov, dof)?;
    }
    unreachable!("loop returns on the last round")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::FnTarget;
    use crate::rng::make_rng;

    #[test]
    fn t_density_integrates_to_one() {
        let p = StudentTProposal::new(alloc::vec![0.5], DMatrix::from_element(1, 1, 2.0), 5.0).unwrap();
        let h = 0.01;
        let total: f64 = (0..200_000).map(|i| exp(p.ln_pdf(&[-1000.0 + (i as f64 + 0.5) * h])) * h).sum();
        assert!((total - 1.0).abs() < 1e-6, "{total}");
    }

    #[test]
    fn matching_target_gives_equal_weights() {
        let p = StudentTProposal::new(alloc::vec![1.0, -1.0], DMatrix::identity(2, 2), 6.0).unwrap();
        let q = p.clone();
        let t = FnTarget::new(2, move |x: &[f64]| q.ln_pdf(x));
        let r = importance_sampling_student_t(&t, p, 1000, 1, &mut make_rng(1, 0)).unwrap();
        assert!((r.ess - 1000.0).abs() < 1e-6);
        assert!(r.weights.iter().all(|w| (w - 1e-3).abs() < 1e-12));
        assert!(r.warning.is_none());
    }

    #[test]
    fn normal_mean_with_t5_proposal() {
        let t = FnTarget::new(1, |x: &[f64]| -0.5 * x[0] * x[0]);
        let p = StudentTProposal::new(alloc::vec![0.0], DMatrix::identity(1, 1), 5.0).unwrap();
        let r = importance_sampling_student_t(&t, p, 100_000, 1, &mut make_rng(2, 0)).unwrap();
        let (m, se) = r.expectation(|x| x[0]);
        assert!(m.abs() < 3.0 * se, "{m} +- {se}");
    }

    #[test]
    fn adaptation_moves_toward_target() {
        let t = FnTarget::new(1, |x: &[f64]| -0.5 * (x[0] - 4.0) * (x[0] - 4.0) / 0.25);
        let p = StudentTProposal::new(alloc::vec![0.0], DMatrix::from_element(1, 1, 9.0), 5.0).unwrap();
        let r = importance_sampling_student_t(&t, p, 20_000, 4, &mut make_rng(3, 0)).unwrap();
        assert!(r.round_ess[3] > r.round_ess[0]);
        assert!((r.mean[0] - 4.0).abs() < 0.02);
        assert!((r.cov[(0, 0)] - 0.25).abs() < 0.02);
    }

    #[test]
    fn tiny_overlap_warns() {
        let t = FnTarget::new(1, |x: &[f64]| -0.5 * (x[0] - 30.0) * (x[0] - 30.0) / 1e-4);
        let p = StudentTProposal::new(alloc::vec![0.0], DMatrix::identity(1, 1), 3.0).unwrap();
        let r = importance_sampling_student_t(&t, p, 200, 1, &mut make_rng(4, 0)).unwrap();
        assert!(matches!(r.warning, Some(IsWarning::DegenerateImportance { .. })));
    }

    #[test]
    fn dof_must_exceed_two() {
        assert!(StudentTProposal::new(alloc::vec![0.0], DMatrix::identity(1, 1), 2.0).is_err());
    }
}
