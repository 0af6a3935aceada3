//! Small models with closed-form or enumerable answers, used as oracles.

use alloc::vec::Vec;

use libm::{exp, lgamma, log, sqrt};

use crate::augmentation::{AugmentedModel, EmModel, TwoComponentGibbs};
use crate::dist::{categorical, normal_ln_pdf};
use crate::error::{Error, Result};
use crate::oracle::{ExactDistribution, ExactKernel, FiniteModel};
use crate::rng::RngStream;

/// A joint table `p(theta, z | y)` over `theta in 0..rows`, `z in 0..cols`.
/// Both conditionals are derived from the one table.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteJoint {
    table: Vec<Vec<f64>>,
}

impl DiscreteJoint {
    pub fn new(table: Vec<Vec<f64>>) -> Result<Self> {
        let cols = table.first().map_or(0, Vec::len);
        if cols == 0 || table.iter().any(|r| r.len() != cols) {
            return Err(Error::argument("joint table must be a nonempty rectangle"));
        }
        if table.iter().flatten().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::argument("joint weights must be finite and nonnegative"));
        }
        let rows_ok = table.iter().all(|r| r.iter().sum::<f64>() > 0.0);
        let cols_ok = (0..cols).all(|j| table.iter().map(|r| r[j]).sum::<f64>() > 0.0);
        if !rows_ok || !cols_ok {
            return Err(Error::argument("every theta and z value needs positive mass"));
        }
        Ok(DiscreteJoint { table })
    }

    /// Two binary variables with an asymmetric, dependent joint.
    pub fn binary_toy() -> Self {
        DiscreteJoint::new(alloc::vec![alloc::vec![0.30, 0.10], alloc::vec![0.15, 0.45]])
            .expect("valid table")
    }

    pub fn n_theta(&self) -> usize {
        self.table.len()
    }

    pub fn n_latent(&self) -> usize {
        self.table[0].len()
    }

    fn column(&self, z: usize) -> Vec<f64> {
        self.table.iter().map(|r| r[z]).collect()
    }

    /// `p(theta | y)` by summing out `z`.
    pub fn theta_marginal(&self) -> ExactDistribution {
        let w: Vec<f64> = self.table.iter().map(|r| r.iter().sum()).collect();
        ExactDistribution::from_weights(&w).expect("validated table")
    }

    pub fn joint_index(&self, theta: usize, z: usize) -> usize {
        theta * self.n_latent() + z
    }
}

impl AugmentedModel for DiscreteJoint {
    type Theta = usize;
    type Latent = usize;

    fn sample_theta(&self, z: &usize, rng: &mut RngStream) -> Result<usize> {
        Ok(categorical(&self.column(*z), rng))
    }

    fn sample_latent(&self, theta: &usize, rng: &mut RngStream) -> Result<usize> {
        Ok(categorical(&self.table[*theta], rng))
    }

    fn log_theta_density(&self, theta: &usize, z: &usize) -> Option<f64> {
        let col = self.column(*z);
        Some(log(col[*theta] / col.iter().sum::<f64>()))
    }

    fn conditional_mean(&self, z: &usize) -> Option<Vec<f64>> {
        let col = self.column(*z);
        let total: f64 = col.iter().sum();
        Some(alloc::vec![col.iter().enumerate().map(|(t, w)| t as f64 * w).sum::<f64>() / total])
    }
}

impl FiniteModel for DiscreteJoint {
    fn n_states(&self) -> Option<usize> {
        Some(self.n_theta() * self.n_latent())
    }

    fn log_weight(&self, state: usize) -> f64 {
        let nz = self.n_latent();
        log(self.table[state / nz][state % nz])
    }
}

impl ExactKernel for TwoComponentGibbs<DiscreteJoint> {
    fn n_states(&self) -> usize {
        self.model.n_theta() * self.model.n_latent()
    }

    /// `P((theta, z) -> (theta', z')) = p(z' | theta) p(theta' | z')`.
    fn transition_row(&self, from: usize) -> Result<Vec<(usize, f64)>> {
        let m = &self.model;
        let theta = from / m.n_latent();
        let row = &m.table[theta];
        let row_total: f64 = row.iter().sum();
        let mut out = Vec::new();
        for (z2, &wz) in row.iter().enumerate() {
            let col = m.column(z2);
            let col_total: f64 = col.iter().sum();
            for (t2, &wt) in col.iter().enumerate() {
                let p = (wz / row_total) * (wt / col_total);
                if p > 0.0 {
                    out.push((m.joint_index(t2, z2), p));
                }
            }
        }
        Ok(out)
    }
}

/// Normal mean with some observations missing.
///
/// Observed `y_1..y_n` and `r` missing values, all `N(theta, 1)`, with a
/// flat prior on `theta`. The missing values are the latent data, so
/// `theta | y, z ~ N((sum y + sum z) / (n + r), 1 / (n + r))` and
/// `z_j | theta ~ N(theta, 1)`. The posterior is `N(mean(y), 1 / n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalMissingData {
    y: Vec<f64>,
    missing: usize,
    sum_y: f64,
}

impl NormalMissingData {
    pub fn new(y: Vec<f64>, missing: usize) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::argument("at least one observed value required"));
        }
        let sum_y = y.iter().sum();
        Ok(NormalMissingData { y, missing, sum_y })
    }

    pub fn total(&self) -> f64 {
        (self.y.len() + self.missing) as f64
    }

    pub fn posterior_mean(&self) -> f64 {
        self.sum_y / self.y.len() as f64
    }

    pub fn posterior_variance(&self) -> f64 {
        1.0 / self.y.len() as f64
    }

    fn complete_mean(&self, z: &[f64]) -> f64 {
        (self.sum_y + z.iter().sum::<f64>()) / self.total()
    }
}

impl AugmentedModel for NormalMissingData {
    type Theta = f64;
    type Latent = Vec<f64>;

    fn sample_theta(&self, z: &Vec<f64>, rng: &mut RngStream) -> Result<f64> {
        Ok(self.complete_mean(z) + rng.standard_normal() / sqrt(self.total()))
    }

    fn sample_latent(&self, theta: &f64, rng: &mut RngStream) -> Result<Vec<f64>> {
        Ok((0..self.missing).map(|_| theta + rng.standard_normal()).collect())
    }

    fn log_theta_density(&self, theta: &f64, z: &Vec<f64>) -> Option<f64> {
        Some(normal_ln_pdf(*theta, self.complete_mean(z), 1.0 / sqrt(self.total())))
    }

    fn conditional_mean(&self, z: &Vec<f64>) -> Option<Vec<f64>> {
        Some(alloc::vec![self.complete_mean(z)])
    }
}

impl EmModel for NormalMissingData {
    type Param = f64;
    /// Expected sum of the missing values.
    type Stats = f64;

    fn expected_stats(&self, theta: &f64) -> Result<f64> {
        Ok(self.missing as f64 * theta)
    }

    fn maximize(&self, expected_sum: &f64) -> Result<f64> {
        Ok((self.sum_y + expected_sum) / self.total())
    }

    fn observed_loglik(&self, theta: &f64) -> f64 {
        self.y.iter().map(|&y| normal_ln_pdf(y, *theta, 1.0)).sum()
    }
}

/// Two latent classes with known binomial response profiles and an unknown
/// class weight. Observation `i` is `successes[i]` out of `trials`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentClassToy {
    successes: Vec<u32>,
    trials: u32,
    profiles: [f64; 2],
}

impl LatentClassToy {
    pub fn new(successes: Vec<u32>, trials: u32, profiles: [f64; 2]) -> Result<Self> {
        if successes.is_empty() || successes.iter().any(|&s| s > trials) {
            return Err(Error::argument("successes must be in 0..=trials"));
        }
        if profiles.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
            return Err(Error::argument("profiles must lie in (0, 1)"));
        }
        Ok(LatentClassToy {
            successes,
            trials,
            profiles,
        })
    }

    /// Twenty observations of five trials each.
    pub fn reference() -> Self {
        LatentClassToy::new(
            alloc::vec![0, 1, 4, 1, 0, 5, 3, 1, 4, 2, 1, 0, 4, 5, 1, 2, 0, 3, 4, 1],
            5,
            [0.2, 0.7],
        )
        .expect("valid toy")
    }

    fn log_binomial(&self, s: u32, p: f64) -> f64 {
        let (n, k) = (self.trials as f64, s as f64);
        lgamma(n + 1.0) - lgamma(k + 1.0) - lgamma(n - k + 1.0) + k * log(p) + (n - k) * log(1.0 - p)
    }

    fn class_likelihoods(&self, s: u32) -> [f64; 2] {
        [
            exp(self.log_binomial(s, self.profiles[0])),
            exp(self.log_binomial(s, self.profiles[1])),
        ]
    }
}

impl EmModel for LatentClassToy {
    /// Weight of class 0.
    type Param = f64;
    /// Expected number of class-0 members.
    type Stats = f64;

    fn expected_stats(&self, weight: &f64) -> Result<f64> {
        Ok(self
            .successes
            .iter()
            .map(|&s| {
                let [l0, l1] = self.class_likelihoods(s);
                weight * l0 / (weight * l0 + (1.0 - weight) * l1)
            })
            .sum())
    }

    fn maximize(&self, expected_members: &f64) -> Result<f64> {
        Ok(expected_members / self.successes.len() as f64)
    }

    fn observed_loglik(&self, weight: &f64) -> f64 {
        self.successes
            .iter()
            .map(|&s| {
                let [l0, l1] = self.class_likelihoods(s);
                log(weight * l0 + (1.0 - weight) * l1)
            })
            .sum()
    }
}
