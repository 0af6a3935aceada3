//! Morris's three-stage normal hierarchy.
//!
//! `y_i | theta_i ~ N(theta_i, V_i)`, `theta_i | A ~ N(0, A)` i.i.d., and
//! `A ~ lambda / chi-square(q)`. With that prior the scale update
//! `A | theta ~ (lambda + |theta|^2) / chi-square(k + q)` is exact.

use alloc::vec::Vec;

use libm::{exp, sqrt};

use crate::augmentation::AugmentedModel;
use crate::dist::{inv_chi_square_ln_pdf, normal_ln_pdf, Dist};
use crate::error::{Error, Result};
use crate::kernels::{Support, TargetDensity};
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq)]
pub struct MorrisModel {
    y: Vec<f64>,
    v: Vec<f64>,
    lambda: f64,
    q: f64,
}

impl MorrisModel {
    /// `k = 0` is accepted so the prior alone can be inspected.
    pub fn new(y: Vec<f64>, v: Vec<f64>, lambda: f64, q: f64) -> Result<Self> {
        if y.len() != v.len() {
            return Err(Error::argument("y and V must have equal length"));
        }
        if let Some(&bad) = v.iter().find(|&&vi| !(vi > 0.0 && vi.is_finite())) {
            return Err(Error::ParameterDomain { name: "V", value: bad });
        }
        if let Some(&bad) = y.iter().find(|yi| !yi.is_finite()) {
            return Err(Error::ParameterDomain { name: "y", value: bad });
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::ParameterDomain { name: "lambda", value: lambda });
        }
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::ParameterDomain { name: "q", value: q });
        }
        Ok(MorrisModel { y, v, lambda, q })
    }

    /// k = 4, y = (1, -1, 2, 0), V = 1, lambda = 1, q = 1.
    pub fn reference() -> Self {
        MorrisModel::new(
            alloc::vec![1.0, -1.0, 2.0, 0.0],
            alloc::vec![1.0; 4],
            1.0,
            1.0,
        )
        .expect("reference dataset is valid")
    }

    pub fn k(&self) -> usize {
        self.y.len()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn prior_dof(&self) -> f64 {
        self.q
    }

    /// `B_i = V_i / (V_i + A)`.
    pub fn shrinkage(&self, a: f64) -> Vec<f64> {
        self.v.iter().map(|&v| v / (v + a)).collect()
    }

    /// `theta_i | A, y ~ N((1 - B_i) y_i, V_i (1 - B_i))`, independently.
    pub fn sample_effects(&self, a: f64, rng: &mut RngStream) -> Result<Vec<f64>> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::ParameterDomain { name: "A", value: a });
        }
        Ok(self
            .y
            .iter()
            .zip(&self.v)
            .map(|(&y, &v)| {
                let keep = 1.0 - v / (v + a);
                keep * y + sqrt(v * keep) * rng.standard_normal()
            })
            .collect())
    }

    fn scale_numerator(&self, theta: &[f64]) -> f64 {
        self.lambda + theta.iter().map(|t| t * t).sum::<f64>()
    }

    fn scale_dof(&self) -> f64 {
        self.k() as f64 + self.q
    }

    /// `A | theta ~ (lambda + |theta|^2) / chi-square(k + q)`.
    pub fn sample_scale(&self, theta: &[f64], rng: &mut RngStream) -> Result<f64> {
        Dist::ScaledInvChiSquare {
            dof: self.scale_dof(),
            numerator: self.scale_numerator(theta),
        }
        .sample(rng)
    }

    /// `E[A | theta, y] = (lambda + |theta|^2) / (k + q - 2)`, when finite.
    pub fn scale_conditional_mean(&self, theta: &[f64]) -> Option<f64> {
        let d = self.scale_dof() - 2.0;
        (d > 0.0).then(|| self.scale_numerator(theta) / d)
    }

    pub fn scale_conditional_ln_pdf(&self, a: f64, theta: &[f64]) -> f64 {
        inv_chi_square_ln_pdf(a, self.scale_dof(), self.scale_numerator(theta))
    }

    pub fn effects_conditional_ln_pdf(&self, theta: &[f64], a: f64) -> f64 {
        self.y
            .iter()
            .zip(&self.v)
            .zip(theta)
            .map(|((&y, &v), &t)| {
                let keep = 1.0 - v / (v + a);
                normal_ln_pdf(t, keep * y, sqrt(v * keep))
            })
            .sum()
    }

    /// Unnormalised `ln p(A | y)` with the effects integrated out.
    pub fn log_marginal_scale(&self, a: f64) -> f64 {
        if !(a > 0.0) {
            return f64::NEG_INFINITY;
        }
        let prior = inv_chi_square_ln_pdf(a, self.q, self.lambda);
        self.y.iter().zip(&self.v).fold(prior, |acc, (&y, &v)| {
            acc + normal_ln_pdf(y, 0.0, sqrt(v + a))
        })
    }

    /// Sampler view with `A` as the parameter and the effects as latent data.
    pub fn scale_view(&self) -> MorrisScale<'_> {
        MorrisScale(self)
    }

    /// Sampler view with the effects as the parameter and `A` as latent data.
    pub fn effects_view(&self) -> MorrisEffects<'_> {
        MorrisEffects(self)
    }

    /// `ln p(log A | y)` as a one-dimensional target.
    pub fn log_scale_target(&self) -> MorrisLogScale<'_> {
        MorrisLogScale(self)
    }
}

/// Both conditionals of the Morris model, with `A` as parameter.
pub fn morris_conditionals(model: &MorrisModel) -> MorrisScale<'_> {
    model.scale_view()
}

#[derive(Debug, Clone, Copy)]
pub struct MorrisScale<'a>(pub &'a MorrisModel);

impl AugmentedModel for MorrisScale<'_> {
    type Theta = f64;
    type Latent = Vec<f64>;

    fn sample_theta(&self, z: &Vec<f64>, rng: &mut RngStream) -> Result<f64> {
        self.0.sample_scale(z, rng)
    }

    fn sample_latent(&self, a: &f64, rng: &mut RngStream) -> Result<Vec<f64>> {
        self.0.sample_effects(*a, rng)
    }

    fn log_theta_density(&self, a: &f64, z: &Vec<f64>) -> Option<f64> {
        Some(self.0.scale_conditional_ln_pdf(*a, z))
    }

    fn conditional_mean(&self, z: &Vec<f64>) -> Option<Vec<f64>> {
        self.0.scale_conditional_mean(z).map(|m| alloc::vec![m])
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MorrisEffects<'a>(pub &'a MorrisModel);

impl AugmentedModel for MorrisEffects<'_> {
    type Theta = Vec<f64>;
    type Latent = f64;

    fn sample_theta(&self, a: &f64, rng: &mut RngStream) -> Result<Vec<f64>> {
        self.0.sample_effects(*a, rng)
    }

    fn sample_latent(&self, theta: &Vec<f64>, rng: &mut RngStream) -> Result<f64> {
        self.0.sample_scale(theta, rng)
    }

    fn log_theta_density(&self, theta: &Vec<f64>, a: &f64) -> Option<f64> {
        Some(self.0.effects_conditional_ln_pdf(theta, *a))
    }

    fn conditional_mean(&self, a: &f64) -> Option<Vec<f64>> {
        Some(
            self.0
                .y
                .iter()
                .zip(self.0.shrinkage(*a))
                .map(|(y, b)| (1.0 - b) * y)
                .collect(),
        )
    }
}

/// `u = ln A`, density `p(e^u | y) e^u`.
#[derive(Debug, Clone, Copy)]
pub struct MorrisLogScale<'a>(pub &'a MorrisModel);

impl TargetDensity for MorrisLogScale<'_> {
    fn dim(&self) -> usize {
        1
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let u = x[0];
        self.0.log_marginal_scale(exp(u)) + u
    }
}

/// Same marginal on the natural scale, `A > 0`.
#[derive(Debug, Clone, Copy)]
pub struct MorrisScaleTarget<'a>(pub &'a MorrisModel);

impl TargetDensity for MorrisScaleTarget<'_> {
    fn dim(&self) -> usize {
        1
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        self.0.log_marginal_scale(x[0])
    }

    fn support(&self, _: usize) -> Support {
        Support::Positive
    }
}
