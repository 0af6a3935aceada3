//! Latent-variable samplers: data augmentation, the two-component Gibbs
//! sampler, EM, predictive mixtures and sampling/importance resampling.

use alloc::boxed::Box;
use alloc::vec::Vec;

use libm::{exp, log};

use crate::chain::Kernel;
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// A model with parameter `theta` and latent data `z` whose two
/// conditionals `p(theta | y, z)` and `p(z | theta, y)` can be sampled.
pub trait AugmentedModel {
    type Theta: Clone;
    type Latent: Clone;

    fn sample_theta(&self, z: &Self::Latent, rng: &mut RngStream) -> Result<Self::Theta>;

    fn sample_latent(&self, theta: &Self::Theta, rng: &mut RngStream) -> Result<Self::Latent>;

    /// `ln p(theta | y, z)`, normalised.
    fn log_theta_density(&self, _theta: &Self::Theta, _z: &Self::Latent) -> Option<f64> {
        None
    }

    /// `E[theta | y, z]`, component-wise.
    fn conditional_mean(&self, _z: &Self::Latent) -> Option<Vec<f64>> {
        None
    }
}

impl<M: AugmentedModel + ?Sized> AugmentedModel for &M {
    type Theta = M::Theta;
    type Latent = M::Latent;

    fn sample_theta(&self, z: &Self::Latent, rng: &mut RngStream) -> Result<Self::Theta> {
        (**self).sample_theta(z, rng)
    }
    fn sample_latent(&self, theta: &Self::Theta, rng: &mut RngStream) -> Result<Self::Latent> {
        (**self).sample_latent(theta, rng)
    }
    fn log_theta_density(&self, theta: &Self::Theta, z: &Self::Latent) -> Option<f64> {
        (**self).log_theta_density(theta, z)
    }
    fn conditional_mean(&self, z: &Self::Latent) -> Option<Vec<f64>> {
        (**self).conditional_mean(z)
    }
}

/// The `m` current mixture values.
#[derive(Debug, Clone, PartialEq)]
pub struct Population<T> {
    pub values: Vec<T>,
    pub generation: u64,
}

impl<T: Clone> Population<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::argument("population needs at least one value"));
        }
        Ok(Population {
            values,
            generation: 0,
        })
    }

    pub fn filled(value: T, m: usize) -> Result<Self> {
        Self::new(alloc::vec![value; m])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionMode {
    /// Each slot draws its ancestor uniformly from the current values.
    WithReplacement,
    /// Slot `j` always continues from value `j`: `m` independent chains.
    WithoutReplacement,
}

fn slot_error(slot: usize) -> impl FnOnce(Error) -> Error {
    move |e| Error::Slot {
        slot,
        source: Box::new(e),
    }
}

/// One data-augmentation iteration. For each slot: pick an ancestor,
/// draw `z ~ p(z | theta, y)`, then the new `theta ~ p(theta | y, z)`.
/// Returns the latent draws of this iteration, one per slot.
///
/// With `m == 1` no selection draw is made, so the sequence equals
/// [`two_component_gibbs`] on the same stream.
pub fn da_iterate<M: AugmentedModel + ?Sized>(
    model: &M,
    pop: &mut Population<M::Theta>,
    mode: SelectionMode,
    rng: &mut RngStream,
) -> Result<Vec<M::Latent>> {
    let m = pop.len();
    if m == 0 {
        return Err(Error::argument("empty population"));
    }
    let mut next = Vec::with_capacity(m);
    let mut latents = Vec::with_capacity(m);
    for slot in 0..m {
        let ancestor = match mode {
            SelectionMode::WithReplacement if m > 1 => rng.index(m),
            _ => slot,
        };
        let z = model
            .sample_latent(&pop.values[ancestor], rng)
            .map_err(slot_error(slot))?;
        let theta = model.sample_theta(&z, rng).map_err(slot_error(slot))?;
        next.push(theta);
        latents.push(z);
    }
    pop.values = next;
    pop.generation += 1;
    Ok(latents)
}

/// Without-replacement iteration with one stream per slot.
pub fn da_iterate_per_slot<M: AugmentedModel + ?Sized>(
    model: &M,
    pop: &mut Population<M::Theta>,
    rngs: &mut [RngStream],
) -> Result<Vec<M::Latent>> {
    if rngs.len() != pop.len() {
        return Err(Error::argument("one stream per population slot required"));
    }
    let mut latents = Vec::with_capacity(pop.len());
    for (slot, (theta, rng)) in pop.values.iter_mut().zip(rngs.iter_mut()).enumerate() {
        let z = model.sample_latent(theta, rng).map_err(slot_error(slot))?;
        *theta = model.sample_theta(&z, rng).map_err(slot_error(slot))?;
        latents.push(z);
    }
    pop.generation += 1;
    Ok(latents)
}

/// Update `z ~ p(z | theta, y)`, then `theta ~ p(theta | y, z)`.
pub fn two_component_gibbs<M: AugmentedModel + ?Sized>(
    model: &M,
    state: &mut (M::Theta, M::Latent),
    rng: &mut RngStream,
) -> Result<()> {
    state.1 = model.sample_latent(&state.0, rng)?;
    state.0 = model.sample_theta(&state.1, rng)?;
    Ok(())
}

/// [`two_component_gibbs`] as a chain kernel over `(theta, z)`.
pub struct TwoComponentGibbs<M> {
    pub model: M,
}

impl<M: AugmentedModel> TwoComponentGibbs<M> {
    pub fn new(model: M) -> Self {
        TwoComponentGibbs { model }
    }
}

impl<M: AugmentedModel> Kernel for TwoComponentGibbs<M> {
    type State = (M::Theta, M::Latent);

    fn step(&mut self, state: &mut Self::State, rng: &mut RngStream) -> Result<()> {
        two_component_gibbs(&self.model, state, rng)
    }

    fn id(&self) -> &str {
        "two-component-gibbs"
    }
}

/// `(1/m) sum_j p(theta | y, z_j)`.
pub fn predictive_mixture_density<M: AugmentedModel + ?Sized>(
    model: &M,
    z_samples: &[M::Latent],
    theta: &M::Theta,
) -> Result<f64> {
    if z_samples.is_empty() {
        return Err(Error::argument("no latent samples"));
    }
    let mut total = 0.0;
    for z in z_samples {
        let lp = model
            .log_theta_density(theta, z)
            .ok_or(Error::Capability("the p(theta | y, z) density"))?;
        total += exp(lp);
    }
    Ok(total / z_samples.len() as f64)
}

/// Complete-data structure needed by EM.
pub trait EmModel {
    type Param: Clone;
    type Stats;

    /// E-step: expected complete-data sufficient statistics under `p_theta(z | y)`.
    fn expected_stats(&self, theta: &Self::Param) -> Result<Self::Stats>;

    /// M-step: complete-data maximiser given the statistics.
    fn maximize(&self, stats: &Self::Stats) -> Result<Self::Param>;

    /// Observed-data log likelihood, used to monitor monotonicity.
    fn observed_loglik(&self, theta: &Self::Param) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmFit<P> {
    pub theta: P,
    /// Log likelihood at the start and after every iteration.
    pub loglik: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Absolute slack, scaled by `max(1, |loglik|)`, for the monotonicity check.
pub const EM_MONOTONE_SLACK: f64 = 1e-9;

/// Iterate E and M steps until the relative change of the log likelihood is
/// at most `tol`, or `max_iter` iterations.
pub fn em_fit<M: EmModel + ?Sized>(
    model: &M,
    theta0: M::Param,
    tol: f64,
    max_iter: usize,
) -> Result<EmFit<M::Param>> {
    let mut theta = theta0;
    let mut prev = model.observed_loglik(&theta);
    let mut loglik = alloc::vec![prev];
    for iteration in 1..=max_iter {
        let stats = model.expected_stats(&theta)?;
        theta = model.maximize(&stats)?;
        let ll = model.observed_loglik(&theta);
        let drop = prev - ll;
        if drop > EM_MONOTONE_SLACK * prev.abs().max(1.0) || ll.is_nan() {
            return Err(Error::NonMonotone { iteration, drop });
        }
        loglik.push(ll);
        let scale = if prev == 0.0 { 1.0 } else { prev.abs() };
        if (ll - prev).abs() / scale <= tol {
            return Ok(EmFit {
                theta,
                loglik,
                iterations: iteration,
                converged: true,
            });
        }
        prev = ll;
    }
    Ok(EmFit {
        theta,
        loglik,
        iterations: max_iter,
        converged: false,
    })
}

/// Sampling/importance resampling: choose `m_out` of the draws without
/// replacement, sequentially with probability proportional to the
/// importance ratios among those not yet chosen.
///
/// Implemented as Gumbel-top-k on the log ratios, which has exactly that
/// successive-sampling law and never exponentiates the ratios.
pub fn sir_resample<T: Clone>(
    draws: &[T],
    log_importance_ratios: &[f64],
    m_out: usize,
    rng: &mut RngStream,
) -> Result<Vec<T>> {
    if draws.len() != log_importance_ratios.len() {
        return Err(Error::argument("one importance ratio per draw required"));
    }
    if m_out >= draws.len() {
        return Err(Error::argument("m_out must be below the number of draws"));
    }
    let finite = log_importance_ratios.iter().filter(|w| w.is_finite()).count();
    if finite == 0 {
        return Err(Error::DegenerateWeights);
    }
    if finite < m_out {
        return Err(Error::InsufficientSupport {
            finite,
            requested: m_out,
        });
    }
    if log_importance_ratios.iter().any(|w| w.is_nan() || *w == f64::INFINITY) {
        return Err(Error::argument("importance ratios must be finite or -inf"));
    }
    let mut keyed: Vec<(f64, usize)> = log_importance_ratios
        .iter()
        .enumerate()
        .map(|(i, &lw)| {
            // Gumbel(0, 1) from a uniform on (0, 1]
            let u = 1.0 - rng.uniform();
            (lw - log(-log(u)), i)
        })
        .collect();
    keyed.sort_unstable_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(keyed[..m_out].iter().map(|&(_, i)| draws[i].clone()).collect())
}
