//! Metropolis moves, Gibbs scans and simulated annealing.
//!
//! All Metropolis moves here use symmetric proposals, so the acceptance test
//! is `ln u < ln pi(proposed) - ln pi(current)`.

use alloc::string::String;
use alloc::vec::Vec;

use libm::{log, pow, sqrt};

use crate::chain::{AcceptanceStats, Kernel};
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Domain of one coordinate of a target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    Real,
    Positive,
    Interval(f64, f64),
}

impl Support {
    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Support::Real => x.is_finite(),
            Support::Positive => x > 0.0 && x.is_finite(),
            Support::Interval(a, b) => a <= x && x <= b,
        }
    }
}

/// An unnormalised log density over `R^dim`.
pub trait TargetDensity {
    fn dim(&self) -> usize;

    /// Finite on the support, `-inf` outside.
    fn log_density(&self, x: &[f64]) -> f64;

    fn support(&self, _component: usize) -> Support {
        Support::Real
    }

    fn in_support(&self, x: &[f64]) -> bool {
        x.iter().enumerate().all(|(i, &v)| self.support(i).contains(v))
    }
}

impl<T: TargetDensity + ?Sized> TargetDensity for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn log_density(&self, x: &[f64]) -> f64 {
        (**self).log_density(x)
    }
    fn support(&self, component: usize) -> Support {
        (**self).support(component)
    }
}

/// Target given by a closure, with unrestricted support.
pub struct FnTarget<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64> FnTarget<F> {
    pub fn new(dim: usize, f: F) -> Self {
        FnTarget { dim, f }
    }
}

impl<F: Fn(&[f64]) -> f64> TargetDensity for FnTarget<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn log_density(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// Symmetric random-walk proposal families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Proposal {
    /// `x + scale * N(0, I)`.
    Gaussian { scale: f64 },
    /// Uniform on the ball of the given radius around `x`.
    UniformBall { radius: f64 },
}

impl Proposal {
    pub fn scale(&self) -> f64 {
        match *self {
            Proposal::Gaussian { scale } => scale,
            Proposal::UniformBall { radius } => radius,
        }
    }

    pub fn with_scale(&self, s: f64) -> Proposal {
        match self {
            Proposal::Gaussian { .. } => Proposal::Gaussian { scale: s },
            Proposal::UniformBall { .. } => Proposal::UniformBall { radius: s },
        }
    }

    /// Add a proposal offset to `x` in place.
    fn perturb(&self, x: &mut [f64], rng: &mut RngStream) {
        match *self {
            Proposal::Gaussian { scale } => {
                for v in x.iter_mut() {
                    *v += scale * rng.standard_normal();
                }
            }
            Proposal::UniformBall { radius } => {
                let d = x.len();
                if d == 1 {
                    x[0] += radius * (2.0 * rng.uniform() - 1.0);
                    return;
                }
                let mut dir: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
                let norm = sqrt(dir.iter().map(|v| v * v).sum());
                let r = radius * pow(rng.uniform(), 1.0 / d as f64);
                for (v, u) in x.iter_mut().zip(dir.iter_mut()) {
                    *v += r * *u / norm;
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveOutcome {
    Accepted,
    Rejected,
    OutOfSupport,
}

/// `min(1, exp(log_proposed - log_current))`.
pub fn acceptance_probability(log_current: f64, log_proposed: f64) -> f64 {
    let d = log_proposed - log_current;
    if d >= 0.0 {
        1.0
    } else if d.is_nan() {
        0.0
    } else {
        libm::exp(d)
    }
}

/// Metropolis accept/reject for a log target ratio. Consumes one uniform
/// only when the ratio is below one.
pub fn metropolis_accept(log_ratio: f64, rng: &mut RngStream) -> bool {
    if log_ratio >= 0.0 {
        true
    } else if log_ratio.is_nan() {
        false
    } else {
        log(rng.uniform()) < log_ratio
    }
}

/// One Metropolis move on an arbitrary state type with a symmetric proposal.
pub fn metropolis_step_with<S, F, P>(
    log_target: F,
    state: S,
    propose: P,
    rng: &mut RngStream,
) -> (S, MoveOutcome)
where
    F: Fn(&S) -> f64,
    P: FnOnce(&S, &mut RngStream) -> S,
{
    let candidate = propose(&state, rng);
    let lp = log_target(&candidate);
    if lp == f64::NEG_INFINITY {
        return (state, MoveOutcome::OutOfSupport);
    }
    if metropolis_accept(lp - log_target(&state), rng) {
        (candidate, MoveOutcome::Accepted)
    } else {
        (state, MoveOutcome::Rejected)
    }
}

/// One full-vector Metropolis move on a continuous target.
pub fn metropolis_step<T: TargetDensity + ?Sized>(
    target: &T,
    state: &mut [f64],
    proposal: &Proposal,
    rng: &mut RngStream,
) -> MoveOutcome {
    let current = target.log_density(state);
    let mut candidate: Vec<f64> = state.to_vec();
    proposal.perturb(&mut candidate, rng);
    let outcome = try_move(target, &candidate, current, rng).0;
    if outcome == MoveOutcome::Accepted {
        state.copy_from_slice(&candidate);
    }
    outcome
}

fn try_move<T: TargetDensity + ?Sized>(
    target: &T,
    candidate: &[f64],
    current: f64,
    rng: &mut RngStream,
) -> (MoveOutcome, f64) {
    if !target.in_support(candidate) {
        return (MoveOutcome::OutOfSupport, current);
    }
    let lp = target.log_density(candidate);
    if lp == f64::NEG_INFINITY {
        return (MoveOutcome::OutOfSupport, current);
    }
    if metropolis_accept(lp - current, rng) {
        (MoveOutcome::Accepted, lp)
    } else {
        (MoveOutcome::Rejected, current)
    }
}

/// One systematic sweep of component-wise random-walk Metropolis moves.
/// `proposal` fixes the family; `step_sizes[i]` its scale for component `i`.
pub fn single_site_scan<T: TargetDensity + ?Sized>(
    target: &T,
    state: &mut [f64],
    step_sizes: &[f64],
    proposal: &Proposal,
    stats: &mut AcceptanceStats,
    rng: &mut RngStream,
) -> Result<()> {
    if state.is_empty() {
        return Err(Error::argument("single-site scan needs dimension >= 1"));
    }
    if step_sizes.len() != state.len() {
        return Err(Error::argument("one step size per component required"));
    }
    let mut current = target.log_density(state);
    let mut one = [0.0];
    for i in 0..state.len() {
        let old = state[i];
        one[0] = old;
        proposal.with_scale(step_sizes[i]).perturb(&mut one, rng);
        state[i] = one[0];
        let (outcome, lp) = try_move(target, state, current, rng);
        if outcome != MoveOutcome::Accepted {
            state[i] = old;
        }
        current = lp;
        stats.record(i, outcome);
    }
    Ok(())
}

/// Full-vector random-walk Metropolis as a chain kernel.
pub struct RandomWalkMetropolis<T> {
    pub target: T,
    pub proposal: Proposal,
    stats: AcceptanceStats,
}

impl<T: TargetDensity> RandomWalkMetropolis<T> {
    pub fn new(target: T, proposal: Proposal) -> Self {
        RandomWalkMetropolis {
            target,
            proposal,
            stats: AcceptanceStats::new(1),
        }
    }
}

impl<T: TargetDensity> Kernel for RandomWalkMetropolis<T> {
    type State = Vec<f64>;

    fn step(&mut self, state: &mut Vec<f64>, rng: &mut RngStream) -> Result<()> {
        let outcome = metropolis_step(&self.target, state, &self.proposal, rng);
        self.stats.record(0, outcome);
        Ok(())
    }

    fn id(&self) -> &str {
        "metropolis"
    }

    fn acceptance(&self) -> Option<&AcceptanceStats> {
        Some(&self.stats)
    }
}

/// Component-wise random-walk Metropolis as a chain kernel; one step is one sweep.
pub struct SingleSiteScan<T> {
    pub target: T,
    pub proposal: Proposal,
    pub step_sizes: Vec<f64>,
    stats: AcceptanceStats,
}

impl<T: TargetDensity> SingleSiteScan<T> {
    pub fn new(target: T, proposal: Proposal, step_sizes: Vec<f64>) -> Self {
        let d = step_sizes.len();
        SingleSiteScan {
            target,
            proposal,
            step_sizes,
            stats: AcceptanceStats::new(d),
        }
    }
}

impl<T: TargetDensity> Kernel for SingleSiteScan<T> {
    type State = Vec<f64>;

    fn step(&mut self, state: &mut Vec<f64>, rng: &mut RngStream) -> Result<()> {
        single_site_scan(
            &self.target,
            state,
            &self.step_sizes,
            &self.proposal,
            &mut self.stats,
            rng,
        )
    }

    fn id(&self) -> &str {
        "single-site-metropolis"
    }

    fn acceptance(&self) -> Option<&AcceptanceStats> {
        Some(&self.stats)
    }
}

/// Samplers for each component given all the others.
pub trait FullConditionalSet {
    type State;

    fn components(&self) -> usize;

    /// Redraw component `i` of `state`; other components must not change.
    fn sample_component(&self, i: usize, state: &mut Self::State, rng: &mut RngStream)
        -> Result<()>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScanOrder {
    #[default]
    Systematic,
    RandomPermutation,
}

/// One Gibbs sweep over all components.
pub fn gibbs_scan<C: FullConditionalSet + ?Sized>(
    conditionals: &C,
    state: &mut C::State,
    order: ScanOrder,
    rng: &mut RngStream,
) -> Result<()> {
    let n = conditionals.components();
    let visit = |i: usize, state: &mut C::State, rng: &mut RngStream| {
        conditionals
            .sample_component(i, state, rng)
            .map_err(|e| Error::Component {
                component: i,
                source: alloc::boxed::Box::new(e),
            })
    };
    match order {
        ScanOrder::Systematic => {
            for i in 0..n {
                visit(i, state, rng)?;
            }
        }
        ScanOrder::RandomPermutation => {
            for i in rng.permutation(n) {
                visit(i, state, rng)?;
            }
        }
    }
    Ok(())
}

/// A Gibbs sampler as a chain kernel; one step is one sweep.
pub struct GibbsSampler<C> {
    pub conditionals: C,
    pub order: ScanOrder,
    label: String,
}

impl<C: FullConditionalSet> GibbsSampler<C> {
    pub fn new(conditionals: C, order: ScanOrder) -> Self {
        GibbsSampler {
            conditionals,
            order,
            label: String::from("gibbs"),
        }
    }
}

impl<C> Kernel for GibbsSampler<C>
where
    C: FullConditionalSet,
    C::State: Clone,
{
    type State = C::State;

    fn step(&mut self, state: &mut C::State, rng: &mut RngStream) -> Result<()> {
        gibbs_scan(&self.conditionals, state, self.order, rng)
    }

    fn id(&self) -> &str {
        &self.label
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealResult<S> {
    /// Lowest-energy state visited.
    pub best: S,
    pub best_energy: f64,
    /// Energy after each scheduled step.
    pub energies: Vec<f64>,
}

/// `n` temperatures decreasing geometrically from `start` to `end`.
pub fn geometric_schedule(start: f64, end: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return alloc::vec![start];
    }
    let ratio = pow(end / start, 1.0 / (n - 1) as f64);
    (0..n).map(|i| start * pow(ratio, i as f64)).collect()
}

/// Simulated annealing: one Metropolis move per scheduled temperature on
/// the tempered target `exp(-energy / T)`. Returns the best state visited.
pub fn anneal<S, E, P>(
    energy: E,
    mut propose: P,
    schedule: &[f64],
    init: S,
    rng: &mut RngStream,
) -> Result<AnnealResult<S>>
where
    S: Clone,
    E: Fn(&S) -> f64,
    P: FnMut(&S, &mut RngStream) -> S,
{
    if schedule.is_empty() {
        return Err(Error::argument("annealing schedule is empty"));
    }
    if schedule.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::argument("temperatures must be positive"));
    }
    if schedule.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::argument("schedule must be non-increasing"));
    }
    let mut state = init;
    let mut current_energy = energy(&state);
    let mut best: Option<(S, f64)> = None;
    let mut energies = Vec::with_capacity(schedule.len());
    for &t in schedule {
        let candidate = propose(&state, rng);
        let e_new = energy(&candidate);
        if e_new.is_finite() && metropolis_accept(-(e_new - current_energy) / t, rng) {
            state = candidate;
            current_energy = e_new;
        }
        energies.push(current_energy);
        if best.as_ref().is_none_or(|(_, e)| current_energy < *e) {
            best = Some((state.clone(), current_energy));
        }
    }
    let (best, best_energy) = best.expect("schedule is nonempty");
    Ok(AnnealResult {
        best,
        best_energy,
        energies,
    })
}
