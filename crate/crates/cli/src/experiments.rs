//! Chain runs and method comparisons shared by the command line, the
//! self-check and the acceptance suite.

use std::time::Instant;

use augment_core::augmentation::{
    da_iterate, sir_resample, two_component_gibbs, AugmentedModel, Population, SelectionMode,
    TwoComponentGibbs,
};
use augment_core::baselines::{
    find_mode, gauss_hermite_moments, hessian, importance_sampling_student_t, laplace_moments,
    StudentTProposal,
};
use augment_core::estimators::{
    ergodic_average, iact, mc_standard_error, paired_variance_test, PairedVarianceTest,
    ScalarSeries,
};
use augment_core::kernels::{GibbsSampler, Proposal, ScanOrder, SingleSiteScan, TargetDensity};
use augment_core::models::lattice::{HeatBath, LatticeMetropolis, LatticeModel, Spins};
use augment_core::models::morris::MorrisModel;
use augment_core::models::treg::TRegressionModel;
use augment_core::oracle::{quadrature_marginal_a, PositiveGrid};
use augment_core::swendsen_wang::SwendsenWang;
use augment_core::{make_rng, run_chain, Error, Kernel, Result};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::config::{BaselineConfig, KernelChoice};

/// Summary of one scalar function along a chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub name: String,
    pub value: f64,
    /// Rao-Blackwellised counterpart, where the model provides it.
    pub rao_blackwell: Option<f64>,
    pub mc_se: f64,
    pub iact: f64,
    pub ess: f64,
    pub iact_reliable: bool,
}

pub fn estimate(name: &str, values: Vec<f64>, rao_blackwell: Option<f64>) -> Result<Estimate> {
    let s = ScalarSeries::new(values);
    let value = ergodic_average(&s)?;
    match iact(&s) {
        Ok(t) => Ok(Estimate {
            name: name.to_string(),
            value,
            rao_blackwell,
            mc_se: mc_standard_error(&s)?,
            iact: t.tau,
            ess: t.ess,
            iact_reliable: t.reliable,
        }),
        // a constant series carries no autocorrelation information
        Err(Error::DegenerateSeries) => Ok(Estimate {
            name: name.to_string(),
            value,
            rao_blackwell,
            mc_se: 0.0,
            iact: 1.0,
            ess: s.len() as f64,
            iact_reliable: false,
        }),
        Err(e) => Err(e),
    }
}

/// One kernel's kept states as a table plus its estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    pub kernel: KernelChoice,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub estimates: Vec<Estimate>,
    pub acceptance_rate: Option<f64>,
}

impl ChainOutput {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn estimate(&self, name: &str) -> Option<&Estimate> {
        self.estimates.iter().find(|e| e.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunLength {
    pub n_burn: usize,
    pub n_keep: usize,
    pub thin: usize,
}

/// Data augmentation on the Morris model with `A` as parameter and the
/// effects as latent data. With `m = 1` this is the two-component Gibbs
/// sampler; rows then hold `A` and the effects, otherwise the `m` values
/// of `A` in the population.
pub fn run_morris(model: &MorrisModel, seed: u64, len: RunLength, m: usize) -> Result<ChainOutput> {
    let mut rng = make_rng(seed, KernelChoice::Da.stream());
    let view = model.scale_view();
    let mut pop = Population::filled(1.0, m)?;
    let mode = if m > 1 {
        SelectionMode::WithReplacement
    } else {
        SelectionMode::WithoutReplacement
    };
    for _ in 0..len.n_burn {
        da_iterate(&view, &mut pop, mode, &mut rng)?;
    }
    let k = model.k();
    let header: Vec<String> = if m == 1 {
        std::iter::once("A".to_string())
            .chain((1..=k).map(|i| format!("theta_{i}")))
            .collect()
    } else {
        (1..=m).map(|j| format!("A_{j}")).collect()
    };
    let mut rows = Vec::with_capacity(len.n_keep);
    let mut a_series = Vec::with_capacity(len.n_keep);
    let mut rb_a = 0.0;
    let mut rb_a_defined = true;
    let mut theta_rb = vec![0.0; k];
    for _ in 0..len.n_keep {
        let mut a_before = pop.values[0];
        let mut latents = Vec::new();
        for step in 0..len.thin {
            if step + 1 == len.thin {
                a_before = pop.values[0];
            }
            latents = da_iterate(&view, &mut pop, mode, &mut rng)?;
        }
        let mean_a = pop.values.iter().sum::<f64>() / m as f64;
        a_series.push(mean_a);
        let cond: Option<f64> = latents
            .iter()
            .map(|z| model.scale_conditional_mean(z))
            .sum::<Option<f64>>();
        match cond {
            Some(c) => rb_a += c / m as f64,
            None => rb_a_defined = false,
        }
        if m == 1 {
            let theta = &latents[0];
            let keep = model.shrinkage(a_before);
            for i in 0..k {
                theta_rb[i] += (1.0 - keep[i]) * model.y()[i];
            }
            let mut row = vec![pop.values[0]];
            row.extend_from_slice(theta);
            rows.push(row);
        } else {
            rows.push(pop.values.clone());
        }
    }
    let n = len.n_keep as f64;
    let mut estimates = vec![estimate("A", a_series, rb_a_defined.then(|| rb_a / n))?];
    if m == 1 {
        for i in 0..k {
            let col = rows.iter().map(|r| r[i + 1]).collect();
            estimates.push(estimate(&format!("theta_{}", i + 1), col, Some(theta_rb[i] / n))?);
        }
    }
    Ok(ChainOutput {
        kernel: KernelChoice::Da,
        header,
        rows,
        estimates,
        acceptance_rate: None,
    })
}

/// Component-wise Metropolis step sizes `2.4 / sqrt(-H_ii)` at the mode.
pub fn treg_step_sizes(model: &TRegressionModel, mode: &[f64], scale: f64) -> Result<Vec<f64>> {
    let h = hessian(&model.direct_target(), mode);
    (0..mode.len())
        .map(|i| {
            let curv = -h[(i, i)];
            if curv > 0.0 {
                Ok(scale * 2.4 / curv.sqrt())
            } else {
                Err(Error::Curvature)
            }
        })
        .collect()
}

/// t-regression under the augmented collective move or component-wise
/// random-walk Metropolis on the direct target, both started at the mode.
pub fn run_treg(
    model: &TRegressionModel,
    kernel: KernelChoice,
    seed: u64,
    len: RunLength,
    step_scale: f64,
) -> Result<ChainOutput> {
    let mut rng = make_rng(seed, kernel.stream());
    let mode = model.posterior_mode()?;
    let p = model.p();
    let header: Vec<String> = (1..=p).map(|j| format!("beta_{j}")).collect();
    let (rows, rb, acceptance_rate): (Vec<Vec<f64>>, Option<Vec<f64>>, Option<f64>) = match kernel {
        KernelChoice::Augmented => {
            let mut k = TwoComponentGibbs::new(model.augmented());
            let init = (mode, vec![1.0; model.n()]);
            let trace = run_chain(&mut k, init, len.n_burn, len.n_keep, len.thin, &mut rng)?;
            let aug = model.augmented();
            let mut rb = vec![0.0; p];
            for (_, w) in &trace.states {
                let m = aug.conditional_mean(w).ok_or(Error::NumericalRank)?;
                for j in 0..p {
                    rb[j] += m[j] / trace.len() as f64;
                }
            }
            (trace.states.into_iter().map(|s| s.0).collect(), Some(rb), None)
        }
        KernelChoice::Metropolis => {
            let steps = treg_step_sizes(model, &mode, step_scale)?;
            let mut k = SingleSiteScan::new(model.direct_target(), Proposal::Gaussian { scale: 1.0 }, steps);
            let trace = run_chain(&mut k, mode, len.n_burn, len.n_keep, len.thin, &mut rng)?;
            let rate = k.acceptance().map(|a| a.overall_rate());
            (trace.states, None, rate)
        }
        other => return Err(Error::Argument(format!("kernel {} not available for treg", other.name()))),
    };
    let mut estimates = Vec::with_capacity(p);
    for j in 0..p {
        let col = rows.iter().map(|r| r[j]).collect();
        estimates.push(estimate(&header[j], col, rb.as_ref().map(|r| r[j]))?);
    }
    Ok(ChainOutput {
        kernel,
        header,
        rows,
        estimates,
        acceptance_rate,
    })
}

fn lattice_chain<K: Kernel<State = Spins>>(
    kernel: &mut K,
    model: &LatticeModel,
    init: Spins,
    len: RunLength,
    rng: &mut augment_core::RngStream,
) -> Result<Vec<Vec<f64>>> {
    let trace = run_chain(kernel, init, len.n_burn, len.n_keep, len.thin, rng)?;
    Ok(trace
        .states
        .iter()
        .map(|s| {
            let mag = model.magnetization(s);
            vec![model.energy(s), mag, mag.abs()]
        })
        .collect())
}

/// Lattice chain; one kernel step is one sweep (`L^2` site updates for
/// Metropolis, a systematic heat-bath scan, or one cluster update).
pub fn run_lattice(
    model: &LatticeModel,
    kernel: KernelChoice,
    seed: u64,
    len: RunLength,
    hot_start: bool,
) -> Result<ChainOutput> {
    let mut rng = make_rng(seed, kernel.stream());
    let init = if hot_start {
        model.random_config(&mut rng)
    } else {
        model.uniform_config(0)
    };
    let (rows, acceptance_rate) = match kernel {
        KernelChoice::Metropolis => {
            let mut k = LatticeMetropolis::new(model.clone());
            let rows = lattice_chain(&mut k, model, init, len, &mut rng)?;
            (rows, k.acceptance().map(|a| a.overall_rate()))
        }
        KernelChoice::Gibbs => {
            let mut k = GibbsSampler::new(HeatBath::new(model.clone()), ScanOrder::Systematic);
            (lattice_chain(&mut k, model, init, len, &mut rng)?, None)
        }
        KernelChoice::SwendsenWang => {
            let mut k = SwendsenWang::new(model.clone());
            (lattice_chain(&mut k, model, init, len, &mut rng)?, None)
        }
        other => {
            return Err(Error::Argument(format!("kernel {} not available for lattices", other.name())))
        }
    };
    let col = |j: usize| rows.iter().map(|r| r[j]).collect::<Vec<f64>>();
    let estimates = vec![
        estimate("energy", col(0), None)?,
        estimate("abs_magnetization", col(2), None)?,
    ];
    Ok(ChainOutput {
        kernel,
        header: vec!["energy".into(), "magnetization".into(), "abs_magnetization".into()],
        rows,
        estimates,
        acceptance_rate,
    })
}

/// One row of the method comparison on `E[A | y]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineRow {
    pub method: String,
    pub estimate: f64,
    pub std_error: Option<f64>,
    pub error_vs_oracle: f64,
    pub relative_error: f64,
    pub tolerance: String,
    pub within_tolerance: bool,
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub oracle: f64,
    pub oracle_variance: f64,
    pub rows: Vec<BaselineRow>,
}

pub const LAPLACE_RTOL: f64 = 0.10;
pub const QUADRATURE_RTOL: f64 = 1e-3;
pub const STOCHASTIC_SES: f64 = 3.0;

fn row(method: &str, est: f64, se: Option<f64>, oracle: f64, seconds: f64) -> BaselineRow {
    let err = est - oracle;
    let rel = err / oracle;
    let (tolerance, ok) = match (method, se) {
        ("laplace", _) => ("10% relative".to_string(), rel.abs() < LAPLACE_RTOL),
        ("gauss-hermite", _) => ("1e-3 relative".to_string(), rel.abs() < QUADRATURE_RTOL),
        (_, Some(se)) => ("3 standard errors".to_string(), err.abs() < STOCHASTIC_SES * se),
        (_, None) => ("none".to_string(), false),
    };
    BaselineRow {
        method: method.to_string(),
        estimate: est,
        std_error: se,
        error_vs_oracle: err,
        relative_error: rel,
        tolerance,
        within_tolerance: ok,
        seconds,
    }
}

/// Laplace, adaptive Gauss-Hermite, adaptive Student-t importance
/// sampling, SIR and data augmentation estimates of `E[A | y]`, each
/// against the quadrature oracle. The deterministic methods and the
/// importance proposals work on `u = ln A`.
pub fn compare_baselines(
    model: &MorrisModel,
    cfg: &BaselineConfig,
    seed: u64,
    len: RunLength,
) -> Result<Comparison> {
    let oracle = quadrature_marginal_a(model, PositiveGrid::wide())?;
    let target = model.log_scale_target();
    let exp_u = |u: &[f64]| u[0].exp();
    let mut rows = Vec::new();

    let t = Instant::now();
    let lap = laplace_moments(&target, exp_u, &[0.0])?;
    rows.push(row("laplace", lap, None, oracle.mean, t.elapsed().as_secs_f64()));

    let t = Instant::now();
    let fit = gauss_hermite_moments(&target, cfg.gh_degree, cfg.gh_iters, &[0.0])?;
    let gh = fit.expectation(&target, exp_u)?;
    rows.push(row("gauss-hermite", gh, None, oracle.mean, t.elapsed().as_secs_f64()));

    let mode = find_mode(&target, &[0.0])?;
    let proposal = StudentTProposal::with_covariance(mode.point.clone(), mode.covariance()?, cfg.is_dof)?;

    let t = Instant::now();
    let is = importance_sampling_student_t(
        &target,
        proposal.clone(),
        cfg.is_draws,
        cfg.is_rounds,
        &mut make_rng(seed, 10),
    )?;
    let (is_est, is_se) = is.expectation(exp_u);
    rows.push(row("importance-sampling", is_est, Some(is_se), oracle.mean, t.elapsed().as_secs_f64()));

    let t = Instant::now();
    let mut rng = make_rng(seed, 11);
    let draws: Vec<Vec<f64>> = (0..cfg.sir_draws).map(|_| proposal.sample(&mut rng)).collect();
    let lw: Vec<f64> = draws.iter().map(|x| target.log_density(x) - proposal.ln_pdf(x)).collect();
    let picked = sir_resample(&draws, &lw, cfg.sir_keep, &mut rng)?;
    let a: Vec<f64> = picked.iter().map(|u| u[0].exp()).collect();
    let mean = a.iter().sum::<f64>() / a.len() as f64;
    let sd = (a.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (a.len() - 1) as f64).sqrt();
    rows.push(row("sir", mean, Some(sd / (a.len() as f64).sqrt()), oracle.mean, t.elapsed().as_secs_f64()));

    let t = Instant::now();
    let da = run_morris(model, seed, len, 1)?;
    let est = da.estimate("A").expect("A is always estimated");
    rows.push(row("da-gibbs", est.value, Some(est.mc_se), oracle.mean, t.elapsed().as_secs_f64()));

    Ok(Comparison {
        oracle: oracle.mean,
        oracle_variance: oracle.variance,
        rows,
    })
}

/// Raw and Rao-Blackwellised estimates over independent replicate runs.
#[derive(Debug, Clone, PartialEq)]
pub struct RbComparison {
    pub raw: Vec<f64>,
    pub rao_blackwell: Vec<f64>,
    pub test: PairedVarianceTest,
    /// One-sided p-value for `var(rao_blackwell) < var(raw)`.
    pub p_value: f64,
}

/// Each replicate runs the two-component Gibbs sampler from `init` on
/// stream `rep` of `seed` and averages `g(theta)` (raw) and
/// `E[g(theta) | y, z]` (Rao-Blackwellised) over the kept draws.
pub fn rb_replicates<M: AugmentedModel>(
    model: &M,
    init: (M::Theta, M::Latent),
    g: impl Fn(&M::Theta) -> f64,
    cond: impl Fn(&M::Latent) -> f64,
    replicates: usize,
    len: RunLength,
    seed: u64,
) -> Result<RbComparison>
where
    M::Theta: Clone,
    M::Latent: Clone,
{
    let mut raw = Vec::with_capacity(replicates);
    let mut rb = Vec::with_capacity(replicates);
    for rep in 0..replicates {
        let mut rng = make_rng(seed, rep as u64);
        let mut state = init.clone();
        for _ in 0..len.n_burn {
            two_component_gibbs(model, &mut state, &mut rng)?;
        }
        let (mut sr, mut sb) = (0.0, 0.0);
        for _ in 0..len.n_keep {
            for _ in 0..len.thin {
                two_component_gibbs(model, &mut state, &mut rng)?;
            }
            sr += g(&state.0);
            sb += cond(&state.1);
        }
        raw.push(sr / len.n_keep as f64);
        rb.push(sb / len.n_keep as f64);
    }
    let test = paired_variance_test(&rb, &raw)?;
    let p_value = one_sided_p(test.t, test.dof);
    Ok(RbComparison {
        raw,
        rao_blackwell: rb,
        test,
        p_value,
    })
}

/// `P(T <= t)` for Student-t with `dof` degrees of freedom.
pub fn one_sided_p(t: f64, dof: f64) -> f64 {
    StudentsT::new(0.0, 1.0, dof).map_or(f64::NAN, |d| d.cdf(t))
}

/// Lattice kernels ordered by the IACT of `|magnetization|`, smallest
/// first.
pub fn order_by_iact(runs: &[ChainOutput]) -> Vec<(KernelChoice, f64)> {
    let mut v: Vec<(KernelChoice, f64)> = runs
        .iter()
        .filter_map(|r| r.estimate("abs_magnetization").map(|e| (r.kernel, e.iact)))
        .collect();
    v.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    v
}
