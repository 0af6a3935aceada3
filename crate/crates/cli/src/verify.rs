//! Quick oracle checks run by `--verify`.

use augment_core::augmentation::{da_iterate, em_fit, two_component_gibbs, Population, SelectionMode};
use augment_core::baselines::gauss_hermite_moments;
use augment_core::models::lattice::{HeatBath, LatticeMetropolis, LatticeModel};
use augment_core::models::morris::MorrisModel;
use augment_core::models::toys::LatentClassToy;
use augment_core::models::treg::TRegressionModel;
use augment_core::oracle::{enumerate_discrete, quadrature_marginal_a, stationary_check, ExactKernel, PositiveGrid};
use augment_core::swendsen_wang::SwendsenWang;
use augment_core::{make_rng, Result};

use crate::config::ExperimentConfig;
use crate::experiments::{run_morris, RunLength};
use crate::runner::{run_seed, summarize, without_wall_clock, Model};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, outcome: Result<(bool, String)>) -> Check {
    match outcome {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn stationarity() -> Result<(bool, String)> {
    let models = [LatticeModel::ising(2, 0.44)?, LatticeModel::potts(2, 3, 0.8)?];
    let mut worst: f64 = 0.0;
    for m in &models {
        let target = enumerate_discrete(m)?;
        let kernels: [&dyn ExactKernel; 3] = [
            &LatticeMetropolis::new(m.clone()),
            &HeatBath::new(m.clone()),
            &SwendsenWang::new(m.clone()),
        ];
        for k in kernels {
            worst = worst.max(stationary_check(k, &target)?.stationarity);
        }
    }
    Ok((worst < 1e-10, format!("max |pi P - pi| = {worst:.2e}")))
}

fn da_equals_gibbs() -> Result<(bool, String)> {
    let m = MorrisModel::reference();
    let view = m.scale_view();
    let (mut r1, mut r2) = (make_rng(7, 0), make_rng(7, 0));
    let mut pop = Population::filled(1.0, 1)?;
    let mut state = (1.0, vec![0.0; m.k()]);
    for i in 0..1000 {
        da_iterate(&view, &mut pop, SelectionMode::WithReplacement, &mut r1)?;
        two_component_gibbs(&view, &mut state, &mut r2)?;
        if pop.values[0].to_bits() != state.0.to_bits() {
            return Ok((false, format!("sequences differ at iteration {i}")));
        }
    }
    Ok((true, String::from("1000 iterations bitwise equal")))
}

fn morris_mean() -> Result<(bool, String)> {
    let m = MorrisModel::reference();
    let oracle = quadrature_marginal_a(&m, PositiveGrid::wide())?;
    let len = RunLength {
        n_burn: 1000,
        n_keep: 20_000,
        thin: 1,
    };
    let run = run_morris(&m, 1990, len, 1)?;
    let a = run.estimate("A").expect("A estimated");
    let z = (a.value - oracle.mean) / a.mc_se;
    Ok((z.abs() < 4.0, format!("DA {:.5} vs oracle {:.5} (z = {z:.2})", a.value, oracle.mean)))
}

fn em_monotone() -> Result<(bool, String)> {
    let lc = em_fit(&LatentClassToy::reference(), 0.5, 1e-12, 10_000)?;
    let t = TRegressionModel::collinear(50, 0.999, 4.0, [1.0, 1.0], &mut make_rng(4, 0))?;
    let tf = em_fit(&t, vec![0.0, 0.0], 1e-12, 10_000)?;
    let mono = |l: &[f64]| l.windows(2).all(|w| w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0));
    Ok((
        mono(&lc.loglik) && mono(&tf.loglik),
        format!("{} and {} iterations", lc.iterations, tf.iterations),
    ))
}

fn gauss_hermite() -> Result<(bool, String)> {
    let m = MorrisModel::reference();
    let oracle = quadrature_marginal_a(&m, PositiveGrid::wide())?;
    let target = m.log_scale_target();
    let fit = gauss_hermite_moments(&target, 20, 20, &[0.0])?;
    let est = fit.expectation(&target, |u| u[0].exp())?;
    let rel = (est - oracle.mean).abs() / oracle.mean;
    Ok((rel < 1e-3, format!("relative error {rel:.2e}")))
}

/// Runs the config's first seed twice at reduced length and compares the
/// summaries without timing.
fn determinism(cfg: &ExperimentConfig, model: &Model) -> Result<(bool, String)> {
    let mut c = cfg.clone();
    c.n_keep = c.n_keep.min(1000);
    c.n_burn = c.n_burn.min(100);
    c.baselines.is_draws = c.baselines.is_draws.min(2000);
    c.baselines.sir_draws = c.baselines.sir_draws.min(5000);
    c.baselines.sir_keep = c.baselines.sir_keep.min(500);
    let seed = c.seeds[0];
    let text = || {
        let r = run_seed(&c, model, seed);
        serde_json::to_string(&summarize(&c, model, &r)).expect("serialisable")
    };
    let (a, b) = (text(), text());
    let same = without_wall_clock(&a).ok() == without_wall_clock(&b).ok();
    Ok((same, format!("seed {seed}, {} kept states", c.n_keep)))
}

pub fn self_check(cfg: &ExperimentConfig, model: &Model) -> Vec<Check> {
    vec![
        check("exact stationarity", stationarity()),
        check("da equals gibbs", da_equals_gibbs()),
        check("morris posterior mean", morris_mean()),
        check("em monotone", em_monotone()),
        check("gauss-hermite", gauss_hermite()),
        check("determinism", determinism(cfg, model)),
    ]
}
