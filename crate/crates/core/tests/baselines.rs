use augment_core::augmentation::{sir_resample, TwoComponentGibbs};
use augment_core::baselines::{
    find_mode, gauss_hermite_moments, importance_sampling_student_t, laplace_moments,
    StudentTProposal,
};
use augment_core::estimators::{ergodic_average, mc_standard_error, ScalarSeries};
use augment_core::kernels::TargetDensity;
use augment_core::models::morris::MorrisModel;
use augment_core::models::treg::TRegressionModel;
use augment_core::oracle::{quadrature_marginal_a, PositiveGrid};
use augment_core::{make_rng, run_chain};

fn oracle_mean() -> f64 {
    quadrature_marginal_a(&MorrisModel::reference(), PositiveGrid::wide()).unwrap().mean
}

#[test]
fn laplace_within_ten_percent_on_morris() {
    let m = MorrisModel::reference();
    let est = laplace_moments(&m.log_scale_target(), |u: &[f64]| u[0].exp(), &[0.0]).unwrap();
    let exact = oracle_mean();
    assert!((est / exact - 1.0).abs() < 0.10, "{est} vs {exact}");
}

#[test]
fn gauss_hermite_degree_twenty_on_morris() {
    let m = MorrisModel::reference();
    let t = m.log_scale_target();
    let fit = gauss_hermite_moments(&t, 20, 20, &[0.0]).unwrap();
    let est = fit.expectation(&t, |u| u[0].exp()).unwrap();
    let exact = oracle_mean();
    assert!((est / exact - 1.0).abs() < 1e-3, "{est} vs {exact}");
}

#[test]
fn gauss_hermite_log_scale_moments_match_quadrature() {
    let m = MorrisModel::reference();
    let t = m.log_scale_target();
    let fit = gauss_hermite_moments(&t, 30, 20, &[0.0]).unwrap();
    let grid = quadrature_marginal_a(&m, PositiveGrid::wide()).unwrap();
    let mean_u = grid.expectation(|a| a.ln());
    let var_u = grid.expectation(|a| (a.ln() - mean_u).powi(2));
    assert!((fit.mean[0] - mean_u).abs() < 1e-4, "{} vs {mean_u}", fit.mean[0]);
    assert!((fit.cov[(0, 0)] / var_u - 1.0).abs() < 1e-3);
}

fn morris_proposal(dof: f64) -> StudentTProposal {
    let m = MorrisModel::reference();
    let mode = find_mode(&m.log_scale_target(), &[0.0]).unwrap();
    StudentTProposal::with_covariance(mode.point.clone(), mode.covariance().unwrap(), dof).unwrap()
}

#[test]
fn importance_sampling_on_morris() {
    let m = MorrisModel::reference();
    let r = importance_sampling_student_t(&m.log_scale_target(), morris_proposal(5.0), 20_000, 5, &mut make_rng(41, 0))
        .unwrap();
    assert!(r.warning.is_none());
    let (est, se) = r.expectation(|u| u[0].exp());
    let exact = oracle_mean();
    assert!((est - exact).abs() < 3.0 * se, "{est} +- {se} vs {exact}");
}

#[test]
fn sir_on_morris() {
    let m = MorrisModel::reference();
    let t = m.log_scale_target();
    let q = morris_proposal(4.0);
    let mut rng = make_rng(42, 0);
    let draws: Vec<Vec<f64>> = (0..50_000).map(|_| q.sample(&mut rng)).collect();
    let lw: Vec<f64> = draws.iter().map(|x| t.log_density(x) - q.ln_pdf(x)).collect();
    let picked = sir_resample(&draws, &lw, 2_000, &mut rng).unwrap();
    let a: Vec<f64> = picked.iter().map(|u| u[0].exp()).collect();
    let mean = a.iter().sum::<f64>() / a.len() as f64;
    let sd = (a.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (a.len() - 1) as f64).sqrt();
    let se = sd / (a.len() as f64).sqrt();
    let exact = oracle_mean();
    assert!((mean - exact).abs() < 3.0 * se, "{mean} +- {se} vs {exact}");
}

#[test]
fn gauss_hermite_matches_long_mcmc_on_two_dimensional_t_regression() {
    let rows: Vec<Vec<f64>> = (0..12).map(|i| vec![1.0, (i as f64 - 6.0) / 3.0]).collect();
    let y = vec![0.2, 1.3, -0.4, 0.9, 1.8, 0.1, 2.4, 1.1, 3.9, 1.6, 2.2, 2.9];
    let m = TRegressionModel::from_rows(&rows, y, 4.0).unwrap();
    let fit = gauss_hermite_moments(&m.direct_target(), 20, 20, &[0.0, 0.0]).unwrap();
    let mode = m.posterior_mode().unwrap();
    let mut kernel = TwoComponentGibbs::new(m.augmented());
    let trace = run_chain(&mut kernel, (mode, vec![1.0; 12]), 1000, 200_000, 1, &mut make_rng(43, 0)).unwrap();
    for j in 0..2 {
        let s = ScalarSeries::new(trace.map(|st| st.0[j]));
        let est = ergodic_average(&s).unwrap();
        let se = mc_standard_error(&s).unwrap();
        assert!((fit.mean[j] - est).abs() < 3.0 * se, "beta_{j}: {} vs {est} (se {se})", fit.mean[j]);
    }
}
