use augment_core::augmentation::{em_fit, EmModel, EM_MONOTONE_SLACK};
use augment_core::kernels::TargetDensity;
use augment_core::models::toys::{LatentClassToy, NormalMissingData};
use augment_core::models::treg::TRegressionModel;
use augment_core::make_rng;

fn assert_monotone(loglik: &[f64]) {
    for w in loglik.windows(2) {
        assert!(w[1] >= w[0] - EM_MONOTONE_SLACK * w[0].abs().max(1.0), "{} -> {}", w[0], w[1]);
    }
}

/// Maximiser of a 1-D function on an interval by repeated grid zooming.
fn grid_argmax(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut best = lo;
    for _ in 0..6 {
        let h = (hi - lo) / 1000.0;
        let mut top = f64::NEG_INFINITY;
        for i in 0..=1000 {
            let x = lo + i as f64 * h;
            let v = f(x);
            if v > top {
                top = v;
                best = x;
            }
        }
        lo = best - 2.0 * h;
        hi = best + 2.0 * h;
    }
    best
}

#[test]
fn latent_class_em_matches_grid_maximum() {
    let model = LatentClassToy::reference();
    let oracle = grid_argmax(|w| model.observed_loglik(&w), 1e-6, 1.0 - 1e-6);
    for start in [0.05, 0.5, 0.95] {
        let fit = em_fit(&model, start, 1e-15, 100_000).unwrap();
        assert!(fit.converged);
        assert_monotone(&fit.loglik);
        assert!((fit.theta - oracle).abs() < 1e-6, "start {start}: {} vs {oracle}", fit.theta);
    }
}

/// Iteratively reweighted least squares with the 2 x 2 normal equations
/// solved by Cramer's rule.
fn irls_two_columns(x: &[[f64; 2]], y: &[f64], nu: f64) -> [f64; 2] {
    let mut beta = [0.0, 0.0];
    for _ in 0..100_000 {
        let (mut a, mut b, mut c, mut r0, mut r1) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (xi, &yi) in x.iter().zip(y) {
            let r = yi - xi[0] * beta[0] - xi[1] * beta[1];
            let w = (nu + 1.0) / (nu + r * r);
            a += w * xi[0] * xi[0];
            b += w * xi[0] * xi[1];
            c += w * xi[1] * xi[1];
            r0 += w * xi[0] * yi;
            r1 += w * xi[1] * yi;
        }
        let det = a * c - b * b;
        let next = [(c * r0 - b * r1) / det, (a * r1 - b * r0) / det];
        let done = (next[0] - beta[0]).abs() + (next[1] - beta[1]).abs() < 1e-14;
        beta = next;
        if done {
            break;
        }
    }
    beta
}

#[test]
fn t_regression_em_matches_irls() {
    let mut rng = make_rng(12, 0);
    let rows: Vec<[f64; 2]> = (0..40).map(|i| [1.0, i as f64 / 10.0]).collect();
    let y: Vec<f64> = rows
        .iter()
        .map(|r| 2.0 - 0.5 * r[1] + 2.0 * rng.standard_normal() * if rng.uniform() < 0.1 { 5.0 } else { 1.0 })
        .collect();
    let model = TRegressionModel::from_rows(
        &rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>(),
        y.clone(),
        3.0,
    )
    .unwrap();
    let oracle = irls_two_columns(&rows, &y, 3.0);
    for start in [vec![0.0, 0.0], vec![10.0, -3.0]] {
        let fit = em_fit(&model, start, 1e-15, 100_000).unwrap();
        assert_monotone(&fit.loglik);
        for j in 0..2 {
            assert!((fit.theta[j] - oracle[j]).abs() < 1e-6, "{:?} vs {oracle:?}", fit.theta);
        }
    }
    // the EM fixed point is a stationary point of the direct log density
    let mode = model.posterior_mode().unwrap();
    let t = model.direct_target();
    for j in 0..2 {
        let mut up = mode.clone();
        let mut down = mode.clone();
        up[j] += 1e-6;
        down[j] -= 1e-6;
        assert!(((t.log_density(&up) - t.log_density(&down)) / 2e-6).abs() < 1e-5);
    }
}

#[test]
fn normal_missing_data_em_is_monotone_from_far_starts() {
    let model = NormalMissingData::new(vec![1.0, 2.5, -0.5], 10).unwrap();
    for start in [-100.0, 0.0, 50.0] {
        let fit = em_fit(&model, start, 1e-15, 100_000).unwrap();
        assert_monotone(&fit.loglik);
        assert!((fit.theta - model.posterior_mean()).abs() < 1e-6);
    }
}
