use augment_core::augmentation::{
    da_iterate, predictive_mixture_density, sir_resample, two_component_gibbs, AugmentedModel,
    Population, SelectionMode,
};
use augment_core::models::morris::MorrisModel;
use augment_core::models::toys::{DiscreteJoint, NormalMissingData};
use augment_core::models::treg::TRegressionModel;
use augment_core::make_rng;

/// Runs both samplers on copies of one stream and compares every state bit
/// for bit, as well as the final stream position.
fn assert_identical<M>(model: &M, theta0: M::Theta, z0: M::Latent, iterations: usize)
where
    M: AugmentedModel,
    M::Theta: Clone + PartialEq + std::fmt::Debug,
    M::Latent: Clone + PartialEq + std::fmt::Debug,
{
    for mode in [SelectionMode::WithReplacement, SelectionMode::WithoutReplacement] {
        let mut rng_da = make_rng(77, 3);
        let mut rng_gibbs = make_rng(77, 3);
        let mut pop = Population::new(vec![theta0.clone()]).unwrap();
        let mut state = (theta0.clone(), z0.clone());
        for _ in 0..iterations {
            let z = da_iterate(model, &mut pop, mode, &mut rng_da).unwrap();
            two_component_gibbs(model, &mut state, &mut rng_gibbs).unwrap();
            assert_eq!(pop.values[0], state.0);
            assert_eq!(z[0], state.1);
        }
        assert_eq!(rng_da.word_pos(), rng_gibbs.word_pos());
    }
}

#[test]
fn da_with_one_slot_is_two_component_gibbs() {
    let morris = MorrisModel::reference();
    assert_identical(&morris.scale_view(), 1.0, vec![0.0; 4], 10_000);
    assert_identical(&morris.effects_view(), vec![0.0; 4], 1.0, 10_000);
    assert_identical(&DiscreteJoint::binary_toy(), 0, 0, 10_000);
    let normal = NormalMissingData::new(vec![0.3, 1.1, -0.4, 2.0], 3).unwrap();
    assert_identical(&normal, 0.0, vec![0.0; 3], 10_000);
    let treg = TRegressionModel::collinear(50, 0.999, 4.0, [1.0, 1.0], &mut make_rng(4, 0)).unwrap();
    assert_identical(&treg.augmented(), vec![0.0, 0.0], vec![1.0; 50], 10_000);
}

#[test]
fn population_mixture_approaches_posterior() {
    // DA on the discrete toy: slot frequencies approach p(theta | y)
    let joint = DiscreteJoint::binary_toy();
    let exact = joint.theta_marginal();
    let mut pop = Population::filled(0usize, 2000).unwrap();
    let mut rng = make_rng(5, 0);
    for _ in 0..30 {
        da_iterate(&joint, &mut pop, SelectionMode::WithReplacement, &mut rng).unwrap();
    }
    let ones = pop.values.iter().filter(|&&t| t == 1).count() as f64 / 2000.0;
    let p = exact.probs()[1];
    assert!((ones - p).abs() < 4.0 * (p * (1.0 - p) / 2000.0f64).sqrt(), "{ones} vs {p}");
}

#[test]
fn predictive_mixture_recovers_normal_posterior_density() {
    let model = NormalMissingData::new(vec![0.3, 1.1, -0.4, 2.0], 4).unwrap();
    let mut rng = make_rng(6, 0);
    let mut state = (0.0, vec![0.0; 4]);
    let mut zs = Vec::new();
    for i in 0..20_500 {
        two_component_gibbs(&model, &mut state, &mut rng).unwrap();
        if i >= 500 {
            zs.push(state.1.clone());
        }
    }
    let sd = model.posterior_variance().sqrt();
    for theta in [0.0, 0.75, 1.5] {
        let est = predictive_mixture_density(&model, &zs, &theta).unwrap();
        let z = (theta - model.posterior_mean()) / sd;
        let exact = (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt());
        assert!((est / exact - 1.0).abs() < 0.02, "{theta}: {est} vs {exact}");
    }
}

#[test]
fn sir_on_a_discrete_target_matches_successive_sampling_law() {
    // three draws with ratios 1 : 2 : 5; first pick has law (1, 2, 5) / 8
    let draws = [0usize, 1, 2];
    let lw = [1.0f64.ln(), 2.0f64.ln(), 5.0f64.ln()];
    let mut rng = make_rng(8, 0);
    let n = 200_000;
    let mut first = [0usize; 3];
    for _ in 0..n {
        let pick = sir_resample(&draws, &lw, 2, &mut rng).unwrap();
        assert_ne!(pick[0], pick[1]);
        first[pick[0]] += 1;
    }
    for (i, p) in [1.0 / 8.0, 2.0 / 8.0, 5.0 / 8.0].iter().enumerate() {
        let f = first[i] as f64 / n as f64;
        assert!((f - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt(), "{i}: {f}");
    }
}
