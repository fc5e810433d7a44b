use gaudy_core::oed::{
    objective_uncorrelated, pca_variance_spectrum, total_variance, CovarianceState, NoiseModel,
};
use gaudy_core::rng::Stream;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn vectors(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = Stream::new(seed);
    (0..n)
        .map(|_| (0..dim).map(|_| rng.normal()).collect())
        .collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

proptest! {
    #[test]
    fn rank_one_updates_track_the_direct_inverse(seed in 0u64..1000, dim in 1usize..8, steps in 1usize..12) {
        let mut state = CovarianceState::new(dim, 0.5).unwrap();
        let mut sigma = DMatrix::identity(dim, dim) * 0.5;
        for x in vectors(steps, dim, seed) {
            let v = DVector::from_column_slice(&x);
            sigma += &v * v.transpose();
            state.update(&x).unwrap();
        }
        let inv = sigma.clone().try_inverse().unwrap();
        prop_assert!((state.sigma() - &sigma).amax() < 1e-9);
        prop_assert!((state.sigma_inv() - &inv).amax() < 1e-8 * inv.amax().max(1.0));
        prop_assert_eq!(state.count(), steps);
    }

    #[test]
    fn objective_equals_the_error_reduction(seed in 0u64..1000, dim in 1usize..8) {
        let xs = vectors(6, dim, seed);
        let mut state = CovarianceState::new(dim, 1.0).unwrap();
        for x in &xs[..5] {
            state.update(x).unwrap();
        }
        let noise = NoiseModel::new(1.0).unwrap();
        let gain = state.objective_next(&xs[5]).unwrap();
        let before = state.expected_beta_error(&noise);
        let after = state.sm_update(&xs[5]).unwrap().expected_beta_error(&noise);
        prop_assert!(gain >= 0.0);
        prop_assert!(rel(before - after, gain) < 1e-9);
    }

    #[test]
    fn pool_choice_maximizes_the_objective(seed in 0u64..1000, pool in 1usize..20) {
        let state = CovarianceState::from_vectors(&vectors(4, 3, seed), 0.1).unwrap();
        let candidates = vectors(pool, 3, seed + 1);
        let best = state.select_next_from_pool(&candidates).unwrap();
        let scores: Vec<f64> = candidates.iter().map(|x| state.objective_next(x).unwrap()).collect();
        prop_assert!(scores.iter().all(|&s| s <= scores[best]));
        prop_assert!(scores[..best].iter().all(|&s| s < scores[best]));
    }

    #[test]
    fn diagonal_objective_is_weighted_energy(x in prop::collection::vec(-5.0f64..5.0, 1..10)) {
        let s: Vec<f64> = (0..x.len()).map(|i| 0.5 + i as f64).collect();
        let expected: f64 = x.iter().zip(&s).map(|(a, b)| a * a / b).sum();
        prop_assert!(rel(objective_uncorrelated(&x, &s).unwrap(), expected) < 1e-12);
    }

    #[test]
    fn full_spectrum_conserves_total_variance(seed in 0u64..1000, n in 2usize..12, dim in 1usize..10) {
        let v = vectors(n, dim, seed);
        let spectrum = pca_variance_spectrum(&v, dim).unwrap();
        prop_assert!(rel(spectrum.total(), total_variance(&v).unwrap()) < 1e-9);
        prop_assert!(spectrum.variances.windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn scaling_the_data_scales_the_spectrum() {
    let v = vectors(40, 6, 3);
    let doubled: Vec<Vec<f64>> = v
        .iter()
        .map(|x| x.iter().map(|a| 2.0 * a).collect())
        .collect();
    let a = pca_variance_spectrum(&v, 6).unwrap();
    let b = pca_variance_spectrum(&doubled, 6).unwrap();
    for (x, y) in a.variances.iter().zip(&b.variances) {
        assert!(rel(*y, 4.0 * x) < 1e-10);
    }
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(CovarianceState::new(3, 0.0).is_err());
    assert!(NoiseModel::new(-1.0).is_err());
    let state = CovarianceState::new(3, 1.0).unwrap();
    assert!(state.objective_next(&[1.0, 2.0]).is_err());
    assert!(state.select_next_from_pool(&[]).is_err());
    assert!(objective_uncorrelated(&[1.0], &[0.0]).is_err());
    assert!(pca_variance_spectrum(&vectors(1, 3, 0), 1).is_err());
}
