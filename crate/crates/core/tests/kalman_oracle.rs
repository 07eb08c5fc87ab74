mod common;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{random_data, random_init, random_system, stacked_gaussian, stationary_cov_by_iteration};
use macroprice::dfm::{
    identification_rotation, kalman_filter, kalman_filter_data, kalman_smoother, InitialState,
};
use macroprice::linalg::min_eigenvalue;
use macroprice::panel::{Month, Panel};

#[test]
fn filter_and_smoother_match_joint_gaussian() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for case in 0..50 {
        let m = rng.random_range(1..=4);
        let k = rng.random_range(1..=2);
        let n = rng.random_range(1..=10);
        let p = random_system(&mut rng, m, k);
        let init = random_init(&mut rng, k);
        let rate = if case % 2 == 0 { 0.0 } else { 0.3 };
        let data = random_data(&mut rng, n, m, rate);

        let f = kalman_filter_data(&p, &data, &init).unwrap();
        let s = kalman_smoother(&p, &f).unwrap();
        let oracle = stacked_gaussian(&p, &data, &init);
        let ll = oracle.log_density();
        assert!((f.loglik - ll).abs() < 1e-8, "case {case}: {} vs {ll}", f.loglik);
        let means = oracle.conditional_state_means(k);
        assert!((&s.means - &means).amax() < 1e-8, "case {case}");
    }
}

#[test]
fn stationary_start_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = random_system(&mut rng, 3, 2);
    let mut data = random_data(&mut rng, 8, 3, 0.0);
    data[(2, 0)] = f64::NAN;
    let panel = Panel::from_matrix(
        &["a".into(), "b".into(), "c".into()],
        Month::new(2010, 1).unwrap(),
        &data,
    )
    .unwrap();
    let f = kalman_filter(&p, &panel).unwrap();
    let init = InitialState {
        mean: vec![0.0; 2],
        cov: stationary_cov_by_iteration(&p),
    };
    let ll = stacked_gaussian(&p, &data, &init).log_density();
    assert!((f.loglik - ll).abs() < 1e-8);
}

#[test]
fn likelihood_is_rotation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..20 {
        let p = random_system(&mut rng, 4, 2);
        let data = random_data(&mut rng, 10, 4, 0.2);
        let base = kalman_filter_data(&p, &data, &InitialState::stationary(&p).unwrap()).unwrap();
        let u = identification_rotation(&random_system(&mut rng, 4, 2).loadings);
        let q = p.rotate(&u);
        let rotated = kalman_filter_data(&q, &data, &InitialState::stationary(&q).unwrap()).unwrap();
        assert!((base.loglik - rotated.loglik).abs() < 1e-8);
    }
}

#[test]
fn smoothed_covariance_never_exceeds_filtered() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..20 {
        let p = random_system(&mut rng, 4, 2);
        let data = random_data(&mut rng, 10, 4, 0.25);
        let f = kalman_filter_data(&p, &data, &InitialState::stationary(&p).unwrap()).unwrap();
        let s = kalman_smoother(&p, &f).unwrap();
        for (step, cov) in f.steps.iter().zip(&s.covs) {
            assert!(min_eigenvalue(&(&step.cov - cov)) >= -1e-8);
        }
    }
}

#[test]
fn complete_panel_uses_no_mask_path() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let p = random_system(&mut rng, 4, 2);
    let data = random_data(&mut rng, 10, 4, 0.0);
    let init = InitialState::stationary(&p).unwrap();
    let a = kalman_filter_data(&p, &data, &init).unwrap();
    // Same data, rebuilt through a panel round trip.
    let names: Vec<String> = (0..4).map(|i| format!("s{i}")).collect();
    let panel = Panel::from_matrix(&names, Month::new(2000, 1).unwrap(), &data).unwrap();
    let b = kalman_filter_data(&p, &panel.to_matrix(), &init).unwrap();
    assert_eq!(a.loglik.to_bits(), b.loglik.to_bits());
    let bits = |m: &DMatrix<f64>| m.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.means()), bits(&b.means()));
}
