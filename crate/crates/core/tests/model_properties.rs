use std::f64::consts::{PI, TAU};

use everting::model::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// |f1n·û(0) + f2n·û(γ)| and its angle, straight from vector addition.
fn vector_sum(f1n: f64, f2n: f64, gamma: f64) -> (f64, f64) {
    let x = f1n + f2n * gamma.cos();
    let y = f2n * gamma.sin();
    (x.hypot(y), y.atan2(x))
}

#[test]
fn equal_loads_split_gamma_in_half() {
    let f = ForceState::radial(2.5, 2.5);
    for deg in (10..=170).step_by(10) {
        let g = MassAngle::from_degrees(deg as f64);
        let beta = moving_direction_beta(&f, g).unwrap();
        assert!((beta - g.radians() / 2.0).abs() < 1e-12, "γ={deg}°: {beta}");
    }
}

#[test]
fn driving_force_matches_vector_sum_for_seeded_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut checked = 0;
    while checked < 1000 {
        let f1n = rng.random_range(0.01..5.0);
        let f2n = rng.random_range(0.0..5.0);
        let gamma = rng.random_range(0.0..TAU);
        let f = ForceState::radial(f1n, f2n);
        let g = MassAngle::from_radians(gamma);
        let Ok(beta) = moving_direction_beta(&f, g) else { continue };
        let (norm, angle) = vector_sum(f1n, f2n, gamma);
        let fd = driving_force(&f, g, beta);
        assert!((fd - norm).abs() <= 1e-9 * norm, "{f1n} {f2n} {gamma}: {fd} vs {norm}");
        assert!((signed_direction(beta, g) - angle).abs() < 1e-7);
        checked += 1;
    }
}

#[test]
fn cancellation_is_reported() {
    let f = ForceState::radial(1.0, 1.0);
    assert_eq!(
        moving_direction_beta(&f, MassAngle::from_radians(PI)),
        Err(ModelError::DegenerateForceCancellation)
    );
}

proptest! {
    #[test]
    fn beta_depends_only_on_force_ratio(
        f1n in 0.01f64..10.0, f2n in 0.0f64..10.0, gamma in 0.0f64..TAU, scale in 0.01f64..100.0
    ) {
        let g = MassAngle::from_radians(gamma);
        let a = moving_direction_beta(&ForceState::radial(f1n, f2n), g);
        let b = moving_direction_beta(&ForceState::radial(f1n * scale, f2n * scale), g);
        if let (Ok(a), Ok(b)) = (a, b) {
            prop_assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn torque_increase_is_linear_in_each_force(
        f1 in 0.0f64..5.0, f2 in 0.0f64..5.0, k in 0.0f64..4.0,
        t1 in 0.0f64..(PI / 2.0), t2 in 0.0f64..(PI / 2.0)
    ) {
        let cfg = RobotConfig { theta1: t1, theta2: t2, ..RobotConfig::default() };
        let base = friction_torque_increase(&cfg, &ForceState::from_magnitudes(f1, f2, t1, t2));
        let only1 = friction_torque_increase(&cfg, &ForceState::from_magnitudes(f1, 0.0, t1, t2));
        let only2 = friction_torque_increase(&cfg, &ForceState::from_magnitudes(0.0, f2, t1, t2));
        prop_assert!((base - only1 - only2).abs() < 1e-12);
        let scaled = friction_torque_increase(&cfg, &ForceState::from_magnitudes(k * f1, 0.0, t1, t2));
        prop_assert!((scaled - k * only1).abs() < 1e-12);
        let radial = RobotConfig { theta1: 0.0, theta2: 0.0, ..RobotConfig::default() };
        prop_assert_eq!(friction_torque_increase(&radial, &ForceState::radial(f1, f2)), 0.0);
    }

    #[test]
    fn model_is_pure(gamma in 0.0f64..TAU, mu in 0.05f64..1.0) {
        let cfg = RobotConfig { mu, ..RobotConfig::default() };
        let g = MassAngle::from_radians(gamma);
        let a = evaluate(&cfg, g);
        let b = evaluate(&cfg, g);
        match (a, b) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a.beta.to_bits(), b.beta.to_bits());
                prop_assert_eq!(a.driving_force.to_bits(), b.driving_force.to_bits());
                prop_assert!(a.driving_force >= 0.0 && a.a0 >= 0.0);
            }
            (a, b) => prop_assert_eq!(a, b),
        }
    }
}
