use std::f64::consts::PI;

use everting::kinematics::*;
use everting::Vector2;
use proptest::prelude::*;

/// Circumcentre of three points from perpendicular bisectors.
fn circumcenter(a: Vector2<f64>, b: Vector2<f64>, c: Vector2<f64>) -> Vector2<f64> {
    let d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
    let (a2, b2, c2) = (a.norm_squared(), b.norm_squared(), c.norm_squared());
    Vector2::new(
        (a2 * (b.y - c.y) + b2 * (c.y - a.y) + c2 * (a.y - b.y)) / d,
        (a2 * (c.x - b.x) + b2 * (a.x - c.x) + c2 * (b.x - a.x)) / d,
    )
}

#[test]
fn trajectory_points_lie_on_the_exact_circle() {
    for deg in [10.0, 30.0, 60.0, 90.0, -45.0] {
        let dx = 0.04;
        let p = MotionParams::new(f64::to_radians(deg), dx, 1.5, 0.4).unwrap();
        let traj = iterate_trajectory(&p, &Pose::new(0.2, -0.1, 0.7), 100);
        let pts: Vec<_> = traj.positions().collect();
        let c = circumcenter(pts[0], pts[1], pts[2]);
        let r = orbit_radius_exact(&p).unwrap();
        for q in &pts {
            assert!(((q - c).norm() - r).abs() < 1e-9 * dx, "Δφ={deg}");
        }
    }
}

#[test]
fn orbit_closes_when_turn_divides_a_revolution() {
    for (deg, m) in [(10.0, 36), (30.0, 12), (60.0, 6), (90.0, 4), (-72.0, 5)] {
        let p = MotionParams::new(f64::to_radians(deg), 0.05, 1.0, -0.3).unwrap();
        let traj = iterate_trajectory(&p, &Pose::new(1.0, 1.0, 2.0), m);
        let (first, last) = (traj.samples[0].pose.position, traj.samples[m as usize].pose.position);
        assert!((first - last).norm() < 1e-9 * 0.05);
    }
}

#[test]
fn estimator_ratio_regression() {
    let at = |deg: f64| {
        let p = MotionParams::new(deg.to_radians(), 1.0, 1.0, 0.0).unwrap();
        orbit_radius_sine_sum(&p).unwrap() / orbit_radius_exact(&p).unwrap()
    };
    assert!((at(60.0) - 0.86603).abs() < 1e-5);
    assert!((at(10.0) - 1.0).abs() < 0.005);
    assert!((at(10.0) - 0.99619).abs() < 1e-5);
    // approaches 1 as the turn shrinks
    assert!((at(1.0) - 1.0).abs() < (at(10.0) - 1.0).abs());
}

#[test]
fn rotation_sanity() {
    for (a, b) in [(0.3, 1.1), (-2.0, 0.5), (PI, PI / 3.0)] {
        let ab = Rot2::new(a).compose(&Rot2::new(b)).matrix();
        let sum = Rot2::new(a + b).matrix();
        for i in 0..2 {
            for j in 0..2 {
                assert!((ab[i][j] - sum[i][j]).abs() < 1e-12);
            }
        }
        assert!((Rot2::new(a).determinant() - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn heading_after_k_periods(dphi in -3.0f64..3.0, h0 in -3.0f64..3.0, k in 0u64..200) {
        let p = MotionParams::new(dphi, 0.01, 1.0, 0.0).unwrap();
        let traj = iterate_trajectory(&p, &Pose::new(0.0, 0.0, h0), k);
        let last = traj.samples.last().unwrap();
        let expected = Pose::new(0.0, 0.0, h0 + k as f64 * dphi).reference_dir;
        prop_assert!((last.pose.reference_dir - expected).norm() < 1e-12);
        prop_assert!((last.pose.reference_dir.norm() - 1.0).abs() < 1e-12);
        prop_assert_eq!(last.k, k);
        for w in traj.samples.windows(2) {
            prop_assert!(w[1].t > w[0].t);
        }
    }
}
