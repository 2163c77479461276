use std::f64::consts::TAU;

use everting::arena::*;
use everting::estimation::{wrap_angle, ParamCurves};
use everting::kinematics::*;
use everting::model::MassAngle;
use everting::Vector2;
use proptest::prelude::*;

fn params(dphi_deg: f64, dx: f64, beta_deg: f64) -> MotionParams {
    MotionParams::new(dphi_deg.to_radians(), dx, 1.5, beta_deg.to_radians()).unwrap()
}

fn min_clearance(arena: &Arena, p: &Vector2<f64>) -> f64 {
    arena
        .walls()
        .iter()
        .map(|w| w.distance(p) - arena.robot_radius)
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn free_run_matches_recurrence_bit_for_bit() {
    let p = params(17.0, 0.04, 33.0);
    let sc = Scenario::free();
    let log = run_scenario(&sc, &ParamSource::Fixed(p), 300, &[]).unwrap();
    let traj = iterate_trajectory(&p, &sc.start, 300);
    assert_eq!(log.states.len(), traj.samples.len());
    for (s, t) in log.states.iter().zip(&traj.samples) {
        assert_eq!(s.pose.position, t.pose.position);
        assert_eq!(s.pose.reference_dir, t.pose.reference_dir);
        assert_eq!(s.sim_time, t.t);
    }
    assert!(log.verdict.passed);
}

#[test]
fn avoidance_detaches_within_one_revolution() {
    for (dphi, dx, beta) in [(20.0, 0.05, 0.0), (-30.0, 0.04, 10.0), (12.0, 0.03, -20.0)] {
        let p = params(dphi, dx, beta);
        let sc = Scenario::avoidance(0.05);
        let log = run_scenario(&sc, &ParamSource::Fixed(p), 400, &[]).unwrap();
        assert!(log.verdict.passed, "{dphi}: {}", log.verdict.detail);
        let limit = (360.0 / f64::abs(dphi)).ceil() as u64;
        assert!(log.verdict.detail.contains(&format!("limit {limit}")));
        for s in &log.states {
            assert!(min_clearance(&sc.arena, &s.pose.position) >= -sc.options.penetration_tol);
        }
    }
}

#[test]
fn boundary_lap_in_square_arena() {
    let p = params(-10.0, 0.06, 0.0);
    assert!(orbit_radius_exact(&p).unwrap() >= 0.3);
    let sc = Scenario::boundary_lap(0.6);
    let a = run_scenario(&sc, &ParamSource::Fixed(p), 2000, &[]).unwrap();
    let b = run_scenario(&sc, &ParamSource::Fixed(p), 2000, &[]).unwrap();
    assert!(a.verdict.passed, "{}", a.verdict.detail);
    assert_eq!(a, b);
    let walls: Vec<usize> = a.states.last().unwrap().lap_progress.iter().map(|e| e.wall).take(4).collect();
    // clockwise orbit visits walls clockwise
    for w in walls.windows(2) {
        assert_eq!((w[0] + 4 - w[1]) % 4, 1, "{walls:?}");
    }
}

#[test]
fn stuck_in_a_corner_fails_verdict() {
    let mut sc = Scenario::boundary_lap(0.6);
    let r = sc.arena.robot_radius;
    sc.start = Pose::new(r + 1e-3, r + 1e-3, -3.0 * std::f64::consts::FRAC_PI_4);
    let p = MotionParams::new(0.0, 0.05, 1.0, 0.0).unwrap();
    let log = run_scenario(&sc, &ParamSource::Fixed(p), 500, &[]).unwrap();
    assert!(log.verdict.stuck);
    assert!(!log.verdict.passed);
    assert_eq!(log.states.len() as u32, 1 + sc.options.stall_limit + 1);
}

#[test]
fn sign_flip_reverses_orbit_from_next_period() {
    let mut curves = ParamCurves::constant(&params(15.0, 0.05, 0.0));
    // Δφ changes sign at γ = π
    curves.delta_phi.family = everting::estimation::CurveFamily::Sinusoid;
    curves.delta_phi.coeffs = vec![0.0, 15f64.to_radians(), 0.0];
    let g0 = MassAngle::from_degrees(90.0);
    let g1 = MassAngle::from_degrees(270.0);
    let sc = Scenario::free();
    let source = ParamSource::Curves { curves: curves.clone(), gamma: g0 };
    let log = run_scenario(&sc, &source, 40, &[(20, g1)]).unwrap();
    for s in &log.states[1..=20] {
        assert!(s.params.delta_phi > 0.0);
    }
    for s in &log.states[21..] {
        assert!(s.params.delta_phi < 0.0);
        assert_eq!(s.gamma, g1);
    }
    let h20 = log.states[20].pose.heading();
    let h21 = log.states[21].pose.heading();
    assert!((wrap_angle(h21 - h20) + 15f64.to_radians()).abs() < 1e-12);

    let replay = run_scenario(&sc, &source, 40, &[(20, g1)]).unwrap();
    assert_eq!(log, replay);
}

#[test]
fn set_gamma_is_idempotent() {
    let curves = ParamCurves::constant(&params(15.0, 0.05, 0.0));
    let state = SimState::new(Pose::new(0.0, 0.0, 0.0), MassAngle::from_degrees(10.0), params(15.0, 0.05, 0.0));
    let g = MassAngle::from_degrees(200.0);
    let once = set_gamma(&state, g, &curves);
    let twice = set_gamma(&once, g, &curves);
    assert_eq!(once, twice);
}

#[test]
fn log_csv_marks_contacts() {
    let sc = Scenario::avoidance(0.01);
    let log = run_scenario(&sc, &ParamSource::Fixed(params(20.0, 0.05, 0.0)), 30, &[]).unwrap();
    let csv = log.to_csv(&["run".into()]);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# run"));
    assert_eq!(lines.next(), Some("k,t,x,y,heading,gamma,contact_wall"));
    assert!(csv.lines().any(|l| l.ends_with(",0")));
    assert!(csv.lines().any(|l| l.ends_with(",-1")));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn contact_invariants(
        dphi in -60.0f64..60.0, dx in 0.0f64..0.15, beta in -180.0f64..180.0,
        h0 in 0.0f64..TAU, sx in 0.2f64..0.4, sy in 0.2f64..0.4, eff in 0.3f64..1.0
    ) {
        let mut sc = Scenario::boundary_lap(0.6);
        sc.start = Pose::new(sx, sy, h0);
        sc.options.slide_efficiency = eff;
        let p = MotionParams::new(dphi.to_radians(), dx, 1.0, beta.to_radians()).unwrap();
        let log = run_scenario(&sc, &ParamSource::Fixed(p), 150, &[]).unwrap();
        for (k, s) in log.states.iter().enumerate() {
            prop_assert!(min_clearance(&sc.arena, &s.pose.position) >= -sc.options.penetration_tol);
            let expect = h0 + k as f64 * p.delta_phi;
            prop_assert!(wrap_angle(s.pose.heading() - expect).abs() < 1e-9);
        }
        // a sliding step never has a component into the touched wall
        for w in log.states.windows(2) {
            if let Some(c) = w[0].contact() {
                let moved = w[1].pose.position - w[0].pose.position;
                prop_assert!(moved.dot(&c.normal) >= -1e-9);
            }
        }
    }
}
