//! Discrete periodic motion: one period = one rotation of the reference
//! direction by Δφ plus one displacement of length Δx at angle β from it.
//!
//! Positions between periods follow
//! `p(k+1) = p(k) + Δx · R(Δφ)^k · R(β) · e_r0` and therefore lie on a
//! circle (for Δφ ≠ 0) whose radius is estimated by [`orbit_radius_sine_sum`]
//! and computed exactly by [`orbit_radius_exact`].

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Turning angle below which the orbit radius is treated as infinite, rad.
pub const STRAIGHT_LINE_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("turning angle per period is ~0; the robot moves on a straight line")]
    StraightLineMotion,
    #[error("invalid motion parameters: {0}")]
    InvalidParams(String),
}

/// Descriptors of one locomotion period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionParams {
    /// Signed turning angle per period (counter-clockwise positive), rad.
    pub delta_phi: f64,
    /// Distance travelled per period, m.
    pub delta_x: f64,
    /// Period duration, s.
    pub period_t: f64,
    /// Moving direction relative to the reference direction, rad.
    pub beta: f64,
}

impl MotionParams {
    pub fn new(delta_phi: f64, delta_x: f64, period_t: f64, beta: f64) -> Result<Self, KinematicsError> {
        let p = Self {
            delta_phi,
            delta_x,
            period_t,
            beta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        let bad = |s: &str| Err(KinematicsError::InvalidParams(s.to_owned()));
        if !(self.delta_phi.is_finite() && self.delta_phi.abs() <= PI) {
            return bad("|delta_phi| must be <= pi");
        }
        if !(self.delta_x.is_finite() && self.delta_x >= 0.0) {
            return bad("delta_x must be >= 0");
        }
        if !(self.period_t.is_finite() && self.period_t > 0.0) {
            return bad("period_t must be > 0");
        }
        if !self.beta.is_finite() {
            return bad("beta must be finite");
        }
        Ok(())
    }

    /// Orbit direction: `+1` counter-clockwise, `-1` clockwise, `0` straight.
    pub fn orbit_sign(&self) -> i8 {
        if self.delta_phi.abs() < STRAIGHT_LINE_EPS {
            0
        } else if self.delta_phi > 0.0 {
            1
        } else {
            -1
        }
    }
}

/// Planar rotation matrix as `(cos, sin)` applied to a vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rot2 {
    c: f64,
    s: f64,
}

impl Rot2 {
    pub fn new(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self { c, s }
    }

    pub fn apply(&self, v: &Vector2<f64>) -> Vector2<f64> {
        Vector2::new(self.c * v.x - self.s * v.y, self.s * v.x + self.c * v.y)
    }

    pub fn compose(&self, other: &Rot2) -> Rot2 {
        Rot2 {
            c: self.c * other.c - self.s * other.s,
            s: self.s * other.c + self.c * other.s,
        }
    }

    pub fn determinant(&self) -> f64 {
        self.c * self.c + self.s * self.s
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[self.c, -self.s], [self.s, self.c]]
    }
}

/// Planar position and the robot-fixed reference direction (centre → m₁).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vector2<f64>,
    pub reference_dir: Vector2<f64>,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        let (s, c) = heading.sin_cos();
        Self {
            position: Vector2::new(x, y),
            reference_dir: Vector2::new(c, s),
        }
    }

    /// Heading of the reference direction, rad in `(-π, π]`.
    pub fn heading(&self) -> f64 {
        self.reference_dir.y.atan2(self.reference_dir.x)
    }
}

/// Displacement the robot would make during the next period from `pose`.
pub fn period_displacement(pose: &Pose, params: &MotionParams) -> Vector2<f64> {
    Rot2::new(params.beta).apply(&pose.reference_dir) * params.delta_x
}

/// Reference direction after one more period.
pub fn advance_heading(reference_dir: &Vector2<f64>, delta_phi: f64) -> Vector2<f64> {
    Rot2::new(delta_phi).apply(reference_dir)
}

/// One free-space period.
pub fn step_free(pose: &Pose, params: &MotionParams) -> Pose {
    Pose {
        position: pose.position + period_displacement(pose, params),
        reference_dir: advance_heading(&pose.reference_dir, params.delta_phi),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub k: u64,
    pub t: f64,
    pub pose: Pose,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn positions(&self) -> impl Iterator<Item = Vector2<f64>> + '_ {
        self.samples.iter().map(|s| s.pose.position)
    }

    /// CSV with header `k,t,x,y,heading`; `header_comment` lines are
    /// prefixed with `# `.
    pub fn to_csv(&self, header_comment: &[String]) -> String {
        let mut out = String::new();
        for line in header_comment {
            let _ = writeln!(out, "# {line}");
        }
        out.push_str("k,t,x,y,heading\n");
        for s in &self.samples {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                s.k,
                s.t,
                s.pose.position.x,
                s.pose.position.y,
                s.pose.heading()
            );
        }
        out
    }

    /// JSON array of `{k,t,x,y,heading}` objects.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.samples
                .iter()
                .map(|s| {
                    serde_json::json!({
                        "k": s.k,
                        "t": s.t,
                        "x": s.pose.position.x,
                        "y": s.pose.position.y,
                        "heading": s.pose.heading(),
                    })
                })
                .collect(),
        )
    }
}

/// `Σ_{k=1}^{⌊n/2⌋} sin(k·|Δφ|)` with `n = 2π/|Δφ|`.
pub fn half_orbit_sine_sum(delta_phi: f64) -> Result<f64, KinematicsError> {
    let step = delta_phi.abs();
    if step < STRAIGHT_LINE_EPS {
        return Err(KinematicsError::StraightLineMotion);
    }
    let n = TAU / step;
    let half = (n / 2.0).floor() as u64;
    Ok((1..=half).map(|k| (k as f64 * step).sin()).sum())
}

/// Orbit radius estimate `½ Σ Δx·sin(k|Δφ|)` over half an orbit.
pub fn orbit_radius_sine_sum(params: &MotionParams) -> Result<f64, KinematicsError> {
    Ok(0.5 * params.delta_x * half_orbit_sine_sum(params.delta_phi)?)
}

/// Exact circumradius `Δx / (2 sin(|Δφ|/2))` of the discrete trajectory.
pub fn orbit_radius_exact(params: &MotionParams) -> Result<f64, KinematicsError> {
    let step = params.delta_phi.abs();
    if step < STRAIGHT_LINE_EPS {
        return Err(KinematicsError::StraightLineMotion);
    }
    Ok(params.delta_x / (2.0 * (step / 2.0).sin()))
}

/// Centre of the orbit for a trajectory starting at `start`.
pub fn orbit_center(params: &MotionParams, start: &Pose) -> Result<Vector2<f64>, KinematicsError> {
    let radius = orbit_radius_exact(params)?;
    // The first chord leaves p(0) at angle β from e_r0; the centre sits at
    // (π − |Δφ|)/2 from that chord, on the turning side.
    let half_turn = 0.5 * (PI - params.delta_phi.abs()) * params.delta_phi.signum();
    let chord_dir = Rot2::new(params.beta).apply(&start.reference_dir);
    Ok(start.position + Rot2::new(half_turn).apply(&chord_dir) * radius)
}

/// Iterates the periodic recurrence for `num_periods` periods.
///
/// The result holds `num_periods + 1` samples; sample `k` is stamped
/// `k · period_t`.
pub fn iterate_trajectory(params: &MotionParams, start: &Pose, num_periods: u64) -> Trajectory {
    let mut samples = Vec::with_capacity(num_periods as usize + 1);
    let mut pose = *start;
    samples.push(TrajectorySample { k: 0, t: 0.0, pose });
    for k in 1..=num_periods {
        pose = step_free(&pose, params);
        samples.push(TrajectorySample {
            k,
            t: k as f64 * params.period_t,
            pose,
        });
    }
    Trajectory { samples }
}

/// Number of whole periods that fit in `total_time`.
pub fn max_periods(total_time: f64, period_t: f64) -> u64 {
    debug_assert!(period_t > 0.0);
    let n = (total_time / period_t).floor();
    if n.is_finite() && n > 0.0 {
        n as u64
    } else {
        0
    }
}

/// Constant-acceleration heuristic mapping the start-up accelerations to
/// per-period motion: `Δx = ½·a0·t²`, `Δφ = ½·α0·t²`.
///
/// This is not a calibrated model. Predictions meant to match experiments
/// come from fitted parameter curves instead. `period_t` is set to
/// `release_time` and β is left at zero for the caller to fill in.
#[cfg(feature = "experimental")]
pub fn params_from_accelerations(a0: f64, alpha0: f64, release_time: f64) -> MotionParams {
    debug_assert!(release_time > 0.0);
    let t2 = release_time * release_time;
    MotionParams {
        delta_phi: 0.5 * alpha0 * t2,
        delta_x: 0.5 * a0 * t2,
        period_t: release_time,
        beta: 0.0,
    }
}
