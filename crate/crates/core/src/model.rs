//! Static friction / driving-force model of the robot at the instant it
//! starts moving from rest.
//!
//! The base structure (mass `m0`) loads the ring uniformly, so its radial
//! friction components cancel and only a base torque `M0` remains. The two
//! servos are concentrated masses `m1` (spiral servo, which defines the
//! reference direction) and `m2` (steering module) sitting on the sliding
//! ring, separated by the mass-distribution angle γ. Each adds a sliding
//! friction `f_i` whose tangential part adds torque and whose radial parts
//! combine into the driving force `F_d` at angle β from the reference
//! direction.
//!
//! # Angle conventions
//!
//! γ is stored in `[0, 2π)` as the counter-clockwise angle from the `m1`
//! line to the `m2` line. The force formulas use the *unsigned* angle
//! between the two lines, `min(γ, 2π − γ)`, and return β ∈ `[0, π]`
//! measured from the reference direction toward `m2`'s side. Use
//! [`signed_direction`] to get the counter-clockwise-positive rotation that
//! maps the reference direction onto `F_d`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Standard gravity used for the normal loads, m/s².
pub const GRAVITY: f64 = 9.81;

/// Resultant radial force magnitude below which the direction is undefined, N.
pub const FORCE_CANCELLATION_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid robot configuration: {0}")]
    InvalidConfig(String),
    /// The two radial friction components cancel (equal loads at γ = π).
    #[error("radial friction forces cancel; moving direction undefined")]
    DegenerateForceCancellation,
    /// The reference-side radial force is zero while the resultant is not.
    #[error("radial force under the reference mass is zero")]
    NoReferenceLoad,
}

/// Physical description of the robot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotConfig {
    /// Base structure mass, kg.
    pub m0: f64,
    /// Spiral-servo concentrated mass, kg.
    pub m1: f64,
    /// Steering-module concentrated mass, kg.
    pub m2: f64,
    /// Centre-to-ground-contact radius, m.
    pub contact_radius: f64,
    pub coil_count: u32,
    pub contact_coil_count: u32,
    /// Coil tangential-vs-radial angle at the `m1` contact, rad.
    pub theta1: f64,
    /// Coil tangential-vs-radial angle at the `m2` contact, rad.
    pub theta2: f64,
    /// Sliding friction coefficient.
    pub mu: f64,
    /// Friction torque of the uniformly loaded base structure, N·m.
    pub base_friction_torque: f64,
    /// Moment of inertia about the hub axis, kg·m². `None` means the hoop
    /// approximation `(m0 + m1 + m2)·R_s²`.
    pub inertia: Option<f64>,
}

impl Default for RobotConfig {
    fn default() -> Self {
        Self {
            m0: 0.336,
            m1: 0.05,
            m2: 0.05,
            contact_radius: 0.133,
            coil_count: 37,
            contact_coil_count: 36,
            theta1: 0.0,
            theta2: 0.0,
            mu: 0.5,
            base_friction_torque: 0.0,
            inertia: None,
        }
    }
}

impl RobotConfig {
    pub fn total_mass(&self) -> f64 {
        self.m0 + self.m1 + self.m2
    }

    pub fn inertia(&self) -> f64 {
        self.inertia
            .unwrap_or_else(|| self.total_mass() * self.contact_radius * self.contact_radius)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |what: &str| Err(ModelError::InvalidConfig(what.to_owned()));
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.m0) || !positive(self.m1) || !positive(self.m2) {
            return bad("masses must be finite and > 0");
        }
        if !positive(self.contact_radius) {
            return bad("contact_radius must be finite and > 0");
        }
        if !(self.mu.is_finite() && self.mu >= 0.0) {
            return bad("mu must be finite and >= 0");
        }
        if !positive(self.inertia()) {
            return bad("inertia must be finite and > 0");
        }
        if !self.base_friction_torque.is_finite() {
            return bad("base_friction_torque must be finite");
        }
        if self.contact_coil_count < 1 || self.coil_count < self.contact_coil_count {
            return bad("need coil_count >= contact_coil_count >= 1");
        }
        for theta in [self.theta1, self.theta2] {
            if !(0.0..=PI / 2.0).contains(&theta) {
                return bad("theta1/theta2 must lie in [0, pi/2]");
            }
        }
        Ok(())
    }
}

/// Mass-distribution angle γ, normalised to `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MassAngle(f64);

impl MassAngle {
    pub fn from_radians(gamma: f64) -> Self {
        let mut g = gamma.rem_euclid(TAU);
        // rem_euclid can round up to exactly TAU for tiny negative inputs
        if g >= TAU {
            g = 0.0;
        }
        Self(g)
    }

    pub fn from_degrees(deg: f64) -> Self {
        Self::from_radians(deg.to_radians())
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn degrees(self) -> f64 {
        self.0.to_degrees()
    }

    /// Unsigned angle between the `m1` and `m2` lines, in `[0, π]`.
    pub fn between_lines(self) -> f64 {
        if self.0 > PI {
            TAU - self.0
        } else {
            self.0
        }
    }
}

/// Friction increases under the two servos and their radial/tangential parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceState {
    pub f1: f64,
    pub f2: f64,
    pub f1n: f64,
    pub f2n: f64,
    pub f1t: f64,
    pub f2t: f64,
}

impl ForceState {
    /// Build from magnitudes and coil angles.
    pub fn from_magnitudes(f1: f64, f2: f64, theta1: f64, theta2: f64) -> Self {
        Self {
            f1,
            f2,
            f1n: f1 * theta1.cos(),
            f2n: f2 * theta2.cos(),
            f1t: f1 * theta1.sin(),
            f2t: f2 * theta2.sin(),
        }
    }

    /// Purely radial forces (θ₁ = θ₂ = 0).
    pub fn radial(f1n: f64, f2n: f64) -> Self {
        Self::from_magnitudes(f1n, f2n, 0.0, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicsOutput {
    pub delta_m: f64,
    pub driving_force: f64,
    pub beta: f64,
    pub a0: f64,
    pub alpha0: f64,
}

/// Normal load under each servo times `mu`.
pub fn contact_forces(config: &RobotConfig) -> ForceState {
    let f1 = config.mu * config.m1 * GRAVITY;
    let f2 = config.mu * config.m2 * GRAVITY;
    ForceState::from_magnitudes(f1, f2, config.theta1, config.theta2)
}

/// Extra friction torque from the tangential parts of `f1`, `f2`.
pub fn friction_torque_increase(config: &RobotConfig, forces: &ForceState) -> f64 {
    config.contact_radius * forces.f1 * config.theta1.sin()
        + config.contact_radius * forces.f2 * config.theta2.sin()
}

/// Angle β ∈ `[0, π]` between the driving force and the reference direction.
pub fn moving_direction_beta(forces: &ForceState, gamma: MassAngle) -> Result<f64, ModelError> {
    let (a, b) = (forces.f1n, forces.f2n);
    let cos_g = gamma.radians().cos();
    let resultant_sq = a * a + b * b + 2.0 * a * b * cos_g;
    if resultant_sq < FORCE_CANCELLATION_EPS * FORCE_CANCELLATION_EPS {
        return Err(ModelError::DegenerateForceCancellation);
    }
    if a <= 0.0 {
        return Err(ModelError::NoReferenceLoad);
    }
    let cos_beta = (a * a + a * b * cos_g) / (a * resultant_sq.sqrt());
    Ok(cos_beta.clamp(-1.0, 1.0).acos())
}

/// Magnitude of the driving force given β from [`moving_direction_beta`].
pub fn driving_force(forces: &ForceState, gamma: MassAngle, beta: f64) -> f64 {
    forces.f1n * beta.cos() + forces.f2n * (gamma.between_lines() - beta).cos()
}

/// β as a counter-clockwise-positive rotation from the reference direction.
pub fn signed_direction(beta: f64, gamma: MassAngle) -> f64 {
    if gamma.radians() > PI {
        -beta
    } else {
        beta
    }
}

/// Initial linear and angular accelerations `(a0, alpha0)`.
pub fn initial_accelerations(config: &RobotConfig, driving_force: f64, delta_m: f64) -> (f64, f64) {
    let a0 = driving_force / config.total_mass();
    let alpha0 = (config.base_friction_torque + delta_m) / config.inertia();
    (a0, alpha0)
}

/// Self-rotation of the ring after `drive_revolutions` turns of the driving
/// coil: each revolution advances the loop by one hub tooth.
pub fn self_rotation_angle(drive_revolutions: f64, coil_count: u32) -> f64 {
    debug_assert!(coil_count >= 1);
    TAU * drive_revolutions / f64::from(coil_count)
}

/// Runs the whole static model for one γ.
pub fn evaluate(config: &RobotConfig, gamma: MassAngle) -> Result<DynamicsOutput, ModelError> {
    config.validate()?;
    let forces = contact_forces(config);
    let delta_m = friction_torque_increase(config, &forces);
    let beta = moving_direction_beta(&forces, gamma)?;
    let fd = driving_force(&forces, gamma, beta);
    let (a0, alpha0) = initial_accelerations(config, fd, delta_m);
    Ok(DynamicsOutput {
        delta_m,
        driving_force: fd,
        beta,
        a0,
        alpha0,
    })
}
