//! Model, trajectory estimation and walled-arena simulation for a
//! wheel-less everting helical-ring robot.
//!
//! The robot moves in discrete periods: every period its reference
//! direction turns by Δφ and its centre moves Δx at an angle β from that
//! direction. All three, plus the period length T, are set by the mass
//! distribution angle γ between its two servos.
//!
//! * [`model`]: static friction / driving-force model at start-up.
//! * [`kinematics`]: the periodic position recurrence and orbit radius.
//! * [`estimation`]: circle fitting, parameter extraction, γ-curve fitting.
//! * [`arena`]: wall contact, sliding and scenario verdicts.
//! * [`ingest`]: marker-track CSV import.
//! * [`config`]: the shared TOML configuration.
//!
//! ```
//! use everting::kinematics::{iterate_trajectory, orbit_radius_exact, MotionParams, Pose};
//!
//! let params = MotionParams::new(30f64.to_radians(), 0.05, 2.0, 0.0).unwrap();
//! let traj = iterate_trajectory(&params, &Pose::new(0.0, 0.0, 0.0), 12);
//! // twelve 30° turns close the orbit
//! let end = traj.samples.last().unwrap().pose.position;
//! assert!(end.norm() < 1e-12);
//! assert!((orbit_radius_exact(&params).unwrap() - 0.0965926).abs() < 1e-6);
//! ```

pub mod arena;
pub mod config;
pub mod estimation;
pub mod ingest;
pub mod kinematics;
pub mod model;

pub use nalgebra::Vector2;

/// Tool identification written into output headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
