//! The shared key/value configuration file (TOML).
//!
//! ```toml
//! seed = 7
//!
//! [robot]
//! mu = 0.4
//!
//! [curves]
//! delta_phi = "sinusoid"
//! beta = "affine"
//!
//! [scenario]
//! name = "boundary_lap"
//! square_side = 0.6
//! ```
//!
//! Every key is optional; missing keys take their defaults.

use std::path::Path;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::arena::{Arena, ContactOptions, Scenario, ScenarioKind, Segment};
use crate::estimation::CurveFamilies;
use crate::kinematics::Pose;
use crate::model::RobotConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: ScenarioKind,
    /// Side of the square arena, m.
    pub square_side: f64,
    /// Disc radius; defaults to the robot's contact radius.
    pub robot_radius: Option<f64>,
    /// Initial gap between the disc and the single wall, m.
    pub wall_gap: f64,
    /// Extra walls as `[x1, y1, x2, y2]`.
    pub walls: Vec<[f64; 4]>,
    pub start_x: Option<f64>,
    pub start_y: Option<f64>,
    /// Defaults to -90° (facing the wall) for `avoidance`, 0 otherwise.
    pub start_heading_deg: Option<f64>,
    pub lap_tol: f64,
    pub max_periods: u64,
    pub contact: ContactOptions,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: ScenarioKind::BoundaryLap,
            square_side: 0.6,
            robot_radius: None,
            wall_gap: 0.05,
            walls: Vec::new(),
            start_x: None,
            start_y: None,
            start_heading_deg: None,
            lap_tol: Scenario::DEFAULT_LAP_TOL,
            max_periods: 2000,
            contact: ContactOptions::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn build(&self, robot: &RobotConfig) -> Scenario {
        self.build_kind(self.name, robot)
    }

    /// Builds a scenario of `kind` with this config's geometry settings.
    pub fn build_kind(&self, kind: ScenarioKind, robot: &RobotConfig) -> Scenario {
        let r = self.robot_radius.unwrap_or(robot.contact_radius);
        let default_heading = if kind == ScenarioKind::Avoidance { -90.0 } else { 0.0 };
        let (arena, default_start) = match kind {
            ScenarioKind::BoundaryLap => {
                let s = self.square_side;
                (Arena::square(s, r), Vector2::new(s / 2.0, s / 2.0))
            }
            ScenarioKind::Avoidance => (
                Arena {
                    boundary: None,
                    extra_walls: vec![Segment::new(-5.0, 0.0, 5.0, 0.0)],
                    robot_radius: r,
                },
                Vector2::new(0.0, r + self.wall_gap),
            ),
            ScenarioKind::Free => (Arena::open(r), Vector2::zeros()),
        };
        let mut arena = arena;
        arena
            .extra_walls
            .extend(self.walls.iter().map(|w| Segment::new(w[0], w[1], w[2], w[3])));
        Scenario {
            kind,
            arena,
            start: Pose::new(
                self.start_x.unwrap_or(default_start.x),
                self.start_y.unwrap_or(default_start.y),
                self.start_heading_deg.unwrap_or(default_heading).to_radians(),
            ),
            options: self.contact,
            lap_tol: self.lap_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub robot: RobotConfig,
    pub curves: CurveFamilies,
    pub scenario: ScenarioConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            robot: RobotConfig::default(),
            curves: CurveFamilies::default(),
            scenario: ScenarioConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.robot
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let c = &self.scenario.contact;
        if !(c.slide_efficiency.is_finite() && (0.0..=1.0).contains(&c.slide_efficiency)) {
            return Err(ConfigError::Invalid("slide_efficiency must be in [0, 1]".into()));
        }
        if !(c.penetration_tol > 0.0) || c.substeps == 0 || c.stall_limit == 0 {
            return Err(ConfigError::Invalid(
                "penetration_tol, substeps and stall_limit must be positive".into(),
            ));
        }
        if !(self.scenario.lap_tol > 0.0) {
            return Err(ConfigError::Invalid("lap_tol must be > 0".into()));
        }
        Ok(())
    }
}

/// First 16 hex digits of the SHA-256 of `value`'s JSON form.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config serialises");
    let digest = Sha256::digest(&bytes);
    hex::encode(&digest[..8])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::from_toml_str("").unwrap(), RunConfig::default());
    }

    #[test]
    fn dotted_keys_and_tables() {
        let cfg = RunConfig::from_toml_str(
            "seed = 9\nscenario.square_side = 0.8\n[robot]\nmu = 0.3\n[curves]\nbeta = \"poly2\"\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.scenario.square_side, 0.8);
        assert_eq!(cfg.robot.mu, 0.3);
        assert_eq!(cfg.curves.beta.to_string(), "poly2");
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        assert!(RunConfig::from_toml_str("bogus = 1").is_err());
        assert!(RunConfig::from_toml_str("[robot]\nm1 = -1.0").is_err());
        assert!(RunConfig::from_toml_str("[scenario.contact]\nslide_efficiency = 2.0").is_err());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        assert_eq!(config_hash(&a), config_hash(&b));
        b.seed = 1;
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 16);
    }

    #[test]
    fn scenario_builders() {
        let robot = RobotConfig::default();
        let sc = ScenarioConfig::default().build(&robot);
        assert_eq!(sc.arena.walls().len(), 4);
        sc.validate().unwrap();
        let mut cfg = ScenarioConfig {
            name: ScenarioKind::Avoidance,
            ..ScenarioConfig::default()
        };
        cfg.walls.push([1.0, 1.0, 2.0, 2.0]);
        let sc = cfg.build(&robot);
        assert_eq!(sc.arena.walls().len(), 2);
        sc.validate().unwrap();
    }
}
