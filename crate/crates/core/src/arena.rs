//! Periodic motion inside walled arenas.
//!
//! The robot is a rigid disc of radius `robot_radius`. Each period it
//! attempts the free-space displacement of the periodic model. Motion into
//! a wall it touches loses its normal component and keeps the tangential
//! one (scaled by `slide_efficiency`); in a corner only motion into the
//! free cone survives. The reference direction always rotates by Δφ, even
//! when the disc is fully blocked.
//!
//! Contacts are resolved at period granularity with `substeps` sub-moves to
//! avoid tunnelling through walls.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimation::{predict_at_gamma, ParamCurves};
use crate::kinematics::{advance_heading, period_displacement, MotionParams, Pose};
use crate::model::MassAngle;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ArenaError {
    #[error("invalid arena: {0}")]
    InvalidArena(String),
    #[error("start pose penetrates wall {0}")]
    StartPenetrates(usize),
    #[error("invalid motion parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Vector2<f64>,
    pub b: Vector2<f64>,
}

impl Segment {
    pub fn new(ax: f64, ay: f64, bx: f64, by: f64) -> Self {
        Self {
            a: Vector2::new(ax, ay),
            b: Vector2::new(bx, by),
        }
    }

    pub fn closest_point(&self, p: &Vector2<f64>) -> Vector2<f64> {
        let ab = self.b - self.a;
        let len2 = ab.norm_squared();
        if len2 == 0.0 {
            return self.a;
        }
        let t = ((p - self.a).dot(&ab) / len2).clamp(0.0, 1.0);
        self.a + ab * t
    }

    pub fn distance(&self, p: &Vector2<f64>) -> f64 {
        (p - self.closest_point(p)).norm()
    }

    /// Unit normal at `p` pointing from the wall toward `side`.
    fn normal_toward(&self, p: &Vector2<f64>, side: &Vector2<f64>) -> Vector2<f64> {
        let diff = p - self.closest_point(p);
        let n = diff.norm();
        if n > 1e-12 {
            return diff / n;
        }
        let ab = self.b - self.a;
        let mut perp = Vector2::new(-ab.y, ab.x).normalize();
        if perp.dot(&(side - self.a)) < 0.0 {
            perp = -perp;
        }
        perp
    }
}

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Vector2<f64>,
    pub max: Vector2<f64>,
}

impl Rect {
    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn center(&self) -> Vector2<f64> {
        (self.min + self.max) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arena {
    pub boundary: Option<Rect>,
    pub extra_walls: Vec<Segment>,
    pub robot_radius: f64,
}

impl Arena {
    /// Default disc radius: the ground-contact radius of the ring, m.
    pub const DEFAULT_ROBOT_RADIUS: f64 = 0.133;

    pub fn open(robot_radius: f64) -> Self {
        Self {
            boundary: None,
            extra_walls: Vec::new(),
            robot_radius,
        }
    }

    /// Square arena with corners `(0, 0)` and `(side, side)`.
    pub fn square(side: f64, robot_radius: f64) -> Self {
        Self {
            boundary: Some(Rect {
                min: Vector2::zeros(),
                max: Vector2::new(side, side),
            }),
            extra_walls: Vec::new(),
            robot_radius,
        }
    }

    pub fn validate(&self) -> Result<(), ArenaError> {
        if !(self.robot_radius.is_finite() && self.robot_radius > 0.0) {
            return Err(ArenaError::InvalidArena("robot_radius must be > 0".into()));
        }
        if let Some(r) = &self.boundary {
            if !(r.width() > 2.0 * self.robot_radius && r.height() > 2.0 * self.robot_radius) {
                return Err(ArenaError::InvalidArena(
                    "boundary must be wider and taller than the robot diameter".into(),
                ));
            }
        }
        Ok(())
    }

    /// All walls; the boundary (if any) contributes ids 0..4 in
    /// counter-clockwise order: bottom, right, top, left.
    pub fn walls(&self) -> Vec<Segment> {
        let mut walls = Vec::with_capacity(4 + self.extra_walls.len());
        if let Some(r) = &self.boundary {
            let (lo, hi) = (r.min, r.max);
            walls.push(Segment::new(lo.x, lo.y, hi.x, lo.y));
            walls.push(Segment::new(hi.x, lo.y, hi.x, hi.y));
            walls.push(Segment::new(hi.x, hi.y, lo.x, hi.y));
            walls.push(Segment::new(lo.x, hi.y, lo.x, lo.y));
        }
        walls.extend(self.extra_walls.iter().copied());
        walls
    }

    pub fn boundary_wall_count(&self) -> usize {
        if self.boundary.is_some() {
            4
        } else {
            0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContactOptions {
    /// Scale applied to the tangential part of a blocked displacement.
    pub slide_efficiency: f64,
    pub penetration_tol: f64,
    pub substeps: u32,
    /// Consecutive fully blocked periods before the state is flagged stuck.
    pub stall_limit: u32,
}

impl Default for ContactOptions {
    fn default() -> Self {
        Self {
            slide_efficiency: 1.0,
            penetration_tol: 1e-6,
            substeps: 8,
            stall_limit: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contact {
    pub wall: usize,
    /// Unit normal from the wall toward the disc centre.
    pub normal: Vector2<f64>,
}

/// A change of contacted wall.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LapEntry {
    pub wall: usize,
    pub k: u64,
    pub position: Vector2<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub pose: Pose,
    pub period_index: u64,
    pub sim_time: f64,
    pub gamma: MassAngle,
    /// Parameters used for the next period.
    pub params: MotionParams,
    pub contacts: Vec<Contact>,
    pub lap_progress: Vec<LapEntry>,
    pub stall_count: u32,
    pub stuck: bool,
    time_base: f64,
    time_base_index: u64,
}

impl SimState {
    pub fn new(pose: Pose, gamma: MassAngle, params: MotionParams) -> Self {
        Self {
            pose,
            period_index: 0,
            sim_time: 0.0,
            gamma,
            params,
            contacts: Vec::new(),
            lap_progress: Vec::new(),
            stall_count: 0,
            stuck: false,
            time_base: 0.0,
            time_base_index: 0,
        }
    }

    /// The closest current contact, if any.
    pub fn contact(&self) -> Option<&Contact> {
        self.contacts.first()
    }

    /// Replaces the parameters for upcoming periods. Timestamps stay
    /// `base + n·T` between changes of `T`.
    pub fn set_params(&mut self, params: MotionParams) {
        if params.period_t != self.params.period_t {
            self.time_base = self.sim_time;
            self.time_base_index = self.period_index;
        }
        self.params = params;
    }

    /// Moves the robot without advancing the period counter.
    pub fn reset_pose(&mut self, pose: Pose, arena: &Arena, opts: &ContactOptions) {
        self.pose = pose;
        self.contacts = contacts_at(&pose.position, arena, opts.penetration_tol, None);
        self.stall_count = 0;
        self.stuck = false;
    }
}

fn contacts_at(p: &Vector2<f64>, arena: &Arena, tol: f64, side: Option<&Vector2<f64>>) -> Vec<Contact> {
    let mut found: Vec<(f64, Contact)> = arena
        .walls()
        .iter()
        .enumerate()
        .filter_map(|(id, w)| {
            let d = w.distance(p);
            (d <= arena.robot_radius + tol).then(|| {
                (
                    d,
                    Contact {
                        wall: id,
                        normal: w.normal_toward(p, side.unwrap_or(p)),
                    },
                )
            })
        })
        .collect();
    found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.wall.cmp(&b.1.wall)));
    found.into_iter().map(|(_, c)| c).collect()
}

/// Removes motion into the touched walls. Returns `None` if `s` was not
/// constrained.
fn constrain(s: &Vector2<f64>, normals: &[Vector2<f64>]) -> Option<Vector2<f64>> {
    const EPS: f64 = 1e-15;
    let violated: Vec<&Vector2<f64>> = normals.iter().filter(|n| s.dot(n) < -EPS).collect();
    if violated.is_empty() {
        return None;
    }
    for n in &violated {
        let t = s - *n * s.dot(n);
        if normals.iter().all(|m| t.dot(m) >= -EPS * s.norm().max(1.0)) {
            return Some(t);
        }
    }
    Some(Vector2::zeros())
}

/// Advances one period inside `arena`.
pub fn step_period(state: &SimState, params: &MotionParams, arena: &Arena, opts: &ContactOptions) -> SimState {
    let walls = arena.walls();
    let r = arena.robot_radius;
    let tol = opts.penetration_tol;
    let start = state.pose.position;
    let d = period_displacement(&state.pose, params);
    let substeps = opts.substeps.max(1);
    let sub = d / f64::from(substeps);

    let mut c = start;
    let mut touched = false;
    for _ in 0..substeps {
        let active = contacts_at(&c, arena, tol, None);
        let normals: Vec<Vector2<f64>> = active.iter().map(|ct| ct.normal).collect();
        let s = match constrain(&sub, &normals) {
            Some(t) => {
                touched = true;
                t * opts.slide_efficiency
            }
            None => sub,
        };
        let prev = c;
        let mut next = c + s;
        for _ in 0..4 {
            let mut moved = false;
            for w in &walls {
                let dist = w.distance(&next);
                if dist < r {
                    let n = w.normal_toward(&next, &prev);
                    next += n * (r - dist);
                    moved = true;
                    touched = true;
                }
            }
            if !moved {
                break;
            }
        }
        c = next;
    }
    if !touched {
        c = start + d;
    }

    let mut out = state.clone();
    out.pose = Pose {
        position: c,
        reference_dir: advance_heading(&state.pose.reference_dir, params.delta_phi),
    };
    out.period_index += 1;
    if params.period_t != state.params.period_t {
        out.time_base = state.sim_time;
        out.time_base_index = state.period_index;
    }
    out.params = *params;
    out.sim_time = out.time_base + (out.period_index - out.time_base_index) as f64 * params.period_t;

    let prev_walls: Vec<usize> = state.contacts.iter().map(|ct| ct.wall).collect();
    out.contacts = contacts_at(&c, arena, tol, None);
    let mut new_walls: Vec<usize> = out
        .contacts
        .iter()
        .map(|ct| ct.wall)
        .filter(|w| !prev_walls.contains(w))
        .collect();
    new_walls.sort_unstable();
    for wall in new_walls {
        if out.lap_progress.last().map(|e| e.wall) != Some(wall) {
            out.lap_progress.push(LapEntry {
                wall,
                k: out.period_index,
                position: c,
            });
        }
    }

    let blocked = d.norm() > 0.0 && (c - start).norm() < 1e-12;
    out.stall_count = if blocked { state.stall_count + 1 } else { 0 };
    out.stuck = out.stall_count >= opts.stall_limit;
    out
}

/// Sets γ; parameters predicted from `curves` apply from the next period.
pub fn set_gamma(state: &SimState, gamma: MassAngle, curves: &ParamCurves) -> SimState {
    let mut out = state.clone();
    out.gamma = gamma;
    out.set_params(predict_at_gamma(curves, gamma));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// No pass/fail condition beyond not getting stuck.
    Free,
    /// Robot must leave the wall it hits within one heading revolution.
    Avoidance,
    /// Robot must follow all four boundary walls in order and come back.
    BoundaryLap,
}

impl std::str::FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "free" => Ok(Self::Free),
            "avoidance" => Ok(Self::Avoidance),
            "boundary_lap" => Ok(Self::BoundaryLap),
            _ => Err(format!("unknown scenario `{s}`")),
        }
    }
}

impl std::fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Free => "free",
            Self::Avoidance => "avoidance",
            Self::BoundaryLap => "boundary_lap",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub arena: Arena,
    pub start: Pose,
    pub options: ContactOptions,
    /// Return distance for the boundary lap, m.
    pub lap_tol: f64,
}

impl Scenario {
    pub const DEFAULT_LAP_TOL: f64 = 0.05;

    /// Square arena of `side` metres, robot starting at its centre.
    pub fn boundary_lap(side: f64) -> Self {
        let arena = Arena::square(side, Arena::DEFAULT_ROBOT_RADIUS);
        Self {
            kind: ScenarioKind::BoundaryLap,
            start: Pose::new(side / 2.0, side / 2.0, 0.0),
            arena,
            options: ContactOptions::default(),
            lap_tol: Self::DEFAULT_LAP_TOL,
        }
    }

    /// A single long wall along `y = 0`, robot `gap` metres above it with
    /// its reference direction pointing at the wall.
    pub fn avoidance(gap: f64) -> Self {
        let r = Arena::DEFAULT_ROBOT_RADIUS;
        Self {
            kind: ScenarioKind::Avoidance,
            arena: Arena {
                boundary: None,
                extra_walls: vec![Segment::new(-5.0, 0.0, 5.0, 0.0)],
                robot_radius: r,
            },
            start: Pose::new(0.0, r + gap, -std::f64::consts::FRAC_PI_2),
            options: ContactOptions::default(),
            lap_tol: Self::DEFAULT_LAP_TOL,
        }
    }

    pub fn free() -> Self {
        Self {
            kind: ScenarioKind::Free,
            arena: Arena::open(Arena::DEFAULT_ROBOT_RADIUS),
            start: Pose::new(0.0, 0.0, 0.0),
            options: ContactOptions::default(),
            lap_tol: Self::DEFAULT_LAP_TOL,
        }
    }

    pub fn by_kind(kind: ScenarioKind) -> Self {
        match kind {
            ScenarioKind::Free => Self::free(),
            ScenarioKind::Avoidance => Self::avoidance(0.05),
            ScenarioKind::BoundaryLap => Self::boundary_lap(0.6),
        }
    }

    pub fn validate(&self) -> Result<(), ArenaError> {
        self.arena.validate()?;
        for (id, w) in self.arena.walls().iter().enumerate() {
            if w.distance(&self.start.position) < self.arena.robot_radius - self.options.penetration_tol {
                return Err(ArenaError::StartPenetrates(id));
            }
        }
        Ok(())
    }
}

/// Where motion parameters come from during a run.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamSource {
    Fixed(MotionParams),
    Curves { curves: ParamCurves, gamma: MassAngle },
}

impl ParamSource {
    pub fn initial(&self) -> (MassAngle, MotionParams) {
        match self {
            ParamSource::Fixed(p) => (MassAngle::from_radians(0.0), *p),
            ParamSource::Curves { curves, gamma } => (*gamma, predict_at_gamma(curves, *gamma)),
        }
    }

    pub fn curves(&self) -> Option<&ParamCurves> {
        match self {
            ParamSource::Fixed(_) => None,
            ParamSource::Curves { curves, .. } => Some(curves),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub scenario: ScenarioKind,
    pub passed: bool,
    /// Period index at which the verdict was decided.
    pub at_period: Option<u64>,
    pub stuck: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimLog {
    pub states: Vec<SimState>,
    pub verdict: Verdict,
}

impl SimLog {
    /// CSV `k,t,x,y,heading,gamma,contact_wall`; `-1` means no contact.
    pub fn to_csv(&self, header_comment: &[String]) -> String {
        let mut out = String::new();
        for line in header_comment {
            let _ = writeln!(out, "# {line}");
        }
        out.push_str("k,t,x,y,heading,gamma,contact_wall\n");
        for s in &self.states {
            let wall = s.contact().map_or(-1, |c| c.wall as i64);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                s.period_index,
                s.sim_time,
                s.pose.position.x,
                s.pose.position.y,
                s.pose.heading(),
                s.gamma.radians(),
                wall
            );
        }
        out
    }
}

/// Runs a scenario for `max_periods` periods, optionally applying γ
/// changes `(period_index, γ)` from a schedule (requires curves).
pub fn run_scenario(
    scenario: &Scenario,
    source: &ParamSource,
    max_periods: u64,
    schedule: &[(u64, MassAngle)],
) -> Result<SimLog, ArenaError> {
    scenario.validate()?;
    let (gamma, params) = source.initial();
    params
        .validate()
        .map_err(|e| ArenaError::InvalidParams(e.to_string()))?;
    let mut state = SimState::new(scenario.start, gamma, params);
    state.reset_pose(scenario.start, &scenario.arena, &scenario.options);
    let mut states = Vec::with_capacity(max_periods as usize + 1);
    states.push(state.clone());
    let mut pending = schedule.iter().peekable();
    for _ in 0..max_periods {
        while let Some((k, g)) = pending.peek() {
            if *k > state.period_index {
                break;
            }
            if let Some(curves) = source.curves() {
                state = set_gamma(&state, *g, curves);
            }
            pending.next();
        }
        let p = state.params;
        state = step_period(&state, &p, &scenario.arena, &scenario.options);
        states.push(state.clone());
        if state.stuck {
            break;
        }
    }
    let verdict = evaluate_verdict(scenario, &states);
    Ok(SimLog { states, verdict })
}

/// Judges a recorded run against its scenario's success condition.
pub fn evaluate_verdict(scenario: &Scenario, states: &[SimState]) -> Verdict {
    let stuck = states.iter().any(|s| s.stuck);
    let mut v = Verdict {
        scenario: scenario.kind,
        passed: false,
        at_period: None,
        stuck,
        detail: String::new(),
    };
    if stuck {
        let k = states.iter().find(|s| s.stuck).map(|s| s.period_index);
        v.at_period = k;
        v.detail = "stuck: displacement fully blocked".into();
        return v;
    }
    match scenario.kind {
        ScenarioKind::Free => {
            v.passed = true;
            v.detail = "free run completed".into();
        }
        ScenarioKind::Avoidance => match avoidance_detach(states) {
            Some((hit, left, limit)) => {
                v.passed = left - hit <= limit;
                v.at_period = Some(left);
                v.detail = format!("contact at k={hit}, detached at k={left}, limit {limit} periods");
            }
            None => {
                v.detail = if states.iter().any(|s| !s.contacts.is_empty()) {
                    "never detached from the wall".into()
                } else {
                    "never touched a wall".into()
                };
            }
        },
        ScenarioKind::BoundaryLap => match boundary_lap(scenario, states) {
            Some(k) => {
                v.passed = true;
                v.at_period = Some(k);
                v.detail = format!("lap closed at k={k}");
            }
            None => v.detail = "no complete boundary lap".into(),
        },
    }
    v
}

/// `(first contact k, detach k, allowed periods)` for the first contact.
fn avoidance_detach(states: &[SimState]) -> Option<(u64, u64, u64)> {
    let hit = states.iter().position(|s| !s.contacts.is_empty())?;
    let dphi = states[hit].params.delta_phi.abs();
    let limit = if dphi > 0.0 {
        (TAU / dphi).ceil() as u64
    } else {
        u64::MAX
    };
    let left = states[hit..].iter().find(|s| s.contacts.is_empty())?;
    Some((states[hit].period_index, left.period_index, limit))
}

fn boundary_lap(scenario: &Scenario, states: &[SimState]) -> Option<u64> {
    if scenario.arena.boundary_wall_count() != 4 {
        return None;
    }
    let last = states.last()?;
    let entries: Vec<&LapEntry> = last.lap_progress.iter().filter(|e| e.wall < 4).collect();
    let mut consumed_k = 0;
    for i in 0..entries.len().saturating_sub(3) {
        let walls: Vec<usize> = entries[i..i + 4].iter().map(|e| e.wall).collect();
        let step = (walls[1] + 4 - walls[0]) % 4;
        if step != 1 && step != 3 {
            continue;
        }
        if !walls.windows(2).all(|w| (w[1] + 4 - w[0]) % 4 == step) {
            continue;
        }
        let origin = entries[i].position;
        let after = entries[i + 3].k.max(consumed_k);
        if let Some(s) = states
            .iter()
            .find(|s| s.period_index > after && (s.pose.position - origin).norm() <= scenario.lap_tol)
        {
            return Some(s.period_index);
        }
        consumed_k = entries[i + 3].k;
    }
    None
}
