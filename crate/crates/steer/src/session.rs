//! One steering session: a simulation instance driven by protocol
//! messages and period ticks. Pure and deterministic; the server supplies
//! the clock.

use std::time::Duration;

use everting::arena::{
    evaluate_verdict, set_gamma, step_period, Scenario, ScenarioKind, SimState,
};
use everting::config::ScenarioConfig;
use everting::estimation::{predict_at_gamma, ParamCurves};
use everting::kinematics::Pose;
use everting::model::{MassAngle, RobotConfig};
use serde::{Deserialize, Serialize};

use crate::protocol::{ErrorCode, Inbound, Outbound, StateMsg};
use crate::SteerError;

/// Largest accepted `set_speed` factor.
pub const MAX_SPEED_FACTOR: f64 = 1000.0;
/// States kept for verdict evaluation since the last reset.
const HISTORY_CAP: usize = 20_000;

/// Everything needed to (re)create a session's initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub robot: RobotConfig,
    pub scenario: ScenarioConfig,
    pub curves: ParamCurves,
    pub gamma_deg: f64,
    pub speed_factor: f64,
}

impl SessionConfig {
    pub fn new(curves: ParamCurves) -> Self {
        Self {
            robot: RobotConfig::default(),
            scenario: ScenarioConfig::default(),
            curves,
            gamma_deg: 180.0,
            speed_factor: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Session {
    pub id: u64,
    config: SessionConfig,
    scenario: Scenario,
    state: SimState,
    paused: bool,
    speed_factor: f64,
    history: Vec<SimState>,
    verdict_sent: bool,
    trail: Vec<Pose>,
}

impl Session {
    pub fn new(id: u64, config: SessionConfig) -> Result<Self, SteerError> {
        config.curves.validate().map_err(SteerError::InvalidConfig)?;
        config
            .robot
            .validate()
            .map_err(|e| SteerError::InvalidConfig(e.to_string()))?;
        if !valid_speed(config.speed_factor) {
            return Err(SteerError::InvalidConfig(format!(
                "speed_factor must be in (0, {MAX_SPEED_FACTOR}]"
            )));
        }
        if !config.gamma_deg.is_finite() {
            return Err(SteerError::InvalidConfig("gamma_deg must be finite".into()));
        }
        let scenario = config.scenario.build(&config.robot);
        scenario
            .validate()
            .map_err(|e| SteerError::InvalidConfig(e.to_string()))?;
        let gamma = MassAngle::from_degrees(config.gamma_deg);
        let mut state = SimState::new(scenario.start, gamma, predict_at_gamma(&config.curves, gamma));
        state.reset_pose(scenario.start, &scenario.arena, &scenario.options);
        Ok(Self {
            id,
            speed_factor: config.speed_factor,
            config,
            scenario,
            history: vec![state.clone()],
            trail: vec![state.pose],
            state,
            paused: false,
            verdict_sent: false,
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    /// Index of the next period to be simulated.
    pub fn k(&self) -> u64 {
        self.state.period_index
    }

    pub fn is_paused(&self) -> bool {
        self.paused
    }

    pub fn speed_factor(&self) -> f64 {
        self.speed_factor
    }

    /// Every pose the session has shown, in order.
    pub fn trail(&self) -> &[Pose] {
        &self.trail
    }

    /// Wall-clock time per period.
    pub fn period_duration(&self) -> Duration {
        Duration::from_secs_f64(self.state.params.period_t / self.speed_factor)
    }

    pub fn state_msg(&self) -> Outbound {
        let s = &self.state;
        Outbound::State(StateMsg {
            k: s.period_index,
            t: s.sim_time,
            x: s.pose.position.x,
            y: s.pose.position.y,
            heading_deg: s.pose.heading().to_degrees(),
            gamma_deg: s.gamma.degrees(),
            contact: s.contact().map(|c| c.wall),
        })
    }

    /// Parses and applies one inbound line. Always yields exactly one
    /// ack or error, possibly followed by a state message.
    pub fn handle_line(&mut self, line: &str) -> Vec<Outbound> {
        match serde_json::from_str::<Inbound>(line) {
            Ok(msg) => self.handle_message(msg),
            Err(e) => vec![error(ErrorCode::Parse, e.to_string())],
        }
    }

    /// Applies `msg` at the current period boundary.
    pub fn handle_message(&mut self, msg: Inbound) -> Vec<Outbound> {
        let k = self.k();
        let ack = Outbound::Ack { applied_at_k: k };
        match msg {
            Inbound::SetGamma { deg } => {
                if !deg.is_finite() {
                    return vec![error(ErrorCode::Invalid, "deg must be finite".into())];
                }
                self.state = set_gamma(&self.state, MassAngle::from_degrees(deg), &self.config.curves);
                self.replace_last_history();
                vec![ack, self.state_msg()]
            }
            Inbound::Reset { x, y, heading_deg } => {
                if ![x, y, heading_deg].iter().all(|v| v.is_finite()) {
                    return vec![error(ErrorCode::Invalid, "reset values must be finite".into())];
                }
                let pose = Pose::new(x, y, heading_deg.to_radians());
                let mut probe = self.scenario.clone();
                probe.start = pose;
                if let Err(e) = probe.validate() {
                    return vec![error(ErrorCode::Invalid, e.to_string())];
                }
                self.restart(pose);
                vec![ack, self.state_msg()]
            }
            Inbound::Scenario { name } => {
                let kind: ScenarioKind = match name.parse() {
                    Ok(k) => k,
                    Err(e) => return vec![error(ErrorCode::UnknownScenario, e)],
                };
                let scenario = self.config.scenario.build_kind(kind, &self.config.robot);
                if let Err(e) = scenario.validate() {
                    return vec![error(ErrorCode::Invalid, e.to_string())];
                }
                let start = scenario.start;
                self.scenario = scenario;
                self.restart(start);
                vec![ack, self.state_msg()]
            }
            Inbound::Pause {} => {
                self.paused = true;
                vec![ack]
            }
            Inbound::Resume {} => {
                self.paused = false;
                vec![ack]
            }
            Inbound::SetSpeed { factor } => {
                if !valid_speed(factor) {
                    return vec![error(
                        ErrorCode::Invalid,
                        format!("factor must be in (0, {MAX_SPEED_FACTOR}]"),
                    )];
                }
                self.speed_factor = factor;
                vec![ack]
            }
        }
    }

    /// One wall-clock tick: advances a period unless paused.
    pub fn tick(&mut self) -> Vec<Outbound> {
        if self.paused {
            Vec::new()
        } else {
            self.advance()
        }
    }

    /// Simulates one period regardless of the pause flag.
    pub fn advance(&mut self) -> Vec<Outbound> {
        let params = self.state.params;
        self.state = step_period(&self.state, &params, &self.scenario.arena, &self.scenario.options);
        self.trail.push(self.state.pose);
        if self.history.len() >= HISTORY_CAP {
            self.history.drain(..HISTORY_CAP / 2);
        }
        self.history.push(self.state.clone());
        let mut out = vec![self.state_msg()];
        if !self.verdict_sent {
            let decided = match self.scenario.kind {
                ScenarioKind::Free => self.state.stuck,
                _ => true,
            };
            if decided {
                let v = evaluate_verdict(&self.scenario, &self.history);
                if v.passed || v.stuck {
                    self.verdict_sent = true;
                    out.push(Outbound::Verdict(v));
                }
            }
        }
        out
    }

    /// Moves the robot to `pose` and re-arms the verdict. `k` and the
    /// clock keep running.
    fn restart(&mut self, pose: Pose) {
        self.state.reset_pose(pose, &self.scenario.arena, &self.scenario.options);
        self.state.lap_progress.clear();
        self.history = vec![self.state.clone()];
        self.trail.push(pose);
        self.verdict_sent = false;
    }

    fn replace_last_history(&mut self) {
        if let Some(last) = self.history.last_mut() {
            *last = self.state.clone();
        }
    }
}

fn valid_speed(f: f64) -> bool {
    f.is_finite() && f > 0.0 && f <= MAX_SPEED_FACTOR
}

fn error(code: ErrorCode, detail: String) -> Outbound {
    Outbound::Error { code, detail }
}
