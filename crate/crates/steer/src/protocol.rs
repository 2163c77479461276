//! Wire messages. One JSON object per WebSocket text frame or per line.
//!
//! Angles are degrees on the wire and radians everywhere else.

use everting::arena::Verdict;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Inbound {
    SetGamma { deg: f64 },
    Reset { x: f64, y: f64, heading_deg: f64 },
    Scenario { name: String },
    Pause {},
    Resume {},
    SetSpeed { factor: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateMsg {
    pub k: u64,
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub heading_deg: f64,
    pub gamma_deg: f64,
    /// Id of the nearest touched wall.
    pub contact: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    /// Not JSON, or not one of the inbound message types.
    Parse,
    /// Well-formed but with a value out of range.
    Invalid,
    UnknownScenario,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Outbound {
    State(StateMsg),
    Ack { applied_at_k: u64 },
    Verdict(Verdict),
    Error { code: ErrorCode, detail: String },
}

impl Outbound {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("outbound messages serialise")
    }

    pub fn is_reply(&self) -> bool {
        matches!(self, Outbound::Ack { .. } | Outbound::Error { .. })
    }
}
