//! Live steering sessions for the arena simulation.
//!
//! A client connects over plain TCP (newline-delimited JSON) or WebSocket,
//! receives a `state` message every period and changes γ, pose or arena
//! with inbound messages. Each connection is an independent session whose
//! inbound messages are recorded for exact replay.

use std::path::PathBuf;

use thiserror::Error;

pub mod protocol;
pub mod recording;
pub mod server;
pub mod session;

pub use protocol::{ErrorCode, Inbound, Outbound, StateMsg};
pub use recording::{replay, Recorder, Recording, Replay};
pub use server::{ServeConfig, Server};
pub use session::{Session, SessionConfig};

#[derive(Debug, Error)]
pub enum SteerError {
    #[error("invalid session config: {0}")]
    InvalidConfig(String),
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: String,
        #[source]
        source: std::io::Error,
    },
    #[error("websocket handshake failed: {0}")]
    Handshake(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("recording line {line}: {reason}")]
    BadRecording { line: usize, reason: String },
}
