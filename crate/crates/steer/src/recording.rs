//! Append-only session recordings (newline-delimited JSON) and replay.
//!
//! Line 1 is a `header` holding the session config. Each inbound line is
//! stored verbatim with the period index `k` at which it was applied; a
//! `close` line marks the final `k` when the client went away.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::protocol::Outbound;
use crate::session::{Session, SessionConfig};
use crate::SteerError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RecordLine {
    Header {
        version: String,
        session: u64,
        config: SessionConfig,
    },
    Message {
        k: u64,
        /// Milliseconds since the session started; informational only.
        ms: u64,
        line: String,
    },
    Close {
        k: u64,
        ms: u64,
    },
}

/// Writes a recording; every line reaches the file before `append` returns.
#[derive(Debug)]
pub struct Recorder {
    file: File,
    path: PathBuf,
    started: Instant,
}

impl Recorder {
    pub fn create(path: &Path, session: &Session) -> Result<Self, SteerError> {
        let file = OpenOptions::new()
            .create_new(true)
            .append(true)
            .open(path)
            .map_err(|source| SteerError::Io {
                path: path.to_owned(),
                source,
            })?;
        let mut rec = Self {
            file,
            path: path.to_owned(),
            started: Instant::now(),
        };
        rec.write(&RecordLine::Header {
            version: everting::VERSION.to_owned(),
            session: session.id,
            config: session.config().clone(),
        })?;
        Ok(rec)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn message(&mut self, k: u64, line: &str) -> Result<(), SteerError> {
        let ms = self.elapsed_ms();
        self.write(&RecordLine::Message {
            k,
            ms,
            line: line.to_owned(),
        })
    }

    pub fn close(&mut self, k: u64) -> Result<(), SteerError> {
        let ms = self.elapsed_ms();
        self.write(&RecordLine::Close { k, ms })
    }

    fn elapsed_ms(&self) -> u64 {
        self.started.elapsed().as_millis() as u64
    }

    fn write(&mut self, line: &RecordLine) -> Result<(), SteerError> {
        let mut text = serde_json::to_string(line).expect("record lines serialise");
        text.push('\n');
        self.file
            .write_all(text.as_bytes())
            .and_then(|()| self.file.flush())
            .map_err(|source| SteerError::Io {
                path: self.path.clone(),
                source,
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub session: u64,
    pub config: SessionConfig,
    /// `Message` and `Close` lines in file order.
    pub entries: Vec<RecordLine>,
}

impl Recording {
    pub fn load(path: &Path) -> Result<Self, SteerError> {
        let file = File::open(path).map_err(|source| SteerError::Io {
            path: path.to_owned(),
            source,
        })?;
        let mut lines = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|source| SteerError::Io {
                path: path.to_owned(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed = serde_json::from_str(&line).map_err(|e| SteerError::BadRecording {
                line: i + 1,
                reason: e.to_string(),
            })?;
            lines.push(parsed);
        }
        Self::from_lines(lines)
    }

    pub fn from_lines(lines: Vec<RecordLine>) -> Result<Self, SteerError> {
        let mut it = lines.into_iter();
        let (session, config) = match it.next() {
            Some(RecordLine::Header { session, config, .. }) => (session, config),
            _ => {
                return Err(SteerError::BadRecording {
                    line: 1,
                    reason: "first line must be a header".into(),
                })
            }
        };
        let entries: Vec<RecordLine> = it.collect();
        let mut last = 0;
        for (i, e) in entries.iter().enumerate() {
            let k = match e {
                RecordLine::Message { k, .. } | RecordLine::Close { k, .. } => *k,
                RecordLine::Header { .. } => {
                    return Err(SteerError::BadRecording {
                        line: i + 2,
                        reason: "duplicate header".into(),
                    })
                }
            };
            if k < last {
                return Err(SteerError::BadRecording {
                    line: i + 2,
                    reason: format!("period index {k} goes backwards"),
                });
            }
            last = k;
        }
        Ok(Self {
            session,
            config,
            entries,
        })
    }
}

/// Result of re-running a recording.
#[derive(Debug, Clone)]
pub struct Replay {
    pub session: Session,
    /// Every outbound message the live session would have produced,
    /// excluding the initial state sent on connect.
    pub outbound: Vec<Outbound>,
}

/// Re-runs a recording against a fresh session. Periods are simulated up
/// to each entry's `k` before the entry is applied.
pub fn replay(recording: &Recording) -> Result<Replay, SteerError> {
    let mut session = Session::new(recording.session, recording.config.clone())?;
    let mut outbound = Vec::new();
    for entry in &recording.entries {
        let k = match entry {
            RecordLine::Message { k, .. } | RecordLine::Close { k, .. } => *k,
            RecordLine::Header { .. } => unreachable!("validated in from_lines"),
        };
        while session.k() < k {
            outbound.extend(session.advance());
        }
        if let RecordLine::Message { line, .. } = entry {
            outbound.extend(session.handle_line(line));
        }
    }
    Ok(Replay { session, outbound })
}
