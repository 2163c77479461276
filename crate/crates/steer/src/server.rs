//! Network front end: one session per TCP connection.
//!
//! A connection whose first bytes are `GET ` is upgraded to WebSocket
//! (one message per text frame); anything else, including silence, is
//! treated as newline-delimited JSON.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::mpsc;
use tokio::time::{sleep_until, timeout, Instant};
use tokio_tungstenite::tungstenite::Message;

use crate::recording::Recorder;
use crate::session::{Session, SessionConfig};
use crate::SteerError;

/// How long a silent client may wait before being treated as NDJSON.
const SNIFF_TIMEOUT: Duration = Duration::from_millis(150);
const CHANNEL_DEPTH: usize = 1024;

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub addr: String,
    pub session: SessionConfig,
    /// Directory receiving one `session-<id>-<port>.ndjson` per connection.
    pub record_dir: Option<PathBuf>,
}

pub struct Server {
    listener: TcpListener,
    config: Arc<ServeConfig>,
    next_id: Arc<AtomicU64>,
}

impl Server {
    /// Validates the session config and binds the listening socket.
    pub async fn bind(config: ServeConfig) -> Result<Self, SteerError> {
        Session::new(0, config.session.clone())?;
        let listener = TcpListener::bind(&config.addr)
            .await
            .map_err(|source| SteerError::Bind {
                addr: config.addr.clone(),
                source,
            })?;
        Ok(Self {
            listener,
            config: Arc::new(config),
            next_id: Arc::new(AtomicU64::new(1)),
        })
    }

    pub fn local_addr(&self) -> std::io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Accepts connections until the task is dropped.
    pub async fn run(self) -> std::io::Result<()> {
        loop {
            let (stream, peer) = self.listener.accept().await?;
            let id = self.next_id.fetch_add(1, Ordering::Relaxed);
            let config = Arc::clone(&self.config);
            tokio::spawn(async move {
                if let Err(e) = serve_connection(stream, peer, id, &config).await {
                    eprintln!("session {id} ({peer}): {e}");
                }
            });
        }
    }
}

async fn is_websocket(stream: &TcpStream) -> bool {
    let deadline = Instant::now() + SNIFF_TIMEOUT;
    let mut buf = [0u8; 4];
    loop {
        let n = match timeout(deadline.saturating_duration_since(Instant::now()), stream.peek(&mut buf)).await {
            Ok(Ok(n)) => n,
            _ => return false,
        };
        if n == 0 || !b"GET "[..n.min(4)].eq(&buf[..n.min(4)]) {
            return false;
        }
        if n >= 4 {
            return true;
        }
        tokio::time::sleep(Duration::from_millis(2)).await;
    }
}

async fn serve_connection(stream: TcpStream, peer: SocketAddr, id: u64, config: &ServeConfig) -> Result<(), SteerError> {
    let session = Session::new(id, config.session.clone())?;
    let recorder = match &config.record_dir {
        Some(dir) => Some(Recorder::create(
            &dir.join(format!("session-{id}-{}.ndjson", peer.port())),
            &session,
        )?),
        None => None,
    };
    let (in_tx, in_rx) = mpsc::channel::<String>(CHANNEL_DEPTH);
    let (out_tx, mut out_rx) = mpsc::channel::<String>(CHANNEL_DEPTH);

    if is_websocket(&stream).await {
        let ws = tokio_tungstenite::accept_async(stream)
            .await
            .map_err(|e| SteerError::Handshake(e.to_string()))?;
        let (mut sink, mut source) = ws.split();
        tokio::spawn(async move {
            while let Some(Ok(msg)) = source.next().await {
                match msg {
                    Message::Text(text) => {
                        if in_tx.send(text.to_string()).await.is_err() {
                            break;
                        }
                    }
                    Message::Close(_) => break,
                    _ => {}
                }
            }
        });
        tokio::spawn(async move {
            while let Some(text) = out_rx.recv().await {
                if sink.send(Message::text(text)).await.is_err() {
                    break;
                }
            }
            let _ = sink.close().await;
        });
    } else {
        let (read, mut write) = stream.into_split();
        tokio::spawn(async move {
            let mut lines = BufReader::new(read).lines();
            while let Ok(Some(line)) = lines.next_line().await {
                if line.trim().is_empty() {
                    continue;
                }
                if in_tx.send(line).await.is_err() {
                    break;
                }
            }
        });
        tokio::spawn(async move {
            while let Some(mut text) = out_rx.recv().await {
                text.push('\n');
                if write.write_all(text.as_bytes()).await.is_err() {
                    break;
                }
            }
        });
    }
    run_session(session, recorder, in_rx, out_tx).await
}

/// Drives one session until the client goes away. Inbound lines are
/// applied between ticks, i.e. at period boundaries.
pub async fn run_session(
    mut session: Session,
    mut recorder: Option<Recorder>,
    mut inbound: mpsc::Receiver<String>,
    outbound: mpsc::Sender<String>,
) -> Result<(), SteerError> {
    let mut open = outbound.send(session.state_msg().to_json()).await.is_ok();
    let mut next = Instant::now() + session.period_duration();
    while open {
        tokio::select! {
            line = inbound.recv() => {
                let Some(line) = line else { break };
                if let Some(rec) = recorder.as_mut() {
                    rec.message(session.k(), &line)?;
                }
                for msg in session.handle_line(&line) {
                    open &= outbound.send(msg.to_json()).await.is_ok();
                }
            }
            _ = sleep_until(next) => {
                for msg in session.tick() {
                    open &= outbound.send(msg.to_json()).await.is_ok();
                }
                next += session.period_duration();
            }
        }
    }
    if let Some(rec) = recorder.as_mut() {
        rec.close(session.k())?;
    }
    Ok(())
}
