use std::time::Duration;

use everting::estimation::ParamCurves;
use everting::kinematics::MotionParams;
use everting_steer::recording::RecordLine;
use everting_steer::*;
use futures_util::{SinkExt, StreamExt};
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader, Lines};
use tokio::net::tcp::{OwnedReadHalf, OwnedWriteHalf};
use tokio::net::TcpStream;
use tokio::sync::mpsc;
use tokio::time::{timeout, Instant};
use tokio_tungstenite::tungstenite::Message;

fn session_config(period_t: f64, speed: f64) -> SessionConfig {
    let mut cfg = SessionConfig::new(ParamCurves::constant(
        &MotionParams::new(0.2, 0.02, period_t, 0.0).unwrap(),
    ));
    cfg.scenario.name = everting::arena::ScenarioKind::Free;
    cfg.speed_factor = speed;
    cfg
}

async fn start(cfg: SessionConfig, record_dir: Option<std::path::PathBuf>) -> std::net::SocketAddr {
    let server = Server::bind(ServeConfig {
        addr: "127.0.0.1:0".into(),
        session: cfg,
        record_dir,
    })
    .await
    .unwrap();
    let addr = server.local_addr().unwrap();
    tokio::spawn(server.run());
    addr
}

struct Client {
    lines: Lines<BufReader<OwnedReadHalf>>,
    write: OwnedWriteHalf,
}

impl Client {
    async fn connect(addr: std::net::SocketAddr) -> Self {
        let (r, w) = TcpStream::connect(addr).await.unwrap().into_split();
        Self {
            lines: BufReader::new(r).lines(),
            write: w,
        }
    }

    async fn send(&mut self, line: &str) {
        self.write.write_all(format!("{line}\n").as_bytes()).await.unwrap();
    }

    async fn recv(&mut self) -> Outbound {
        let line = timeout(Duration::from_secs(5), self.lines.next_line())
            .await
            .expect("server went quiet")
            .unwrap()
            .expect("connection closed");
        serde_json::from_str(&line).unwrap()
    }

    async fn recv_reply(&mut self) -> Outbound {
        loop {
            let m = self.recv().await;
            if m.is_reply() {
                return m;
            }
        }
    }
}

fn state_k(m: &Outbound) -> Option<u64> {
    match m {
        Outbound::State(s) => Some(s.k),
        _ => None,
    }
}

#[tokio::test]
async fn silent_client_receives_states_at_cadence() {
    // 0.5 s periods at speed 25: one state every 20 ms
    let addr = start(session_config(0.5, 25.0), None).await;
    let mut c = Client::connect(addr).await;
    let t0 = Instant::now();
    let mut ks = Vec::new();
    while ks.len() < 21 {
        ks.extend(state_k(&c.recv().await));
    }
    let elapsed = t0.elapsed();
    assert_eq!(ks, (0..21).collect::<Vec<u64>>());
    assert!(elapsed >= Duration::from_millis(380), "{elapsed:?}");
    assert!(elapsed < Duration::from_millis(1500), "{elapsed:?}");
}

#[tokio::test]
async fn malformed_line_keeps_connection_open() {
    let addr = start(session_config(1.0, 50.0), None).await;
    let mut c = Client::connect(addr).await;
    c.send("{this is not json").await;
    match c.recv_reply().await {
        Outbound::Error { code, .. } => assert_eq!(code, ErrorCode::Parse),
        other => panic!("{other:?}"),
    }
    c.send(r#"{"type":"set_gamma","deg":150}"#).await;
    assert!(matches!(c.recv_reply().await, Outbound::Ack { .. }));
}

#[tokio::test]
async fn clients_get_independent_sessions() {
    let addr = start(session_config(1.0, 50.0), None).await;
    let mut a = Client::connect(addr).await;
    let mut b = Client::connect(addr).await;
    a.send(r#"{"type":"reset","x":5,"y":5,"heading_deg":0}"#).await;
    assert!(matches!(a.recv_reply().await, Outbound::Ack { .. }));
    let mut seen = 0;
    while seen < 5 {
        if let Outbound::State(s) = b.recv().await {
            assert!(s.x.abs() < 1.0 && s.y.abs() < 1.0, "{s:?}");
            seen += 1;
        }
    }
}

#[tokio::test]
async fn websocket_clients_speak_the_same_protocol() {
    let addr = start(session_config(1.0, 50.0), None).await;
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/")).await.unwrap();
    let first = ws.next().await.unwrap().unwrap();
    let msg: Outbound = serde_json::from_str(first.to_text().unwrap()).unwrap();
    assert_eq!(state_k(&msg), Some(0));
    ws.send(Message::text(r#"{"type":"pause"}"#)).await.unwrap();
    ws.send(Message::text("oops")).await.unwrap();
    let mut replies = Vec::new();
    while replies.len() < 2 {
        let frame = timeout(Duration::from_secs(5), ws.next()).await.unwrap().unwrap().unwrap();
        let m: Outbound = serde_json::from_str(frame.to_text().unwrap()).unwrap();
        if m.is_reply() {
            replies.push(m);
        }
    }
    assert!(matches!(replies[0], Outbound::Ack { .. }));
    assert!(matches!(replies[1], Outbound::Error { code: ErrorCode::Parse, .. }));
}

#[tokio::test]
async fn killed_client_leaves_a_complete_recording() {
    let dir = tempfile::tempdir().unwrap();
    let addr = start(session_config(1.0, 50.0), Some(dir.path().to_owned())).await;
    let mut c = Client::connect(addr).await;
    c.send(r#"{"type":"set_gamma","deg":300}"#).await;
    let applied = match c.recv_reply().await {
        Outbound::Ack { applied_at_k } => applied_at_k,
        other => panic!("{other:?}"),
    };
    c.send("junk").await;
    c.recv_reply().await;
    drop(c);

    let deadline = Instant::now() + Duration::from_secs(5);
    let path = loop {
        let found = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().path())
            .find(|p| std::fs::read_to_string(p).is_ok_and(|t| t.contains("\"close\"")));
        if let Some(p) = found {
            break p;
        }
        assert!(Instant::now() < deadline, "recording never closed");
        tokio::time::sleep(Duration::from_millis(20)).await;
    };
    let rec = Recording::load(&path).unwrap();
    assert_eq!(rec.entries.len(), 3);
    assert!(matches!(&rec.entries[0], RecordLine::Message { k, .. } if *k == applied));
    let close_k = match rec.entries[2] {
        RecordLine::Close { k, .. } => k,
        _ => panic!(),
    };
    let r = replay(&rec).unwrap();
    assert_eq!(r.session.k(), close_k);
    assert!((r.session.state().gamma.degrees() - 300.0).abs() < 1e-9);
}

#[tokio::test]
async fn bind_failure_is_reported() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    let err = Server::bind(ServeConfig {
        addr,
        session: session_config(1.0, 1.0),
        record_dir: None,
    })
    .await
    .err()
    .unwrap();
    assert!(matches!(err, SteerError::Bind { .. }));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn cadence_drift_under_one_period_over_a_thousand() {
    // 0.25 s periods at speed 50: 5 ms per period, 5 s in total
    let session = Session::new(9, session_config(0.25, 50.0)).unwrap();
    let per = session.period_duration();
    let (_in_tx, in_rx) = mpsc::channel(8);
    let (out_tx, mut out_rx) = mpsc::channel(4096);
    let t0 = Instant::now();
    tokio::spawn(server::run_session(session, None, in_rx, out_tx));
    loop {
        let line = out_rx.recv().await.unwrap();
        let m: Outbound = serde_json::from_str(&line).unwrap();
        if state_k(&m) == Some(1000) {
            break;
        }
    }
    let elapsed = t0.elapsed();
    let expected = per * 1000;
    let drift = elapsed.abs_diff(expected);
    assert!(drift < per, "elapsed {elapsed:?}, expected {expected:?}");
}
