#![allow(dead_code)]

use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use futures_util::{SinkExt, StreamExt};
use serde::Deserialize;
use serde_json::Value;
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};

use marun::bridge::hub::SessionStats;
use marun::bridge::protocol::{handle_envelope, Session};
use marun::bridge::topics::TOPICS;
use marun::bridge::{self, BridgeConfig, BridgeHandle, Driver, Pacing};
use marun::scenario::{load_scenario, run_scenario, LoadedScenario, ScenarioRun, ScriptedController, Scene};
use marun::sim::Command;

pub const DT: f64 = 0.02;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn load(scenario: &str) -> LoadedScenario {
    load_scenario(&fixtures().join(format!("{scenario}.json"))).expect("fixture loads")
}

pub fn script(solution: &str) -> ScriptedController {
    ScriptedController::load(&fixtures().join(format!("{solution}.jsonl"))).expect("script loads")
}

pub fn run_fixture(scenario: &str, solution: &str) -> (LoadedScenario, ScenarioRun) {
    let loaded = load(scenario);
    let run = run_scenario(&loaded.spec, &loaded.scene, &mut script(solution), DT).expect("scenario runs");
    (loaded, run)
}

/// Test 3 runs the Test 1 controller.
pub const FIXTURES: [(&str, &str); 3] = [("test1", "sol1"), ("test2", "sol2"), ("test3", "sol1")];

#[derive(Debug, Deserialize)]
pub struct CorpusCase {
    pub name: String,
    pub frame: String,
    pub response: Option<String>,
    #[serde(default)]
    pub subscribed: Option<Vec<String>>,
    #[serde(default)]
    pub command: Option<Value>,
}

pub fn corpus() -> Vec<CorpusCase> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/protocol_corpus.jsonl");
    let text = std::fs::read_to_string(path).expect("corpus readable");
    text.lines().filter(|l| !l.trim().is_empty()).map(|l| serde_json::from_str(l).expect("corpus line parses")).collect()
}

fn command_json(cmd: &Command) -> Value {
    match cmd {
        Command::Limb { limb, axes, grip } => serde_json::json!({ "limb": limb, "axes": axes, "grip": grip }),
        Command::Vehicle(p) => serde_json::json!({ "vehicle": p.as_array() }),
    }
}

/// Runs one case against a fresh session; `Err` explains the mismatch.
pub fn check_case(case: &CorpusCase) -> Result<(), String> {
    let mut session = Session::new(1);
    let handled = handle_envelope(&mut session, &case.frame);
    if handled.response != case.response {
        return Err(format!("{}: response {:?}, expected {:?}", case.name, handled.response, case.response));
    }
    if let Some(expected) = &case.subscribed {
        let got: Vec<String> = session.subscriptions.iter().map(|i| TOPICS[*i].name.to_owned()).collect();
        if &got != expected {
            return Err(format!("{}: subscriptions {got:?}, expected {expected:?}", case.name));
        }
    }
    let got = handled.command.as_ref().map(|c| command_json(&c.command));
    if got != case.command {
        return Err(format!("{}: command {got:?}, expected {:?}", case.name, case.command));
    }
    Ok(())
}

pub type Ws = WebSocketStream<MaybeTlsStream<TcpStream>>;

pub fn runtime() -> tokio::runtime::Runtime {
    tokio::runtime::Builder::new_multi_thread().worker_threads(4).enable_all().build().expect("runtime")
}

pub fn start_idle_bridge(pacing: Pacing) -> BridgeHandle {
    let sim = Scene::empty().build_simulation(DT).expect("default robot");
    let config = BridgeConfig { bind: "127.0.0.1:0".into(), dt: DT, pacing, ..Default::default() };
    bridge::start(Driver::Free(Box::new(sim)), config).expect("bridge starts")
}

pub async fn connect(addr: SocketAddr) -> Ws {
    let (ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}")).await.expect("connects");
    ws
}

/// Client whose kernel receive buffer is tiny, so an unread socket backs
/// up into the server quickly.
pub async fn connect_small_buffer(addr: SocketAddr) -> WebSocketStream<TcpStream> {
    let socket = tokio::net::TcpSocket::new_v4().expect("socket");
    socket.set_recv_buffer_size(4096).expect("rcvbuf");
    let stream = socket.connect(addr).await.expect("tcp connects");
    let (ws, _) = tokio_tungstenite::client_async(format!("ws://{addr}"), stream).await.expect("handshake");
    ws
}

pub async fn send(ws: &mut Ws, frame: &str) {
    ws.send(Message::Text(frame.to_owned())).await.expect("sends");
}

pub async fn subscribe(ws: &mut Ws, topic: &str) {
    send(ws, &format!(r#"{{"op":"subscribe","topic":"{topic}"}}"#)).await;
}

/// Next text frame, or `None` on timeout or close.
pub async fn next_text(ws: &mut Ws, timeout: Duration) -> Option<String> {
    let deadline = tokio::time::Instant::now() + timeout;
    loop {
        match tokio::time::timeout_at(deadline, ws.next()).await {
            Ok(Some(Ok(Message::Text(t)))) => return Some(t),
            Ok(Some(Ok(_))) => continue,
            _ => return None,
        }
    }
}

/// Collects `(topic, frame, arrival)` for `duration`.
pub async fn collect(ws: &mut Ws, duration: Duration) -> Vec<(String, Value, Instant)> {
    let end = tokio::time::Instant::now() + duration;
    let mut out = Vec::new();
    while let Ok(Some(Ok(msg))) = tokio::time::timeout_at(end, ws.next()).await {
        if let Message::Text(t) = msg {
            let v: Value = serde_json::from_str(&t).expect("server sends JSON");
            let topic = v["topic"].as_str().unwrap_or_default().to_owned();
            out.push((topic, v, Instant::now()));
        }
    }
    out
}

pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let i = ((sorted.len() - 1) as f64 * p).round() as usize;
    sorted[i]
}

/// Publish→receive delays (ms) on the 50 Hz segments topic, seen by
/// `clients` concurrent subscribers over `duration`.
pub fn measure_latency(clients: usize, duration: Duration) -> Vec<f64> {
    let handle = start_idle_bridge(Pacing::RealTime);
    let addr = handle.local_addr();
    let rt = runtime();
    let arrivals: Vec<Vec<(u64, Instant)>> = rt.block_on(async {
        let mut tasks = Vec::new();
        for _ in 0..clients {
            tasks.push(tokio::spawn(async move {
                let mut ws = connect(addr).await;
                subscribe(&mut ws, "/ursula/limb/0/segments").await;
                subscribe(&mut ws, "/ursula/vehicle/odom").await;
                collect(&mut ws, duration)
                    .await
                    .into_iter()
                    .filter(|(t, _, _)| t == "/ursula/limb/0/segments")
                    .map(|(_, v, at)| (v["msg"]["header"]["step"].as_u64().expect("step"), at))
                    .collect::<Vec<_>>()
            }));
        }
        let mut all = Vec::new();
        for t in tasks {
            all.push(t.await.expect("client task"));
        }
        all
    });
    let probe = handle.probe();
    let mut delays: Vec<f64> = arrivals
        .iter()
        .flatten()
        .filter_map(|(step, at)| probe.published_at(*step).map(|p| at.duration_since(p).as_secs_f64() * 1e3))
        .collect();
    delays.sort_by(f64::total_cmp);
    drop(handle);
    delays
}

/// Step-period deviations from `dt` (ms) while one client subscribed to
/// everything never reads its socket, plus that session's queue counters.
pub fn measure_jitter_with_stalled_client(duration: Duration) -> (Vec<f64>, SessionStats) {
    let handle = start_idle_bridge(Pacing::RealTime);
    let addr = handle.local_addr();
    let rt = runtime();
    let stalled = rt.block_on(async {
        let mut ws = connect_small_buffer(addr).await;
        for t in TOPICS.iter().filter(|t| !t.name.ends_with("cmd")) {
            ws.send(Message::Text(format!(r#"{{"op":"subscribe","topic":"{}"}}"#, t.name))).await.expect("sends");
        }
        ws
    });
    // Let the stalled session's socket buffers fill before measuring.
    std::thread::sleep(Duration::from_millis(500));
    handle.probe().clear_periods();
    std::thread::sleep(duration);
    let mut jitter: Vec<f64> =
        handle.probe().periods().iter().map(|p| (p.as_secs_f64() - DT).abs() * 1e3).collect();
    jitter.sort_by(f64::total_cmp);
    let stats = handle.session_stats().into_iter().next().expect("stalled session registered");
    drop(stalled);
    drop(handle);
    (jitter, stats)
}
