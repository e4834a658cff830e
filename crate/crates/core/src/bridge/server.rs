//! WebSocket front end: accepts sessions, feeds commands to the simulation
//! thread and fans published frames out through the hub.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc as std_mpsc, Arc};
use std::thread::JoinHandle;

use futures_util::{SinkExt, StreamExt};
use tokio::net::{TcpListener, TcpStream};
use tokio::runtime::Runtime;
use tokio::sync::mpsc;
use tokio_tungstenite::tungstenite::Message;

use super::hub::{FrameClass, Hub, QueueLimits, SessionShared, SessionStats};
use super::messages::Publisher;
use super::protocol::{handle_binary, handle_envelope, InboundCommand, Session};
use super::sim_loop::{run_loop, Driver, LoopContext, LoopOutcome, LoopParams, LoopProbe, Pacing, Tick};

pub const DEFAULT_BIND: &str = "127.0.0.1:9090";

#[derive(Clone, Debug)]
pub struct BridgeConfig {
    pub bind: String,
    pub dt: f64,
    pub pacing: Pacing,
    pub limits: QueueLimits,
    /// Hold stepping until the first client connects.
    pub wait_for_client: bool,
}

impl Default for BridgeConfig {
    fn default() -> Self {
        BridgeConfig {
            bind: DEFAULT_BIND.into(),
            dt: 0.02,
            pacing: Pacing::RealTime,
            limits: QueueLimits::default(),
            wait_for_client: false,
        }
    }
}

/// A running bridge. Dropping it stops the simulation thread and the server.
pub struct BridgeHandle {
    addr: SocketAddr,
    hub: Arc<Hub>,
    probe: Arc<LoopProbe>,
    shutdown: Arc<AtomicBool>,
    sim_thread: Option<JoinHandle<LoopOutcome>>,
    runtime: Option<Runtime>,
}

impl BridgeHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn probe(&self) -> &LoopProbe {
        &self.probe
    }

    pub fn session_stats(&self) -> Vec<SessionStats> {
        self.hub.stats()
    }

    pub fn session_count(&self) -> usize {
        self.hub.session_count()
    }

    /// True once the simulation thread has exited on its own.
    pub fn is_finished(&self) -> bool {
        self.sim_thread.as_ref().is_none_or(|t| t.is_finished())
    }

    /// Waits for the simulation thread to end (a scenario finishing or
    /// aborting), then stops the server.
    pub fn join(mut self) -> LoopOutcome {
        self.finish()
    }

    /// Stops stepping now and tears everything down.
    pub fn shutdown(mut self) -> LoopOutcome {
        self.shutdown.store(true, Ordering::Release);
        self.finish()
    }

    fn finish(&mut self) -> LoopOutcome {
        let outcome = self
            .sim_thread
            .take()
            .map(|t| t.join().expect("simulation thread panicked"))
            .unwrap_or(LoopOutcome { steps: 0, run: None, error: None });
        if let Some(rt) = self.runtime.take() {
            rt.shutdown_background();
        }
        outcome
    }
}

impl Drop for BridgeHandle {
    fn drop(&mut self) {
        self.shutdown.store(true, Ordering::Release);
        if self.sim_thread.is_some() || self.runtime.is_some() {
            self.finish();
        }
    }
}

/// Binds the listener and starts the simulation thread and server tasks.
/// Bind failures are reported before anything starts.
pub fn start(driver: Driver, config: BridgeConfig) -> std::io::Result<BridgeHandle> {
    let std_listener = std::net::TcpListener::bind(&config.bind)?;
    std_listener.set_nonblocking(true)?;
    let addr = std_listener.local_addr()?;

    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .thread_name("marun-bridge")
        .enable_all()
        .build()?;
    let listener = {
        let _guard = runtime.enter();
        TcpListener::from_std(std_listener)?
    };

    let hub = Arc::new(Hub::new(config.limits));
    let probe = Arc::new(LoopProbe::default());
    let shutdown = Arc::new(AtomicBool::new(false));
    let (cmd_tx, cmd_rx) = std_mpsc::channel::<InboundCommand>();
    let (tick_tx, tick_rx) = mpsc::channel::<Tick>(256);

    runtime.spawn(publish_task(tick_rx, hub.clone(), config.dt));
    runtime.spawn(accept_loop(listener, hub.clone(), cmd_tx));
    log::info!("bridge listening on ws://{addr}");

    let params = LoopParams { dt: config.dt, pacing: config.pacing, wait_for_client: config.wait_for_client };
    let ctx = LoopContext { commands: cmd_rx, ticks: tick_tx, hub: hub.clone(), probe: probe.clone(), shutdown: shutdown.clone() };
    let sim_thread = std::thread::Builder::new().name("marun-sim".into()).spawn(move || run_loop(driver, params, ctx))?;

    Ok(BridgeHandle { addr, hub, probe, shutdown, sim_thread: Some(sim_thread), runtime: Some(runtime) })
}

async fn publish_task(mut ticks: mpsc::Receiver<Tick>, hub: Arc<Hub>, dt: f64) {
    let mut publisher = Publisher::default();
    while let Some(tick) = ticks.recv().await {
        match publisher.frames(&tick.snapshot, dt, tick.status.as_ref(), |i| hub.wanted(i)) {
            Ok(frames) => hub.dispatch(&frames),
            Err(e) => log::error!("cannot publish step {}: {e}", tick.snapshot.step),
        }
    }
}

async fn accept_loop(listener: TcpListener, hub: Arc<Hub>, commands: std_mpsc::Sender<InboundCommand>) {
    loop {
        match listener.accept().await {
            Ok((stream, peer)) => {
                let _ = stream.set_nodelay(true);
                tokio::spawn(serve_session(stream, peer, hub.clone(), commands.clone()));
            }
            Err(e) => log::warn!("accept failed: {e}"),
        }
    }
}

async fn serve_session(stream: TcpStream, peer: SocketAddr, hub: Arc<Hub>, commands: std_mpsc::Sender<InboundCommand>) {
    let ws = match tokio_tungstenite::accept_async(stream).await {
        Ok(ws) => ws,
        Err(e) => {
            log::warn!("handshake with {peer} failed: {e}");
            return;
        }
    };
    let (sink, mut source) = ws.split();
    let shared = hub.register();
    log::info!("session {} opened from {peer}", shared.id);
    let writer = tokio::spawn(write_session(sink, shared.clone()));

    let mut session = Session::new(shared.id);
    while let Some(msg) = source.next().await {
        let handled = match msg {
            Ok(Message::Text(text)) => handle_envelope(&mut session, &text),
            Ok(Message::Binary(_)) => handle_binary(&mut session),
            Ok(Message::Close(_)) | Err(_) => break,
            Ok(_) => continue,
        };
        shared.set_subscriptions(&session.subscriptions);
        if let Some(response) = handled.response {
            shared.push(FrameClass::Event, Arc::from(response));
        }
        if let Some(cmd) = handled.command {
            if commands.send(cmd).is_err() {
                break;
            }
        }
    }
    hub.unregister(shared.id);
    writer.abort();
    log::info!("session {} closed ({} frames in, {} errors)", shared.id, session.frames_in, session.errors);
}

async fn write_session<S>(mut sink: S, shared: Arc<SessionShared>)
where
    S: futures_util::Sink<Message> + Unpin,
{
    loop {
        let frames = shared.drain();
        if frames.is_empty() {
            if shared.is_closed() {
                break;
            }
            shared.wait().await;
            continue;
        }
        let n = frames.len() as u64;
        for f in frames {
            if sink.feed(Message::Text(f.to_string())).await.is_err() {
                return;
            }
        }
        if sink.flush().await.is_err() {
            return;
        }
        shared.mark_sent(n);
    }
    let _ = sink.close().await;
}
