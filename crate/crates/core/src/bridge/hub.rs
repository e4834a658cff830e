//! Session registry and per-session bounded outboxes.
//!
//! The publisher pushes shared frames into every subscribed session's
//! outbox without waiting on any socket. State frames are latest-wins: once
//! a session holds `state` of them, the oldest is dropped. Event frames
//! (contacts, scenario state, status replies) get a larger bound.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use tokio::sync::Notify;

use super::topics::{TopicKind, TOPICS};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QueueLimits {
    pub state: usize,
    pub events: usize,
}

impl Default for QueueLimits {
    fn default() -> Self {
        QueueLimits { state: 64, events: 1024 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameClass {
    State,
    Event,
}

pub fn frame_class(topic_index: usize) -> FrameClass {
    match TOPICS[topic_index].kind {
        TopicKind::Contacts | TopicKind::ScenarioState => FrameClass::Event,
        _ => FrameClass::State,
    }
}

#[derive(Default)]
struct Outbox {
    frames: VecDeque<(FrameClass, Arc<str>)>,
    state: usize,
    events: usize,
}

/// Counters for one session.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SessionStats {
    pub id: u64,
    pub sent: u64,
    pub dropped_state: u64,
    pub dropped_events: u64,
}

pub struct SessionShared {
    pub id: u64,
    subscribed: Vec<AtomicBool>,
    outbox: Mutex<Outbox>,
    notify: Notify,
    sent: AtomicU64,
    dropped_state: AtomicU64,
    dropped_events: AtomicU64,
    closed: AtomicBool,
    limits: QueueLimits,
}

impl SessionShared {
    fn new(id: u64, limits: QueueLimits) -> Self {
        SessionShared {
            id,
            subscribed: TOPICS.iter().map(|_| AtomicBool::new(false)).collect(),
            outbox: Mutex::new(Outbox::default()),
            notify: Notify::new(),
            sent: AtomicU64::new(0),
            dropped_state: AtomicU64::new(0),
            dropped_events: AtomicU64::new(0),
            closed: AtomicBool::new(false),
            limits,
        }
    }

    pub fn set_subscriptions(&self, topics: &std::collections::BTreeSet<usize>) {
        for (i, flag) in self.subscribed.iter().enumerate() {
            flag.store(topics.contains(&i), Ordering::Release);
        }
    }

    pub fn is_subscribed(&self, topic_index: usize) -> bool {
        self.subscribed[topic_index].load(Ordering::Acquire)
    }

    /// Queues a frame, evicting the oldest frame of the same class when full.
    pub fn push(&self, class: FrameClass, frame: Arc<str>) {
        let mut o = self.outbox.lock().expect("outbox lock");
        let (count, limit, dropped) = match class {
            FrameClass::State => (o.state, self.limits.state, &self.dropped_state),
            FrameClass::Event => (o.events, self.limits.events, &self.dropped_events),
        };
        if count >= limit {
            if let Some(pos) = o.frames.iter().position(|(c, _)| *c == class) {
                o.frames.remove(pos);
                dropped.fetch_add(1, Ordering::Relaxed);
                match class {
                    FrameClass::State => o.state -= 1,
                    FrameClass::Event => o.events -= 1,
                }
            }
        }
        o.frames.push_back((class, frame));
        match class {
            FrameClass::State => o.state += 1,
            FrameClass::Event => o.events += 1,
        }
        drop(o);
        self.notify.notify_one();
    }

    /// Takes everything queued so far.
    pub fn drain(&self) -> Vec<Arc<str>> {
        let mut o = self.outbox.lock().expect("outbox lock");
        o.state = 0;
        o.events = 0;
        o.frames.drain(..).map(|(_, f)| f).collect()
    }

    /// Waits until something is queued or the session is closed.
    pub async fn wait(&self) {
        self.notify.notified().await
    }

    pub fn mark_sent(&self, n: u64) {
        self.sent.fetch_add(n, Ordering::Relaxed);
    }

    pub fn close(&self) {
        self.closed.store(true, Ordering::Release);
        self.notify.notify_one();
    }

    pub fn is_closed(&self) -> bool {
        self.closed.load(Ordering::Acquire)
    }

    pub fn stats(&self) -> SessionStats {
        SessionStats {
            id: self.id,
            sent: self.sent.load(Ordering::Relaxed),
            dropped_state: self.dropped_state.load(Ordering::Relaxed),
            dropped_events: self.dropped_events.load(Ordering::Relaxed),
        }
    }
}

#[derive(Default)]
pub struct Hub {
    sessions: Mutex<Vec<Arc<SessionShared>>>,
    next_id: AtomicU64,
    ever_connected: AtomicBool,
    limits: QueueLimits,
}

impl Hub {
    pub fn new(limits: QueueLimits) -> Self {
        Hub { limits, ..Default::default() }
    }

    pub fn register(&self) -> Arc<SessionShared> {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed) + 1;
        let s = Arc::new(SessionShared::new(id, self.limits));
        self.sessions.lock().expect("hub lock").push(s.clone());
        self.ever_connected.store(true, Ordering::Release);
        s
    }

    pub fn unregister(&self, id: u64) {
        let mut sessions = self.sessions.lock().expect("hub lock");
        if let Some(pos) = sessions.iter().position(|s| s.id == id) {
            sessions.remove(pos).close();
        }
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().expect("hub lock").len()
    }

    pub fn ever_connected(&self) -> bool {
        self.ever_connected.load(Ordering::Acquire)
    }

    pub fn wanted(&self, topic_index: usize) -> bool {
        self.sessions.lock().expect("hub lock").iter().any(|s| s.is_subscribed(topic_index))
    }

    /// Fans frames out to subscribed sessions. Never blocks on a socket.
    pub fn dispatch(&self, frames: &[(usize, Arc<str>)]) {
        let sessions: Vec<Arc<SessionShared>> = self.sessions.lock().expect("hub lock").clone();
        for s in sessions {
            for (topic, frame) in frames {
                if s.is_subscribed(*topic) {
                    s.push(frame_class(*topic), frame.clone());
                }
            }
        }
    }

    pub fn stats(&self) -> Vec<SessionStats> {
        self.sessions.lock().expect("hub lock").iter().map(|s| s.stats()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_overflow_drops_oldest_state_only() {
        let s = SessionShared::new(1, QueueLimits { state: 3, events: 10 });
        s.push(FrameClass::Event, Arc::from("e0"));
        for i in 0..5 {
            s.push(FrameClass::State, Arc::from(format!("s{i}")));
        }
        let frames: Vec<String> = s.drain().iter().map(|f| f.to_string()).collect();
        assert_eq!(frames, ["e0", "s2", "s3", "s4"]);
        assert_eq!(s.stats().dropped_state, 2);
        assert_eq!(s.stats().dropped_events, 0);
    }

    #[test]
    fn dispatch_respects_subscriptions() {
        let hub = Hub::new(QueueLimits::default());
        let a = hub.register();
        let b = hub.register();
        a.set_subscriptions(&[0usize, 5].into_iter().collect());
        hub.dispatch(&[(5, Arc::from("x")), (6, Arc::from("y"))]);
        assert_eq!(a.drain().len(), 1);
        assert!(b.drain().is_empty());
        assert!(hub.wanted(5) && !hub.wanted(6));
        hub.unregister(a.id);
        assert!(a.is_closed());
        assert_eq!(hub.session_count(), 1);
    }
}
