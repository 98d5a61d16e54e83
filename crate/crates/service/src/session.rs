//! Live sessions: a machine stepped by a wall-clock ticker, shared between
//! HTTP handlers and WebSocket clients.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, MutexGuard, Weak};
use std::time::Duration;

use tokio::sync::broadcast;
use tokio::time::MissedTickBehavior;
use trochoid_core::machine::{Ack, ControlMessage, MachineError, MachineSnapshot, SampleEvent, Session, SessionLog};
use trochoid_core::render::RenderStyle;
use trochoid_core::Rig;

const SAMPLE_BUFFER: usize = 4096;

pub struct LiveSession {
    name: String,
    session: Mutex<Session>,
    samples: broadcast::Sender<SampleEvent>,
}

impl LiveSession {
    fn lock(&self) -> MutexGuard<'_, Session> {
        // a panic while holding the lock leaves a consistent session behind
        self.session.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn apply(&self, msg: ControlMessage) -> Result<Ack, MachineError> {
        tracing::debug!(session = %self.name, kind = msg.kind(), "control message");
        self.lock().apply(msg)
    }

    pub fn snapshot(&self) -> MachineSnapshot {
        self.lock().machine().snapshot()
    }

    pub fn log(&self) -> SessionLog {
        self.lock().log()
    }

    pub fn export_svg(&self) -> trochoid_core::Result<String> {
        self.lock().export_svg(&RenderStyle::default())
    }

    pub fn subscribe(&self) -> broadcast::Receiver<SampleEvent> {
        self.samples.subscribe()
    }

    fn tick(&self) {
        let event = self.lock().advance();
        if let Some(event) = event {
            // no subscribers is fine
            let _ = self.samples.send(event);
        }
    }
}

async fn run_ticker(session: Weak<LiveSession>, tick_rate: u32) {
    let mut interval = tokio::time::interval(Duration::from_secs_f64(1.0 / f64::from(tick_rate)));
    interval.set_missed_tick_behavior(MissedTickBehavior::Delay);
    loop {
        interval.tick().await;
        match session.upgrade() {
            Some(session) => session.tick(),
            None => break,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SessionError {
    BadName(String),
    TooMany(usize),
}

impl std::fmt::Display for SessionError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SessionError::BadName(name) => write!(
                f,
                "invalid session name {name:?}: use 1 to 64 letters, digits, '-' or '_'"
            ),
            SessionError::TooMany(limit) => write!(f, "session limit of {limit} reached"),
        }
    }
}

pub struct Sessions {
    rig: Rig,
    tick_rate: u32,
    limit: usize,
    live: Mutex<HashMap<String, Arc<LiveSession>>>,
}

impl Sessions {
    pub fn new(rig: Rig, tick_rate: u32, limit: usize) -> Self {
        Self {
            rig,
            tick_rate,
            limit,
            live: Mutex::new(HashMap::new()),
        }
    }

    /// Look up a session, starting it on first use. Must run inside a tokio
    /// runtime because new sessions spawn their ticker.
    pub fn get_or_start(&self, name: &str) -> Result<Arc<LiveSession>, SessionError> {
        let valid = !name.is_empty()
            && name.len() <= 64
            && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
        if !valid {
            return Err(SessionError::BadName(name.to_string()));
        }
        let mut live = self.live.lock().unwrap_or_else(|poisoned| poisoned.into_inner());
        if let Some(existing) = live.get(name) {
            return Ok(existing.clone());
        }
        if live.len() >= self.limit {
            return Err(SessionError::TooMany(self.limit));
        }
        let session = Session::new(self.rig.clone(), self.tick_rate).expect("tick rate validated at startup");
        let (samples, _) = broadcast::channel(SAMPLE_BUFFER);
        let created = Arc::new(LiveSession {
            name: name.to_string(),
            session: Mutex::new(session),
            samples,
        });
        tokio::spawn(run_ticker(Arc::downgrade(&created), self.tick_rate));
        tracing::info!(session = name, "session started");
        live.insert(name.to_string(), created.clone());
        Ok(created)
    }

    pub fn names(&self) -> Vec<String> {
        let live = self.live.lock().unwrap_or_else(|poisoned| poisoned.into_inner());
        let mut names: Vec<_> = live.keys().cloned().collect();
        names.sort();
        names
    }
}
