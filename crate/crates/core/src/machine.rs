//! Simulated-time model of the drawing machine, steerable while it runs.
//!
//! The machine advances in fixed ticks of simulated time. Control messages
//! are applied between ticks. Knob changes never touch the accumulated
//! angles, so changing a frequency bends the trace without a jump and
//! changing `a` shifts the pen by exactly the change in `a` along the
//! current center line.
//!
//! [`Session`] couples a machine with the log of every message it received,
//! tagged by tick index; [`replay`] re-runs such a log and reproduces the
//! sample stream bit for bit.

use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use crate::exact::{parse_decimal_or_fraction, Frequency};
use crate::kinematics::{NumericRig, Point2, Polarization, Rig};
use crate::render::{polylines_to_svg, RenderStyle};

pub const DEFAULT_TICK_RATE: u32 = 240;
const MAX_STORED_POINTS: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MachineError {
    #[error("machine is paused")]
    NotRunning,
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("polarization can only change while paused")]
    PolarizationWhileRunning,
}

impl MachineError {
    pub fn code(&self) -> &'static str {
        match self {
            MachineError::NotRunning => "not_running",
            MachineError::InvalidValue(_) => "invalid_value",
            MachineError::PolarizationWhileRunning => "polarization_while_running",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    A,
    B,
    OmegaTable,
    OmegaPen,
}

/// Client-to-server messages: `{"type": "...", ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ControlMessage {
    /// `value` is a length (`"13"`, `"12.5"`, `"25/2"`) for `a`/`b` and an
    /// integer or `"p/q"` fraction for the frequencies.
    SetParam {
        name: Param,
        #[serde(deserialize_with = "string_or_number")]
        value: String,
    },
    SetPolarization {
        polarization: Polarization,
    },
    Start,
    Pause,
    Reset,
    PenUp,
    PenDown,
    Snapshot,
}

impl ControlMessage {
    pub fn kind(&self) -> &'static str {
        match self {
            ControlMessage::SetParam { .. } => "set_param",
            ControlMessage::SetPolarization { .. } => "set_polarization",
            ControlMessage::Start => "start",
            ControlMessage::Pause => "pause",
            ControlMessage::Reset => "reset",
            ControlMessage::PenUp => "pen_up",
            ControlMessage::PenDown => "pen_down",
            ControlMessage::Snapshot => "snapshot",
        }
    }

    pub fn set(name: Param, value: impl Into<String>) -> Self {
        ControlMessage::SetParam {
            name,
            value: value.into(),
        }
    }
}

fn string_or_number<'de, D: Deserializer<'de>>(deserializer: D) -> Result<String, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Int(i64),
        Float(f64),
        Text(String),
    }
    Ok(match Raw::deserialize(deserializer)? {
        Raw::Int(n) => n.to_string(),
        Raw::Float(x) => format!("{x:?}"),
        Raw::Text(s) => s,
    })
}

/// One pen sample, emitted per tick while running.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleEvent {
    pub t: f64,
    pub table: [f64; 2],
    pub lab: [f64; 2],
    pub pen_down: bool,
    pub rev: u64,
}

impl SampleEvent {
    pub fn table_point(&self) -> Point2 {
        Point2::new(self.table[0], self.table[1])
    }

    pub fn lab_point(&self) -> Point2 {
        Point2::new(self.lab[0], self.lab[1])
    }
}

/// Serializable view of the machine, served as `/state`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineSnapshot {
    pub rig: Rig,
    pub theta: f64,
    pub phi: f64,
    pub t_sim: f64,
    pub running: bool,
    pub pen_down: bool,
    pub tick_rate: u32,
    pub rev: u64,
    pub table: [f64; 2],
    pub lab: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ack {
    /// Type of the acknowledged message.
    pub of: String,
    pub rev: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<Box<MachineSnapshot>>,
}

/// Server-to-client messages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Sample(SampleEvent),
    Ack(Ack),
    Error { code: String, message: String },
}

impl From<&MachineError> for ServerMessage {
    fn from(err: &MachineError) -> Self {
        ServerMessage::Error {
            code: err.code().to_string(),
            message: err.to_string(),
        }
    }
}

/// Start of the current constant-rate run. Angles are recomputed from here
/// as `start + rate * (steps * dt)` so a long run does not accumulate
/// rounding from repeated additions.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Anchor {
    t: f64,
    theta: f64,
    phi: f64,
    dt: f64,
    steps: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Machine {
    rig: Rig,
    numeric: NumericRig,
    theta: f64,
    phi: f64,
    t_sim: f64,
    running: bool,
    pen_down: bool,
    tick_rate: u32,
    rev: u64,
    anchor: Anchor,
}

impl Machine {
    pub fn new(rig: Rig, tick_rate: u32) -> Result<Self, MachineError> {
        if tick_rate == 0 {
            return Err(MachineError::InvalidValue("tick rate must be positive".into()));
        }
        let numeric = rig.numeric();
        let (theta, phi) = (numeric.phase_table, numeric.phase_pen);
        Ok(Self {
            rig,
            numeric,
            theta,
            phi,
            t_sim: 0.0,
            running: false,
            pen_down: true,
            tick_rate,
            rev: 0,
            anchor: Anchor {
                t: 0.0,
                theta,
                phi,
                dt: 0.0,
                steps: 0,
            },
        })
    }

    pub fn rig(&self) -> &Rig {
        &self.rig
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn t_sim(&self) -> f64 {
        self.t_sim
    }

    pub fn is_running(&self) -> bool {
        self.running
    }

    pub fn pen_down(&self) -> bool {
        self.pen_down
    }

    pub fn tick_rate(&self) -> u32 {
        self.tick_rate
    }

    pub fn revision(&self) -> u64 {
        self.rev
    }

    pub fn dt(&self) -> f64 {
        1.0 / f64::from(self.tick_rate)
    }

    pub fn table_point(&self) -> Point2 {
        self.numeric.table_from_angles(self.theta, self.phi)
    }

    pub fn lab_point(&self) -> Point2 {
        self.numeric.lab_from_angles(self.phi)
    }

    fn reanchor(&mut self, dt: f64) {
        self.anchor = Anchor {
            t: self.t_sim,
            theta: self.theta,
            phi: self.phi,
            dt,
            steps: 0,
        };
    }

    /// Advance by `dt` seconds of simulated time.
    pub fn step(&mut self, dt: f64) -> Result<SampleEvent, MachineError> {
        if !self.running {
            return Err(MachineError::NotRunning);
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(MachineError::InvalidValue(format!("dt must be positive, got {dt}")));
        }
        if dt != self.anchor.dt {
            self.reanchor(dt);
        }
        self.anchor.steps += 1;
        let elapsed = self.anchor.steps as f64 * dt;
        self.t_sim = self.anchor.t + elapsed;
        self.theta = self.anchor.theta + self.numeric.big_omega * elapsed;
        self.phi = self.anchor.phi + self.numeric.small_omega * elapsed;
        Ok(self.event())
    }

    fn event(&self) -> SampleEvent {
        let table = self.table_point();
        let lab = self.lab_point();
        SampleEvent {
            t: self.t_sim,
            table: [table.x, table.y],
            lab: [lab.x, lab.y],
            pen_down: self.pen_down,
            rev: self.rev,
        }
    }

    /// One fixed tick; `None` while paused.
    pub fn tick(&mut self) -> Option<SampleEvent> {
        if self.running {
            self.step(self.dt()).ok()
        } else {
            None
        }
    }

    pub fn snapshot(&self) -> MachineSnapshot {
        let table = self.table_point();
        let lab = self.lab_point();
        MachineSnapshot {
            rig: self.rig.clone(),
            theta: self.theta,
            phi: self.phi,
            t_sim: self.t_sim,
            running: self.running,
            pen_down: self.pen_down,
            tick_rate: self.tick_rate,
            rev: self.rev,
            table: [table.x, table.y],
            lab: [lab.x, lab.y],
        }
    }

    fn set_rig(&mut self, rig: Rig) {
        // restart the constant-rate run from the current angles
        self.reanchor(self.anchor.dt);
        self.numeric = rig.numeric();
        self.rig = rig;
        self.rev += 1;
    }

    pub fn handle(&mut self, msg: &ControlMessage) -> Result<Ack, MachineError> {
        let invalid = |e: crate::error::Error| MachineError::InvalidValue(e.to_string());
        let mut state = None;
        match msg {
            ControlMessage::SetParam { name, value } => {
                let rig = match name {
                    Param::A => self.rig.with_a(parse_decimal_or_fraction(value).map_err(invalid)?),
                    Param::B => self.rig.with_b(parse_decimal_or_fraction(value).map_err(invalid)?),
                    Param::OmegaTable => value
                        .parse::<Frequency>()
                        .map(|f| self.rig.with_big_omega(f)),
                    Param::OmegaPen => value
                        .parse::<Frequency>()
                        .map(|f| self.rig.with_small_omega(f)),
                }
                .map_err(invalid)?;
                self.set_rig(rig);
            }
            ControlMessage::SetPolarization { polarization } => {
                if self.running {
                    return Err(MachineError::PolarizationWhileRunning);
                }
                if *polarization != self.rig.polarization() {
                    let rig = self.rig.with_polarization(*polarization);
                    self.set_rig(rig);
                }
            }
            ControlMessage::Start => self.running = true,
            ControlMessage::Pause => self.running = false,
            ControlMessage::Reset => {
                self.theta = self.numeric.phase_table;
                self.phi = self.numeric.phase_pen;
                self.t_sim = 0.0;
                self.pen_down = false;
                self.reanchor(0.0);
            }
            ControlMessage::PenUp => self.pen_down = false,
            ControlMessage::PenDown => self.pen_down = true,
            ControlMessage::Snapshot => state = Some(Box::new(self.snapshot())),
        }
        Ok(Ack {
            of: msg.kind().to_string(),
            rev: self.rev,
            state,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    /// Number of ticks completed before the message was applied.
    pub tick: u64,
    pub message: ControlMessage,
}

/// Everything needed to reproduce a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionLog {
    pub rig: Rig,
    pub tick_rate: u32,
    pub entries: Vec<LogEntry>,
    /// Total ticks the session ran for.
    pub ticks: u64,
}

/// Pen-down polyline drawn under one rig revision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stroke {
    pub rev: u64,
    pub points: Vec<Point2>,
}

/// A machine plus its message log and the drawing it has made so far.
#[derive(Debug, Clone)]
pub struct Session {
    machine: Machine,
    initial_rig: Rig,
    entries: Vec<LogEntry>,
    ticks: u64,
    strokes: Vec<Stroke>,
    stroke_open: bool,
    stored_points: usize,
}

impl Session {
    pub fn new(rig: Rig, tick_rate: u32) -> Result<Self, MachineError> {
        Ok(Self {
            machine: Machine::new(rig.clone(), tick_rate)?,
            initial_rig: rig,
            entries: Vec::new(),
            ticks: 0,
            strokes: Vec::new(),
            stroke_open: false,
            stored_points: 0,
        })
    }

    pub fn machine(&self) -> &Machine {
        &self.machine
    }

    pub fn ticks(&self) -> u64 {
        self.ticks
    }

    /// Apply and record a message. Rejected messages are recorded too; they
    /// fail identically on replay.
    pub fn apply(&mut self, msg: ControlMessage) -> Result<Ack, MachineError> {
        let result = self.machine.handle(&msg);
        if matches!(msg, ControlMessage::Reset) && result.is_ok() {
            self.strokes.clear();
            self.stored_points = 0;
            self.stroke_open = false;
        }
        if !matches!(msg, ControlMessage::Snapshot) {
            self.entries.push(LogEntry {
                tick: self.ticks,
                message: msg,
            });
        }
        result
    }

    /// Advance one tick, recording the sample into the drawing.
    pub fn advance(&mut self) -> Option<SampleEvent> {
        self.ticks += 1;
        let event = self.machine.tick()?;
        self.record(&event);
        Some(event)
    }

    fn record(&mut self, event: &SampleEvent) {
        if !event.pen_down {
            self.stroke_open = false;
            return;
        }
        let continues = self.stroke_open && self.strokes.last().is_some_and(|s| s.rev == event.rev);
        if !continues {
            self.strokes.push(Stroke {
                rev: event.rev,
                points: Vec::new(),
            });
        }
        self.stroke_open = true;
        if let Some(stroke) = self.strokes.last_mut() {
            stroke.points.push(event.table_point());
        }
        self.stored_points += 1;
        if self.stored_points > MAX_STORED_POINTS && self.strokes.len() > 1 {
            let dropped = self.strokes.remove(0);
            self.stored_points -= dropped.points.len();
        }
    }

    pub fn strokes(&self) -> &[Stroke] {
        &self.strokes
    }

    pub fn log(&self) -> SessionLog {
        SessionLog {
            rig: self.initial_rig.clone(),
            tick_rate: self.machine.tick_rate(),
            entries: self.entries.clone(),
            ticks: self.ticks,
        }
    }

    /// The pen-down drawing in turntable coordinates, one path per stroke.
    pub fn export_svg(&self, style: &RenderStyle) -> crate::error::Result<String> {
        let polylines: Vec<_> = self
            .strokes
            .iter()
            .map(|s| (s.points.clone(), false))
            .collect();
        polylines_to_svg(&polylines, style)
    }
}

/// Re-run a recorded session without wall-clock throttling.
pub fn replay(log: &SessionLog) -> Result<Vec<SampleEvent>, MachineError> {
    let mut session = Session::new(log.rig.clone(), log.tick_rate)?;
    let mut events = Vec::new();
    let mut pending = log.entries.iter().peekable();
    for tick in 0..log.ticks {
        while let Some(entry) = pending.next_if(|e| e.tick == tick) {
            // outcomes are part of the log's behavior, not of the replay
            let _ = session.apply(entry.message.clone());
        }
        events.extend(session.advance());
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{closure_period, pen_position_turntable};

    fn reference_rig() -> Rig {
        Rig::from_ints(12, 2, 3, 15, Polarization::Anti).unwrap()
    }

    fn running(rig: Rig) -> Machine {
        let mut m = Machine::new(rig, DEFAULT_TICK_RATE).unwrap();
        m.handle(&ControlMessage::Start).unwrap();
        m
    }

    #[test]
    fn constant_knobs_follow_closed_form() {
        let mut m = running(reference_rig());
        for _ in 0..2400 {
            let ev = m.tick().unwrap();
            let t = ev.t;
            let want = Point2::new(
                12.0 * (3.0 * t).cos() + 2.0 * (18.0 * t).cos(),
                12.0 * (3.0 * t).sin() + 2.0 * (18.0 * t).sin(),
            );
            assert!(ev.table_point().distance(want) < 1e-9);
            assert_eq!(ev.table_point(), pen_position_turntable(&reference_rig(), t));
        }
    }

    #[test]
    fn stepping_through_a_period_returns_to_start() {
        let rig = reference_rig();
        let period = closure_period(&rig).seconds();
        let mut m = running(rig);
        let start = m.table_point();
        let steps = 1000;
        for _ in 0..steps {
            m.step(period / steps as f64).unwrap();
        }
        assert!(m.table_point().distance(start) < 1e-6);
    }

    #[test]
    fn paused_machine_refuses_to_step() {
        let mut m = Machine::new(reference_rig(), DEFAULT_TICK_RATE).unwrap();
        assert_eq!(m.step(0.01), Err(MachineError::NotRunning));
        assert_eq!(m.tick(), None);
    }

    #[test]
    fn reset_zeroes_and_lifts_pen() {
        let mut m = running(reference_rig());
        for _ in 0..10 {
            m.tick();
        }
        m.handle(&ControlMessage::Reset).unwrap();
        assert_eq!((m.theta(), m.phi(), m.t_sim()), (0.0, 0.0, 0.0));
        assert!(!m.pen_down());
    }

    #[test]
    fn changing_a_jumps_by_delta_a() {
        let mut m = running(reference_rig());
        for _ in 0..37 {
            m.tick();
        }
        let before = m.table_point();
        let ack = m.handle(&ControlMessage::set(Param::A, "13")).unwrap();
        assert_eq!(ack.rev, 1);
        let jump = m.table_point().distance(before);
        assert!((jump - 1.0).abs() < 1e-12);
    }

    #[test]
    fn changing_frequency_does_not_jump() {
        let mut m = running(reference_rig());
        for _ in 0..37 {
            m.tick();
        }
        let before = m.table_point();
        m.handle(&ControlMessage::set(Param::OmegaTable, "4/1")).unwrap();
        assert_eq!(m.table_point(), before);
        let theta0 = m.theta();
        m.tick();
        assert!((m.theta() - theta0 - 4.0 / 240.0).abs() < 1e-12);
    }

    #[test]
    fn polarization_only_while_paused() {
        let mut m = running(reference_rig());
        assert_eq!(
            m.handle(&ControlMessage::SetPolarization { polarization: Polarization::Co }),
            Err(MachineError::PolarizationWhileRunning)
        );
        m.handle(&ControlMessage::Pause).unwrap();
        m.handle(&ControlMessage::SetPolarization { polarization: Polarization::Co }).unwrap();
        assert_eq!(m.rig().polarization(), Polarization::Co);
    }

    #[test]
    fn invalid_values_rejected_without_revision_bump() {
        let mut m = running(reference_rig());
        for (name, value) in [
            (Param::A, "-1"),
            (Param::OmegaPen, "1.5"),
            (Param::OmegaTable, "0"),
            (Param::B, "abc"),
        ] {
            let err = m.handle(&ControlMessage::set(name, value)).unwrap_err();
            assert_eq!(err.code(), "invalid_value");
        }
        assert_eq!(m.revision(), 0);
    }

    #[test]
    fn message_wire_format() {
        let msg: ControlMessage = serde_json::from_str(r#"{"type":"set_param","name":"a","value":13}"#).unwrap();
        assert_eq!(msg, ControlMessage::set(Param::A, "13"));
        let msg: ControlMessage =
            serde_json::from_str(r#"{"type":"set_param","name":"omega_table","value":"4/1"}"#).unwrap();
        assert_eq!(msg, ControlMessage::set(Param::OmegaTable, "4/1"));
        let msg: ControlMessage = serde_json::from_str(r#"{"type":"pen_up"}"#).unwrap();
        assert_eq!(msg, ControlMessage::PenUp);
        let ev = SampleEvent { t: 0.5, table: [1.0, 2.0], lab: [3.0, 4.0], pen_down: true, rev: 2 };
        assert_eq!(
            serde_json::to_string(&ServerMessage::Sample(ev)).unwrap(),
            r#"{"type":"sample","t":0.5,"table":[1.0,2.0],"lab":[3.0,4.0],"pen_down":true,"rev":2}"#
        );
        let err = ServerMessage::from(&MachineError::NotRunning);
        assert_eq!(
            serde_json::to_string(&err).unwrap(),
            r#"{"type":"error","code":"not_running","message":"machine is paused"}"#
        );
    }

    #[test]
    fn session_strokes_split_at_revisions_and_pen_lifts() {
        let mut s = Session::new(reference_rig(), DEFAULT_TICK_RATE).unwrap();
        s.apply(ControlMessage::Start).unwrap();
        for _ in 0..10 {
            s.advance();
        }
        s.apply(ControlMessage::set(Param::A, "13")).unwrap();
        for _ in 0..10 {
            s.advance();
        }
        s.apply(ControlMessage::PenUp).unwrap();
        for _ in 0..5 {
            s.advance();
        }
        s.apply(ControlMessage::PenDown).unwrap();
        for _ in 0..5 {
            s.advance();
        }
        let shape: Vec<_> = s.strokes().iter().map(|st| (st.rev, st.points.len())).collect();
        assert_eq!(shape, vec![(0, 10), (1, 10), (1, 5)]);
        let svg = s.export_svg(&RenderStyle::default()).unwrap();
        assert_eq!(svg.matches("<path").count(), 3);
        s.apply(ControlMessage::Reset).unwrap();
        assert!(s.strokes().is_empty());
    }

    #[test]
    fn replay_reproduces_live_session() {
        let mut s = Session::new(reference_rig(), DEFAULT_TICK_RATE).unwrap();
        let mut live = Vec::new();
        s.apply(ControlMessage::Start).unwrap();
        for tick in 0..600 {
            if tick == 200 {
                s.apply(ControlMessage::set(Param::A, "13")).unwrap();
            }
            if tick == 400 {
                s.apply(ControlMessage::set(Param::OmegaTable, "4")).unwrap();
                let _ = s.apply(ControlMessage::SetPolarization { polarization: Polarization::Co });
            }
            live.extend(s.advance());
        }
        let replayed = replay(&s.log()).unwrap();
        assert_eq!(live, replayed);
        let log_json = serde_json::to_string(&s.log()).unwrap();
        let parsed: SessionLog = serde_json::from_str(&log_json).unwrap();
        assert_eq!(replay(&parsed).unwrap(), live);
    }
}
