//! Drawing-session state machine and its line-delimited log format.
//!
//! A [`Session`] consumes brush samples in time order. Any pending dot can be
//! consumed; consuming a dot that is not the lowest-index pending dot is also
//! recorded as a mistake. Samples after completion are kept for telemetry but
//! produce no events.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{query_hit, Condition, Configuration, DotModel, Orientation, Vec3};

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrushSample {
    pub t: f64,
    #[serde(flatten)]
    pub position: Vec3,
}

impl BrushSample {
    pub fn new(t: f64, position: Vec3) -> Self {
        Self { t, position }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum EventKind {
    SessionOpened,
    DotHit { dot_index: usize },
    Mistake { dot_index: usize },
    AllDotsComplete,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub t: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// What a log needs to know about the model it was recorded against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelDescriptor {
    pub configuration: Configuration,
    pub orientation: Orientation,
    pub dot_count: usize,
    pub hit_radius: f64,
}

impl From<&DotModel> for ModelDescriptor {
    fn from(m: &DotModel) -> Self {
        Self {
            configuration: m.configuration,
            orientation: m.orientation,
            dot_count: m.dots.len(),
            hit_radius: m.hit_radius,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SessionState {
    /// Opened, no dot hit yet.
    Idle,
    /// At least one dot hit; the active clock is running.
    Active,
    Complete,
}

/// Immutable record of one play-through.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionLog {
    pub participant_id: String,
    pub condition: Condition,
    pub model: ModelDescriptor,
    pub engine_version: String,
    pub samples: Vec<BrushSample>,
    pub events: Vec<SessionEvent>,
    /// Index of the sample that completed the model, if any. Samples after it
    /// are retained but excluded from metrics.
    pub completed_at_sample: Option<usize>,
}

impl SessionLog {
    pub fn is_complete(&self) -> bool {
        self.completed_at_sample.is_some()
    }

    pub fn dot_hits(&self) -> impl Iterator<Item = (f64, usize)> + '_ {
        self.events.iter().filter_map(|e| match e.kind {
            EventKind::DotHit { dot_index } => Some((e.t, dot_index)),
            _ => None,
        })
    }

    pub fn mistake_count(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::Mistake { .. }))
            .count()
    }

    pub fn late_samples(&self) -> &[BrushSample] {
        match self.completed_at_sample {
            Some(i) => &self.samples[i + 1..],
            None => &[],
        }
    }

    /// Checks the log-level invariants.
    pub fn validate(&self) -> Result<()> {
        let invalid = |reason: String| Error::Validation {
            item: format!("session log for `{}`", self.participant_id),
            reason,
        };
        let opened = self
            .events
            .iter()
            .filter(|e| e.kind == EventKind::SessionOpened)
            .count();
        if opened != 1 || self.events.first().map(|e| (e.kind, e.t)) != Some((EventKind::SessionOpened, 0.0)) {
            return Err(invalid("exactly one SessionOpened at t = 0 must lead the log".into()));
        }
        if self.events.windows(2).any(|w| w[1].t < w[0].t) {
            return Err(invalid("events out of time order".into()));
        }
        if self.samples.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(invalid("sample timestamps not strictly increasing".into()));
        }
        let mut seen = vec![false; self.model.dot_count];
        let mut hits = 0;
        for (_, d) in self.dot_hits() {
            if d >= seen.len() || seen[d] {
                return Err(invalid(format!("duplicate or out-of-range DotHit {d}")));
            }
            seen[d] = true;
            hits += 1;
        }
        let completes = self
            .events
            .iter()
            .filter(|e| e.kind == EventKind::AllDotsComplete)
            .count();
        if completes > 1 || (completes == 1) != self.is_complete() {
            return Err(invalid("completion marker inconsistent with events".into()));
        }
        if self.is_complete() && hits != self.model.dot_count {
            return Err(invalid(format!("complete with {hits} of {} dots", self.model.dot_count)));
        }
        if self.mistake_count() > hits {
            return Err(invalid("more mistakes than hits".into()));
        }
        Ok(())
    }

    /// Line-delimited JSON: a header record followed by sample and event
    /// records merged in time order.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let header = Record::Header {
            participant_id: self.participant_id.clone(),
            orientation: self.condition.orientation,
            configuration: self.condition.configuration,
            model: self.model,
            engine_version: self.engine_version.clone(),
        };
        push_line(&mut out, &header);

        let mut events = self.events.iter().peekable();
        // SessionOpened precedes every sample.
        while let Some(e) = events.next_if(|e| e.kind == EventKind::SessionOpened) {
            push_line(&mut out, &Record::Event(*e));
        }
        for (i, s) in self.samples.iter().enumerate() {
            let late = self.completed_at_sample.is_some_and(|c| i > c);
            push_line(
                &mut out,
                &if late {
                    Record::LateSample(*s)
                } else {
                    Record::Sample(*s)
                },
            );
            while let Some(e) = events.next_if(|e| e.t <= s.t) {
                push_line(&mut out, &Record::Event(*e));
            }
        }
        for e in events {
            push_line(&mut out, &Record::Event(*e));
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<SessionLog> {
        let parse_err = |line: usize, reason: String| Error::Parse {
            what: "session log",
            line,
            reason,
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines
            .next()
            .ok_or_else(|| parse_err(1, "missing header".into()))?;
        let mut log = match serde_json::from_str::<Record>(first) {
            Ok(Record::Header {
                participant_id,
                orientation,
                configuration,
                model,
                engine_version,
            }) => SessionLog {
                participant_id,
                condition: Condition::new(orientation, configuration),
                model,
                engine_version,
                samples: Vec::new(),
                events: Vec::new(),
                completed_at_sample: None,
            },
            Ok(_) => return Err(parse_err(1, "first record is not a header".into())),
            Err(e) => return Err(parse_err(1, e.to_string())),
        };
        let mut regular = 0usize;
        for (idx, line) in lines {
            match serde_json::from_str::<Record>(line).map_err(|e| parse_err(idx + 1, e.to_string()))? {
                Record::Header { .. } => return Err(parse_err(idx + 1, "duplicate header".into())),
                Record::Sample(s) => {
                    regular += 1;
                    log.samples.push(s);
                }
                Record::LateSample(s) => log.samples.push(s),
                Record::Event(e) => {
                    if e.kind == EventKind::AllDotsComplete {
                        log.completed_at_sample = regular.checked_sub(1);
                    }
                    log.events.push(e);
                }
            }
        }
        Ok(log)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Record {
    Header {
        participant_id: String,
        orientation: Orientation,
        configuration: Configuration,
        model: ModelDescriptor,
        engine_version: String,
    },
    Sample(BrushSample),
    LateSample(BrushSample),
    Event(SessionEvent),
}

fn push_line(out: &mut String, record: &Record) {
    // Serializing these plain structs cannot fail.
    out.push_str(&serde_json::to_string(record).expect("record serializes"));
    out.push('\n');
}

/// A live drawing session over one model. Single writer.
#[derive(Debug, Clone)]
pub struct Session {
    model: DotModel,
    participant_id: String,
    hit: Vec<bool>,
    lowest_pending: usize,
    remaining: usize,
    state: SessionState,
    samples: Vec<BrushSample>,
    events: Vec<SessionEvent>,
    completed_at_sample: Option<usize>,
}

impl Session {
    /// Opens a session with every dot pending.
    pub fn open(model: DotModel, participant_id: impl Into<String>) -> Session {
        let n = model.dots.len();
        Session {
            model,
            participant_id: participant_id.into(),
            hit: vec![false; n],
            lowest_pending: 0,
            remaining: n,
            state: SessionState::Idle,
            samples: Vec::new(),
            events: vec![SessionEvent {
                t: 0.0,
                kind: EventKind::SessionOpened,
            }],
            completed_at_sample: None,
        }
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn model(&self) -> &DotModel {
        &self.model
    }

    pub fn participant_id(&self) -> &str {
        &self.participant_id
    }

    pub fn hits(&self) -> usize {
        self.model.dots.len() - self.remaining
    }

    /// Feeds one brush sample and returns the events it produced.
    pub fn feed_sample(&mut self, sample: BrushSample) -> Result<Vec<SessionEvent>> {
        if !sample.t.is_finite() || sample.t < 0.0 || !sample.position.is_finite() {
            return Err(Error::param("sample", format!("non-finite or negative sample {sample:?}")));
        }
        if let Some(prev) = self.samples.last() {
            if sample.t <= prev.t {
                return Err(Error::Sequencing {
                    previous: prev.t,
                    t: sample.t,
                });
            }
        }
        self.samples.push(sample);
        if self.state == SessionState::Complete {
            return Ok(Vec::new());
        }

        let Some(dot) = query_hit(&self.model, sample.position) else {
            return Ok(Vec::new());
        };
        if self.hit[dot] {
            return Ok(Vec::new());
        }

        let mut emitted = vec![SessionEvent {
            t: sample.t,
            kind: EventKind::DotHit { dot_index: dot },
        }];
        if dot != self.lowest_pending {
            emitted.push(SessionEvent {
                t: sample.t,
                kind: EventKind::Mistake { dot_index: dot },
            });
        }
        self.hit[dot] = true;
        self.remaining -= 1;
        while self.lowest_pending < self.hit.len() && self.hit[self.lowest_pending] {
            self.lowest_pending += 1;
        }
        self.state = SessionState::Active;
        if self.remaining == 0 {
            emitted.push(SessionEvent {
                t: sample.t,
                kind: EventKind::AllDotsComplete,
            });
            self.state = SessionState::Complete;
            self.completed_at_sample = Some(self.samples.len() - 1);
        }
        self.events.extend_from_slice(&emitted);
        Ok(emitted)
    }

    /// Snapshot of the session as an immutable log.
    pub fn finalize(&self) -> SessionLog {
        SessionLog {
            participant_id: self.participant_id.clone(),
            condition: self.model.condition(),
            model: ModelDescriptor::from(&self.model),
            engine_version: ENGINE_VERSION.to_string(),
            samples: self.samples.clone(),
            events: self.events.clone(),
            completed_at_sample: self.completed_at_sample,
        }
    }
}
