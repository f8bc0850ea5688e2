//! Session service behind the UI wire contract: one JSON object per text
//! message, tagged by `type`. Transport is left to the caller.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{generate_model, round_micro, Condition, Configuration, DotModel, ModelParams, Orientation, Vec3};
use crate::metrics::{build_record, MetricsRecord};
use crate::sensor::{simulate_trace, ArmModel, SensorParams};
use crate::session::{BrushSample, Session, SessionEvent, SessionState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    CreateSession {
        participant_id: String,
        orientation: Orientation,
        configuration: Configuration,
    },
    Sample {
        session_id: String,
        t: f64,
        x: f64,
        y: f64,
        z: f64,
    },
    FetchMetrics {
        session_id: String,
    },
    FetchModel {
        configuration: Configuration,
        orientation: Orientation,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DotPayload {
    pub index: usize,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Dot list and hit radius; coordinates rounded to 6 decimals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelPayload {
    pub configuration: Configuration,
    pub orientation: Orientation,
    pub hit_radius: f64,
    pub dots: Vec<DotPayload>,
}

impl From<&DotModel> for ModelPayload {
    fn from(m: &DotModel) -> Self {
        ModelPayload {
            configuration: m.configuration,
            orientation: m.orientation,
            hit_radius: m.hit_radius,
            dots: m
                .dots
                .iter()
                .map(|d| DotPayload {
                    index: d.index,
                    x: round_micro(d.position.x),
                    y: round_micro(d.position.y),
                    z: round_micro(d.position.z),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    SessionCreated {
        session_id: String,
        model: ModelPayload,
    },
    Event {
        session_id: String,
        #[serde(flatten)]
        event: SessionEvent,
    },
    Metrics {
        session_id: String,
        #[serde(flatten)]
        record: MetricsRecord,
    },
    Model {
        model: ModelPayload,
    },
    Rejected {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        session_id: Option<String>,
        reason: String,
    },
}

impl ServerMessage {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).unwrap_or_else(|e| {
            format!(r#"{{"type":"rejected","reason":"encoding failed: {e}"}}"#)
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub params: ModelParams,
    pub arm: ArmModel,
    pub sensor: SensorParams,
    /// Base seed for the simulated sensor traces of live sessions.
    pub seed: u64,
    /// Completed logs and traces go to `logs/` and `traces/` here.
    pub store_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            params: ModelParams::default(),
            arm: ArmModel::default(),
            sensor: SensorParams::default(),
            seed: 0,
            store_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoredSession {
    pub log: PathBuf,
    pub trace: PathBuf,
}

struct Live {
    session: Session,
    sensor_seed: u64,
    outcome: Option<std::result::Result<MetricsRecord, String>>,
    stored: Option<StoredSession>,
}

pub struct SessionService {
    config: ServiceConfig,
    models: BTreeMap<Condition, DotModel>,
    sessions: HashMap<String, Live>,
    created: u64,
}

impl SessionService {
    pub fn new(config: ServiceConfig) -> Result<Self> {
        let models = Condition::ALL
            .iter()
            .map(|&c| Ok((c, generate_model(c.configuration, c.orientation, &config.params)?)))
            .collect::<Result<_>>()?;
        if let Some(dir) = &config.store_dir {
            fs::create_dir_all(dir.join("logs"))?;
            fs::create_dir_all(dir.join("traces"))?;
        }
        Ok(Self {
            config,
            models,
            sessions: HashMap::new(),
            created: 0,
        })
    }

    pub fn model(&self, condition: Condition) -> &DotModel {
        &self.models[&condition]
    }

    pub fn stored(&self, session_id: &str) -> Option<&StoredSession> {
        self.sessions.get(session_id).and_then(|l| l.stored.as_ref())
    }

    /// Parses one text message and answers it; malformed input is rejected
    /// without touching any session.
    pub fn handle_text(&mut self, text: &str) -> Vec<ServerMessage> {
        match serde_json::from_str::<ClientMessage>(text) {
            Ok(msg) => self.handle(msg),
            Err(e) => vec![ServerMessage::Rejected {
                session_id: None,
                reason: format!("malformed message: {e}"),
            }],
        }
    }

    pub fn handle(&mut self, msg: ClientMessage) -> Vec<ServerMessage> {
        match msg {
            ClientMessage::CreateSession {
                participant_id,
                orientation,
                configuration,
            } => vec![self.create(participant_id, Condition::new(orientation, configuration))],
            ClientMessage::Sample { session_id, t, x, y, z } => self.sample(session_id, t, Vec3::new(x, y, z)),
            ClientMessage::FetchMetrics { session_id } => vec![self.fetch_metrics(session_id)],
            ClientMessage::FetchModel {
                configuration,
                orientation,
            } => vec![ServerMessage::Model {
                model: self.model(Condition::new(orientation, configuration)).into(),
            }],
        }
    }

    fn create(&mut self, participant_id: String, condition: Condition) -> ServerMessage {
        if participant_id.trim().is_empty() {
            return ServerMessage::Rejected {
                session_id: None,
                reason: "participant_id must not be empty".into(),
            };
        }
        self.created += 1;
        let session_id = format!("S{:06}", self.created);
        let model = self.models[&condition].clone();
        let payload = ModelPayload::from(&model);
        self.sessions.insert(
            session_id.clone(),
            Live {
                session: Session::open(model, participant_id),
                sensor_seed: self.config.seed.wrapping_add(self.created),
                outcome: None,
                stored: None,
            },
        );
        ServerMessage::SessionCreated {
            session_id,
            model: payload,
        }
    }

    fn sample(&mut self, session_id: String, t: f64, position: Vec3) -> Vec<ServerMessage> {
        let Some(live) = self.sessions.get_mut(&session_id) else {
            return vec![unknown(session_id)];
        };
        let events = match live.session.feed_sample(BrushSample::new(t, position)) {
            Ok(ev) => ev,
            Err(e) => {
                return vec![ServerMessage::Rejected {
                    session_id: Some(session_id),
                    reason: e.to_string(),
                }]
            }
        };
        let mut out: Vec<ServerMessage> = events
            .iter()
            .map(|&event| ServerMessage::Event {
                session_id: session_id.clone(),
                event,
            })
            .collect();
        if live.session.state() == SessionState::Complete && live.outcome.is_none() {
            let outcome = complete(&self.config, &session_id, live).map_err(|e| e.to_string());
            out.push(match &outcome {
                Ok(record) => ServerMessage::Metrics {
                    session_id: session_id.clone(),
                    record: record.clone(),
                },
                Err(reason) => ServerMessage::Rejected {
                    session_id: Some(session_id.clone()),
                    reason: format!("metrics unavailable: {reason}"),
                },
            });
            live.outcome = Some(outcome);
        }
        out
    }

    fn fetch_metrics(&self, session_id: String) -> ServerMessage {
        let Some(live) = self.sessions.get(&session_id) else {
            return unknown(session_id);
        };
        match &live.outcome {
            Some(Ok(record)) => ServerMessage::Metrics {
                session_id,
                record: record.clone(),
            },
            Some(Err(reason)) => ServerMessage::Rejected {
                session_id: Some(session_id),
                reason: format!("metrics unavailable: {reason}"),
            },
            None => ServerMessage::Rejected {
                session_id: Some(session_id),
                reason: format!("session incomplete: {} of {} dots hit", live.session.hits(), live.session.model().len()),
            },
        }
    }
}

fn unknown(session_id: String) -> ServerMessage {
    ServerMessage::Rejected {
        reason: format!("unknown session `{session_id}`"),
        session_id: Some(session_id),
    }
}

/// Simulates the sensor trace for the finished path, persists both files and
/// computes the record from exactly what was persisted.
fn complete(config: &ServiceConfig, session_id: &str, live: &mut Live) -> Result<MetricsRecord> {
    let log = live.session.finalize();
    let trace = simulate_trace(&config.arm, &log.samples, &config.sensor, live.sensor_seed)?;
    if let Some(dir) = &config.store_dir {
        let stored = StoredSession {
            log: dir.join("logs").join(format!("{session_id}.jsonl")),
            trace: dir.join("traces").join(format!("{session_id}.csv")),
        };
        fs::write(&stored.log, log.to_jsonl())?;
        fs::write(&stored.trace, trace.to_csv_string())?;
        live.stored = Some(stored);
    }
    build_record(&log, &trace)
}

impl From<Error> for ServerMessage {
    fn from(e: Error) -> Self {
        ServerMessage::Rejected {
            session_id: None,
            reason: e.to_string(),
        }
    }
}
