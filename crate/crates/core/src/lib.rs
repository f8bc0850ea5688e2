//! Dot-tracing exergame core: model geometry, session engine, simulated
//! elbow sensor, metrics, study design and the statistics used to analyze it.

pub mod cohort;
pub mod design;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod sensor;
pub mod service;
pub mod session;
pub mod special;
pub mod stats;

pub use cohort::{CohortManifest, SimPolicy};
pub use design::{LatinSquare, PowerSpec};
pub use error::{Error, Result};
pub use geometry::{Condition, Configuration, Dot, DotModel, ModelParams, Orientation, Vec3};
pub use metrics::MetricsRecord;
pub use sensor::{ArmModel, SensorParams, SensorTrace};
pub use service::{ClientMessage, ServerMessage, SessionService};
pub use session::{BrushSample, EventKind, Session, SessionEvent, SessionLog};
pub use stats::{AnovaEffect, CellTable, Descriptives};
