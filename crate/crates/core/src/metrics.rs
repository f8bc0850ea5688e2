//! Normalized dependent variables for one (participant, condition) session.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Condition, Configuration, Orientation};
use crate::sensor::{estimate_rm, mean_resistance_change, SensorTrace};
use crate::session::{EventKind, SessionLog};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub participant_id: String,
    pub orientation: Orientation,
    pub configuration: Configuration,
    /// Seconds from the first to the last dot hit.
    pub tct_raw: f64,
    pub dot_count: usize,
    /// Seconds per dot.
    pub norm_tct: f64,
    pub mistakes: usize,
    /// Mistakes per second.
    pub norm_mistakes: f64,
    /// Mean percentage resistance change over the active window.
    pub mean_resistance_pct: f64,
    /// Percent per second.
    pub norm_resistance: f64,
}

impl MetricsRecord {
    pub fn condition(&self) -> Condition {
        Condition::new(self.orientation, self.configuration)
    }
}

/// Active window: first and last dot-hit times of a complete session.
pub fn active_window(log: &SessionLog) -> Result<(f64, f64)> {
    if !log.is_complete() {
        return Err(Error::IncompleteSession {
            participant: log.participant_id.clone(),
        });
    }
    let mut hits = log.dot_hits().map(|(t, _)| t);
    let first = hits.next().ok_or_else(|| Error::IncompleteSession {
        participant: log.participant_id.clone(),
    })?;
    let last = log
        .events
        .iter()
        .rev()
        .find(|e| e.kind == EventKind::AllDotsComplete)
        .map(|e| e.t)
        .unwrap_or(first);
    Ok((first, last))
}

/// Raw task completion time and its per-dot normalization.
pub fn compute_tct(log: &SessionLog) -> Result<(f64, f64)> {
    let (first, last) = active_window(log)?;
    let tct = last - first;
    Ok((tct, tct / log.model.dot_count as f64))
}

/// Mistake count and mistakes per second of raw TCT.
pub fn compute_mistakes(log: &SessionLog) -> Result<(usize, f64)> {
    let (tct, _) = compute_tct(log)?;
    if !(tct > 0.0) {
        return Err(Error::Degenerate(format!(
            "zero task completion time for `{}`",
            log.participant_id
        )));
    }
    let mistakes = log.mistake_count();
    Ok((mistakes, mistakes as f64 / tct))
}

/// Mean percentage resistance change over the active window and its rate per
/// second of raw TCT. Uses the trace's reference resistance when one is set,
/// otherwise the minimum over the whole trace.
pub fn compute_resistance_metric(log: &SessionLog, trace: &SensorTrace) -> Result<(f64, f64)> {
    let (start, end) = active_window(log)?;
    let tct = end - start;
    if !trace.samples.iter().any(|s| s.t >= start && s.t <= end) {
        return Err(Error::Alignment { start, end });
    }
    let mean = if trace.r_min.is_some() {
        mean_resistance_change(trace, start, end)?
    } else {
        let mut with_rm = trace.clone();
        estimate_rm(&mut with_rm)?;
        mean_resistance_change(&with_rm, start, end)?
    };
    if !(tct > 0.0) {
        return Err(Error::Degenerate(format!(
            "zero task completion time for `{}`",
            log.participant_id
        )));
    }
    Ok((mean, mean / tct))
}

pub fn build_record(log: &SessionLog, trace: &SensorTrace) -> Result<MetricsRecord> {
    let (tct_raw, norm_tct) = compute_tct(log)?;
    let (mistakes, norm_mistakes) = compute_mistakes(log)?;
    let (mean_resistance_pct, norm_resistance) = compute_resistance_metric(log, trace)?;
    Ok(MetricsRecord {
        participant_id: log.participant_id.clone(),
        orientation: log.condition.orientation,
        configuration: log.condition.configuration,
        tct_raw,
        dot_count: log.model.dot_count,
        norm_tct,
        mistakes,
        norm_mistakes,
        mean_resistance_pct,
        norm_resistance,
    })
}

pub fn write_metrics_csv<W: Write>(records: &[MetricsRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_metrics_csv<R: Read>(input: R) -> Result<Vec<MetricsRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in reader.deserialize() {
        out.push(row?);
    }
    Ok(out)
}
