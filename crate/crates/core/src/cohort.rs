//! Synthetic cohorts on disk and the batch analysis report built from them.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::design::{assign_conditions, balanced_latin_square};
use crate::error::{Error, Result};
use crate::geometry::{facing_normal, generate_model, Condition, DotModel, ModelParams, Vec3};
use crate::metrics::{build_record, write_metrics_csv, MetricsRecord};
use crate::sensor::{simulate_trace, ArmModel, SensorParams, SensorTrace};
use crate::session::{BrushSample, Session, SessionLog, SessionState, ENGINE_VERSION};
use crate::stats::{
    descriptives, eta2_label, pairwise_contrasts, rm_anova_2x2, shapiro_wilk, AnovaEffect, CellTable,
    Contrast, Descriptives, ShapiroWilk,
};

/// Synthetic participant behaviour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimPolicy {
    /// Brush speed between dots, m/s.
    pub speed: f64,
    /// Per-axis positional jitter sd, m.
    pub jitter_sd: f64,
    /// Chance that a target is swapped with the next one.
    pub out_of_order_prob: f64,
    /// Mean time spent on each dot, s.
    pub dwell: f64,
    pub seed: u64,
    /// Per-dot dwell noise sd, s.
    pub dwell_sd: f64,
    /// Log-scale sd of each participant's overall pace.
    pub pace_sd: f64,
    /// Multiplier on every duration in the Horizontal orientation.
    pub horizontal_time_scale: f64,
    /// Brush and sensor sampling interval, s.
    pub sample_interval: f64,
    /// Peak height of the transit arc above the model surface, m.
    pub lift: f64,
}

impl Default for SimPolicy {
    fn default() -> Self {
        Self {
            speed: 0.25,
            jitter_sd: 0.001,
            out_of_order_prob: 0.05,
            dwell: 0.25,
            seed: 0,
            dwell_sd: 0.05,
            pace_sd: 0.15,
            horizontal_time_scale: 1.0,
            sample_interval: 1.0 / 30.0,
            lift: 0.03,
        }
    }
}

/// Distance of the rest pose from the first dot, along the facing normal.
const REST_OFFSET: f64 = 0.06;
const REST_SAMPLES: usize = 15;
const APPROACH_SAMPLES: usize = 15;

impl SimPolicy {
    pub fn validate(&self) -> Result<()> {
        let non_negative = [
            ("jitter_sd", self.jitter_sd),
            ("dwell", self.dwell),
            ("dwell_sd", self.dwell_sd),
            ("pace_sd", self.pace_sd),
            ("lift", self.lift),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(name, format!("must be finite and non-negative, got {v}")));
            }
        }
        let positive = [
            ("speed", self.speed),
            ("horizontal_time_scale", self.horizontal_time_scale),
            ("sample_interval", self.sample_interval),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.out_of_order_prob) {
            return Err(Error::param(
                "out_of_order_prob",
                format!("must be in [0, 1], got {}", self.out_of_order_prob),
            ));
        }
        Ok(())
    }

    /// Transit arcs must clear intermediate dots and jitter must keep dwell
    /// samples inside the target.
    fn check_against(&self, hit_radius: f64) -> Result<()> {
        if self.lift < 2.0 * hit_radius {
            return Err(Error::Configuration(format!(
                "lift {} m must be at least twice the hit radius {hit_radius} m",
                self.lift
            )));
        }
        if 3.0 * self.jitter_sd >= self.lift / 2.0 {
            return Err(Error::Configuration(format!(
                "jitter sd {} m is too large for lift {} m",
                self.jitter_sd, self.lift
            )));
        }
        Ok(())
    }
}

/// Target order with each position swapped with its successor at the given
/// probability; swapped pairs are not swapped again.
pub fn visit_order<R: Rng>(n: usize, prob: f64, rng: &mut R) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut i = 0;
    while i + 1 < n {
        if prob > 0.0 && rng.random::<f64>() < prob {
            order.swap(i, i + 1);
            i += 2;
        } else {
            i += 1;
        }
    }
    order
}

fn jitter<R: Rng>(sd: f64, rng: &mut R) -> Vec3 {
    if sd == 0.0 {
        return Vec3::default();
    }
    let mut axis = || {
        let z: f64 = StandardNormal.sample(rng);
        z.clamp(-3.0, 3.0) * sd
    };
    Vec3::new(axis(), axis(), axis())
}

/// Brush path on a fixed sampling grid: rest, approach to the first target,
/// then lifted transits and dwells over every target in `order`, then a
/// retreat that lands after completion.
pub fn synthesize_path<R: Rng>(
    model: &DotModel,
    order: &[usize],
    policy: &SimPolicy,
    pace: f64,
    rng: &mut R,
) -> Vec<BrushSample> {
    let scale = pace
        * match model.orientation {
            crate::geometry::Orientation::Vertical => 1.0,
            crate::geometry::Orientation::Horizontal => policy.horizontal_time_scale,
        };
    let dt = policy.sample_interval;
    let normal = facing_normal(model.orientation);
    let dwell_bound = 0.45 * model.hit_radius;
    let mut out = Vec::new();
    let push = |p: Vec3, out: &mut Vec<BrushSample>| {
        let t = (out.len() + 1) as f64 * dt;
        out.push(BrushSample::new(t, p));
    };

    let Some(&first) = order.first() else {
        return out;
    };
    let rest = model.dots[first].position + normal * REST_OFFSET;
    for _ in 0..REST_SAMPLES {
        push(rest + jitter(policy.jitter_sd, rng), &mut out);
    }
    for j in 1..APPROACH_SAMPLES {
        let s = j as f64 / APPROACH_SAMPLES as f64;
        push(rest + (model.dots[first].position - rest) * s, &mut out);
    }

    let mut current = None;
    for &target in order {
        let to = model.dots[target].position;
        if let Some(from) = current {
            let from: Vec3 = from;
            let duration = from.distance(to) / policy.speed * scale;
            let steps = (duration / dt).ceil().max(1.0) as usize;
            for j in 1..steps {
                let s = j as f64 / steps as f64;
                let arc = normal * (policy.lift * (std::f64::consts::PI * s).sin());
                push(from + (to - from) * s + arc + jitter(policy.jitter_sd, rng), &mut out);
            }
        }
        let z: f64 = StandardNormal.sample(rng);
        let dwell = (policy.dwell + policy.dwell_sd * z.clamp(-3.0, 3.0)) * scale;
        let count = ((dwell / dt).round() as usize).max(1);
        for _ in 0..count {
            let mut off = jitter(policy.jitter_sd, rng);
            let norm = off.norm();
            if norm > dwell_bound {
                off = off * (dwell_bound / norm);
            }
            push(to + off, &mut out);
        }
        current = Some(to);
    }

    let last = current.unwrap_or(rest);
    let retreat = last + normal * REST_OFFSET;
    for j in 1..=APPROACH_SAMPLES {
        let s = j as f64 / APPROACH_SAMPLES as f64;
        push(last + (retreat - last) * s, &mut out);
    }
    out
}

/// Every point a synthetic path can visit must be within the arm's reach.
pub fn check_reach(models: &[DotModel], arm: &ArmModel, policy: &SimPolicy) -> Result<()> {
    let margin = REST_OFFSET.max(policy.lift) + 3.0 * policy.jitter_sd * 3f64.sqrt();
    for m in models {
        for d in &m.dots {
            let dist = d.position.distance(arm.shoulder);
            if dist - margin < arm.min_reach() || dist + margin > arm.max_reach() {
                return Err(Error::Configuration(format!(
                    "{} dot {} at {:.3} m from the shoulder is outside the reachable band [{:.3}, {:.3}] m with {:.3} m margin",
                    m.condition(),
                    d.index,
                    dist,
                    arm.min_reach(),
                    arm.max_reach(),
                    margin
                )));
            }
        }
    }
    Ok(())
}

/// Runs one synthetic session through the engine and the sensor simulator.
pub fn simulate_session<R: Rng>(
    model: &DotModel,
    participant_id: &str,
    policy: &SimPolicy,
    pace: f64,
    arm: &ArmModel,
    sensor: &SensorParams,
    rng: &mut R,
) -> Result<(SessionLog, SensorTrace)> {
    let sensor_seed = rng.next_u64();
    let order = visit_order(model.len(), policy.out_of_order_prob, rng);
    let path = synthesize_path(model, &order, policy, pace, rng);
    let mut session = Session::open(model.clone(), participant_id);
    for s in &path {
        session.feed_sample(*s)?;
    }
    if session.state() != SessionState::Complete {
        return Err(Error::Degenerate(format!(
            "synthetic path for `{participant_id}` ({}) left {} of {} dots unhit",
            model.condition(),
            model.len() - session.hits(),
            model.len()
        )));
    }
    let log = session.finalize();
    let trace = simulate_trace(arm, &log.samples, sensor, sensor_seed)?;
    Ok((log, trace))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionFiles {
    pub condition: Condition,
    /// Paths relative to the manifest's directory.
    pub log: String,
    pub trace: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantEntry {
    pub participant_id: String,
    /// Presentation order.
    pub conditions: Vec<Condition>,
    pub sessions: Vec<SessionFiles>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortManifest {
    pub seed: u64,
    pub engine_version: String,
    pub policy: SimPolicy,
    pub model_params: ModelParams,
    pub arm: ArmModel,
    pub sensor: SensorParams,
    pub participants: Vec<ParticipantEntry>,
}

impl CohortManifest {
    /// Four sessions per participant, one per condition, following the
    /// participant's Latin-square row.
    pub fn validate(&self) -> Result<()> {
        let square = balanced_latin_square(Condition::ALL.len())?;
        let ids: Vec<String> = self.participants.iter().map(|p| p.participant_id.clone()).collect();
        let expected = assign_conditions(&ids, &square, &Condition::ALL)?;
        for (p, (_, row)) in self.participants.iter().zip(expected) {
            let bad = |reason: String| Error::Validation {
                item: p.participant_id.clone(),
                reason,
            };
            if p.conditions != row {
                return Err(bad(format!("condition order {:?} is not the assigned row", p.conditions)));
            }
            let session_conditions: Vec<Condition> = p.sessions.iter().map(|s| s.condition).collect();
            if session_conditions != p.conditions {
                return Err(bad("sessions do not match the condition order".into()));
            }
        }
        Ok(())
    }

    pub fn read(path: &Path) -> Result<CohortManifest> {
        let text = fs::read_to_string(path).map_err(|e| Error::Ingestion {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Ingestion {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }
}

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn participant_id(k: usize) -> String {
    format!("P{:03}", k + 1)
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Simulates `n_participants` x 4 sessions, writes `logs/`, `traces/` and
/// `manifest.json` under `out_dir`, and returns the manifest.
pub fn simulate_cohort(
    n_participants: usize,
    policy: &SimPolicy,
    params: &ModelParams,
    arm: &ArmModel,
    sensor: &SensorParams,
    out_dir: &Path,
) -> Result<CohortManifest> {
    if n_participants < 1 {
        return Err(Error::param("participants", "need at least one participant"));
    }
    policy.validate()?;
    let models: BTreeMap<Condition, DotModel> = Condition::ALL
        .iter()
        .map(|&c| Ok((c, generate_model(c.configuration, c.orientation, params)?)))
        .collect::<Result<_>>()?;
    let all: Vec<DotModel> = models.values().cloned().collect();
    policy.check_against(params.hit_radius)?;
    check_reach(&all, arm, policy)?;

    let square = balanced_latin_square(Condition::ALL.len())?;
    let ids: Vec<String> = (0..n_participants).map(participant_id).collect();
    let assignment = assign_conditions(&ids, &square, &Condition::ALL)?;

    fs::create_dir_all(out_dir.join("logs"))?;
    fs::create_dir_all(out_dir.join("traces"))?;
    let mut participants = Vec::with_capacity(n_participants);
    for (k, (pid, conditions)) in assignment.into_iter().enumerate() {
        let mut prng = stream_rng(policy.seed, (k as u64 + 1) << 8);
        let z: f64 = StandardNormal.sample(&mut prng);
        let pace = (policy.pace_sd * z.clamp(-3.0, 3.0)).exp();
        let mut sessions = Vec::with_capacity(conditions.len());
        for &c in &conditions {
            let cond_idx = Condition::ALL.iter().position(|&x| x == c).unwrap_or(0) as u64;
            let mut rng = stream_rng(policy.seed, ((k as u64 + 1) << 8) | (cond_idx + 1));
            let (log, trace) = simulate_session(&models[&c], &pid, policy, pace, arm, sensor, &mut rng)?;
            let files = SessionFiles {
                condition: c,
                log: format!("logs/{pid}_{}.jsonl", c.slug()),
                trace: format!("traces/{pid}_{}.csv", c.slug()),
            };
            fs::write(out_dir.join(&files.log), log.to_jsonl())?;
            fs::write(out_dir.join(&files.trace), trace.to_csv_string())?;
            sessions.push(files);
        }
        participants.push(ParticipantEntry {
            participant_id: pid,
            conditions,
            sessions,
        });
    }
    let manifest = CohortManifest {
        seed: policy.seed,
        engine_version: ENGINE_VERSION.to_string(),
        policy: *policy,
        model_params: params.clone(),
        arm: *arm,
        sensor: *sensor,
        participants,
    };
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    fs::write(out_dir.join(MANIFEST_FILE), json)?;
    Ok(manifest)
}

fn ingest<T>(path: &Path, parse: impl FnOnce(&str) -> Result<T>) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Ingestion {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    parse(&text).map_err(|e| Error::Ingestion {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Reads every referenced log and trace and builds one record per session,
/// in manifest order.
pub fn collect_records(manifest: &CohortManifest, base: &Path) -> Result<Vec<MetricsRecord>> {
    let mut out = Vec::new();
    for p in &manifest.participants {
        for s in &p.sessions {
            let log = ingest(&base.join(&s.log), SessionLog::from_jsonl)?;
            let trace = ingest(&base.join(&s.trace), |t| SensorTrace::read_csv(t.as_bytes()))?;
            if log.participant_id != p.participant_id || log.condition != s.condition {
                return Err(Error::Ingestion {
                    path: base.join(&s.log),
                    reason: format!(
                        "log is for `{}` {}, manifest expects `{}` {}",
                        log.participant_id, log.condition, p.participant_id, s.condition
                    ),
                });
            }
            out.push(build_record(&log, &trace)?);
        }
    }
    Ok(out)
}

/// The three normalized dependent variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variable {
    NormTct,
    NormMistakes,
    NormResistance,
}

impl Variable {
    pub const ALL: [Variable; 3] = [Variable::NormTct, Variable::NormMistakes, Variable::NormResistance];

    pub fn name(self) -> &'static str {
        match self {
            Variable::NormTct => "norm_tct",
            Variable::NormMistakes => "norm_mistakes",
            Variable::NormResistance => "norm_resistance",
        }
    }

    pub fn value(self, r: &MetricsRecord) -> f64 {
        match self {
            Variable::NormTct => r.norm_tct,
            Variable::NormMistakes => r.norm_mistakes,
            Variable::NormResistance => r.norm_resistance,
        }
    }
}

/// Complete 2x2 table of one variable, participants in first-seen order.
pub fn cell_table(records: &[MetricsRecord], variable: Variable) -> Result<CellTable> {
    let mut order: Vec<&str> = Vec::new();
    let mut cells: BTreeMap<&str, [[Option<f64>; 2]; 2]> = BTreeMap::new();
    for r in records {
        let entry = cells.entry(&r.participant_id).or_insert_with(|| {
            order.push(&r.participant_id);
            [[None; 2]; 2]
        });
        let slot = &mut entry[r.orientation.level()][r.configuration.level()];
        if slot.is_some() {
            return Err(Error::Validation {
                item: r.participant_id.clone(),
                reason: format!("duplicate session for {}", r.condition()),
            });
        }
        *slot = Some(variable.value(r));
    }
    let rows = order
        .iter()
        .map(|id| {
            let c = cells[id];
            let get = |a: usize, b: usize| {
                c[a][b].ok_or_else(|| Error::Validation {
                    item: id.to_string(),
                    reason: format!(
                        "missing session for {}",
                        Condition::ALL
                            .iter()
                            .find(|x| x.orientation.level() == a && x.configuration.level() == b)
                            .map(|x| x.to_string())
                            .unwrap_or_default()
                    ),
                })
            };
            Ok([[get(0, 0)?, get(0, 1)?], [get(1, 0)?, get(1, 1)?]])
        })
        .collect::<Result<Vec<_>>>()?;
    CellTable::new(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescriptiveRow {
    pub variable: Variable,
    pub condition: Condition,
    pub stats: Descriptives,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalityRow {
    pub variable: Variable,
    pub condition: Condition,
    pub n: usize,
    pub result: Option<ShapiroWilk>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnovaRow {
    pub variable: Variable,
    pub effects: Option<[AnovaEffect; 3]>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContrastRow {
    pub variable: Variable,
    pub contrast: Option<Contrast>,
    pub label: String,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub records: Vec<MetricsRecord>,
    pub descriptives: Vec<DescriptiveRow>,
    pub normality: Vec<NormalityRow>,
    pub anova: Vec<AnovaRow>,
    pub contrasts: Vec<ContrastRow>,
}

pub const ALPHA: f64 = 0.05;

/// Descriptives, normality, ANOVA and contrasts for every variable.
/// Degenerate variables are reported in the notes rather than failing the run.
pub fn analyze_records(records: Vec<MetricsRecord>) -> Result<AnalysisReport> {
    if records.is_empty() {
        return Err(Error::EmptyInput("metrics records"));
    }
    let mut report = AnalysisReport {
        records,
        descriptives: Vec::new(),
        normality: Vec::new(),
        anova: Vec::new(),
        contrasts: Vec::new(),
    };
    for variable in Variable::ALL {
        let table = cell_table(&report.records, variable)?;
        for c in Condition::ALL {
            let values = table.cell(c.orientation.level(), c.configuration.level());
            report.descriptives.push(DescriptiveRow {
                variable,
                condition: c,
                stats: descriptives(&values)?,
            });
            let (result, note) = match shapiro_wilk(&values) {
                Ok(r) => (Some(r), String::new()),
                Err(e @ (Error::Degenerate(_) | Error::OutOfRange { .. })) => (None, e.to_string()),
                Err(e) => return Err(e),
            };
            report.normality.push(NormalityRow {
                variable,
                condition: c,
                n: values.len(),
                result,
                note,
            });
        }
        let (effects, note) = match rm_anova_2x2(&table) {
            Ok(e) => (Some(e), String::new()),
            Err(e @ (Error::Degenerate(_) | Error::InsufficientData { .. })) => (None, e.to_string()),
            Err(e) => return Err(e),
        };
        report.anova.push(AnovaRow { variable, effects, note });

        if table.participants() >= 2 {
            let (done, skipped) = pairwise_contrasts(&table, ["Vertical", "Horizontal"], ["Flat", "Curved"])?;
            report.contrasts.extend(done.into_iter().map(|c| ContrastRow {
                variable,
                label: c.label.clone(),
                contrast: Some(c),
                note: String::new(),
            }));
            report.contrasts.extend(skipped.into_iter().map(|label| ContrastRow {
                variable,
                contrast: None,
                label,
                note: "degenerate: paired differences have zero variance".into(),
            }));
        }
    }
    Ok(report)
}

/// Loads the manifest, recomputes every record and writes the report bundle.
pub fn analyze_cohort(manifest_path: &Path, out_dir: &Path) -> Result<AnalysisReport> {
    let manifest = CohortManifest::read(manifest_path)?;
    manifest.validate()?;
    let base = manifest_path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    let records = collect_records(&manifest, &base)?;
    let report = analyze_records(records)?;
    report.write(out_dir)?;
    Ok(report)
}

fn num(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v}")
    }
}

impl AnalysisReport {
    pub const FILES: [&'static str; 5] = [
        "metrics.csv",
        "table1.csv",
        "normality.csv",
        "table2.csv",
        "contrasts.csv",
    ];

    pub fn write(&self, out_dir: &Path) -> Result<()> {
        fs::create_dir_all(out_dir)?;
        write_metrics_csv(&self.records, fs::File::create(out_dir.join("metrics.csv"))?)?;

        let mut w = csv::Writer::from_path(out_dir.join("table1.csv"))?;
        w.write_record(["variable", "orientation", "configuration", "n", "mean", "sd", "se", "summary"])?;
        for r in &self.descriptives {
            w.write_record([
                r.variable.name().to_string(),
                r.condition.orientation.to_string(),
                r.condition.configuration.to_string(),
                r.stats.n.to_string(),
                num(r.stats.mean),
                num(r.stats.sd),
                num(r.stats.se),
                r.stats.table_cell(4),
            ])?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(out_dir.join("normality.csv"))?;
        w.write_record(["variable", "orientation", "configuration", "n", "w", "p", "note"])?;
        for r in &self.normality {
            let (wv, p) = r.result.map(|s| (num(s.w), num(s.p))).unwrap_or_default();
            w.write_record([
                r.variable.name().to_string(),
                r.condition.orientation.to_string(),
                r.condition.configuration.to_string(),
                r.n.to_string(),
                wv,
                p,
                r.note.clone(),
            ])?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(out_dir.join("table2.csv"))?;
        w.write_record(["variable", "effect", "df1", "df2", "f", "p", "significant", "eta2", "magnitude", "note"])?;
        for r in &self.anova {
            match &r.effects {
                Some(effects) => {
                    for e in effects {
                        w.write_record([
                            r.variable.name().to_string(),
                            e.name.label().to_string(),
                            e.df1.to_string(),
                            e.df2.to_string(),
                            num(e.f),
                            num(e.p),
                            (e.p < ALPHA).to_string(),
                            num(e.eta2),
                            eta2_label(e.eta2).to_string(),
                            if e.degenerate { "degenerate: zero error variance".into() } else { String::new() },
                        ])?;
                    }
                }
                None => {
                    w.write_record([
                        r.variable.name(),
                        "",
                        "",
                        "",
                        "",
                        "",
                        "",
                        "",
                        "",
                        r.note.as_str(),
                    ])?;
                }
            }
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(out_dir.join("contrasts.csv"))?;
        w.write_record(["variable", "contrast", "family", "t", "df", "p", "p_bonferroni", "significant", "note"])?;
        for r in &self.contrasts {
            let mut row = vec![r.variable.name().to_string(), r.label.clone()];
            match &r.contrast {
                Some(c) => row.extend([
                    if c.pooled { "pooled" } else { "simple" }.to_string(),
                    num(c.test.t),
                    c.test.df.to_string(),
                    num(c.test.p),
                    num(c.p_adjusted),
                    (c.p_adjusted < ALPHA).to_string(),
                    String::new(),
                ]),
                None => row.extend(["", "", "", "", "", "", r.note.as_str()].map(String::from)),
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn anova_for(&self, variable: Variable) -> Option<&AnovaRow> {
        self.anova.iter().find(|r| r.variable == variable)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Configuration, Orientation};

    #[test]
    fn visit_order_without_swaps_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(visit_order(5, 0.0, &mut rng), vec![0, 1, 2, 3, 4]);
        let swapped = visit_order(6, 1.0, &mut rng);
        assert_eq!(swapped, vec![1, 0, 3, 2, 5, 4]);
    }

    #[test]
    fn ordered_session_completes_without_mistakes() {
        let m = generate_model(Configuration::Curved, Orientation::Horizontal, &ModelParams::default()).unwrap();
        let policy = SimPolicy {
            out_of_order_prob: 0.0,
            ..SimPolicy::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (log, trace) =
            simulate_session(&m, "p", &policy, 1.0, &ArmModel::default(), &SensorParams::default(), &mut rng).unwrap();
        assert!(log.is_complete());
        assert_eq!(log.mistake_count(), 0);
        assert!(!log.late_samples().is_empty());
        assert_eq!(trace.samples.len(), log.samples.len());
    }

    #[test]
    fn every_swap_is_one_mistake() {
        let m = generate_model(Configuration::Flat, Orientation::Vertical, &ModelParams::default()).unwrap();
        let policy = SimPolicy::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let order = visit_order(m.len(), 0.3, &mut rng);
        let swaps = order.iter().enumerate().filter(|&(i, &d)| d == i + 1).count();
        let path = synthesize_path(&m, &order, &policy, 1.0, &mut rng);
        let mut s = Session::open(m, "p");
        for p in path {
            s.feed_sample(p).unwrap();
        }
        let log = s.finalize();
        assert!(swaps > 0);
        assert_eq!(log.mistake_count(), swaps);
        let hits: Vec<usize> = log.dot_hits().map(|(_, i)| i).collect();
        assert_eq!(hits, order);
    }

    #[test]
    fn policy_validation() {
        let bad = SimPolicy {
            out_of_order_prob: 1.5,
            ..SimPolicy::default()
        };
        assert!(bad.validate().is_err());
        let bad = SimPolicy {
            speed: 0.0,
            ..SimPolicy::default()
        };
        assert!(bad.validate().is_err());
        let low = SimPolicy {
            lift: 0.01,
            ..SimPolicy::default()
        };
        assert!(matches!(low.check_against(0.008), Err(Error::Configuration(_))));
    }

    #[test]
    fn short_arm_is_rejected() {
        let models: Vec<DotModel> = Condition::ALL
            .iter()
            .map(|c| generate_model(c.configuration, c.orientation, &ModelParams::default()).unwrap())
            .collect();
        let arm = ArmModel::new(Vec3::new(0.18, 1.35, 0.0), 0.3, 0.3).unwrap();
        assert!(matches!(
            check_reach(&models, &arm, &SimPolicy::default()),
            Err(Error::Configuration(_))
        ));
        assert!(check_reach(&models, &ArmModel::default(), &SimPolicy::default()).is_ok());
    }
}
