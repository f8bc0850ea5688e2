//! Two-link arm elbow angle, the elbow-sleeve resistance model and the
//! percentage resistance-change signal.

use std::f64::consts::PI;
use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::session::BrushSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Handedness {
    Right,
    Left,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmModel {
    pub shoulder: Vec3,
    pub upper_arm: f64,
    pub forearm: f64,
}

impl ArmModel {
    pub fn new(shoulder: Vec3, upper_arm: f64, forearm: f64) -> Result<Self> {
        if !(upper_arm > 0.0 && forearm > 0.0 && upper_arm.is_finite() && forearm.is_finite()) {
            return Err(Error::param("arm", "segment lengths must be positive"));
        }
        Ok(Self {
            shoulder,
            upper_arm,
            forearm,
        })
    }

    /// Default arm for a standing user of the given handedness.
    pub fn for_hand(hand: Handedness) -> Self {
        let x = match hand {
            Handedness::Right => 0.18,
            Handedness::Left => -0.18,
        };
        Self {
            shoulder: Vec3::new(x, 1.35, 0.0),
            upper_arm: 0.5,
            forearm: 0.5,
        }
    }

    pub fn min_reach(&self) -> f64 {
        (self.upper_arm - self.forearm).abs()
    }

    pub fn max_reach(&self) -> f64 {
        self.upper_arm + self.forearm
    }

    pub fn reaches(&self, target: Vec3) -> bool {
        let d = self.shoulder.distance(target);
        d <= self.max_reach() && d >= self.min_reach()
    }
}

impl Default for ArmModel {
    fn default() -> Self {
        ArmModel::for_hand(Handedness::Right)
    }
}

/// Interior elbow angle in radians: pi with the arm straight, 0 fully folded.
pub fn elbow_angle(arm: &ArmModel, target: Vec3) -> Result<f64> {
    elbow_angle_at_distance(arm, arm.shoulder.distance(target))
}

/// Law of cosines on the shoulder-target distance.
pub fn elbow_angle_at_distance(arm: &ArmModel, d: f64) -> Result<f64> {
    // Allow round-off at the two boundaries.
    let slack = 1e-12 * arm.max_reach();
    if !d.is_finite() || d > arm.max_reach() + slack || d < arm.min_reach() - slack {
        return Err(Error::OutOfReach {
            distance: d,
            min_reach: arm.min_reach(),
            max_reach: arm.max_reach(),
            sample: None,
        });
    }
    let (l1, l2) = (arm.upper_arm, arm.forearm);
    let cos = (l1 * l1 + l2 * l2 - d * d) / (2.0 * l1 * l2);
    Ok(cos.clamp(-1.0, 1.0).acos())
}

/// Sleeve resistance grows linearly with the flexion fraction `(pi - theta) / pi`.
pub fn resistance_from_angle(theta: f64, r_base: f64, alpha: f64) -> Result<f64> {
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::OutOfRange {
            what: "elbow angle",
            value: theta,
            lo: 0.0,
            hi: PI,
        });
    }
    if !(r_base > 0.0) || !(alpha >= 0.0) {
        return Err(Error::param("sensor", "r_base must be positive and alpha non-negative"));
    }
    Ok(r_base * (1.0 + alpha * (PI - theta) / PI))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorParams {
    pub r_base: f64,
    pub alpha: f64,
    pub noise_sd: f64,
}

impl Default for SensorParams {
    fn default() -> Self {
        Self {
            r_base: 100.0,
            alpha: 0.05,
            noise_sd: 0.1,
        }
    }
}

/// Provenance carried by simulated traces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationInfo {
    pub r_base: f64,
    pub alpha: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorSample {
    pub t: f64,
    pub resistance: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SensorTrace {
    pub samples: Vec<SensorSample>,
    /// Minimum resistance at no stretch; `None` until estimated or supplied.
    pub r_min: Option<f64>,
    pub simulation: Option<SimulationInfo>,
}

impl SensorTrace {
    pub fn new(samples: Vec<SensorSample>) -> Self {
        Self {
            samples,
            r_min: None,
            simulation: None,
        }
    }

    /// Overrides the reference resistance with the minimum over a rest-pose
    /// window. Samples outside the window may then fall below it.
    pub fn set_baseline_window(&mut self, start: f64, end: f64) -> Result<f64> {
        let rm = self
            .samples
            .iter()
            .filter(|s| s.t >= start && s.t <= end)
            .map(|s| s.resistance)
            .fold(f64::INFINITY, f64::min);
        if rm.is_infinite() {
            return Err(Error::EmptyWindow { start, end });
        }
        self.r_min = Some(rm);
        Ok(rm)
    }

    /// Two-column CSV with an optional `#` comment line carrying simulation parameters.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        if let Some(sim) = &self.simulation {
            writeln!(
                out,
                "# r_base={},alpha={},noise_sd={},seed={}",
                sim.r_base, sim.alpha, sim.noise_sd, sim.seed
            )?;
        }
        writeln!(out, "t,resistance")?;
        for s in &self.samples {
            writeln!(out, "{},{}", s.t, s.resistance)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("trace CSV is ASCII")
    }

    /// Reads a trace written by [`SensorTrace::write_csv`] or an external
    /// recording in the same two-column layout.
    pub fn read_csv<R: Read>(mut input: R) -> Result<SensorTrace> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        let simulation = text
            .lines()
            .next()
            .and_then(|l| l.strip_prefix('#'))
            .map(parse_sim_comment)
            .transpose()?
            .flatten();
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut samples = Vec::new();
        for (i, row) in reader.deserialize::<SensorSample>().enumerate() {
            let s = row.map_err(|e| Error::Parse {
                what: "sensor trace",
                line: i + 2,
                reason: e.to_string(),
            })?;
            if !(s.resistance > 0.0) || !s.t.is_finite() {
                return Err(Error::Parse {
                    what: "sensor trace",
                    line: i + 2,
                    reason: format!("invalid sample {s:?}"),
                });
            }
            samples.push(s);
        }
        if samples.windows(2).any(|w| w[1].t < w[0].t) {
            return Err(Error::Parse {
                what: "sensor trace",
                line: 0,
                reason: "timestamps decrease".into(),
            });
        }
        Ok(SensorTrace {
            samples,
            r_min: None,
            simulation,
        })
    }
}

fn parse_sim_comment(body: &str) -> Result<Option<SimulationInfo>> {
    let mut r_base = None;
    let mut alpha = None;
    let mut noise_sd = None;
    let mut seed = None;
    for kv in body.trim().split(',') {
        let Some((k, v)) = kv.split_once('=') else {
            continue;
        };
        let bad = |_| Error::Parse {
            what: "sensor trace header",
            line: 1,
            reason: format!("bad value in `{kv}`"),
        };
        match k.trim() {
            "r_base" => r_base = Some(v.trim().parse::<f64>().map_err(bad)?),
            "alpha" => alpha = Some(v.trim().parse::<f64>().map_err(bad)?),
            "noise_sd" => noise_sd = Some(v.trim().parse::<f64>().map_err(bad)?),
            "seed" => {
                seed = Some(v.trim().parse::<u64>().map_err(|_| Error::Parse {
                    what: "sensor trace header",
                    line: 1,
                    reason: format!("bad seed `{v}`"),
                })?)
            }
            _ => {}
        }
    }
    Ok(match (r_base, alpha, noise_sd, seed) {
        (Some(r_base), Some(alpha), Some(noise_sd), Some(seed)) => Some(SimulationInfo {
            r_base,
            alpha,
            noise_sd,
            seed,
        }),
        _ => None,
    })
}

/// One resistance sample per brush sample; Gaussian noise from a seeded
/// generator, clamped to stay positive.
pub fn simulate_trace(
    arm: &ArmModel,
    samples: &[BrushSample],
    sensor: &SensorParams,
    seed: u64,
) -> Result<SensorTrace> {
    if !(sensor.noise_sd >= 0.0 && sensor.noise_sd.is_finite()) {
        return Err(Error::param("noise_sd", "must be finite and non-negative"));
    }
    let noise = Normal::new(0.0, sensor.noise_sd).map_err(|e| Error::param("noise_sd", e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let floor = sensor.r_base * 1e-9;
    let mut out = Vec::with_capacity(samples.len());
    for (i, s) in samples.iter().enumerate() {
        let theta = elbow_angle(arm, s.position).map_err(|e| match e {
            Error::OutOfReach {
                distance,
                min_reach,
                max_reach,
                ..
            } => Error::OutOfReach {
                distance,
                min_reach,
                max_reach,
                sample: Some(i),
            },
            other => other,
        })?;
        let clean = resistance_from_angle(theta, sensor.r_base, sensor.alpha)?;
        let noisy = if sensor.noise_sd > 0.0 {
            clean + noise.sample(&mut rng)
        } else {
            clean
        };
        out.push(SensorSample {
            t: s.t,
            resistance: noisy.max(floor),
        });
    }
    Ok(SensorTrace {
        samples: out,
        r_min: None,
        simulation: Some(SimulationInfo {
            r_base: sensor.r_base,
            alpha: sensor.alpha,
            noise_sd: sensor.noise_sd,
            seed,
        }),
    })
}

/// Sets the trace's reference resistance to its overall minimum.
pub fn estimate_rm(trace: &mut SensorTrace) -> Result<f64> {
    let rm = trace
        .samples
        .iter()
        .map(|s| s.resistance)
        .fold(f64::INFINITY, f64::min);
    if trace.samples.is_empty() {
        return Err(Error::EmptyInput("estimate_rm"));
    }
    trace.r_min = Some(rm);
    Ok(rm)
}

/// Percentage change relative to the reference resistance.
pub fn resistance_change(r: f64, r_min: f64) -> f64 {
    (r - r_min) * 100.0 / r_min
}

fn reference(trace: &SensorTrace) -> Result<f64> {
    match trace.r_min {
        Some(rm) if rm > 0.0 => Ok(rm),
        Some(rm) => Err(Error::OutOfRange {
            what: "reference resistance",
            value: rm,
            lo: f64::MIN_POSITIVE,
            hi: f64::INFINITY,
        }),
        None => Err(Error::Configuration("reference resistance not estimated".into())),
    }
}

/// Per-sample percentage change, with negative values discarded as outliers.
pub fn resistance_change_series(trace: &SensorTrace) -> Result<Vec<f64>> {
    let rm = reference(trace)?;
    Ok(trace
        .samples
        .iter()
        .map(|s| resistance_change(s.resistance, rm))
        .filter(|&pct| pct >= 0.0)
        .collect())
}

/// Mean percentage change over samples with `t` in `[start, end]`.
pub fn mean_resistance_change(trace: &SensorTrace, start: f64, end: f64) -> Result<f64> {
    let rm = reference(trace)?;
    if !(start <= end) {
        return Err(Error::EmptyWindow { start, end });
    }
    let (sum, count) = trace
        .samples
        .iter()
        .filter(|s| s.t >= start && s.t <= end)
        .map(|s| resistance_change(s.resistance, rm))
        .filter(|&pct| pct >= 0.0)
        .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        return Err(Error::EmptyWindow { start, end });
    }
    Ok(sum / count as f64)
}
