//! Dot-outline drawing models for the four study conditions.
//!
//! A model is a closed fish outline (elliptical body plus a fan-shaped tail)
//! resampled by arc length into a fixed number of dots. Curved models add a
//! sinusoidal depth profile along the outline. Models are built in a
//! model-centred canonical frame and then placed in the world according to
//! their orientation.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 3-vector in metres. World frame: x right, y up, z away from the user.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn distance(self, other: Vec3) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Configuration {
    Flat,
    Curved,
}

impl Configuration {
    pub const ALL: [Configuration; 2] = [Configuration::Flat, Configuration::Curved];

    pub fn dot_count(self) -> usize {
        match self {
            Configuration::Flat => 69,
            Configuration::Curved => 91,
        }
    }

    /// Level index used by the 2x2 analysis (Flat = 0, Curved = 1).
    pub fn level(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Orientation {
    Vertical,
    Horizontal,
}

impl Orientation {
    pub const ALL: [Orientation; 2] = [Orientation::Vertical, Orientation::Horizontal];

    /// Level index used by the 2x2 analysis (Vertical = 0, Horizontal = 1).
    pub fn level(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Configuration::Flat => "Flat",
            Configuration::Curved => "Curved",
        })
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Orientation::Vertical => "Vertical",
            Orientation::Horizontal => "Horizontal",
        })
    }
}

impl FromStr for Configuration {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "flat" => Ok(Configuration::Flat),
            "curved" => Ok(Configuration::Curved),
            _ => Err(Error::param("configuration", format!("unknown value `{s}`"))),
        }
    }
}

impl FromStr for Orientation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vertical" => Ok(Orientation::Vertical),
            "horizontal" => Ok(Orientation::Horizontal),
            _ => Err(Error::param("orientation", format!("unknown value `{s}`"))),
        }
    }
}

/// One of the four study conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Condition {
    pub orientation: Orientation,
    pub configuration: Configuration,
}

impl Condition {
    pub const fn new(orientation: Orientation, configuration: Configuration) -> Self {
        Self {
            orientation,
            configuration,
        }
    }

    /// The four conditions in Latin-square label order.
    pub const ALL: [Condition; 4] = [
        Condition::new(Orientation::Vertical, Configuration::Flat),
        Condition::new(Orientation::Horizontal, Configuration::Flat),
        Condition::new(Orientation::Vertical, Configuration::Curved),
        Condition::new(Orientation::Horizontal, Configuration::Curved),
    ];

    /// Lowercase slug such as `flat_vertical`, used in file names.
    pub fn slug(self) -> String {
        format!("{}_{}", self.configuration, self.orientation).to_ascii_lowercase()
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.configuration, self.orientation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dot {
    pub index: usize,
    pub position: Vec3,
}

/// Shape, depth, collision and placement parameters for model generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub body_length: f64,
    pub body_height: f64,
    pub tail_length: f64,
    pub tail_height: f64,
    pub depth_amplitude: f64,
    pub hit_radius: f64,
    pub vertical_center: Vec3,
    pub horizontal_center: Vec3,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            body_length: 0.6,
            body_height: 0.4,
            tail_length: 0.2,
            tail_height: 0.32,
            depth_amplitude: 0.10,
            hit_radius: 0.008,
            vertical_center: Vec3::new(0.0, 1.40, 0.50),
            horizontal_center: Vec3::new(0.0, 1.00, 0.50),
        }
    }
}

impl ModelParams {
    fn validate(&self) -> Result<()> {
        let positive = [
            ("body_length", self.body_length),
            ("body_height", self.body_height),
            ("tail_length", self.tail_length),
            ("tail_height", self.tail_height),
            ("hit_radius", self.hit_radius),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.depth_amplitude.is_finite() && self.depth_amplitude >= 0.0) {
            return Err(Error::param(
                "depth_amplitude",
                format!("must be non-negative, got {}", self.depth_amplitude),
            ));
        }
        if !(self.vertical_center.is_finite() && self.horizontal_center.is_finite()) {
            return Err(Error::param("center", "placement must be finite"));
        }
        Ok(())
    }

    pub fn center(&self, orientation: Orientation) -> Vec3 {
        match orientation {
            Orientation::Vertical => self.vertical_center,
            Orientation::Horizontal => self.horizontal_center,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DotModel {
    pub configuration: Configuration,
    pub orientation: Orientation,
    pub dots: Vec<Dot>,
    pub hit_radius: f64,
}

impl DotModel {
    pub fn condition(&self) -> Condition {
        Condition::new(self.orientation, self.configuration)
    }

    pub fn len(&self) -> usize {
        self.dots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dots.is_empty()
    }

    /// Consecutive distances around the closed outline (last entry closes the loop).
    pub fn consecutive_spacings(&self) -> Vec<f64> {
        let n = self.dots.len();
        (0..n)
            .map(|i| self.dots[i].position.distance(self.dots[(i + 1) % n].position))
            .collect()
    }

    pub fn min_pairwise_distance(&self) -> f64 {
        let mut min = f64::INFINITY;
        for (i, a) in self.dots.iter().enumerate() {
            for b in &self.dots[i + 1..] {
                min = min.min(a.position.distance(b.position));
            }
        }
        min
    }

    /// Checks the structural invariants that hold for every model regardless
    /// of frame: dot count, contiguous indices, finite positions, spacing
    /// uniformity and a hit radius that isolates every dot.
    pub fn validate(&self) -> Result<()> {
        let expected = self.configuration.dot_count();
        if self.dots.len() != expected {
            return Err(Error::Validation {
                item: "model".into(),
                reason: format!("{} dots, expected {expected}", self.dots.len()),
            });
        }
        for (i, d) in self.dots.iter().enumerate() {
            if d.index != i || !d.position.is_finite() {
                return Err(Error::Validation {
                    item: format!("dot {i}"),
                    reason: "non-contiguous index or non-finite position".into(),
                });
            }
        }
        let spacings = self.consecutive_spacings();
        let mean = spacings.iter().sum::<f64>() / spacings.len() as f64;
        if let Some(bad) = spacings
            .iter()
            .position(|&s| s < 0.5 * mean || s > 2.0 * mean)
        {
            return Err(Error::Validation {
                item: format!("spacing after dot {bad}"),
                reason: format!("{} vs mean {mean}", spacings[bad]),
            });
        }
        let min_pair = self.min_pairwise_distance();
        if !(self.hit_radius > 0.0 && self.hit_radius < 0.5 * min_pair) {
            return Err(Error::param(
                "hit_radius",
                format!(
                    "{} must be positive and below half the minimum dot distance {min_pair}",
                    self.hit_radius
                ),
            ));
        }
        Ok(())
    }
}

/// Builds the dot model for one condition.
pub fn generate_model(
    configuration: Configuration,
    orientation: Orientation,
    params: &ModelParams,
) -> Result<DotModel> {
    params.validate()?;
    let canonical = canonical_dots(configuration, params);
    let dots = transform_orientation(&canonical, orientation, params);
    let model = DotModel {
        configuration,
        orientation,
        dots,
        hit_radius: params.hit_radius,
    };
    model.validate()?;
    Ok(model)
}

/// Dots in the model-centred canonical frame (outline in the x-y plane,
/// depth along z), before any placement.
pub fn canonical_dots(configuration: Configuration, params: &ModelParams) -> Vec<Dot> {
    let outline = fish_outline(params);
    let n = configuration.dot_count();
    let points = resample_closed(&outline, n);
    points
        .into_iter()
        .enumerate()
        .map(|(index, (x, y))| {
            let z = match configuration {
                Configuration::Flat => 0.0,
                Configuration::Curved => {
                    let s = index as f64 / n as f64;
                    params.depth_amplitude * (2.0 * PI * s).sin()
                }
            };
            Dot {
                index,
                position: Vec3::new(x, y, z),
            }
        })
        .collect()
}

/// Places canonical dots in the world. Vertical keeps the outline facing the
/// user; Horizontal lays it face-down by rotating about the x-axis so that
/// canonical +y maps to world +z. Both add the orientation's placement centre.
pub fn transform_orientation(dots: &[Dot], orientation: Orientation, params: &ModelParams) -> Vec<Dot> {
    let center = params.center(orientation);
    dots.iter()
        .map(|d| {
            let p = d.position;
            let rotated = match orientation {
                Orientation::Vertical => p,
                Orientation::Horizontal => Vec3::new(p.x, -p.z, p.y),
            };
            Dot {
                index: d.index,
                position: rotated + center,
            }
        })
        .collect()
}

/// Unit normal of the model plane in the world frame, pointing toward the
/// side a user reaches from.
pub fn facing_normal(orientation: Orientation) -> Vec3 {
    match orientation {
        Orientation::Vertical => Vec3::new(0.0, 0.0, -1.0),
        Orientation::Horizontal => Vec3::new(0.0, 1.0, 0.0),
    }
}

/// Index of the dot whose centre lies within the hit radius of `brush`.
pub fn query_hit(model: &DotModel, brush: Vec3) -> Option<usize> {
    let r2 = model.hit_radius * model.hit_radius;
    model
        .dots
        .iter()
        .map(|d| (d.index, (d.position - brush).dot(d.position - brush)))
        .filter(|&(_, d2)| d2 <= r2)
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
}

/// Rounds a coordinate to the 6 decimal places used by model exports.
pub fn round_micro(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

/// Model export: a `#` header line with configuration, orientation and hit
/// radius, then `index,x,y,z` rows in metres.
pub fn write_model_csv<W: std::io::Write>(model: &DotModel, mut out: W) -> Result<()> {
    writeln!(
        out,
        "# configuration={},orientation={},hit_radius={}",
        model.configuration, model.orientation, model.hit_radius
    )?;
    writeln!(out, "index,x,y,z")?;
    for d in &model.dots {
        let p = d.position;
        writeln!(out, "{},{:.6},{:.6},{:.6}", d.index, p.x, p.y, p.z)?;
    }
    Ok(())
}

/// Closed outline polygon in the canonical frame, centred on its bounding box.
fn fish_outline(params: &ModelParams) -> Vec<(f64, f64)> {
    let a = params.body_length / 2.0;
    let b = params.body_height / 2.0;
    let tail = params.tail_length;
    let half_tail = params.tail_height / 2.0;
    // Body centre is shifted right so that body plus tail is centred on x = 0.
    let cx = tail / 2.0;
    let join = 0.55_f64;

    let mut coarse = Vec::new();
    const BODY_SEGMENTS: usize = 96;
    // Upper body from the nose back to the tail join.
    for k in 0..=BODY_SEGMENTS {
        let phi = (PI - join) * k as f64 / BODY_SEGMENTS as f64;
        coarse.push((cx + a * phi.cos(), b * phi.sin()));
    }
    let back = cx - a - tail;
    coarse.push((back, half_tail));
    coarse.push((back + 0.25 * tail, 0.0));
    coarse.push((back, -half_tail));
    // Lower body from the tail join forward to the nose.
    for k in 0..BODY_SEGMENTS {
        let phi = PI + join + (PI - join) * k as f64 / BODY_SEGMENTS as f64;
        coarse.push((cx + a * phi.cos(), b * phi.sin()));
    }
    chaikin_closed(coarse, 4)
}

/// Corner cutting on a closed polygon; rounds the tail corners so the
/// resampled dots stay evenly spaced in straight-line distance.
fn chaikin_closed(mut pts: Vec<(f64, f64)>, iterations: usize) -> Vec<(f64, f64)> {
    for _ in 0..iterations {
        let n = pts.len();
        let mut next = Vec::with_capacity(2 * n);
        for i in 0..n {
            let (x0, y0) = pts[i];
            let (x1, y1) = pts[(i + 1) % n];
            next.push((0.75 * x0 + 0.25 * x1, 0.75 * y0 + 0.25 * y1));
            next.push((0.25 * x0 + 0.75 * x1, 0.25 * y0 + 0.75 * y1));
        }
        pts = next;
    }
    pts
}

/// Resamples a closed polyline to `n` points equally spaced in arc length,
/// starting at the polyline's first vertex.
fn resample_closed(pts: &[(f64, f64)], n: usize) -> Vec<(f64, f64)> {
    let m = pts.len();
    let mut cumulative = Vec::with_capacity(m + 1);
    cumulative.push(0.0);
    for i in 0..m {
        let (x0, y0) = pts[i];
        let (x1, y1) = pts[(i + 1) % m];
        let last = *cumulative.last().unwrap();
        cumulative.push(last + (x1 - x0).hypot(y1 - y0));
    }
    let total = cumulative[m];
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for k in 0..n {
        let target = total * k as f64 / n as f64;
        while cumulative[seg + 1] < target {
            seg += 1;
        }
        let len = cumulative[seg + 1] - cumulative[seg];
        let u = if len > 0.0 {
            (target - cumulative[seg]) / len
        } else {
            0.0
        };
        let (x0, y0) = pts[seg];
        let (x1, y1) = pts[(seg + 1) % m];
        out.push((x0 + u * (x1 - x0), y0 + u * (y1 - y0)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defaults(c: Configuration, o: Orientation) -> DotModel {
        generate_model(c, o, &ModelParams::default()).unwrap()
    }

    #[test]
    fn dot_counts() {
        assert_eq!(defaults(Configuration::Flat, Orientation::Vertical).len(), 69);
        assert_eq!(defaults(Configuration::Curved, Orientation::Horizontal).len(), 91);
    }

    #[test]
    fn flat_is_planar() {
        let dots = canonical_dots(Configuration::Flat, &ModelParams::default());
        let (lo, hi) = dots.iter().fold((f64::MAX, f64::MIN), |(lo, hi), d| {
            (lo.min(d.position.z), hi.max(d.position.z))
        });
        assert!(hi - lo <= 1e-9);
        let world = defaults(Configuration::Flat, Orientation::Vertical);
        let z0 = world.dots[0].position.z;
        assert!(world.dots.iter().all(|d| (d.position.z - z0).abs() <= 1e-9));
    }

    #[test]
    fn curved_depth_reaches_amplitude() {
        let params = ModelParams::default();
        let dots = canonical_dots(Configuration::Curved, &params);
        let (lo, hi) = dots.iter().fold((f64::MAX, f64::MIN), |(lo, hi), d| {
            (lo.min(d.position.z), hi.max(d.position.z))
        });
        assert!(hi - lo >= 1.9 * params.depth_amplitude);
        assert!((hi - lo - 2.0 * params.depth_amplitude).abs() <= 0.05 * 2.0 * params.depth_amplitude);
    }

    #[test]
    fn outline_is_closed() {
        for c in Configuration::ALL {
            let m = defaults(c, Orientation::Vertical);
            let spacings = m.consecutive_spacings();
            let mean = spacings.iter().sum::<f64>() / spacings.len() as f64;
            let closing = m.dots[m.len() - 1].position.distance(m.dots[0].position);
            assert!(closing <= 2.0 * mean);
        }
    }

    #[test]
    fn horizontal_maps_up_to_away() {
        let params = ModelParams::default();
        let h = 0.17;
        let input = [Dot {
            index: 0,
            position: Vec3::new(0.0, h, 0.0),
        }];
        let out = transform_orientation(&input, Orientation::Horizontal, &params);
        let rel = out[0].position - params.horizontal_center;
        assert!(rel.x.abs() < 1e-15 && rel.y.abs() < 1e-15 && (rel.z - h).abs() < 1e-15);
    }

    #[test]
    fn vertical_is_translation_only() {
        let params = ModelParams::default();
        let dots = canonical_dots(Configuration::Curved, &params);
        let out = transform_orientation(&dots, Orientation::Vertical, &params);
        for (a, b) in dots.iter().zip(&out) {
            assert_eq!(b.position, a.position + params.vertical_center);
        }
    }

    #[test]
    fn hit_at_center_and_miss_outside() {
        let m = defaults(Configuration::Flat, Orientation::Vertical);
        assert_eq!(query_hit(&m, m.dots[5].position), Some(5));
        // Offset along the plane normal keeps every dot farther than 1.5 r.
        let p = m.dots[5].position + facing_normal(Orientation::Vertical) * (1.5 * m.hit_radius);
        assert_eq!(query_hit(&m, p), None);
    }

    #[test]
    fn rejects_bad_params() {
        let mut p = ModelParams::default();
        p.body_length = 0.0;
        assert!(matches!(
            generate_model(Configuration::Flat, Orientation::Vertical, &p),
            Err(Error::InvalidParameter { name: "body_length", .. })
        ));
        let p = ModelParams {
            hit_radius: 0.05,
            ..ModelParams::default()
        };
        assert!(matches!(
            generate_model(Configuration::Curved, Orientation::Vertical, &p),
            Err(Error::InvalidParameter { name: "hit_radius", .. })
        ));
    }

    #[test]
    fn condition_parsing() {
        assert_eq!("flat".parse::<Configuration>().unwrap(), Configuration::Flat);
        assert_eq!("Horizontal".parse::<Orientation>().unwrap(), Orientation::Horizontal);
        assert!("diagonal".parse::<Orientation>().is_err());
        assert_eq!(Condition::ALL[3].slug(), "curved_horizontal");
    }

    #[test]
    fn model_csv_export() {
        let m = generate_model(Configuration::Flat, Orientation::Vertical, &ModelParams::default()).unwrap();
        let mut buf = Vec::new();
        write_model_csv(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "# configuration=Flat,orientation=Vertical,hit_radius=0.008");
        assert_eq!(lines.next().unwrap(), "index,x,y,z");
        assert_eq!(lines.count(), 69);
        assert_eq!(round_micro(1.23456789), 1.234568);
    }
}
