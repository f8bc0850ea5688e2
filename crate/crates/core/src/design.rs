//! Condition ordering and a priori power analysis for the within-subjects study.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{f_upper_quantile, noncentral_f_sf};

/// Square of condition indices `1..=n`, one row per order sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatinSquare {
    pub order: usize,
    pub rows: Vec<Vec<usize>>,
}

impl LatinSquare {
    pub fn is_latin(&self) -> bool {
        let n = self.order;
        let perm = |it: &mut dyn Iterator<Item = usize>| {
            let mut seen = vec![false; n];
            let mut count = 0;
            for v in it {
                if v == 0 || v > n || seen[v - 1] {
                    return false;
                }
                seen[v - 1] = true;
                count += 1;
            }
            count == n
        };
        self.rows.len() == n
            && self.rows.iter().all(|r| perm(&mut r.iter().copied()))
            && (0..n).all(|c| perm(&mut self.rows.iter().map(|r| r[c])))
    }

    /// `counts[i][j]` is how often condition `i + 1` is immediately followed by `j + 1`.
    pub fn adjacency_counts(&self) -> Vec<Vec<usize>> {
        let n = self.order;
        let mut counts = vec![vec![0; n]; n];
        for row in &self.rows {
            for w in row.windows(2) {
                counts[w[0] - 1][w[1] - 1] += 1;
            }
        }
        counts
    }
}

/// Williams design: first row `1, 2, n, 3, n-1, ...`, each later row shifted by one.
pub fn balanced_latin_square(n: usize) -> Result<LatinSquare> {
    if n < 2 {
        return Err(Error::param("order", format!("must be at least 2, got {n}")));
    }
    if n % 2 == 1 {
        return Err(Error::UnsupportedOrder(n));
    }
    let first: Vec<usize> = (0..n)
        .map(|j| match j {
            0 => 0,
            j if j % 2 == 1 => (j + 1) / 2,
            j => n - j / 2,
        })
        .collect();
    let rows = (0..n)
        .map(|i| first.iter().map(|&v| (v + i) % n + 1).collect())
        .collect();
    Ok(LatinSquare { order: n, rows })
}

/// Participant `k` gets row `k mod n`, mapped through `labels`.
pub fn assign_conditions<L: Clone>(
    participants: &[String],
    square: &LatinSquare,
    labels: &[L],
) -> Result<Vec<(String, Vec<L>)>> {
    if labels.len() != square.order {
        return Err(Error::param(
            "labels",
            format!("expected {} labels, got {}", square.order, labels.len()),
        ));
    }
    Ok(participants
        .iter()
        .enumerate()
        .map(|(k, id)| {
            let row = &square.rows[k % square.order];
            (id.clone(), row.iter().map(|&c| labels[c - 1].clone()).collect())
        })
        .collect())
}

/// Cohen's f from partial eta squared.
pub fn eta2_to_f(eta_p2: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&eta_p2) {
        return Err(Error::OutOfRange {
            what: "partial eta squared",
            value: eta_p2,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok((eta_p2 / (1.0 - eta_p2)).sqrt())
}

/// Repeated-measures (within factors) F-test power inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSpec {
    pub effect_f: f64,
    pub alpha: f64,
    pub target_power: f64,
    pub groups: usize,
    pub measurements: usize,
    /// Correlation among repeated measures.
    pub correlation: f64,
    /// Nonsphericity correction.
    pub epsilon: f64,
}

impl Default for PowerSpec {
    fn default() -> Self {
        Self {
            effect_f: 0.403,
            alpha: 0.05,
            target_power: 0.80,
            groups: 1,
            measurements: 4,
            correlation: 0.5,
            epsilon: 1.0,
        }
    }
}

impl PowerSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: String| Err(Error::param(name, reason));
        if !(self.effect_f >= 0.0 && self.effect_f.is_finite()) {
            return bad("effect_f", format!("must be non-negative, got {}", self.effect_f));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha", format!("must be in (0, 1), got {}", self.alpha));
        }
        if !(self.target_power > 0.0 && self.target_power < 1.0) {
            return bad("target_power", format!("must be in (0, 1), got {}", self.target_power));
        }
        if self.groups < 1 {
            return bad("groups", "must be at least 1".into());
        }
        if self.measurements < 2 {
            return bad("measurements", "must be at least 2".into());
        }
        if !(0.0..1.0).contains(&self.correlation) {
            return bad("correlation", format!("must be in [0, 1), got {}", self.correlation));
        }
        let lower = 1.0 / (self.measurements as f64 - 1.0);
        if !(self.epsilon >= lower && self.epsilon <= 1.0) {
            return bad("epsilon", format!("must be in [{lower}, 1], got {}", self.epsilon));
        }
        Ok(())
    }

    /// Noncentrality and degrees of freedom for total sample size `n`.
    pub fn test_parameters(&self, n: usize) -> Result<(f64, f64, f64)> {
        let m = self.measurements as f64;
        let df1 = self.epsilon * (m - 1.0);
        let df2 = self.epsilon * (m - 1.0) * (n as f64 - self.groups as f64);
        if !(df1 > 0.0 && df2 > 0.0) {
            return Err(Error::Degenerate(format!(
                "degrees of freedom ({df1}, {df2}) for n = {n}"
            )));
        }
        let lambda = self.effect_f.powi(2) * n as f64 * m * self.epsilon / (1.0 - self.correlation);
        Ok((lambda, df1, df2))
    }
}

/// Achieved power of the within-factors F test at total sample size `n`.
pub fn rm_anova_power(spec: &PowerSpec, n: usize) -> Result<f64> {
    spec.validate()?;
    if n < 2 {
        return Err(Error::InsufficientData {
            required: 2,
            available: n,
        });
    }
    let (lambda, df1, df2) = spec.test_parameters(n)?;
    let critical = f_upper_quantile(spec.alpha, df1, df2);
    Ok(noncentral_f_sf(critical, df1, df2, lambda))
}

pub const DEFAULT_SAMPLE_CAP: usize = 10_000;

/// Smallest `n >= 2` whose power reaches the target, scanning upward.
pub fn required_sample_size(spec: &PowerSpec) -> Result<usize> {
    required_sample_size_capped(spec, DEFAULT_SAMPLE_CAP)
}

pub fn required_sample_size_capped(spec: &PowerSpec, cap: usize) -> Result<usize> {
    spec.validate()?;
    let start = (spec.groups + 1).max(2);
    for n in start..=cap {
        if rm_anova_power(spec, n)? >= spec.target_power {
            return Ok(n);
        }
    }
    Err(Error::Infeasible {
        cap,
        target: spec.target_power,
    })
}

/// `n,power` rows for `n` in the given range.
pub fn write_power_table<W: Write>(
    spec: &PowerSpec,
    sizes: impl IntoIterator<Item = usize>,
    mut out: W,
) -> Result<()> {
    writeln!(out, "n,lambda,df1,df2,critical_f,power")?;
    for n in sizes {
        let (lambda, df1, df2) = spec.test_parameters(n)?;
        let critical = f_upper_quantile(spec.alpha, df1, df2);
        let power = rm_anova_power(spec, n)?;
        writeln!(out, "{n},{lambda:.6},{df1},{df2},{critical:.6},{power:.6}")?;
    }
    Ok(())
}
