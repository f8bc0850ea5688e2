//! Descriptives, Shapiro-Wilk, 2x2 repeated-measures ANOVA, paired t-tests
//! with Bonferroni adjustment, and Likert summaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{f_sf, normal_quantile, normal_sf, t_two_sided_p};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Descriptives {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 for n = 1.
    pub sd: f64,
    pub se: f64,
}

pub fn descriptives(values: &[f64]) -> Result<Descriptives> {
    if values.is_empty() {
        return Err(Error::EmptyInput("descriptives"));
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = if n >= 2 {
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(Descriptives {
        n,
        mean,
        sd,
        se: sd / (n as f64).sqrt(),
    })
}

impl Descriptives {
    /// `mean (sd) [se]`
    pub fn table_cell(&self, decimals: usize) -> String {
        format!(
            "{:.d$} ({:.d$}) [{:.d$}]",
            self.mean,
            self.sd,
            self.se,
            d = decimals
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapiroWilk {
    pub w: f64,
    pub p: f64,
}

/// Shapiro-Wilk W test with Royston's coefficient and p-value approximations
/// (valid for 3 <= n <= 5000).
pub fn shapiro_wilk(values: &[f64]) -> Result<ShapiroWilk> {
    let n = values.len();
    if !(3..=5000).contains(&n) {
        return Err(Error::OutOfRange {
            what: "Shapiro-Wilk sample size",
            value: n as f64,
            lo: 3.0,
            hi: 5000.0,
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("values", "must be finite"));
    }
    let mut x = values.to_vec();
    x.sort_by(f64::total_cmp);
    let range = x[n - 1] - x[0];
    if !(range > 0.0) {
        return Err(Error::Degenerate("Shapiro-Wilk input is constant".into()));
    }

    let a = swilk_coefficients(n);
    let half = n / 2;
    // Antisymmetric weights: -a[i] for the i-th smallest, +a[i] for the i-th largest.
    let weight = |i: usize| -> f64 {
        if i < half {
            -a[i]
        } else if n % 2 == 1 && i == half {
            0.0
        } else {
            a[n - 1 - i]
        }
    };
    let mean = x.iter().sum::<f64>() / n as f64;
    let ssx: f64 = x.iter().map(|v| ((v - mean) / range).powi(2)).sum();
    let ax: f64 = (0..n).map(|i| weight(i) * (x[i] - mean) / range).sum();
    let w = (ax * ax / ssx).min(1.0);
    Ok(ShapiroWilk {
        w,
        p: swilk_p_value(w, n),
    })
}

fn poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Coefficients `a[0..n/2]` for the smallest-half order statistics (positive).
fn swilk_coefficients(n: usize) -> Vec<f64> {
    let half = n / 2;
    if n == 3 {
        return vec![std::f64::consts::FRAC_1_SQRT_2];
    }
    const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056];
    const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
    let an = n as f64;
    // m_i for the upper half, m[0] largest.
    let m: Vec<f64> = (1..=half)
        .map(|i| -normal_quantile((i as f64 - 0.375) / (an + 0.25)))
        .collect();
    let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
    let ssumm2 = summ2.sqrt();
    let rsn = 1.0 / an.sqrt();
    let a1 = poly(&C1, rsn) + m[0] / ssumm2;

    let mut a = vec![0.0; half];
    a[0] = a1;
    if n > 5 {
        let a2 = m[1] / ssumm2 + poly(&C2, rsn);
        let fac = ((summ2 - 2.0 * m[0].powi(2) - 2.0 * m[1].powi(2))
            / (1.0 - 2.0 * a1.powi(2) - 2.0 * a2.powi(2)))
        .sqrt();
        a[1] = a2;
        for i in 2..half {
            a[i] = m[i] / fac;
        }
    } else {
        let fac = ((summ2 - 2.0 * m[0].powi(2)) / (1.0 - 2.0 * a1.powi(2))).sqrt();
        for i in 1..half {
            a[i] = m[i] / fac;
        }
    }
    a
}

fn swilk_p_value(w: f64, n: usize) -> f64 {
    if n == 3 {
        // Exact distribution for n = 3.
        const PI6: f64 = 6.0 / std::f64::consts::PI;
        const STQR: f64 = std::f64::consts::FRAC_PI_3;
        return (PI6 * (w.sqrt().asin() - STQR)).clamp(0.0, 1.0);
    }
    if w >= 1.0 {
        return 1.0;
    }
    const G: [f64; 2] = [-2.273, 0.459];
    const C3: [f64; 4] = [0.5440, -0.39978, 0.025054, -6.714e-4];
    const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
    const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
    const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
    let an = n as f64;
    let w1 = (1.0 - w).ln();
    let (y, m, s) = if n <= 11 {
        let gamma = poly(&G, an);
        if w1 >= gamma {
            return 1e-99;
        }
        (-(gamma - w1).ln(), poly(&C3, an), poly(&C4, an).exp())
    } else {
        let xx = an.ln();
        (w1, poly(&C5, xx), poly(&C6, xx).exp())
    };
    normal_sf((y - m) / s)
}

/// Complete 2x2 within-subjects table: `values[participant][orientation][configuration]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellTable {
    pub values: Vec<[[f64; 2]; 2]>,
}

impl CellTable {
    pub fn new(values: Vec<[[f64; 2]; 2]>) -> Result<Self> {
        if let Some(i) = values
            .iter()
            .position(|c| c.iter().flatten().any(|v| !v.is_finite()))
        {
            return Err(Error::Validation {
                item: format!("participant row {i}"),
                reason: "non-finite cell".into(),
            });
        }
        Ok(Self { values })
    }

    pub fn participants(&self) -> usize {
        self.values.len()
    }

    /// Cell values for one (orientation, configuration) level pair.
    pub fn cell(&self, a: usize, b: usize) -> Vec<f64> {
        self.values.iter().map(|c| c[a][b]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EffectName {
    Orientation,
    Configuration,
    Interaction,
}

impl EffectName {
    pub fn label(self) -> &'static str {
        match self {
            EffectName::Orientation => "Orientation",
            EffectName::Configuration => "Configuration",
            EffectName::Interaction => "Orientation * Configuration",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnovaEffect {
    pub name: EffectName,
    pub df1: usize,
    pub df2: usize,
    pub f: f64,
    pub p: f64,
    /// Generalized eta squared.
    pub eta2: f64,
    /// Set when the effect's error term is zero; `f` is then infinite (or 0
    /// when the effect itself is also zero).
    pub degenerate: bool,
}

/// Sums of squares of the two-within-factor decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SumsOfSquares {
    pub total: f64,
    pub subject: f64,
    pub a: f64,
    pub b: f64,
    pub ab: f64,
    pub a_subject: f64,
    pub b_subject: f64,
    pub ab_subject: f64,
}

impl SumsOfSquares {
    pub fn components_sum(&self) -> f64 {
        self.subject + self.a + self.b + self.ab + self.a_subject + self.b_subject + self.ab_subject
    }
}

pub fn sums_of_squares(table: &CellTable) -> SumsOfSquares {
    let p = table.participants();
    let pf = p as f64;
    let v = &table.values;
    let grand = v.iter().flatten().flatten().sum::<f64>() / (4.0 * pf);
    let subj: Vec<f64> = v.iter().map(|c| c.iter().flatten().sum::<f64>() / 4.0).collect();
    let mut cell = [[0.0; 2]; 2];
    for c in v {
        for a in 0..2 {
            for b in 0..2 {
                cell[a][b] += c[a][b] / pf;
            }
        }
    }
    let a_mean = [(cell[0][0] + cell[0][1]) / 2.0, (cell[1][0] + cell[1][1]) / 2.0];
    let b_mean = [(cell[0][0] + cell[1][0]) / 2.0, (cell[0][1] + cell[1][1]) / 2.0];

    let mut ss = SumsOfSquares {
        total: 0.0,
        subject: 0.0,
        a: 0.0,
        b: 0.0,
        ab: 0.0,
        a_subject: 0.0,
        b_subject: 0.0,
        ab_subject: 0.0,
    };
    for i in 0..2 {
        ss.a += 2.0 * pf * (a_mean[i] - grand).powi(2);
        ss.b += 2.0 * pf * (b_mean[i] - grand).powi(2);
    }
    for a in 0..2 {
        for b in 0..2 {
            ss.ab += pf * (cell[a][b] - a_mean[a] - b_mean[b] + grand).powi(2);
        }
    }
    for (c, &s) in v.iter().zip(&subj) {
        ss.subject += 4.0 * (s - grand).powi(2);
        let sa = [(c[0][0] + c[0][1]) / 2.0, (c[1][0] + c[1][1]) / 2.0];
        let sb = [(c[0][0] + c[1][0]) / 2.0, (c[0][1] + c[1][1]) / 2.0];
        for k in 0..2 {
            ss.a_subject += 2.0 * (sa[k] - s - a_mean[k] + grand).powi(2);
            ss.b_subject += 2.0 * (sb[k] - s - b_mean[k] + grand).powi(2);
        }
        for a in 0..2 {
            for b in 0..2 {
                let y = c[a][b];
                ss.total += (y - grand).powi(2);
                let resid = y - sa[a] - sb[b] - cell[a][b] + s + a_mean[a] + b_mean[b] - grand;
                ss.ab_subject += resid * resid;
            }
        }
    }
    ss
}

/// Two within-factor repeated-measures ANOVA; each effect is tested against
/// its own effect-by-subject error term on (1, p - 1) degrees of freedom.
pub fn rm_anova_2x2(table: &CellTable) -> Result<[AnovaEffect; 3]> {
    let p = table.participants();
    if p < 2 {
        return Err(Error::InsufficientData {
            required: 2,
            available: p,
        });
    }
    let ss = sums_of_squares(table);
    let scale: f64 = table.values.iter().flatten().flatten().map(|v| v * v).sum();
    // Round-off floor for sums of squared deviations of the given data.
    let floor = 1e-24 * scale.max(f64::MIN_POSITIVE);
    if ss.total <= floor {
        return Err(Error::Degenerate("all cell values are equal".into()));
    }
    let df2 = p - 1;
    let error_sum = ss.subject + ss.a_subject + ss.b_subject + ss.ab_subject;
    let effect = |name, ss_effect: f64, ss_error: f64| {
        let eta2 = ss_effect / (ss_effect + error_sum);
        if ss_error <= floor {
            let f = if ss_effect > floor { f64::INFINITY } else { 0.0 };
            let p_value = if f.is_infinite() { 0.0 } else { 1.0 };
            return AnovaEffect {
                name,
                df1: 1,
                df2,
                f,
                p: p_value,
                eta2,
                degenerate: true,
            };
        }
        let f = ss_effect / (ss_error / df2 as f64);
        AnovaEffect {
            name,
            df1: 1,
            df2,
            f,
            p: f_sf(f, 1.0, df2 as f64),
            eta2,
            degenerate: false,
        }
    };
    Ok([
        effect(EffectName::Orientation, ss.a, ss.a_subject),
        effect(EffectName::Configuration, ss.b, ss.b_subject),
        effect(EffectName::Interaction, ss.ab, ss.ab_subject),
    ])
}

/// Conventional magnitude label for an eta-squared value.
pub fn eta2_label(eta2: f64) -> &'static str {
    if eta2 >= 0.14 {
        "large"
    } else if eta2 >= 0.06 {
        "medium"
    } else if eta2 >= 0.01 {
        "small"
    } else {
        "negligible"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedT {
    pub t: f64,
    pub df: usize,
    /// Two-sided p-value.
    pub p: f64,
}

pub fn paired_t(x: &[f64], y: &[f64]) -> Result<PairedT> {
    if x.len() != y.len() {
        return Err(Error::param(
            "paired_t",
            format!("length mismatch {} vs {}", x.len(), y.len()),
        ));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::InsufficientData {
            required: 2,
            available: n,
        });
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let desc = descriptives(&d)?;
    if !(desc.sd > 0.0) {
        return Err(Error::Degenerate("paired differences have zero variance".into()));
    }
    let t = desc.mean / desc.se;
    let df = n - 1;
    Ok(PairedT {
        t,
        df,
        p: t_two_sided_p(t, df as f64),
    })
}

/// `min(1, p * k)` for each p-value, order preserved.
pub fn bonferroni(p_values: &[f64], k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::param("k", "number of comparisons must be at least 1"));
    }
    p_values
        .iter()
        .map(|&p| {
            if (0.0..=1.0).contains(&p) {
                Ok((p * k as f64).min(1.0))
            } else {
                Err(Error::OutOfRange {
                    what: "p-value",
                    value: p,
                    lo: 0.0,
                    hi: 1.0,
                })
            }
        })
        .collect()
}

/// One pairwise paired comparison within a 2x2 table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contrast {
    pub label: String,
    pub pooled: bool,
    pub test: PairedT,
    pub p_adjusted: f64,
}

/// Simple-effect contrasts (one factor compared within each level of the
/// other, df = p - 1) adjusted as a family of four, and pooled main-effect
/// contrasts (other factor collapsed into the pairs, df = 2p - 1) adjusted as
/// a family of two. Contrasts whose differences have zero variance are
/// skipped with their label returned in the second list.
pub fn pairwise_contrasts(
    table: &CellTable,
    a_levels: [&str; 2],
    b_levels: [&str; 2],
) -> Result<(Vec<Contrast>, Vec<String>)> {
    let mut simple = Vec::new();
    let mut skipped = Vec::new();
    for b in 0..2 {
        let label = format!("{} vs {} | {}", a_levels[0], a_levels[1], b_levels[b]);
        push_test(&mut simple, &mut skipped, label, false, &table.cell(0, b), &table.cell(1, b))?;
    }
    for a in 0..2 {
        let label = format!("{} vs {} | {}", b_levels[0], b_levels[1], a_levels[a]);
        push_test(&mut simple, &mut skipped, label, false, &table.cell(a, 0), &table.cell(a, 1))?;
    }
    let mut pooled = Vec::new();
    let a0: Vec<f64> = [table.cell(0, 0), table.cell(0, 1)].concat();
    let a1: Vec<f64> = [table.cell(1, 0), table.cell(1, 1)].concat();
    push_test(&mut pooled, &mut skipped, format!("{} vs {}", a_levels[0], a_levels[1]), true, &a0, &a1)?;
    let b0: Vec<f64> = [table.cell(0, 0), table.cell(1, 0)].concat();
    let b1: Vec<f64> = [table.cell(0, 1), table.cell(1, 1)].concat();
    push_test(&mut pooled, &mut skipped, format!("{} vs {}", b_levels[0], b_levels[1]), true, &b0, &b1)?;

    adjust(&mut simple, 4)?;
    adjust(&mut pooled, 2)?;
    simple.extend(pooled);
    Ok((simple, skipped))
}

fn push_test(
    out: &mut Vec<Contrast>,
    skipped: &mut Vec<String>,
    label: String,
    pooled: bool,
    x: &[f64],
    y: &[f64],
) -> Result<()> {
    match paired_t(x, y) {
        Ok(test) => out.push(Contrast {
            label,
            pooled,
            test,
            p_adjusted: test.p,
        }),
        Err(Error::Degenerate(_)) => skipped.push(label),
        Err(e) => return Err(e),
    }
    Ok(())
}

fn adjust(contrasts: &mut [Contrast], k: usize) -> Result<()> {
    let raw: Vec<f64> = contrasts.iter().map(|c| c.test.p).collect();
    for (c, p) in contrasts.iter_mut().zip(bonferroni(&raw, k)?) {
        c.p_adjusted = p;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikertSummary {
    pub condition: String,
    pub min: i64,
    pub max: i64,
    pub descriptives: Descriptives,
}

/// Per-condition descriptives for bounded integer scale responses.
pub fn likert_descriptives(responses: &[(String, Vec<i64>)], min: i64, max: i64) -> Result<Vec<LikertSummary>> {
    if min > max {
        return Err(Error::param("scale", format!("bounds [{min}, {max}] are inverted")));
    }
    responses
        .iter()
        .map(|(condition, scores)| {
            if let Some((i, s)) = scores.iter().enumerate().find(|(_, s)| !(min..=max).contains(*s)) {
                return Err(Error::Validation {
                    item: format!("{condition} response {i}"),
                    reason: format!("score {s} outside [{min}, {max}]"),
                });
            }
            let values: Vec<f64> = scores.iter().map(|&s| s as f64).collect();
            Ok(LikertSummary {
                condition: condition.clone(),
                min,
                max,
                descriptives: descriptives(&values)?,
            })
        })
        .collect()
}
