use proptest::prelude::*;

use reachtrace_core::design::{balanced_latin_square, rm_anova_power, PowerSpec};
use reachtrace_core::geometry::{
    canonical_dots, generate_model, query_hit, transform_orientation, Configuration, ModelParams, Orientation, Vec3,
};
use reachtrace_core::metrics::build_record;
use reachtrace_core::sensor::{
    elbow_angle, resistance_from_angle, simulate_trace, ArmModel, SensorParams, SensorSample, SensorTrace,
};
use reachtrace_core::session::{BrushSample, EventKind, Session, SessionLog};
use reachtrace_core::stats::{
    bonferroni, descriptives, paired_t, rm_anova_2x2, sums_of_squares, CellTable,
};

fn orientation() -> impl Strategy<Value = Orientation> {
    prop_oneof![Just(Orientation::Vertical), Just(Orientation::Horizontal)]
}

fn configuration() -> impl Strategy<Value = Configuration> {
    prop_oneof![Just(Configuration::Flat), Just(Configuration::Curved)]
}

fn table(p: std::ops::Range<usize>) -> impl Strategy<Value = CellTable> {
    prop::collection::vec(prop::array::uniform2(prop::array::uniform2(-50.0f64..50.0)), p)
        .prop_map(|v| CellTable::new(v).unwrap())
}

/// Nearest dot within the radius, by exhaustive scan.
fn brute_hit(dots: &[(usize, Vec3)], r: f64, q: Vec3) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &(i, p) in dots {
        let d = p.distance(q);
        if d <= r && best.is_none_or(|(_, b)| d < b) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

/// Mistakes by definition: a hit on a dot while a lower-index dot is still pending.
fn mistake_oracle(order: &[usize]) -> usize {
    let mut hit = vec![false; order.len()];
    let mut mistakes = 0;
    for &d in order {
        if (0..d).any(|j| !hit[j]) {
            mistakes += 1;
        }
        hit[d] = true;
    }
    mistakes
}

fn session_for(order: &[usize], config: Configuration, t0: f64, dt: f64) -> SessionLog {
    let m = generate_model(config, Orientation::Vertical, &ModelParams::default()).unwrap();
    let mut s = Session::open(m, "p");
    for (k, &d) in order.iter().enumerate() {
        let p = s.model().dots[d].position;
        s.feed_sample(BrushSample::new(t0 + k as f64 * dt, p)).unwrap();
    }
    s.finalize()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn orientation_transform_is_an_isometry(c in configuration(), o in orientation()) {
        let params = ModelParams::default();
        let canon = canonical_dots(c, &params);
        let world = transform_orientation(&canon, o, &params);
        for i in (0..canon.len()).step_by(7) {
            for j in (i + 1..canon.len()).step_by(5) {
                let a = canon[i].position.distance(canon[j].position);
                let b = world[i].position.distance(world[j].position);
                prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
            }
        }
    }

    #[test]
    fn query_hit_matches_exhaustive_scan(
        c in configuration(),
        o in orientation(),
        k in 0usize..69,
        off in prop::array::uniform3(-0.015f64..0.015),
    ) {
        let m = generate_model(c, o, &ModelParams::default()).unwrap();
        let dots: Vec<(usize, Vec3)> = m.dots.iter().map(|d| (d.index, d.position)).collect();
        let q = m.dots[k].position + Vec3::new(off[0], off[1], off[2]);
        prop_assert_eq!(query_hit(&m, q), brute_hit(&dots, m.hit_radius, q));
    }

    #[test]
    fn mistakes_match_order_oracle(perm in Just((0..69).collect::<Vec<usize>>()).prop_shuffle()) {
        let log = session_for(&perm, Configuration::Flat, 1.0, 0.5);
        prop_assert!(log.is_complete());
        prop_assert_eq!(log.mistake_count(), mistake_oracle(&perm));
        let hits: Vec<usize> = log.dot_hits().map(|(_, i)| i).collect();
        prop_assert_eq!(hits, perm);
    }

    #[test]
    fn jsonl_round_trip_is_exact(perm in Just((0..91).collect::<Vec<usize>>()).prop_shuffle(), t0 in 0.0f64..100.0) {
        let log = session_for(&perm, Configuration::Curved, t0, 0.37);
        let back = SessionLog::from_jsonl(&log.to_jsonl()).unwrap();
        prop_assert_eq!(back, log);
    }

    #[test]
    fn late_samples_emit_nothing(extra in 1usize..20) {
        let order: Vec<usize> = (0..69).collect();
        let m = generate_model(Configuration::Flat, Orientation::Vertical, &ModelParams::default()).unwrap();
        let mut s = Session::open(m, "p");
        let mut t = 0.0;
        for &d in &order {
            t += 0.1;
            let p = s.model().dots[d].position;
            s.feed_sample(BrushSample::new(t, p)).unwrap();
        }
        for k in 0..extra {
            t += 0.1;
            let p = s.model().dots[k % 69].position;
            prop_assert!(s.feed_sample(BrushSample::new(t, p)).unwrap().is_empty());
        }
        let log = s.finalize();
        prop_assert_eq!(log.late_samples().len(), extra);
        prop_assert_eq!(log.events.iter().filter(|e| e.kind == EventKind::AllDotsComplete).count(), 1);
    }

    #[test]
    fn noiseless_trace_is_pointwise_composition(o in orientation(), c in configuration(), seed in any::<u64>()) {
        let m = generate_model(c, o, &ModelParams::default()).unwrap();
        let arm = ArmModel::default();
        let samples: Vec<BrushSample> =
            m.dots.iter().enumerate().map(|(i, d)| BrushSample::new(i as f64, d.position)).collect();
        let params = SensorParams { noise_sd: 0.0, ..SensorParams::default() };
        let trace = simulate_trace(&arm, &samples, &params, seed).unwrap();
        for (s, r) in samples.iter().zip(&trace.samples) {
            let want = resistance_from_angle(elbow_angle(&arm, s.position).unwrap(), params.r_base, params.alpha).unwrap();
            prop_assert_eq!(r.resistance, want);
        }
    }

    #[test]
    fn metrics_are_time_shift_invariant(shift in -1000.0f64..1000.0, perm in Just((0..69).collect::<Vec<usize>>()).prop_shuffle()) {
        let base = 1001.0;
        let a = session_for(&perm, Configuration::Flat, base, 0.25);
        let b = session_for(&perm, Configuration::Flat, base + shift, 0.25);
        let trace = |log: &SessionLog| {
            SensorTrace::new(log.samples.iter().enumerate().map(|(i, s)| SensorSample {
                t: s.t,
                resistance: 100.0 + (i % 11) as f64,
            }).collect())
        };
        let ra = build_record(&a, &trace(&a)).unwrap();
        let rb = build_record(&b, &trace(&b)).unwrap();
        prop_assert!((ra.tct_raw - rb.tct_raw).abs() <= 1e-9 * ra.tct_raw);
        prop_assert_eq!(ra.mistakes, rb.mistakes);
        prop_assert!((ra.mean_resistance_pct - rb.mean_resistance_pct).abs() <= 1e-12 * ra.mean_resistance_pct.max(1.0));
        prop_assert!((ra.norm_resistance - rb.norm_resistance).abs() <= 1e-9 * ra.norm_resistance.max(1.0));
    }

    #[test]
    fn resistance_metric_matches_per_sample_oracle(values in prop::collection::vec(90.0f64..130.0, 69 + 10)) {
        let order: Vec<usize> = (0..69).collect();
        let log = session_for(&order, Configuration::Flat, 2.0, 0.5);
        // Five samples before the first hit and five after the last.
        let samples: Vec<SensorSample> = values
            .iter()
            .enumerate()
            .map(|(i, &r)| SensorSample { t: 2.0 + (i as f64 - 5.0) * 0.5, resistance: r })
            .collect();
        let rm = values.iter().copied().fold(f64::INFINITY, f64::min);
        let (start, end) = (2.0, 2.0 + 68.0 * 0.5);
        let kept: Vec<f64> = samples
            .iter()
            .filter(|s| s.t >= start && s.t <= end)
            .map(|s| (s.resistance - rm) / rm * 100.0)
            .collect();
        let mean = kept.iter().sum::<f64>() / kept.len() as f64;
        let r = build_record(&log, &SensorTrace::new(samples)).unwrap();
        prop_assert!((r.mean_resistance_pct - mean).abs() <= 1e-12 * mean.max(1.0));
        prop_assert!((r.norm_resistance - mean / (end - start)).abs() <= 1e-12 * (mean / (end - start)).max(1.0));
    }

    #[test]
    fn ss_additivity(t in table(2..30)) {
        let ss = sums_of_squares(&t);
        prop_assert!((ss.components_sum() - ss.total).abs() <= 1e-9 * ss.total.max(1e-300));
    }

    #[test]
    fn anova_ignores_subject_constants(t in table(3..20), shifts in prop::collection::vec(-100.0f64..100.0, 20)) {
        let shifted = CellTable::new(
            t.values.iter().zip(&shifts).map(|(c, s)| c.map(|r| r.map(|v| v + s))).collect(),
        ).unwrap();
        let a = rm_anova_2x2(&t).unwrap();
        let b = rm_anova_2x2(&shifted).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x.f - y.f).abs() <= 1e-9 * x.f.max(1.0), "{} vs {}", x.f, y.f);
        }
    }

    #[test]
    fn anova_level_swap_keeps_f(t in table(3..20)) {
        let swapped = CellTable::new(t.values.iter().map(|c| [c[1], c[0]]).collect()).unwrap();
        let a = rm_anova_2x2(&t).unwrap();
        let b = rm_anova_2x2(&swapped).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x.f - y.f).abs() <= 1e-9 * x.f.max(1.0));
        }
    }

    #[test]
    fn t_squared_equals_main_effect_f(t in table(3..25)) {
        let res = rm_anova_2x2(&t).unwrap();
        let a0: Vec<f64> = t.values.iter().map(|c| (c[0][0] + c[0][1]) / 2.0).collect();
        let a1: Vec<f64> = t.values.iter().map(|c| (c[1][0] + c[1][1]) / 2.0).collect();
        let b0: Vec<f64> = t.values.iter().map(|c| (c[0][0] + c[1][0]) / 2.0).collect();
        let b1: Vec<f64> = t.values.iter().map(|c| (c[0][1] + c[1][1]) / 2.0).collect();
        let ta = paired_t(&a0, &a1).unwrap().t;
        let tb = paired_t(&b0, &b1).unwrap().t;
        prop_assert!((ta * ta - res[0].f).abs() <= 1e-6 * res[0].f.max(1e-12));
        prop_assert!((tb * tb - res[1].f).abs() <= 1e-6 * res[1].f.max(1e-12));
    }

    #[test]
    fn paired_t_is_antisymmetric(x in prop::collection::vec(-10.0f64..10.0, 2..40), seed in 0u64..1000) {
        let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| v + ((i as u64 * 7 + seed) % 13) as f64 * 0.1).collect();
        if let (Ok(a), Ok(b)) = (paired_t(&x, &y), paired_t(&y, &x)) {
            prop_assert_eq!(a.t, -b.t);
            prop_assert_eq!(a.p, b.p);
            prop_assert!((0.0..=1.0).contains(&a.p));
        }
    }

    #[test]
    fn bonferroni_is_monotone_and_clamped(mut p in prop::collection::vec(0.0f64..=1.0, 1..30), k in 1usize..20) {
        p.sort_by(f64::total_cmp);
        let adj = bonferroni(&p, k).unwrap();
        prop_assert!(adj.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(adj.iter().zip(&p).all(|(a, q)| *a >= *q && (0.0..=1.0).contains(a)));
    }

    #[test]
    fn descriptives_se_identity(x in prop::collection::vec(-1e3f64..1e3, 2..200)) {
        let d = descriptives(&x).unwrap();
        prop_assert!((d.se * (d.n as f64).sqrt() - d.sd).abs() <= 1e-12 * d.sd.max(1.0));
    }

    #[test]
    fn williams_squares_are_balanced(half in 1usize..12) {
        let n = 2 * half;
        let sq = balanced_latin_square(n).unwrap();
        prop_assert!(sq.is_latin());
        let adj = sq.adjacency_counts();
        for (i, row) in adj.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                prop_assert_eq!(c, usize::from(i != j));
            }
        }
    }

    #[test]
    fn power_grows_with_n(f in 0.1f64..0.8, n in 3usize..60) {
        let spec = PowerSpec { effect_f: f, ..PowerSpec::default() };
        let a = rm_anova_power(&spec, n).unwrap();
        let b = rm_anova_power(&spec, n + 1).unwrap();
        prop_assert!(b >= a - 1e-12 && (0.0..=1.0).contains(&a));
    }
}

#[test]
fn flat_depth_is_constant_and_curved_spans_twice_the_amplitude() {
    let params = ModelParams::default();
    let flat = canonical_dots(Configuration::Flat, &params);
    assert!(flat.iter().all(|d| d.position.z == flat[0].position.z));
    let curved = canonical_dots(Configuration::Curved, &params);
    let (lo, hi) = curved
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), d| (l.min(d.position.z), h.max(d.position.z)));
    let want = 2.0 * params.depth_amplitude;
    assert!(((hi - lo) - want).abs() <= 0.05 * want, "range {}", hi - lo);
}
