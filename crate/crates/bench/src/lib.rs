//! Shared inputs for the reachtrace benchmarks.

use reachtrace_core::geometry::DotModel;
use reachtrace_core::session::BrushSample;
use reachtrace_core::stats::CellTable;

/// One sample on each dot, in index order, 0.25 s apart.
pub fn ordered_samples(model: &DotModel) -> Vec<BrushSample> {
    model
        .dots
        .iter()
        .enumerate()
        .map(|(i, d)| BrushSample::new(0.25 * (i + 1) as f64, d.position))
        .collect()
}

/// Deterministic `p`-participant table with a subject effect and mild noise.
pub fn synthetic_table(p: usize) -> CellTable {
    let rows = (0..p)
        .map(|i| {
            let s = (i as f64 * 0.61).sin();
            let n = |k: f64| ((i as f64 + 1.0) * k).cos() * 0.2;
            [[s + n(1.3), s + 0.1 + n(2.9)], [s + 0.4 + n(3.7), s + 0.6 + n(5.1)]]
        })
        .collect();
    CellTable::new(rows).expect("finite table")
}
