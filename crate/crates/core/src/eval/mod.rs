//! Missing-cell RMSE, the benchmark harness and its reports.

mod benchmark;
mod report;

use serde::{Deserialize, Serialize};

pub use benchmark::{
    cell_seeds, run_benchmark, run_imbalance_benchmark, BenchmarkConfig, CellSeeds, EvalMode,
    RepRecord,
};
pub use report::{
    aggregate, sample_std, time_methods, BenchmarkReport, MethodTiming, ReportCell, ALL_CLASSES,
};

use crate::data::{Dataset, MaskMatrix};
use crate::error::{Error, Result};

/// RMSE over originally missing cells, overall and per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseResult {
    pub overall: f64,
    /// `None` for classes without missing cells.
    pub per_class: Vec<Option<f64>>,
    pub n_missing: usize,
    pub per_class_missing: Vec<usize>,
}

/// Compares `imputed` against `truth` on the cells where `mask` is 0, on the
/// normalized scale. Classes are taken from `truth`.
pub fn rmse_missing(truth: &Dataset, imputed: &Dataset, mask: &MaskMatrix) -> Result<RmseResult> {
    truth.features().same_shape(imputed.features(), "rmse_missing imputed")?;
    truth.features().same_shape(mask.matrix(), "rmse_missing mask")?;
    let m = truth.class_count();
    let mut sums = vec![0.0; m];
    let mut counts = vec![0usize; m];
    for i in 0..truth.rows() {
        let c = truth.classes()[i];
        for j in 0..truth.width() {
            if !mask.is_observed(i, j) {
                let e = truth.features().get(i, j) - imputed.features().get(i, j);
                sums[c] += e * e;
                counts[c] += 1;
            }
        }
    }
    let n_missing: usize = counts.iter().sum();
    if n_missing == 0 {
        return Err(Error::Data("RMSE needs at least one missing cell".into()));
    }
    let total: f64 = sums.iter().sum();
    Ok(RmseResult {
        overall: (total / n_missing as f64).sqrt(),
        per_class: sums
            .iter()
            .zip(&counts)
            .map(|(&s, &n)| (n > 0).then(|| (s / n as f64).sqrt()))
            .collect(),
        n_missing,
        per_class_missing: counts,
    })
}
