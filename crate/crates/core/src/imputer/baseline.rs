//! Column-mean and chained linear-regression (MICE-lite) imputers.
//!
//! Both fit on one incomplete table and can replay the fitted state on
//! another table with the same columns.

use crate::data::{Dataset, IncompleteDataset};
use crate::error::{Error, Result};
use crate::nn::Matrix;

/// Ridge damping added to the diagonal of every normal-equation system.
pub const RIDGE_LAMBDA: f64 = 1e-6;

pub const DEFAULT_SWEEPS: usize = 5;

fn observed_means(incomplete: &IncompleteDataset) -> Result<Vec<f64>> {
    let x = incomplete.features();
    let mask = incomplete.mask().matrix();
    (0..x.cols())
        .map(|j| {
            let (sum, count) = (0..x.rows())
                .filter(|&i| mask.get(i, j) == 1.0)
                .fold((0.0, 0usize), |(s, c), i| (s + x.get(i, j), c + 1));
            if count == 0 {
                Err(Error::Data(format!(
                    "column '{}' has no observed values",
                    incomplete.dataset().schema().columns[j].name
                )))
            } else {
                Ok(sum / count as f64)
            }
        })
        .collect()
}

fn check_width(expected: usize, incomplete: &IncompleteDataset) -> Result<()> {
    if incomplete.width() != expected {
        return Err(Error::shape("baseline feature width", expected, incomplete.width()));
    }
    Ok(())
}

fn fill_means(incomplete: &IncompleteDataset, means: &[f64]) -> Matrix {
    let mask = incomplete.mask().matrix();
    let x = incomplete.features();
    Matrix::from_fn(x.rows(), x.cols(), |i, j| {
        if mask.get(i, j) == 1.0 {
            x.get(i, j)
        } else {
            means[j]
        }
    })
}

/// Per-column means of the observed cells.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanImputer {
    pub means: Vec<f64>,
}

impl MeanImputer {
    pub fn fit(incomplete: &IncompleteDataset) -> Result<Self> {
        Ok(Self {
            means: observed_means(incomplete)?,
        })
    }

    pub fn apply(&self, incomplete: &IncompleteDataset) -> Result<Dataset> {
        check_width(self.means.len(), incomplete)?;
        incomplete
            .dataset()
            .with_features(fill_means(incomplete, &self.means))
    }
}

/// Fills each missing cell with its column's observed mean.
pub fn baseline_mean_impute(incomplete: &IncompleteDataset) -> Result<Dataset> {
    MeanImputer::fit(incomplete)?.apply(incomplete)
}

/// Fitted chained regressions: `coefficients[s][j]` predicts column `j` in
/// sweep `s` from an intercept followed by every other column in order.
#[derive(Debug, Clone, PartialEq)]
pub struct MiceLite {
    pub means: Vec<f64>,
    pub coefficients: Vec<Vec<Vec<f64>>>,
}

impl MiceLite {
    /// Runs `sweeps` passes over `incomplete`, returning the fitted state and
    /// the completed data.
    pub fn fit(incomplete: &IncompleteDataset, sweeps: usize) -> Result<(Self, Dataset)> {
        if sweeps == 0 {
            return Err(Error::invalid("sweeps", "must be at least 1"));
        }
        let means = observed_means(incomplete)?;
        let mask = incomplete.mask().matrix();
        let mut x = fill_means(incomplete, &means);
        let d = x.cols();
        let mut coefficients = Vec::with_capacity(sweeps);
        for _ in 0..sweeps {
            let mut sweep = Vec::with_capacity(d);
            for j in 0..d {
                let rows: Vec<usize> = (0..x.rows()).filter(|&i| mask.get(i, j) == 1.0).collect();
                let beta = fit_column(&x, j, &rows)?;
                overwrite_missing(&mut x, mask, j, &beta);
                sweep.push(beta);
            }
            coefficients.push(sweep);
        }
        let completed = incomplete.dataset().with_features(x)?;
        Ok((Self { means, coefficients }, completed))
    }

    pub fn sweeps(&self) -> usize {
        self.coefficients.len()
    }

    /// Replays the fitted sweeps on another table: means first, then each
    /// stored regression in the order it was fitted.
    pub fn apply(&self, incomplete: &IncompleteDataset) -> Result<Dataset> {
        check_width(self.means.len(), incomplete)?;
        let mask = incomplete.mask().matrix();
        let mut x = fill_means(incomplete, &self.means);
        for sweep in &self.coefficients {
            for (j, beta) in sweep.iter().enumerate() {
                overwrite_missing(&mut x, mask, j, beta);
            }
        }
        incomplete.dataset().with_features(x)
    }
}

/// Mean initialization followed by `sweeps` rounds of chained regressions.
pub fn baseline_mice_lite(incomplete: &IncompleteDataset, sweeps: usize) -> Result<Dataset> {
    MiceLite::fit(incomplete, sweeps).map(|(_, completed)| completed)
}

fn design_row(x: &Matrix, i: usize, target: usize, out: &mut Vec<f64>) {
    out.clear();
    out.push(1.0);
    out.extend(
        x.row(i)
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != target)
            .map(|(_, &v)| v),
    );
}

fn predict(x: &Matrix, i: usize, target: usize, beta: &[f64]) -> f64 {
    let mut acc = beta[0];
    let mut b = 1;
    for (k, &v) in x.row(i).iter().enumerate() {
        if k != target {
            acc += beta[b] * v;
            b += 1;
        }
    }
    acc
}

fn overwrite_missing(x: &mut Matrix, mask: &Matrix, j: usize, beta: &[f64]) {
    for i in 0..x.rows() {
        if mask.get(i, j) == 0.0 {
            let v = predict(x, i, j, beta).clamp(0.0, 1.0);
            x.set(i, j, v);
        }
    }
}

/// Ridge least squares of column `target` on the remaining columns over `rows`.
fn fit_column(x: &Matrix, target: usize, rows: &[usize]) -> Result<Vec<f64>> {
    let p = x.cols();
    let mut gram = vec![0.0; p * p];
    let mut rhs = vec![0.0; p];
    let mut z = Vec::with_capacity(p);
    for &i in rows {
        design_row(x, i, target, &mut z);
        let y = x.get(i, target);
        for a in 0..p {
            rhs[a] += z[a] * y;
            for b in 0..=a {
                gram[a * p + b] += z[a] * z[b];
            }
        }
    }
    for a in 0..p {
        gram[a * p + a] += RIDGE_LAMBDA;
        for b in 0..a {
            gram[b * p + a] = gram[a * p + b];
        }
    }
    cholesky_solve(&mut gram, &mut rhs, p)?;
    Ok(rhs)
}

/// Solves `A x = b` in place for symmetric positive definite `A` (row-major,
/// `n x n`). The solution is left in `b`.
fn cholesky_solve(a: &mut [f64], b: &mut [f64], n: usize) -> Result<()> {
    for j in 0..n {
        let mut diag = a[j * n + j];
        for k in 0..j {
            diag -= a[j * n + k] * a[j * n + k];
        }
        if !(diag > 0.0) {
            return Err(Error::NonFinite("MICE-lite normal equations"));
        }
        let l = diag.sqrt();
        a[j * n + j] = l;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / l;
        }
    }
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * n + k] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= a[k * n + i] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{corrupt_mcar, synth, FeatureSchema, MaskMatrix};
    use crate::nn::Rng;

    fn incomplete(values: Vec<Vec<f64>>, mask: Vec<Vec<f64>>) -> IncompleteDataset {
        let n = values.len();
        let d = values[0].len();
        let names: Vec<String> = (0..d).map(|j| format!("c{j}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let data = Dataset::new(
            Matrix::from_rows(&values).unwrap(),
            (0..n).map(|i| i % 2).collect(),
            vec!["a".into(), "b".into()],
            FeatureSchema::unit(&refs),
        )
        .unwrap();
        IncompleteDataset::new(data, MaskMatrix::new(Matrix::from_rows(&mask).unwrap()).unwrap()).unwrap()
    }

    fn rmse(truth: &Matrix, imputed: &Matrix, mask: &Matrix) -> f64 {
        let mut s = 0.0;
        let mut n = 0;
        for i in 0..truth.rows() {
            for j in 0..truth.cols() {
                if mask.get(i, j) == 0.0 {
                    s += (truth.get(i, j) - imputed.get(i, j)).powi(2);
                    n += 1;
                }
            }
        }
        (s / n as f64).sqrt()
    }

    #[test]
    fn mean_of_observed() {
        let inc = incomplete(
            vec![vec![0.2], vec![0.4], vec![0.9]],
            vec![vec![1.0], vec![1.0], vec![0.0]],
        );
        let out = baseline_mean_impute(&inc).unwrap();
        assert!((out.features().get(2, 0) - 0.3).abs() < 1e-15);
        assert_eq!(out.features().get(0, 0), 0.2);
    }

    #[test]
    fn mean_without_missing_is_identity() {
        let data = synth::to_dataset(&synth::class_separated(20, 1)).unwrap();
        let out = baseline_mean_impute(&IncompleteDataset::complete(data.clone())).unwrap();
        assert_eq!(out, data);
    }

    #[test]
    fn fully_missing_column_is_an_error() {
        let inc = incomplete(vec![vec![0.2, 0.1], vec![0.4, 0.3]], vec![vec![1.0, 0.0], vec![1.0, 0.0]]);
        assert!(baseline_mean_impute(&inc).is_err());
        assert!(baseline_mice_lite(&inc, 1).is_err());
    }

    #[test]
    fn exact_copy_column_is_recovered() {
        let a: Vec<f64> = (0..12).map(|i| i as f64 / 11.0).collect();
        let values: Vec<Vec<f64>> = a.iter().map(|&v| vec![v, v]).collect();
        let mask: Vec<Vec<f64>> = (0..12).map(|i| vec![1.0, if i % 4 == 1 { 0.0 } else { 1.0 }]).collect();
        let inc = incomplete(values, mask);
        let out = baseline_mice_lite(&inc, 1).unwrap();
        for i in (1..12).step_by(4) {
            assert!((out.features().get(i, 1) - a[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_sweeps_rejected_and_observed_cells_kept() {
        let data = synth::to_dataset(&synth::linear_with_noise(30, 3, 0.05, 2)).unwrap();
        let inc = corrupt_mcar(&data, 0.2, &mut Rng::new(2)).unwrap();
        assert!(baseline_mice_lite(&inc, 0).is_err());
        let out = baseline_mice_lite(&inc, 1).unwrap();
        let mask = inc.mask().matrix();
        for i in 0..inc.rows() {
            for j in 0..inc.width() {
                if mask.get(i, j) == 1.0 {
                    assert_eq!(out.features().get(i, j), inc.features().get(i, j));
                }
            }
        }
    }

    #[test]
    fn mice_beats_mean_on_linear_data() {
        let data = synth::to_dataset(&synth::linear_with_noise(50, 3, 0.05, 3)).unwrap();
        let inc = corrupt_mcar(&data, 0.2, &mut Rng::new(3)).unwrap();
        let mask = inc.mask().matrix();
        let mean = baseline_mean_impute(&inc).unwrap();
        let mice = baseline_mice_lite(&inc, DEFAULT_SWEEPS).unwrap();
        let r_mean = rmse(data.features(), mean.features(), mask);
        let r_mice = rmse(data.features(), mice.features(), mask);
        assert!(r_mice < r_mean, "{r_mice} !< {r_mean}");
    }

    #[test]
    fn replay_on_the_fitting_table_reproduces_the_fit() {
        let data = synth::to_dataset(&synth::linear_with_noise(40, 4, 0.05, 4)).unwrap();
        let inc = corrupt_mcar(&data, 0.25, &mut Rng::new(4)).unwrap();
        let (fitted, completed) = MiceLite::fit(&inc, 3).unwrap();
        assert_eq!(fitted.sweeps(), 3);
        assert_eq!(fitted.apply(&inc).unwrap(), completed);
    }

    #[test]
    fn cholesky_matches_hand_solution() {
        // [[4, 2], [2, 3]] x = [2, 1] -> x = [0.5, 0]
        let mut a = vec![4.0, 2.0, 2.0, 3.0];
        let mut b = vec![2.0, 1.0];
        cholesky_solve(&mut a, &mut b, 2).unwrap();
        assert!((b[0] - 0.5).abs() < 1e-15 && b[1].abs() < 1e-15);
    }
}
