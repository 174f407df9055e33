use crate::data::MaskMatrix;
use crate::error::{Error, Result};
use crate::nn::{Matrix, Rng};

/// Hint handed to the discriminator plus the selector it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct Hint {
    /// `B ⊙ M + 0.5 (1 - B)`: the mask with one cell per row replaced by 0.5.
    pub values: Matrix,
    /// `B`: 0 at the hidden cell of each row, 1 elsewhere.
    pub selector: Matrix,
}

impl Hint {
    /// Column hidden in each row.
    pub fn hidden_columns(&self) -> Vec<usize> {
        (0..self.selector.rows())
            .map(|i| {
                self.selector
                    .row(i)
                    .iter()
                    .position(|&b| b == 0.0)
                    .expect("one hidden column per row")
            })
            .collect()
    }
}

/// Draws one hidden column `k` per row uniformly from `0..d`.
pub fn sample_hint(mask: &Matrix, rng: &mut Rng) -> Result<Hint> {
    if mask.rows() == 0 || mask.cols() == 0 {
        return Err(Error::shape("sample_hint", "non-empty mask batch", "0 rows or columns"));
    }
    let d = mask.cols();
    let mut selector = Matrix::filled(mask.rows(), d, 1.0);
    for i in 0..mask.rows() {
        let k = rng.index(d);
        selector.set(i, k, 0.0);
    }
    Ok(Hint {
        values: hint_from_selector(mask, &selector)?,
        selector,
    })
}

/// `H = B ⊙ M + 0.5 (1 - B)`.
pub fn hint_from_selector(mask: &Matrix, selector: &Matrix) -> Result<Matrix> {
    mask.zip_map(selector, |m, b| b * m + 0.5 * (1.0 - b))
}

/// [`sample_hint`] for a validated mask.
pub fn sample_mask_hint(mask: &MaskMatrix, rng: &mut Rng) -> Result<Hint> {
    sample_hint(mask.matrix(), rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Rng;
    use proptest::prelude::*;

    #[test]
    fn single_column_is_always_hidden() {
        let mask = Matrix::from_rows(&[vec![1.0], vec![0.0], vec![1.0]]).unwrap();
        let hint = sample_hint(&mask, &mut Rng::new(0)).unwrap();
        assert!(hint.values.as_slice().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn hand_evaluated_row() {
        let mask = Matrix::from_rows(&[vec![1.0, 1.0, 1.0, 1.0]]).unwrap();
        let selector = Matrix::from_rows(&[vec![1.0, 1.0, 0.0, 1.0]]).unwrap();
        let h = hint_from_selector(&mask, &selector).unwrap();
        assert_eq!(h.row(0), &[1.0, 1.0, 0.5, 1.0]);
    }

    #[test]
    fn empty_batch_rejected() {
        assert!(sample_hint(&Matrix::zeros(0, 3), &mut Rng::new(0)).is_err());
    }

    #[test]
    fn hidden_column_frequency_is_uniform() {
        let mask = Matrix::filled(100_000, 5, 1.0);
        let hint = sample_hint(&mask, &mut Rng::new(17)).unwrap();
        let mut counts = [0usize; 5];
        for k in hint.hidden_columns() {
            counts[k] += 1;
        }
        for c in counts {
            let freq = c as f64 / 100_000.0;
            assert!((freq - 0.2).abs() < 0.01, "frequency {freq}");
        }
    }

    proptest! {
        #[test]
        fn exactly_one_half_per_row(rows in 1usize..20, cols in 1usize..8, seed in 0u64..1000) {
            let mask = Rng::new(seed ^ 0xabc).bernoulli(0.6, rows, cols).unwrap();
            let hint = sample_hint(&mask, &mut Rng::new(seed)).unwrap();
            for i in 0..rows {
                let halves = hint.values.row(i).iter().filter(|&&v| v == 0.5).count();
                prop_assert_eq!(halves, 1);
                for j in 0..cols {
                    if hint.selector.get(i, j) == 1.0 {
                        prop_assert_eq!(hint.values.get(i, j), mask.get(i, j));
                    }
                }
            }
        }
    }
}
