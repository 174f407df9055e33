//! Discriminator and generator objectives, with gradients for backprop.
//!
//! All sums run over cells and are divided by the number of batch rows.
//! Logarithms use [`clamped_ln`].

use serde::{Deserialize, Serialize};

use crate::data::ColumnKind;
use crate::error::{Error, Result};
use crate::nn::{clamped_ln, clamped_ln_derivative, Matrix};

/// Sign of the generator's adversarial term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdversarialSign {
    /// `-Σ (1-m) ln m̂`: the generator pushes D to call imputed cells observed.
    #[default]
    Negated,
    /// `+Σ (1-m) ln m̂`, the term exactly as written in the objective.
    Literal,
}

impl AdversarialSign {
    fn factor(self) -> f64 {
        match self {
            AdversarialSign::Negated => -1.0,
            AdversarialSign::Literal => 1.0,
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            AdversarialSign::Negated => 0,
            AdversarialSign::Literal => 1,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(AdversarialSign::Negated),
            1 => Some(AdversarialSign::Literal),
            _ => None,
        }
    }
}

impl std::str::FromStr for AdversarialSign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "negated" => Ok(AdversarialSign::Negated),
            "literal" => Ok(AdversarialSign::Literal),
            other => Err(Error::invalid(
                "adversarial sign",
                format!("'{other}' (expected negated|literal)"),
            )),
        }
    }
}

impl std::fmt::Display for AdversarialSign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AdversarialSign::Negated => "negated",
            AdversarialSign::Literal => "literal",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorLoss {
    pub adversarial: f64,
    pub reconstruction: f64,
    pub total: f64,
}

fn check_shapes(context: &'static str, reference: &Matrix, others: &[&Matrix]) -> Result<()> {
    for m in others {
        reference.same_shape(m, context)?;
    }
    if reference.rows() == 0 {
        return Err(Error::shape(context, "non-empty batch", "0 rows"));
    }
    Ok(())
}

/// Cross-entropy of D's mask prediction over the cells whose hint was withheld
/// (`selector == 0`), negated so that lower is better for D.
pub fn loss_discriminator(m_hat: &Matrix, mask: &Matrix, selector: &Matrix) -> Result<f64> {
    discriminator_loss_and_gradient(m_hat, mask, selector).map(|(l, _)| l)
}

/// [`loss_discriminator`] and its gradient with respect to `m_hat`.
pub fn discriminator_loss_and_gradient(
    m_hat: &Matrix,
    mask: &Matrix,
    selector: &Matrix,
) -> Result<(f64, Matrix)> {
    check_shapes("loss_discriminator", m_hat, &[mask, selector])?;
    let scale = 1.0 / m_hat.rows() as f64;
    let mut grad = Matrix::zeros(m_hat.rows(), m_hat.cols());
    let mut total = 0.0;
    for (idx, ((&p, &m), &b)) in m_hat
        .as_slice()
        .iter()
        .zip(mask.as_slice())
        .zip(selector.as_slice())
        .enumerate()
    {
        if b != 0.0 {
            continue;
        }
        total -= m * clamped_ln(p) + (1.0 - m) * clamped_ln(1.0 - p);
        grad.as_mut_slice()[idx] =
            -scale * (m * clamped_ln_derivative(p) - (1.0 - m) * clamped_ln_derivative(1.0 - p));
    }
    Ok((total * scale, grad))
}

/// Generator objective: adversarial term over withheld-hint cells plus
/// `alpha` times the reconstruction error on observed cells.
#[allow(clippy::too_many_arguments)]
pub fn loss_generator(
    m_hat: &Matrix,
    mask: &Matrix,
    selector: &Matrix,
    x_bar: &Matrix,
    x_tilde: &Matrix,
    kinds: &[ColumnKind],
    alpha: f64,
    sign: AdversarialSign,
) -> Result<GeneratorLoss> {
    generator_loss_and_gradients(m_hat, mask, selector, x_bar, x_tilde, kinds, alpha, sign)
        .map(|(l, _, _)| l)
}

/// [`loss_generator`] plus gradients with respect to `m_hat` (adversarial part)
/// and `x_bar` (reconstruction part, already multiplied by `alpha`).
#[allow(clippy::too_many_arguments)]
pub fn generator_loss_and_gradients(
    m_hat: &Matrix,
    mask: &Matrix,
    selector: &Matrix,
    x_bar: &Matrix,
    x_tilde: &Matrix,
    kinds: &[ColumnKind],
    alpha: f64,
    sign: AdversarialSign,
) -> Result<(GeneratorLoss, Matrix, Matrix)> {
    check_shapes("loss_generator", m_hat, &[mask, selector, x_bar, x_tilde])?;
    if kinds.len() != m_hat.cols() {
        return Err(Error::shape("loss_generator column kinds", m_hat.cols(), kinds.len()));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::invalid("alpha", format!("must be positive, got {alpha}")));
    }
    let (rows, cols) = m_hat.shape();
    let scale = 1.0 / rows as f64;
    let s = sign.factor();
    let mut grad_m_hat = Matrix::zeros(rows, cols);
    let mut grad_x_bar = Matrix::zeros(rows, cols);
    let mut adversarial = 0.0;
    let mut reconstruction = 0.0;
    for i in 0..rows {
        for (j, kind) in kinds.iter().enumerate() {
            let m = mask.get(i, j);
            if selector.get(i, j) == 0.0 && m == 0.0 {
                let p = m_hat.get(i, j);
                adversarial += s * clamped_ln(p);
                grad_m_hat.set(i, j, s * scale * clamped_ln_derivative(p));
            }
            if m == 1.0 {
                let x = x_tilde.get(i, j);
                let x_prime = x_bar.get(i, j);
                let (value, derivative) = match kind {
                    ColumnKind::Continuous => {
                        let diff = x_prime - x;
                        (diff * diff, 2.0 * diff)
                    }
                    ColumnKind::Binary => {
                        (-x * clamped_ln(x_prime), -x * clamped_ln_derivative(x_prime))
                    }
                };
                reconstruction += value;
                grad_x_bar.set(i, j, alpha * scale * derivative);
            }
        }
    }
    let adversarial = adversarial * scale;
    let reconstruction = reconstruction * scale;
    Ok((
        GeneratorLoss {
            adversarial,
            reconstruction,
            total: adversarial + alpha * reconstruction,
        },
        grad_m_hat,
        grad_x_bar,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(v: f64) -> Matrix {
        Matrix::from_vec(1, 1, vec![v]).unwrap()
    }

    #[test]
    fn perfect_discriminator_has_near_zero_loss() {
        let mask = Matrix::from_rows(&[vec![1.0, 0.0, 1.0]]).unwrap();
        let selector = Matrix::zeros(1, 3);
        let loss = loss_discriminator(&mask, &mask, &selector).unwrap();
        assert!(loss >= 0.0 && loss < 1e-7, "loss {loss}");
    }

    #[test]
    fn half_prediction_costs_ln2() {
        let loss = loss_discriminator(&one(0.5), &one(1.0), &one(0.0)).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
        // Hinted cells do not count.
        assert_eq!(loss_discriminator(&one(0.5), &one(1.0), &one(1.0)).unwrap(), 0.0);
    }

    #[test]
    fn fully_observed_mask_has_no_adversarial_term() {
        let m_hat = Matrix::filled(2, 2, 0.3);
        let mask = Matrix::filled(2, 2, 1.0);
        let loss = loss_generator(
            &m_hat,
            &mask,
            &Matrix::zeros(2, 2),
            &Matrix::filled(2, 2, 0.5),
            &Matrix::filled(2, 2, 0.5),
            &[ColumnKind::Continuous; 2],
            1.0,
            AdversarialSign::Negated,
        )
        .unwrap();
        assert_eq!(loss.adversarial, 0.0);
    }

    #[test]
    fn single_continuous_reconstruction_cell() {
        let loss = loss_generator(
            &one(0.5),
            &one(1.0),
            &one(1.0),
            &one(0.1),
            &one(0.4),
            &[ColumnKind::Continuous],
            1.0,
            AdversarialSign::Negated,
        )
        .unwrap();
        assert!((loss.reconstruction - 0.09).abs() < 1e-15);
    }

    #[test]
    fn signs_are_opposite() {
        let args = (one(0.3), one(0.0), one(0.0), one(0.2), one(0.0));
        let negated = loss_generator(
            &args.0, &args.1, &args.2, &args.3, &args.4,
            &[ColumnKind::Continuous], 1.0, AdversarialSign::Negated,
        )
        .unwrap();
        let literal = loss_generator(
            &args.0, &args.1, &args.2, &args.3, &args.4,
            &[ColumnKind::Continuous], 1.0, AdversarialSign::Literal,
        )
        .unwrap();
        assert_eq!(negated.adversarial, -literal.adversarial);
        assert!(negated.adversarial > 0.0);
    }

    #[test]
    fn shape_and_alpha_errors() {
        assert!(loss_discriminator(&Matrix::zeros(1, 2), &Matrix::zeros(1, 3), &Matrix::zeros(1, 2)).is_err());
        let m = one(0.5);
        assert!(loss_generator(&m, &m, &m, &m, &m, &[ColumnKind::Continuous], 0.0, AdversarialSign::Negated).is_err());
        assert!(loss_generator(&m, &m, &m, &m, &m, &[], 1.0, AdversarialSign::Negated).is_err());
    }
}
