//! Central finite-difference checker for [`DenseNet`] parameter gradients.

use super::{DenseNet, Gradients};

/// Denominator floor for the relative error, so parameters with a vanishing
/// gradient are judged on absolute error instead.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub checked: usize,
    pub failures: usize,
    pub max_relative_error: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_ERROR_FLOOR)
}

/// Compares `analytic` against `(L(p + h) - L(p - h)) / 2h` for every parameter.
pub fn check_gradients(
    net: &DenseNet,
    analytic: &Gradients,
    step: f64,
    tolerance: f64,
    loss: impl Fn(&DenseNet) -> f64,
) -> GradCheckReport {
    compare(net, analytic, tolerance, |probe, group, j| {
        let original = probe.parameters_mut()[group][j];
        let mut at = |offset: f64| {
            probe.parameters_mut()[group][j] = original + offset;
            loss(probe)
        };
        let (plus, minus) = (at(step), at(-step));
        probe.parameters_mut()[group][j] = original;
        (plus - minus) / (2.0 * step)
    })
}

/// Like [`check_gradients`] for a loss given as its list of summands, using
/// the fourth-order stencil `(-L(p+2h) + 8L(p+h) - 8L(p-h) + L(p-2h)) / 12h`.
/// The stencil is applied term by term and the results summed, so round-off
/// stays at the scale of single terms rather than of the total; this matters
/// when the total is large and some gradients are tiny.
pub fn check_gradients_by_terms(
    net: &DenseNet,
    analytic: &Gradients,
    step: f64,
    tolerance: f64,
    terms: impl Fn(&DenseNet) -> Vec<f64>,
) -> GradCheckReport {
    compare(net, analytic, tolerance, |probe, group, j| {
        let original = probe.parameters_mut()[group][j];
        let mut at = |offset: f64| {
            probe.parameters_mut()[group][j] = original + offset;
            terms(probe)
        };
        let (p2, p1, m1, m2) = (at(2.0 * step), at(step), at(-step), at(-2.0 * step));
        probe.parameters_mut()[group][j] = original;
        let mut sum = 0.0;
        for t in 0..p2.len() {
            sum += (-p2[t] + 8.0 * p1[t] - 8.0 * m1[t] + m2[t]) / (12.0 * step);
        }
        sum
    })
}

fn compare(
    net: &DenseNet,
    analytic: &Gradients,
    tolerance: f64,
    mut numeric: impl FnMut(&mut DenseNet, usize, usize) -> f64,
) -> GradCheckReport {
    let mut probe = net.clone();
    let mut report = GradCheckReport {
        checked: 0,
        failures: 0,
        max_relative_error: 0.0,
    };
    for (group, grads) in analytic.slices().iter().enumerate() {
        for (j, &a) in grads.iter().enumerate() {
            let err = relative_error(a, numeric(&mut probe, group, j));
            report.checked += 1;
            report.max_relative_error = report.max_relative_error.max(err);
            if err > tolerance {
                report.failures += 1;
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, Matrix, Rng};

    #[test]
    fn detects_a_wrong_gradient() {
        let mut rng = Rng::new(4);
        let net = DenseNet::new(2, 3, 1, Activation::Relu, Activation::Sigmoid, &mut rng).unwrap();
        let x = rng.uniform(0.0, 1.0, 4, 2).unwrap();
        let loss = |n: &DenseNet| n.predict(&x).unwrap().as_slice().iter().sum::<f64>();
        let (out, cache) = net.forward(&x).unwrap();
        let (mut g, _) = net
            .backward(&cache, &Matrix::filled(out.rows(), out.cols(), 1.0))
            .unwrap();
        assert!(check_gradients(&net, &g, 1e-5, 1e-4, loss).passed());
        g.layers[2].bias[0] += 0.1;
        let report = check_gradients(&net, &g, 1e-5, 1e-4, loss);
        assert_eq!(report.failures, 1);
    }

    #[test]
    fn term_stencil_agrees_on_a_large_sum() {
        let mut rng = Rng::new(5);
        let net = DenseNet::new(3, 4, 2, Activation::Relu, Activation::Sigmoid, &mut rng).unwrap();
        let x = rng.uniform(0.0, 1.0, 6, 3).unwrap();
        // Large terms that do not depend on the parameters swamp the total
        // but difference to exactly zero one by one.
        let terms = |n: &DenseNet| {
            let out = n.predict(&x).unwrap();
            let mut t: Vec<f64> = out.as_slice().iter().map(|v| 1e-3 * v * v).collect();
            t.extend(std::iter::repeat(1e3).take(10));
            t
        };
        let (out, cache) = net.forward(&x).unwrap();
        let (g, _) = net.backward(&cache, &out.map(|v| 2e-3 * v)).unwrap();
        let report = check_gradients_by_terms(&net, &g, 1e-4, 1e-6, terms);
        assert!(report.passed(), "{report:?}");
        let plain = check_gradients(&net, &g, 1e-5, 1e-6, |n: &DenseNet| terms(n).iter().sum());
        assert!(!plain.passed());
    }
}
