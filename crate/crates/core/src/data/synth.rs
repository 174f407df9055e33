//! Seeded synthetic tables used by tests, examples and the imbalance benchmark.
//!
//! Every generator returns a [`CsvTable`] so the regular ingestion path
//! (typing, normalization, label encoding) applies unchanged.

use super::{CsvTable, Dataset, LabelColumn, LoadOptions};
use crate::error::Result;
use crate::nn::Rng;

fn normal(rng: &mut Rng) -> f64 {
    // Box-Muller; 1 - u keeps the logarithm finite.
    let u1 = 1.0 - rng.next_f64();
    let u2 = rng.next_f64();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn fmt(v: f64) -> String {
    let r = (v * 1e6).round() / 1e6;
    format!("{r}")
}

fn assign_classes(n: usize, minority_share: f64, rng: &mut Rng) -> Vec<usize> {
    let n1 = ((n as f64) * minority_share).round() as usize;
    let mut classes: Vec<usize> = (0..n).map(|i| usize::from(i < n1)).collect();
    rng.shuffle(&mut classes);
    classes
}

/// Two classes; `signal` is shifted by class (means 0.25 vs 0.75), the other
/// columns are noisy linear functions of it plus independent noise.
pub fn class_separated(n: usize, seed: u64) -> CsvTable {
    let mut rng = Rng::new(seed);
    let classes = assign_classes(n, 0.5, &mut rng);
    let headers = ["signal", "echo", "mirror", "noise", "class"]
        .map(String::from)
        .to_vec();
    let rows = classes
        .iter()
        .map(|&c| {
            let signal = if c == 1 { 0.75 } else { 0.25 } + 0.05 * normal(&mut rng);
            let echo = 2.0 * signal + 0.1 * normal(&mut rng);
            let mirror = 1.0 - signal + 0.1 * normal(&mut rng);
            let noise = rng.next_f64();
            vec![fmt(signal), fmt(echo), fmt(mirror), fmt(noise), c.to_string()]
        })
        .collect();
    CsvTable { headers, rows }
}

/// `width` columns driven by one latent factor plus independent noise of scale `noise`.
pub fn linear_with_noise(n: usize, width: usize, noise: f64, seed: u64) -> CsvTable {
    let mut rng = Rng::new(seed);
    let classes = assign_classes(n, 0.5, &mut rng);
    let mut headers: Vec<String> = (0..width).map(|j| format!("x{j}")).collect();
    headers.push("class".into());
    let rows = classes
        .iter()
        .map(|&c| {
            let latent = rng.next_f64();
            let mut row: Vec<String> = (0..width)
                .map(|j| {
                    let slope = 1.0 + j as f64 * 0.5;
                    fmt(slope * latent + noise * normal(&mut rng))
                })
                .collect();
            row.push(c.to_string());
            row
        })
        .collect();
    CsvTable { headers, rows }
}

/// Default-of-credit-card-clients lookalike: 23 features with the original
/// column names, label `default`, minority (class 1 = default) share
/// `minority_share`.
///
/// Class membership moves several feature groups at once: repayment status
/// (PAY_*), how close bills run to the limit (BILL_AMT_*), and repayment
/// amounts (PAY_AMT_*). Each group also shares a client-level latent factor.
pub fn default_credit_like(n: usize, minority_share: f64, seed: u64) -> CsvTable {
    let mut rng = Rng::new(seed);
    let classes = assign_classes(n, minority_share, &mut rng);
    let mut headers: Vec<String> = ["LIMIT_BAL", "SEX", "EDUCATION", "MARRIAGE", "AGE"]
        .map(String::from)
        .to_vec();
    headers.extend(["PAY_0", "PAY_2", "PAY_3", "PAY_4", "PAY_5", "PAY_6"].map(String::from));
    headers.extend((1..=6).map(|i| format!("BILL_AMT{i}")));
    headers.extend((1..=6).map(|i| format!("PAY_AMT{i}")));
    headers.push("default".into());

    let rows = classes
        .iter()
        .map(|&c| {
            let def = c == 1;
            let shift = if def { 1.0 } else { 0.0 };
            let mut row = Vec::with_capacity(24);

            let wealth = normal(&mut rng);
            let limit = (11.5 + 0.6 * wealth - 0.45 * shift + 0.2 * normal(&mut rng))
                .exp()
                .clamp(10_000.0, 1_000_000.0);
            row.push(fmt((limit / 10_000.0).round() * 10_000.0));
            let female = rng.next_f64() < if def { 0.57 } else { 0.62 };
            row.push(u8::from(female).to_string());
            let education = (2.0 - 0.5 * wealth + 0.3 * shift + 0.7 * normal(&mut rng))
                .round()
                .clamp(1.0, 4.0);
            row.push(fmt(education));
            let marriage = (1.6 + 0.5 * normal(&mut rng)).round().clamp(1.0, 3.0);
            row.push(fmt(marriage));
            let age = (35.0 + 4.0 * wealth + 9.0 * normal(&mut rng)).round().clamp(21.0, 79.0);
            row.push(fmt(age));

            // Repayment status: months of delay, -2 (no use) .. 8.
            let delinquency = -0.4 + 1.6 * shift + 0.6 * normal(&mut rng);
            for _ in 0..6 {
                let status = (delinquency + 0.7 * normal(&mut rng)).round().clamp(-2.0, 8.0);
                row.push(fmt(status));
            }

            // Bills: utilisation of the limit, drifting month to month.
            let mut utilisation = (0.35 + 0.25 * shift + 0.2 * normal(&mut rng)).clamp(-0.05, 1.1);
            let mut bills = Vec::with_capacity(6);
            for _ in 0..6 {
                utilisation = (utilisation + 0.06 * normal(&mut rng)).clamp(-0.05, 1.1);
                bills.push(utilisation * limit);
            }
            row.extend(bills.iter().map(|b| fmt(b.round())));

            // Repayments: a share of the bill, smaller for defaulters.
            let diligence = 0.12 - 0.07 * shift + 0.04 * normal(&mut rng);
            for bill in &bills {
                let paid = (diligence + 0.03 * normal(&mut rng)).max(0.0) * bill.max(0.0);
                row.push(fmt(paid.round()));
            }

            row.push(c.to_string());
            row
        })
        .collect();
    CsvTable { headers, rows }
}

/// Loads a generated table with its last column as the label.
pub fn to_dataset(table: &CsvTable) -> Result<Dataset> {
    table.to_dataset(
        &LabelColumn::Index(table.headers.len() - 1),
        &LoadOptions::default(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ColumnKind;

    #[test]
    fn credit_like_shape_and_split() {
        let d = to_dataset(&default_credit_like(2000, 0.2212, 3)).unwrap();
        assert_eq!(d.width(), 23);
        assert_eq!(d.class_counts(), vec![1558, 442]);
        assert_eq!(d.schema().columns[1].kind, ColumnKind::Binary);
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(default_credit_like(50, 0.3, 9), default_credit_like(50, 0.3, 9));
        assert_eq!(class_separated(30, 1), class_separated(30, 1));
        assert_ne!(linear_with_noise(30, 3, 0.1, 1), linear_with_noise(30, 3, 0.1, 2));
    }
}
