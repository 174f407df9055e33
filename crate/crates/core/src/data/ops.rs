use super::{Dataset, IncompleteDataset, MaskMatrix};
use crate::error::{Error, Result};
use crate::nn::{Matrix, Rng};

/// Hides each feature cell independently with probability `missing_rate`.
pub fn corrupt_mcar(dataset: &Dataset, missing_rate: f64, rng: &mut Rng) -> Result<IncompleteDataset> {
    if !(missing_rate > 0.0 && missing_rate < 1.0) {
        return Err(Error::invalid(
            "missing rate",
            format!("must lie strictly between 0 and 1, got {missing_rate}"),
        ));
    }
    let mask = Matrix::from_fn(dataset.rows(), dataset.width(), |_, _| {
        if rng.next_f64() < missing_rate {
            0.0
        } else {
            1.0
        }
    });
    IncompleteDataset::new(dataset.clone(), MaskMatrix::new(mask)?)
}

/// Randomly drops rows of `minority_class` until it makes up `minority_fraction`
/// of the result. Every majority row is kept and the result is reshuffled.
pub fn subsample_imbalance(
    dataset: &Dataset,
    minority_class: usize,
    minority_fraction: f64,
    rng: &mut Rng,
) -> Result<Dataset> {
    if dataset.class_count() != 2 {
        return Err(Error::Data(format!(
            "imbalance subsampling needs a binary label, found {} classes",
            dataset.class_count()
        )));
    }
    if minority_class > 1 {
        return Err(Error::invalid("minority class", minority_class.to_string()));
    }
    if !(minority_fraction > 0.0 && minority_fraction <= 0.5) {
        return Err(Error::invalid(
            "minority fraction",
            format!("must lie in (0, 0.5], got {minority_fraction}"),
        ));
    }
    let (mut minority, majority): (Vec<usize>, Vec<usize>) =
        (0..dataset.rows()).partition(|&i| dataset.classes()[i] == minority_class);
    let n0 = majority.len() as f64;
    let target = (minority_fraction * n0 / (1.0 - minority_fraction)).round() as usize;
    if target == 0 {
        return Err(Error::Data(format!(
            "fraction {minority_fraction} keeps no minority rows next to {} majority rows",
            majority.len()
        )));
    }
    if target > minority.len() {
        return Err(Error::Data(format!(
            "minority class has {} rows, {target} needed for fraction {minority_fraction}",
            minority.len()
        )));
    }
    rng.shuffle(&mut minority);
    let mut rows: Vec<usize> = majority.into_iter().chain(minority.into_iter().take(target)).collect();
    rng.shuffle(&mut rows);
    Ok(dataset.select_rows(&rows))
}

/// `k` disjoint, class-stratified row partitions covering every row.
pub fn split_folds(dataset: &Dataset, k: usize, rng: &mut Rng) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::invalid("fold count", format!("must be at least 2, got {k}")));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); dataset.class_count()];
    for (i, &c) in dataset.classes().iter().enumerate() {
        by_class[c].push(i);
    }
    for (c, rows) in by_class.iter().enumerate() {
        if !rows.is_empty() && rows.len() < k {
            return Err(Error::Data(format!(
                "class '{}' has {} rows, fewer than {k} folds",
                dataset.class_names()[c],
                rows.len()
            )));
        }
    }
    let mut folds = vec![Vec::new(); k];
    // Dealing continues across classes so fold sizes stay balanced too.
    let mut next = 0;
    for rows in &mut by_class {
        rng.shuffle(rows);
        for &row in rows.iter() {
            folds[next].push(row);
            next = (next + 1) % k;
        }
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::FeatureSchema;
    use crate::nn::Rng;
    use proptest::prelude::*;

    fn dataset(classes: Vec<usize>, width: usize, seed: u64) -> Dataset {
        let n = classes.len();
        let features = Rng::new(seed).uniform(0.0, 1.0, n, width).unwrap();
        let names: Vec<String> = (0..width).map(|j| format!("f{j}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let m = classes.iter().max().map_or(2, |&c| (c + 1).max(2));
        Dataset::new(
            features,
            classes,
            (0..m).map(|c| c.to_string()).collect(),
            FeatureSchema::unit(&refs),
        )
        .unwrap()
    }

    #[test]
    fn corruption_rate_bounds() {
        let d = dataset(vec![0, 1, 0, 1], 3, 1);
        let mut rng = Rng::new(1);
        assert!(corrupt_mcar(&d, 0.0, &mut rng).is_err());
        assert!(corrupt_mcar(&d, 1.0, &mut rng).is_err());
        assert!(corrupt_mcar(&d, -0.2, &mut rng).is_err());
    }

    #[test]
    fn corruption_fraction_on_spambase_sized_grid() {
        let classes: Vec<usize> = (0..4601).map(|i| i % 2).collect();
        let d = dataset(classes, 57, 2);
        let inc = corrupt_mcar(&d, 0.2, &mut Rng::new(20)).unwrap();
        let frac = inc.mask().missing_fraction();
        assert!((0.198..=0.202).contains(&frac), "fraction {frac}");
        assert_eq!(inc.dataset().labels(), d.labels());
        assert_eq!(inc.dataset().classes(), d.classes());
    }

    #[test]
    fn corruption_is_reproducible() {
        let d = dataset(vec![0, 1, 1, 0, 1], 4, 3);
        let a = corrupt_mcar(&d, 0.3, &mut Rng::new(99)).unwrap();
        let b = corrupt_mcar(&d, 0.3, &mut Rng::new(99)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn imbalance_target_count() {
        // 1000 majority rows at fraction 0.10 -> n1 = 0.1 * 1000 / 0.9 = 111.1
        let mut classes = vec![0; 1000];
        classes.extend(vec![1; 500]);
        let d = dataset(classes, 2, 4);
        let out = subsample_imbalance(&d, 1, 0.10, &mut Rng::new(4)).unwrap();
        let counts = out.class_counts();
        assert_eq!(counts[0], 1000);
        assert!((111..=112).contains(&counts[1]), "{counts:?}");
    }

    #[test]
    fn imbalance_half_on_balanced_keeps_everything() {
        let classes: Vec<usize> = (0..40).map(|i| i % 2).collect();
        let d = dataset(classes, 3, 5);
        let out = subsample_imbalance(&d, 1, 0.5, &mut Rng::new(5)).unwrap();
        assert_eq!(out.rows(), d.rows());
        let mut a: Vec<Vec<u64>> = (0..d.rows())
            .map(|i| d.features().row(i).iter().map(|v| v.to_bits()).collect())
            .collect();
        let mut b: Vec<Vec<u64>> = (0..out.rows())
            .map(|i| out.features().row(i).iter().map(|v| v.to_bits()).collect())
            .collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn imbalance_errors() {
        let classes: Vec<usize> = (0..30).map(|i| usize::from(i % 10 == 0)).collect();
        let d = dataset(classes, 2, 6);
        assert!(subsample_imbalance(&d, 1, 0.5, &mut Rng::new(6)).is_err());
        assert!(subsample_imbalance(&d, 1, 0.0, &mut Rng::new(6)).is_err());
        assert!(subsample_imbalance(&d, 1, 0.6, &mut Rng::new(6)).is_err());
        let multi = dataset((0..30).map(|i| i % 3).collect(), 2, 6);
        assert!(subsample_imbalance(&multi, 1, 0.2, &mut Rng::new(6)).is_err());
    }

    #[test]
    fn folds_one_of_each_class() {
        let classes = vec![0, 1, 0, 1, 0, 1, 0, 1, 0, 1];
        let d = dataset(classes, 2, 7);
        let folds = split_folds(&d, 5, &mut Rng::new(7)).unwrap();
        for fold in &folds {
            assert_eq!(fold.len(), 2);
            let c: Vec<usize> = fold.iter().map(|&i| d.classes()[i]).collect();
            assert!(c.contains(&0) && c.contains(&1));
        }
    }

    #[test]
    fn folds_reject_small_classes() {
        let d = dataset(vec![0, 0, 0, 1, 1], 2, 8);
        assert!(split_folds(&d, 3, &mut Rng::new(8)).is_err());
        assert!(split_folds(&d, 1, &mut Rng::new(8)).is_err());
    }

    proptest! {
        #[test]
        fn folds_partition_rows(n in 20usize..120, m in 2usize..4, k in 2usize..6, seed in 0u64..500) {
            let classes: Vec<usize> = (0..n).map(|i| i % m).collect();
            let d = dataset(classes, 2, seed);
            let folds = split_folds(&d, k, &mut Rng::new(seed)).unwrap();
            let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            for c in 0..m {
                let per_fold: Vec<usize> = folds.iter()
                    .map(|f| f.iter().filter(|&&i| d.classes()[i] == c).count())
                    .collect();
                let lo = *per_fold.iter().min().unwrap();
                let hi = *per_fold.iter().max().unwrap();
                prop_assert!(hi - lo <= 1);
            }
        }

        #[test]
        fn corruption_never_touches_labels(seed in 0u64..1000, rate in 0.01f64..0.99) {
            let d = dataset((0..12).map(|i| i % 2).collect(), 3, seed);
            let inc = corrupt_mcar(&d, rate, &mut Rng::new(seed)).unwrap();
            prop_assert_eq!(inc.mask().matrix().shape(), d.features().shape());
            prop_assert_eq!(inc.dataset().labels(), d.labels());
        }
    }
}
