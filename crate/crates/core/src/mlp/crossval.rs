use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::{evaluate, train, ClassificationReport, MlpConfig};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from};
use crate::stats::{mean, sample_std};

#[derive(Debug, Clone, PartialEq)]
pub struct CrossValReport {
    pub k: usize,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    /// `1.96 * sample_std(fold_accuracies) / sqrt(k)`.
    pub ci95_halfwidth: f64,
    /// Confusion summed over all held-out folds.
    pub pooled: ClassificationReport,
}

/// Fold index per row: each class is shuffled with `seed` and dealt round
/// robin, so per-class fold counts differ by at most one.
pub fn stratified_folds(labels: &[usize], n_classes: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut assignment = vec![0; labels.len()];
    let mut next_fold = 0;
    for class in 0..n_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng_from(derive_seed(seed, &[class as u64])));
        for &i in &members {
            assignment[i] = next_fold;
            // Continue where the previous class stopped to even out fold sizes.
            next_fold = (next_fold + 1) % k;
        }
    }
    assignment
}

/// Stratified k-fold cross-validation; folds train in parallel and are
/// reported in fold order.
pub fn cross_validate(dataset: &Dataset, config: &MlpConfig, k: usize) -> Result<CrossValReport> {
    if k < 2 {
        return Err(Error::invalid(format!("k must be at least 2, got {k}")));
    }
    config.validate()?;
    for (class, &count) in dataset.class_counts().iter().enumerate() {
        if count < k {
            return Err(Error::InsufficientSamples {
                class: dataset.class_table()[class].clone(),
                have: count,
                need: k,
            });
        }
    }
    let folds = stratified_folds(dataset.labels(), dataset.n_classes(), k, config.seed);
    let reports = (0..k)
        .into_par_iter()
        .map(|fold| {
            let (test, train_idx): (Vec<usize>, Vec<usize>) =
                (0..dataset.len()).partition(|&i| folds[i] == fold);
            let fold_cfg = MlpConfig {
                seed: derive_seed(config.seed, &[0xf01d, fold as u64]),
                ..config.clone()
            };
            let model = train(&dataset.subset(&train_idx), &fold_cfg)?;
            evaluate(&model, &dataset.subset(&test))
        })
        .collect::<Result<Vec<_>>>()?;

    let fold_accuracies: Vec<f64> = reports.iter().map(|r| r.accuracy).collect();
    let pooled = reports[1..]
        .iter()
        .fold(reports[0].clone(), |acc, r| acc.merge(r));
    Ok(CrossValReport {
        k,
        mean_accuracy: mean(&fold_accuracies),
        ci95_halfwidth: 1.96 * sample_std(&fold_accuracies) / (k as f64).sqrt(),
        fold_accuracies,
        pooled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_are_stratified() {
        let labels: Vec<usize> = (0..97).map(|i| i % 3).chain(std::iter::repeat(1).take(20)).collect();
        let k = 10;
        let folds = stratified_folds(&labels, 3, k, 5);
        for class in 0..3 {
            let total = labels.iter().filter(|&&l| l == class).count();
            let ideal = total as f64 / k as f64;
            for f in 0..k {
                let n = (0..labels.len()).filter(|&i| labels[i] == class && folds[i] == f).count();
                assert!((n as f64 - ideal).abs() <= 1.0, "class {class} fold {f}: {n} vs {ideal}");
            }
        }
    }

    #[test]
    fn duplicating_rows_keeps_stratification() {
        let labels: Vec<usize> = (0..60).map(|i| i % 4).collect();
        let doubled: Vec<usize> = labels.iter().chain(&labels).copied().collect();
        let k = 10;
        let folds = stratified_folds(&doubled, 4, k, 1);
        for class in 0..4 {
            for f in 0..k {
                let n = (0..doubled.len()).filter(|&i| doubled[i] == class && folds[i] == f).count();
                assert!((n as f64 - 3.0).abs() <= 1.0);
            }
        }
    }

    #[test]
    fn too_few_rows_names_the_class() {
        let ds = Dataset::from_labeled(
            (0..25)
                .map(|i| (if i < 20 { "big" } else { "small" }.to_string(), vec![i as f64]))
                .collect(),
        )
        .unwrap();
        match cross_validate(&ds, &MlpConfig::default(), 10) {
            Err(Error::InsufficientSamples { class, have, need }) => {
                assert_eq!((class.as_str(), have, need), ("small", 5, 10));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn equal_folds_have_zero_halfwidth() {
        assert_eq!(1.96 * sample_std(&[0.9; 10]) / 10f64.sqrt(), 0.0);
    }

    #[test]
    fn blobs_cross_validate_well() {
        let ds = crate::mlp::tests::blobs(40, 8);
        let cfg = MlpConfig {
            epochs: 60,
            ..MlpConfig::default()
        };
        let r = cross_validate(&ds, &cfg, 10).unwrap();
        assert_eq!(r.fold_accuracies.len(), 10);
        assert!(r.mean_accuracy > 0.95);
        assert!(r.ci95_halfwidth >= 0.0);
        assert_eq!(r.pooled.total(), ds.len());
        assert_eq!(cross_validate(&ds, &cfg, 10).unwrap(), r);
    }
}
