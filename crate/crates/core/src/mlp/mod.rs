//! Multiclass feed-forward classifier.
//!
//! Hidden layers use a sigmoid-family activation (tanh by default), the
//! output is a softmax trained with cross-entropy by mini-batch gradient
//! descent. Inputs are z-scored with statistics from the training rows.

mod crossval;
mod io;
mod metrics;
mod network;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from};
use crate::stats::Standardizer;

pub use crossval::{cross_validate, stratified_folds, CrossValReport};
pub use io::{load_model, read_model, save_model, write_model, MODEL_MAGIC, MODEL_VERSION};
pub use metrics::{evaluate, ClassificationReport};
pub use network::{Activation, Gradient, Layer, Network};

use rand::seq::SliceRandom;

#[derive(Debug, Clone, PartialEq)]
pub struct MlpConfig {
    pub hidden_layers: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub standardize: bool,
    pub activation: Activation,
    /// Stop once the epoch loss moved less than this over `early_stop_window` epochs.
    pub early_stop_tolerance: f64,
    pub early_stop_window: usize,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden_layers: vec![10, 5],
            learning_rate: 0.01,
            epochs: 300,
            batch_size: 32,
            seed: 0,
            standardize: true,
            activation: Activation::Tanh,
            early_stop_tolerance: 1e-6,
            early_stop_window: 10,
        }
    }
}

impl MlpConfig {
    pub fn with_hidden(mut self, hidden: &[usize]) -> Self {
        self.hidden_layers = hidden.to_vec();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_layers.is_empty() || self.hidden_layers.contains(&0) {
            return Err(Error::invalid(format!(
                "hidden layers must be non-empty and positive, got {:?}",
                self.hidden_layers
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::invalid("epochs and batch size must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub network: Network,
    pub standardizer: Option<Standardizer>,
    pub class_table: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class_index: usize,
    pub class: String,
    pub scores: Vec<f64>,
}

impl Prediction {
    pub fn confidence(&self) -> f64 {
        self.scores[self.class_index]
    }
}

impl MlpModel {
    pub fn input_dim(&self) -> usize {
        self.network.input_dim()
    }

    pub fn topology(&self) -> Vec<usize> {
        self.network.topology()
    }

    pub fn scores(&self, features: &[f64]) -> Result<Vec<f64>> {
        if features.len() != self.input_dim() {
            return Err(Error::Shape {
                expected: self.input_dim(),
                actual: features.len(),
            });
        }
        Ok(match &self.standardizer {
            Some(s) => self.network.forward(&s.transform(features)),
            None => self.network.forward(features),
        })
    }

    /// Softmax scores and the arg-max class (lowest index wins ties).
    pub fn predict(&self, features: &[f64]) -> Result<Prediction> {
        let scores = self.scores(features)?;
        let mut best = 0;
        for (i, &s) in scores.iter().enumerate().skip(1) {
            if s > scores[best] {
                best = i;
            }
        }
        Ok(Prediction {
            class_index: best,
            class: self.class_table[best].clone(),
            scores,
        })
    }
}

/// Per-epoch mean training loss.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainLog {
    pub epoch_losses: Vec<f64>,
}

pub fn train(dataset: &Dataset, config: &MlpConfig) -> Result<MlpModel> {
    train_with_log(dataset, config).map(|(m, _)| m)
}

pub fn train_with_log(dataset: &Dataset, config: &MlpConfig) -> Result<(MlpModel, TrainLog)> {
    config.validate()?;
    let counts = dataset.class_counts();
    if counts.len() < 2 {
        return Err(Error::InvalidDataset(format!(
            "need at least 2 classes, got {}",
            counts.len()
        )));
    }
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(Error::InvalidDataset(format!(
            "class `{}` has no rows",
            dataset.class_table()[c]
        )));
    }

    let dim = dataset.feature_dim();
    let standardizer = config.standardize.then(|| Standardizer::fit_dataset(dataset));
    let mut xs = Vec::with_capacity(dataset.len() * dim);
    let mut buf = Vec::with_capacity(dim);
    for row in dataset.rows() {
        match &standardizer {
            Some(s) => {
                s.apply(row, &mut buf);
                xs.extend_from_slice(&buf);
            }
            None => xs.extend_from_slice(row),
        }
    }

    let mut topology = vec![dim];
    topology.extend(&config.hidden_layers);
    topology.push(dataset.n_classes());
    let mut init_rng = rng_from(derive_seed(config.seed, &[0]));
    let mut network = Network::new(&topology, config.activation, &mut init_rng);
    let mut order_rng = rng_from(derive_seed(config.seed, &[1]));

    let n = dataset.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut batch_x = Vec::with_capacity(config.batch_size * dim);
    let mut batch_y = Vec::with_capacity(config.batch_size);
    let mut log = TrainLog {
        epoch_losses: Vec::new(),
    };

    for epoch in 0..config.epochs {
        order.shuffle(&mut order_rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            batch_x.clear();
            batch_y.clear();
            for &i in chunk {
                batch_x.extend_from_slice(&xs[i * dim..(i + 1) * dim]);
                batch_y.push(dataset.label(i));
            }
            let (loss, grad) = network.loss_and_gradient(&batch_x, &batch_y);
            if !loss.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    learning_rate: config.learning_rate,
                });
            }
            epoch_loss += loss * chunk.len() as f64;
            network.step(&grad, config.learning_rate);
        }
        let epoch_loss = epoch_loss / n as f64;
        if network.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::Divergence {
                epoch,
                learning_rate: config.learning_rate,
            });
        }
        log.epoch_losses.push(epoch_loss);
        let w = config.early_stop_window;
        if w > 0 && log.epoch_losses.len() > w {
            let prev = log.epoch_losses[log.epoch_losses.len() - 1 - w];
            if (prev - epoch_loss).abs() < config.early_stop_tolerance {
                break;
            }
        }
    }

    Ok((
        MlpModel {
            network,
            standardizer,
            class_table: dataset.class_table().to_vec(),
        },
        log,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    /// Two Gaussian blobs in 2-D centred at (-3, -3) and (3, 3).
    pub(crate) fn blobs(n_per: usize, seed: u64) -> Dataset {
        let mut rng = rng_from(seed);
        let noise = Normal::new(0.0, 0.7).unwrap();
        let mut rows = Vec::new();
        for (label, c) in [("left", -3.0), ("right", 3.0)] {
            for _ in 0..n_per {
                rows.push((
                    label.to_string(),
                    vec![c + noise.sample(&mut rng), c + noise.sample(&mut rng)],
                ));
            }
        }
        Dataset::from_labeled(rows).unwrap()
    }

    fn nearest_centroid_accuracy(ds: &Dataset) -> f64 {
        let mut sums = vec![[0.0; 2]; 2];
        for (row, &l) in ds.rows().zip(ds.labels()) {
            sums[l][0] += row[0];
            sums[l][1] += row[1];
        }
        let counts = ds.class_counts();
        let cents: Vec<[f64; 2]> = sums
            .iter()
            .zip(&counts)
            .map(|(s, &c)| [s[0] / c as f64, s[1] / c as f64])
            .collect();
        let correct = ds
            .rows()
            .zip(ds.labels())
            .filter(|(row, &l)| {
                let d = |c: &[f64; 2]| (row[0] - c[0]).powi(2) + (row[1] - c[1]).powi(2);
                let pred = if d(&cents[0]) <= d(&cents[1]) { 0 } else { 1 };
                pred == l
            })
            .count();
        correct as f64 / ds.len() as f64
    }

    #[test]
    fn separable_blobs_train_to_perfection() {
        let ds = blobs(100, 42);
        // The oracle confirms the data is separable before we ask the network.
        assert_eq!(nearest_centroid_accuracy(&ds), 1.0);
        let cfg = MlpConfig {
            epochs: 200,
            ..MlpConfig::default()
        };
        let model = train(&ds, &cfg).unwrap();
        assert_eq!(model.topology(), [2, 10, 5, 2]);
        let report = evaluate(&model, &ds).unwrap();
        assert_eq!(report.accuracy, 1.0);
        for i in [0, 57, 150, 199] {
            let p = model.predict(ds.row(i)).unwrap();
            assert_eq!(p.class_index, ds.label(i));
        }
    }

    #[test]
    fn single_class_rejected() {
        let ds = Dataset::from_labeled(vec![("a".into(), vec![1.0]), ("a".into(), vec![2.0])]).unwrap();
        assert!(matches!(train(&ds, &MlpConfig::default()), Err(Error::InvalidDataset(_))));
    }

    #[test]
    fn crypto_topology() {
        let mut rng = rng_from(9);
        let rows = (0..8)
            .map(|i| {
                let v: Vec<f64> = (0..500).map(|_| rng.random::<f64>()).collect();
                (format!("c{}", i % 4), v)
            })
            .collect();
        let ds = Dataset::from_labeled(rows).unwrap();
        let cfg = MlpConfig {
            epochs: 1,
            ..MlpConfig::default()
        };
        let model = train(&ds, &cfg).unwrap();
        assert_eq!(model.topology(), [500, 10, 5, 4]);
    }

    #[test]
    fn divergence_is_reported() {
        // Two classes drawn from the same cloud cannot be separated, so a huge
        // step drives some true-class probability to exactly zero.
        let mut rng = rng_from(1);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let rows = (0..40)
            .map(|i| {
                let label = if i % 2 == 0 { "a" } else { "b" };
                (label.to_string(), vec![noise.sample(&mut rng), noise.sample(&mut rng)])
            })
            .collect();
        let ds = Dataset::from_labeled(rows).unwrap();
        let cfg = MlpConfig {
            learning_rate: 1e10,
            standardize: false,
            epochs: 5,
            ..MlpConfig::default()
        };
        match train(&ds, &cfg) {
            Err(Error::Divergence { learning_rate, .. }) => assert_eq!(learning_rate, 1e10),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let ds = blobs(30, 5);
        let cfg = MlpConfig {
            epochs: 20,
            seed: 77,
            ..MlpConfig::default()
        };
        assert_eq!(train(&ds, &cfg).unwrap(), train(&ds, &cfg).unwrap());
        let other = MlpConfig { seed: 78, ..cfg.clone() };
        assert_ne!(train(&ds, &cfg).unwrap().network, train(&ds, &other).unwrap().network);
    }

    #[test]
    fn predict_checks_shape_and_normalizes() {
        let model = train(&blobs(10, 2), &MlpConfig { epochs: 3, ..MlpConfig::default() }).unwrap();
        assert!(matches!(
            model.predict(&[1.0, 2.0, 3.0]),
            Err(Error::Shape { expected: 2, actual: 3 })
        ));
        let p = model.predict(&[0.3, -8.0]).unwrap();
        assert!((p.scores.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let model = MlpModel {
            network: Network::zeros(&[3, 4, 5], Activation::Tanh),
            standardizer: None,
            class_table: (0..5).map(|i| i.to_string()).collect(),
        };
        let p = model.predict(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(p.class_index, 0);
        assert!(p.scores.iter().all(|s| (s - 0.2).abs() < 1e-15));
    }

    #[test]
    fn early_stop_cuts_training_short() {
        let ds = blobs(50, 3);
        let cfg = MlpConfig {
            epochs: 5000,
            learning_rate: 0.5,
            early_stop_tolerance: 1e-3,
            ..MlpConfig::default()
        };
        let (_, log) = train_with_log(&ds, &cfg).unwrap();
        assert!(log.epoch_losses.len() < 5000);
    }
}
