use super::{folds_csv, synthetic_dataset, Check, ExperimentReport};
use crate::emitter::{high_end_profile, EmitterProfile};
use crate::error::Result;
use crate::features::FeatureConfig;
use crate::mlp::{cross_validate, CrossValReport, MlpConfig};

/// Table row order and display names for the four workloads.
pub const CRYPTO_ROWS: [(&str, &str); 4] = [("other", "Other"), ("aes256", "AES-256"), ("aes128", "AES-128"), ("3des", "3DES")];

#[derive(Debug, Clone, PartialEq)]
pub struct CryptoConfig {
    pub profile: EmitterProfile,
    pub per_class: usize,
    pub duration_s: f64,
    pub rate_hz: f64,
    pub features: FeatureConfig,
    pub mlp: MlpConfig,
    pub folds: usize,
    pub min_accuracy: f64,
    pub seed: u64,
}

impl Default for CryptoConfig {
    fn default() -> Self {
        CryptoConfig {
            profile: high_end_profile(),
            per_class: 600,
            duration_s: 0.01,
            rate_hz: 20e6,
            features: FeatureConfig::crypto(),
            mlp: MlpConfig {
                hidden_layers: vec![10, 5],
                learning_rate: 0.05,
                epochs: 40,
                ..MlpConfig::default()
            },
            folds: 10,
            min_accuracy: 0.95,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CryptoResult {
    pub config: CryptoConfig,
    pub cv: CrossValReport,
}

pub fn run_crypto(config: &CryptoConfig) -> Result<CryptoResult> {
    let ds = synthetic_dataset(&config.profile, config.per_class, config.duration_s, config.rate_hz, config.seed, &config.features)?;
    let mlp = MlpConfig {
        seed: config.seed,
        ..config.mlp.clone()
    };
    let cv = cross_validate(&ds, &mlp, config.folds)?;
    Ok(CryptoResult {
        config: config.clone(),
        cv,
    })
}

impl CryptoResult {
    /// Class indices in table order; classes missing from the default naming
    /// keep their id and follow in class-table order.
    pub fn table_rows(&self) -> Vec<(usize, String)> {
        let table = &self.cv.pooled.class_table;
        let mut rows: Vec<(usize, String)> = CRYPTO_ROWS
            .iter()
            .filter_map(|(id, name)| table.iter().position(|c| c == id).map(|i| (i, name.to_string())))
            .collect();
        for (i, c) in table.iter().enumerate() {
            if !rows.iter().any(|(j, _)| *j == i) {
                rows.push((i, c.clone()));
            }
        }
        rows
    }

    pub fn report(&self) -> ExperimentReport {
        let rows = self.table_rows();
        let cv = &self.cv;
        let mut text = format!(
            "crypto workloads: {} classes x {} traces, {}-fold cross-validation\n\n",
            cv.pooled.class_table.len(),
            self.config.per_class,
            cv.k
        );
        text.push_str(&cv.pooled.render_table(&rows));
        text.push_str(&format!(
            "mean accuracy {:.4} +/- {:.4} (95% CI half-width)\n",
            cv.mean_accuracy, cv.ci95_halfwidth
        ));
        let names: Vec<String> = cv.pooled.class_table.clone();
        let accuracy = Check::new(
            "crypto mean accuracy",
            cv.mean_accuracy >= self.config.min_accuracy,
            format!("{:.4} >= {:.2}", cv.mean_accuracy, self.config.min_accuracy),
        );
        ExperimentReport {
            name: "exp-crypto".into(),
            text,
            files: vec![
                ("crypto_report.csv".into(), cv.pooled.to_csv(&rows)),
                ("crypto_confusion.csv".into(), cv.pooled.confusion_csv(&names)),
                ("crypto_folds.csv".into(), folds_csv(&cv.fold_accuracies)),
            ],
            checks: vec![accuracy],
        }
    }
}
