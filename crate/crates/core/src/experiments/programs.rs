use super::{folds_csv, synthetic_dataset, Check, ExperimentReport};
use crate::emitter::{low_end_profile, EmitterProfile};
use crate::error::Result;
use crate::features::FeatureConfig;
use crate::mlp::{cross_validate, CrossValReport, MlpConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct ProgramsConfig {
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

impl Default for ProgramsConfig {
    fn default() -> Self {
        ProgramsConfig {
            profile: low_end_profile(),
            per_class: 600,
            duration_s: 0.01,
            rate_hz: 20e6,
            features: FeatureConfig::programs(),
            mlp: MlpConfig {
                hidden_layers: vec![10, 3],
                learning_rate: 0.05,
                epochs: 40,
                ..MlpConfig::default()
            },
            folds: 10,
            min_accuracy: 0.90,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProgramsResult {
    pub config: ProgramsConfig,
    pub cv: CrossValReport,
}

pub fn run_programs(config: &ProgramsConfig) -> Result<ProgramsResult> {
    let ds = synthetic_dataset(&config.profile, config.per_class, config.duration_s, config.rate_hz, config.seed, &config.features)?;
    let mlp = MlpConfig {
        seed: config.seed,
        ..config.mlp.clone()
    };
    let cv = cross_validate(&ds, &mlp, config.folds)?;
    Ok(ProgramsResult {
        config: config.clone(),
        cv,
    })
}

impl ProgramsResult {
    /// Axis labels: the class index, so `prog3` is shown as `3`.
    pub fn axis_labels(&self) -> Vec<String> {
        (0..self.cv.pooled.class_table.len()).map(|i| i.to_string()).collect()
    }

    pub fn report(&self) -> ExperimentReport {
        let cv = &self.cv;
        let labels = self.axis_labels();
        let mut text = format!(
            "programs: {} classes x {} traces, {}-fold cross-validation\n\nconfusion (rows true, columns predicted):\n",
            labels.len(),
            self.config.per_class,
            cv.k
        );
        text.push_str(&cv.pooled.render_confusion(&labels));
        text.push('\n');
        for (i, c) in cv.pooled.class_table.iter().enumerate() {
            text.push_str(&format!("{i} = {c}\n"));
        }
        text.push_str(&format!(
            "\nmean accuracy {:.4} +/- {:.4} (95% CI half-width)\n",
            cv.mean_accuracy, cv.ci95_halfwidth
        ));
        let rows: Vec<(usize, String)> = labels.iter().cloned().enumerate().collect();
        ExperimentReport {
            name: "exp-programs".into(),
            text,
            files: vec![
                ("programs_confusion.csv".into(), cv.pooled.confusion_csv(&labels)),
                ("programs_report.csv".into(), cv.pooled.to_csv(&rows)),
                ("programs_folds.csv".into(), folds_csv(&cv.fold_accuracies)),
            ],
            checks: vec![Check::new(
                "programs mean accuracy",
                cv.mean_accuracy >= self.config.min_accuracy,
                format!(
                    "{:.4} +/- {:.4} >= {:.2}",
                    cv.mean_accuracy, cv.ci95_halfwidth, self.config.min_accuracy
                ),
            )],
        }
    }
}
