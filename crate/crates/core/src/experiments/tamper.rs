use std::fmt::Write as _;

use rayon::prelude::*;

use super::{Check, ExperimentReport};
use crate::emitter::{low_end_profile, modified_variants, synth_trace, EmitterProfile};
use crate::error::Result;
use crate::features::{make_features, FeatureConfig};
use crate::novelty::{detect_tampering, fit, Gamma, NoveltyConfig, TamperReport};
use crate::rng::derive_seed;
use crate::signal::IqTrace;

#[derive(Debug, Clone, PartialEq)]
pub struct TamperConfig {
    pub profile: EmitterProfile,
    pub legit_class: String,
    pub train_traces: usize,
    pub test_traces: usize,
    pub variants: usize,
    pub duration_s: f64,
    pub rate_hz: f64,
    pub features: FeatureConfig,
    pub novelty: NoveltyConfig,
    pub max_legit_error: f64,
    pub seed: u64,
}

impl Default for TamperConfig {
    fn default() -> Self {
        TamperConfig {
            profile: low_end_profile(),
            legit_class: "prog0".into(),
            train_traces: 500,
            test_traces: 100,
            variants: 20,
            duration_s: 0.01,
            rate_hz: 20e6,
            features: FeatureConfig::programs(),
            // The "scale" width (1e-3 for 1000 standardized features) lets each
            // training row score high from its own kernel term, and held-out
            // rows of the same program then fall outside.
            novelty: NoveltyConfig {
                gamma: Gamma::Value(1e-5),
                ..NoveltyConfig::default()
            },
            max_legit_error: 0.25,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TamperResult {
    pub config: TamperConfig,
    pub legit: TamperReport,
    pub modified: TamperReport,
}

/// Stream of per-variant seeds, well clear of the class indices.
const VARIANT_STREAM: u64 = 1 << 20;

pub fn run_tamper(config: &TamperConfig) -> Result<TamperResult> {
    let class_index = config.profile.class_index(&config.legit_class)? as u64;
    let legit_trace = |i: usize| {
        synth_trace(
            &config.profile,
            &config.legit_class,
            config.duration_s,
            config.rate_hz,
            derive_seed(config.seed, &[class_index, i as u64]),
        )
    };
    let train_rows = (0..config.train_traces)
        .into_par_iter()
        .map(|i| Ok(make_features(&legit_trace(i)?, &config.features)?.values))
        .collect::<Result<Vec<_>>>()?;
    let model = fit(&train_rows, &NoveltyConfig { seed: config.seed, ..config.novelty })?;

    // Held-out legitimate traces continue the training sequence.
    let legit_test = (config.train_traces..config.train_traces + config.test_traces)
        .into_par_iter()
        .map(legit_trace)
        .collect::<Result<Vec<IqTrace>>>()?;
    let legit = detect_tampering(&model, &legit_test, &config.features)?;
    drop(legit_test);

    let base = config.profile.class(&config.legit_class)?;
    let variants = modified_variants(base, config.variants);
    let variant_profile = config.profile.with_classes(variants.clone());
    let modified_traces = variants
        .par_iter()
        .enumerate()
        .map(|(v, spec)| {
            synth_trace(
                &variant_profile,
                &spec.class_id,
                config.duration_s,
                config.rate_hz,
                derive_seed(config.seed, &[VARIANT_STREAM + v as u64, 0]),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let modified = detect_tampering(&model, &modified_traces, &config.features)?;
    Ok(TamperResult {
        config: config.clone(),
        legit,
        modified,
    })
}

impl TamperResult {
    pub fn legit_error(&self) -> f64 {
        self.legit.fraction_flagged()
    }

    pub fn summary_line(&self) -> String {
        format!(
            "legit_err={:.4} tamper_detect={}/{}",
            self.legit_error(),
            self.modified.outliers,
            self.modified.verdicts.len()
        )
    }

    pub fn verdicts_csv(&self) -> String {
        let mut s = String::from("set,trace,score,verdict\n");
        for (set, r) in [("legit", &self.legit), ("modified", &self.modified)] {
            for v in &r.verdicts {
                let _ = writeln!(
                    s,
                    "{set},{},{:.9},{}",
                    v.id,
                    v.score,
                    if v.inlier { "legit" } else { "tampered" }
                );
            }
        }
        s
    }

    pub fn report(&self) -> ExperimentReport {
        let mut text = String::from("held-out legitimate traces:\n");
        text.push_str(&self.legit.render());
        text.push_str("\nmodified firmware traces:\n");
        text.push_str(&self.modified.render());
        text.push('\n');
        text.push_str(&self.summary_line());
        text.push('\n');
        let n = self.modified.verdicts.len();
        ExperimentReport {
            name: "exp-tamper".into(),
            text,
            files: vec![
                ("tamper_verdicts.csv".into(), self.verdicts_csv()),
                (
                    "tamper_summary.csv".into(),
                    format!(
                        "legit_traces,legit_flagged,legit_err,modified_traces,modified_flagged\n{},{},{:.6},{},{}\n",
                        self.legit.verdicts.len(),
                        self.legit.outliers,
                        self.legit_error(),
                        n,
                        self.modified.outliers
                    ),
                ),
            ],
            checks: vec![
                Check::new(
                    "all modified programs flagged",
                    self.modified.outliers == n && n > 0,
                    format!("{}/{n}", self.modified.outliers),
                ),
                Check::new(
                    "legitimate hold-out error",
                    self.legit_error() <= self.config.max_legit_error,
                    format!("{:.4} <= {}", self.legit_error(), self.config.max_legit_error),
                ),
            ],
        }
    }
}
