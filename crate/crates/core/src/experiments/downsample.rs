use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{Check, ExperimentReport};
use crate::dataset::Dataset;
use crate::emitter::{high_end_profile, EmitterProfile};
use crate::error::{Error, Result};
use crate::features::{make_features, FeatureConfig};
use crate::mlp::{cross_validate, MlpConfig};
use crate::store::{build_corpus, resample_corpus, CorpusManifest};

/// Target rates below the 20 MHz capture rate, in evaluation order.
pub const RATE_LADDER_HZ: [f64; 8] = [16e6, 12e6, 8e6, 4e6, 3e6, 2e6, 1e6, 0.5e6];

#[derive(Debug, Clone, PartialEq)]
pub struct DownsampleConfig {
    pub profile: EmitterProfile,
    pub per_class: usize,
    pub duration_s: f64,
    pub source_rate_hz: f64,
    pub ladder_hz: Vec<f64>,
    pub features: FeatureConfig,
    pub mlp: MlpConfig,
    pub folds: usize,
    /// Keep the corpora on disk after the run.
    pub keep_corpora: bool,
    /// Largest tolerated accuracy loss at 4 MHz relative to the source rate.
    pub max_drop_at_4mhz: f64,
    /// Smallest required accuracy gap between 4 MHz and 0.5 MHz.
    pub min_gap_at_500khz: f64,
    pub seed: u64,
}

impl Default for DownsampleConfig {
    fn default() -> Self {
        DownsampleConfig {
            profile: high_end_profile(),
            per_class: 100,
            duration_s: 0.01,
            source_rate_hz: 20e6,
            ladder_hz: RATE_LADDER_HZ.to_vec(),
            features: FeatureConfig::crypto(),
            mlp: MlpConfig {
                hidden_layers: vec![10, 5],
                learning_rate: 0.05,
                epochs: 40,
                ..MlpConfig::default()
            },
            folds: 10,
            keep_corpora: false,
            max_drop_at_4mhz: 0.02,
            min_gap_at_500khz: 0.10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DownsampleRow {
    pub rate_hz: f64,
    pub samples_per_trace: u64,
    pub payload_bytes: u64,
    pub mean_accuracy: f64,
    pub ci95_halfwidth: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DownsampleResult {
    pub config: DownsampleConfig,
    /// Source rate first, then the ladder.
    pub rows: Vec<DownsampleRow>,
}

fn corpus_dir(work_dir: &Path, rate_hz: f64) -> PathBuf {
    work_dir.join(format!("corpus_{}khz", (rate_hz / 1e3).round() as u64))
}

fn features_for(manifest: &CorpusManifest, features: &FeatureConfig) -> Result<Dataset> {
    let rows = (0..manifest.len())
        .into_par_iter()
        .map(|i| {
            let t = manifest.read_entry(i)?;
            Ok((manifest.entries[i].label.clone(), make_features(&t, features)?.values))
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::from_labeled(rows)
}

/// Builds a corpus at the source rate under `work_dir`, resamples it down the
/// ladder and cross-validates a classifier at every rate.
pub fn run_downsample(config: &DownsampleConfig, work_dir: &Path) -> Result<DownsampleResult> {
    let source_dir = corpus_dir(work_dir, config.source_rate_hz);
    if source_dir.exists() {
        fs::remove_dir_all(&source_dir).map_err(|e| Error::io(&source_dir, e))?;
    }
    let source = build_corpus(
        &config.profile,
        config.per_class,
        config.duration_s,
        config.source_rate_hz,
        config.seed,
        &source_dir,
    )?;
    let mlp = MlpConfig {
        seed: config.seed,
        ..config.mlp.clone()
    };
    let mut rows = Vec::new();
    let rates = std::iter::once(config.source_rate_hz).chain(config.ladder_hz.iter().copied());
    for rate in rates {
        let (manifest, dir) = if rate == config.source_rate_hz {
            (source.clone(), None)
        } else {
            let dir = corpus_dir(work_dir, rate);
            if dir.exists() {
                fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            }
            (resample_corpus(&source, rate, &dir)?, Some(dir))
        };
        let ds = features_for(&manifest, &config.features)?;
        let cv = cross_validate(&ds, &mlp, config.folds)?;
        rows.push(DownsampleRow {
            rate_hz: rate,
            samples_per_trace: manifest.entries.first().map_or(0, |e| e.samples),
            payload_bytes: manifest.payload_bytes(),
            mean_accuracy: cv.mean_accuracy,
            ci95_halfwidth: cv.ci95_halfwidth,
        });
        if let (Some(dir), false) = (dir, config.keep_corpora) {
            fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
    }
    if !config.keep_corpora {
        fs::remove_dir_all(&source_dir).map_err(|e| Error::io(&source_dir, e))?;
    }
    Ok(DownsampleResult {
        config: config.clone(),
        rows,
    })
}

impl DownsampleResult {
    pub fn row_at(&self, rate_hz: f64) -> Option<&DownsampleRow> {
        self.rows.iter().find(|r| r.rate_hz == rate_hz)
    }

    fn source_bytes(&self) -> u64 {
        self.rows[0].payload_bytes
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("rate_mhz,samples_per_trace,payload_bytes,payload_fraction,mean_accuracy,ci95_halfwidth\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{:.6},{:.6},{:.6}",
                r.rate_hz / 1e6,
                r.samples_per_trace,
                r.payload_bytes,
                r.payload_bytes as f64 / self.source_bytes() as f64,
                r.mean_accuracy,
                r.ci95_halfwidth
            );
        }
        s
    }

    pub fn checks(&self) -> Vec<Check> {
        let mut checks = Vec::new();
        let src = &self.rows[0];
        match (self.row_at(4e6), self.row_at(0.5e6)) {
            (Some(r4), Some(r05)) => {
                checks.push(Check::new(
                    "accuracy kept at 4 MHz",
                    r4.mean_accuracy >= src.mean_accuracy - self.config.max_drop_at_4mhz,
                    format!(
                        "{:.4} vs {:.4} at {} MHz (allowed drop {})",
                        r4.mean_accuracy,
                        src.mean_accuracy,
                        src.rate_hz / 1e6,
                        self.config.max_drop_at_4mhz
                    ),
                ));
                checks.push(Check::new(
                    "accuracy lost at 0.5 MHz",
                    r05.mean_accuracy <= r4.mean_accuracy - self.config.min_gap_at_500khz,
                    format!(
                        "{:.4} vs {:.4} at 4 MHz (required gap {})",
                        r05.mean_accuracy, r4.mean_accuracy, self.config.min_gap_at_500khz
                    ),
                ));
                let fraction = r4.payload_bytes as f64 / self.source_bytes() as f64;
                checks.push(Check::new(
                    "4 MHz storage fraction",
                    (fraction - 0.2).abs() <= 0.001,
                    format!("{:.6} of the source payload", fraction),
                ));
            }
            _ => checks.push(Check::new("ladder covers 4 and 0.5 MHz", false, "missing rate")),
        }
        checks
    }

    pub fn report(&self) -> ExperimentReport {
        let mut text = String::from("rate_mhz  payload_bytes  fraction  accuracy  ci95\n");
        for r in &self.rows {
            let _ = writeln!(
                text,
                "{:>8}  {:>13}  {:>8.4}  {:>8.4}  {:.4}",
                r.rate_hz / 1e6,
                r.payload_bytes,
                r.payload_bytes as f64 / self.source_bytes() as f64,
                r.mean_accuracy,
                r.ci95_halfwidth
            );
        }
        ExperimentReport {
            name: "exp-downsample".into(),
            text,
            files: vec![("downsample.csv".into(), self.to_csv())],
            checks: self.checks(),
        }
    }
}
