//! End-to-end experiments on synthetic corpora.
//!
//! Each driver builds its corpus from a seed, runs the pipeline and returns a
//! report holding human-readable text, CSV files and pass/fail checks against
//! its acceptance thresholds. CSVs contain no timings, so reruns with the same
//! seed produce identical bytes.

mod crypto;
mod downsample;
mod programs;
mod tamper;

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::emitter::{synth_trace, EmitterProfile};
use crate::error::{Error, Result};
use crate::features::{make_features, FeatureConfig};
use crate::rng::derive_seed;

pub use crypto::{run_crypto, CryptoConfig, CryptoResult, CRYPTO_ROWS};
pub use downsample::{run_downsample, DownsampleConfig, DownsampleResult, DownsampleRow, RATE_LADDER_HZ};
pub use programs::{run_programs, ProgramsConfig, ProgramsResult};
pub use tamper::{run_tamper, TamperConfig, TamperResult};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub name: String,
    pub text: String,
    /// `(file name, contents)` pairs.
    pub files: Vec<(String, String)>,
    pub checks: Vec<Check>,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check_lines(&self) -> String {
        self.checks
            .iter()
            .map(|c| format!("{} {}: {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail))
            .collect()
    }

    pub fn write_files(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.files
            .iter()
            .map(|(name, body)| {
                let p = dir.join(name);
                fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
                Ok(p)
            })
            .collect()
    }
}

/// Feature rows for `per_class` synthetic traces of every class in
/// `class_ids`, computed without touching disk. Trace `i` of class `c` (index
/// into the profile) uses seed `derive_seed(seed, [c, i])`, which is the same
/// seed a stored corpus built with [`crate::store::build_corpus`] would use.
pub fn synthetic_dataset(
    profile: &EmitterProfile,
    per_class: usize,
    duration_s: f64,
    rate_hz: f64,
    seed: u64,
    features: &FeatureConfig,
) -> Result<Dataset> {
    let classes = profile.class_ids();
    let jobs: Vec<(usize, usize)> = (0..classes.len())
        .flat_map(|c| (0..per_class).map(move |i| (c, i)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(c, i)| {
            let t = synth_trace(profile, &classes[c], duration_s, rate_hz, derive_seed(seed, &[c as u64, i as u64]))?;
            Ok((classes[c].clone(), make_features(&t, features)?.values))
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::from_labeled(rows)
}

pub(crate) fn folds_csv(accuracies: &[f64]) -> String {
    let mut s = String::from("fold,accuracy\n");
    for (i, a) in accuracies.iter().enumerate() {
        s.push_str(&format!("{i},{a:.6}\n"));
    }
    s
}
