//! Labeled trace corpora on disk.
//!
//! Layout: `<root>/<label>/<seq>.cf32` plus the `.meta` sidecar of each
//! payload, and one `manifest.tsv` at the root. The manifest is UTF-8, one
//! entry per line, tab separated:
//!
//! ```text
//! emsca-manifest	1
//! path	label	sample_rate_hz	center_freq_hz	duration_s	seed	samples
//! aes128/00000.cf32	aes128	20000000	1400000000	0.01	1234	200000
//! ```
//!
//! The first line is the format version and the second names the columns.
//! `path` is relative to the root and uses `/` separators. `seed` is `-` for
//! captures without synthetic provenance.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::emitter::{synth_trace, EmitterProfile};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from};
use crate::signal::{downsample, read_trace, samples_in, sidecar_path, write_trace, IqTrace, ResamplePlan, BYTES_PER_SAMPLE};

pub const MANIFEST_FILE: &str = "manifest.tsv";
pub const MANIFEST_VERSION: u32 = 1;
const MANIFEST_MAGIC: &str = "emsca-manifest";
const COLUMNS: &str = "path\tlabel\tsample_rate_hz\tcenter_freq_hz\tduration_s\tseed\tsamples";

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    /// Relative to the corpus root, `/` separated.
    pub path: String,
    pub label: String,
    pub sample_rate_hz: f64,
    pub center_freq_hz: f64,
    pub duration_s: f64,
    pub seed: Option<u64>,
    pub samples: u64,
}

impl ManifestEntry {
    pub fn payload_bytes(&self) -> u64 {
        self.samples * BYTES_PER_SAMPLE
    }

    fn for_trace(path: String, trace: &IqTrace) -> Self {
        ManifestEntry {
            path,
            label: trace.label.clone().unwrap_or_default(),
            sample_rate_hz: trace.sample_rate_hz,
            center_freq_hz: trace.center_freq_hz,
            duration_s: trace.duration_s(),
            seed: trace.seed,
            samples: trace.len() as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusManifest {
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
    pub format_version: u32,
}

impl CorpusManifest {
    pub fn new(root: impl Into<PathBuf>, entries: Vec<ManifestEntry>) -> Self {
        CorpusManifest {
            root: root.into(),
            entries,
            format_version: MANIFEST_VERSION,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn payload_bytes(&self) -> u64 {
        self.entries.iter().map(ManifestEntry::payload_bytes).sum()
    }

    /// Distinct labels, sorted.
    pub fn labels(&self) -> Vec<String> {
        let mut l: Vec<String> = self.entries.iter().map(|e| e.label.clone()).collect();
        l.sort();
        l.dedup();
        l
    }

    pub fn entry_path(&self, entry: &ManifestEntry) -> PathBuf {
        self.root.join(entry.path.split('/').collect::<PathBuf>())
    }

    pub fn read_entry(&self, index: usize) -> Result<IqTrace> {
        read_trace(&self.entry_path(&self.entries[index]), None)
    }

    /// Every trace in manifest order, read in parallel.
    pub fn read_all(&self) -> Result<Vec<IqTrace>> {
        (0..self.len()).into_par_iter().map(|i| self.read_entry(i)).collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{MANIFEST_MAGIC}\t{}\n{COLUMNS}\n", self.format_version);
        for e in &self.entries {
            let seed = e.seed.map_or_else(|| "-".to_string(), |v| v.to_string());
            s.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                e.path, e.label, e.sample_rate_hz, e.center_freq_hz, e.duration_s, seed, e.samples
            ));
        }
        s
    }

    pub fn parse(root: impl Into<PathBuf>, text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        let version = header
            .strip_prefix(MANIFEST_MAGIC)
            .and_then(|v| v.trim().parse::<u32>().ok())
            .ok_or_else(|| Error::Manifest(format!("bad header line `{header}`")))?;
        if version != MANIFEST_VERSION {
            return Err(Error::Manifest(format!("unsupported manifest version {version}")));
        }
        if lines.next() != Some(COLUMNS) {
            return Err(Error::Manifest("missing or unexpected column line".into()));
        }
        let mut entries = Vec::new();
        for (n, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            let bad = |what: &str| Error::Manifest(format!("line {}: {what} in `{line}`", n + 3));
            if f.len() != 7 {
                return Err(bad("expected 7 fields"));
            }
            let num = |s: &str, what: &str| s.parse::<f64>().map_err(|_| bad(what));
            if f[1].is_empty() {
                return Err(bad("empty label"));
            }
            entries.push(ManifestEntry {
                path: f[0].to_string(),
                label: f[1].to_string(),
                sample_rate_hz: num(f[2], "bad sample rate")?,
                center_freq_hz: num(f[3], "bad center frequency")?,
                duration_s: num(f[4], "bad duration")?,
                seed: match f[5] {
                    "-" => None,
                    s => Some(s.parse().map_err(|_| bad("bad seed"))?),
                },
                samples: f[6].parse().map_err(|_| bad("bad sample count"))?,
            });
        }
        Ok(CorpusManifest {
            root: root.into(),
            entries,
            format_version: version,
        })
    }

    pub fn load(root: &Path) -> Result<Self> {
        let path = root.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Self::parse(root, &text)
    }

    /// Writes `manifest.tsv` under the root.
    pub fn save(&self) -> Result<()> {
        self.save_as(&self.root.join(MANIFEST_FILE))
    }

    pub fn save_as(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    /// Checks every entry against its payload size and sidecar. The first
    /// mismatch is reported with its path.
    pub fn verify(&self) -> Result<()> {
        for e in &self.entries {
            let p = self.entry_path(e);
            let len = fs::metadata(&p).map_err(|err| Error::io(&p, err))?.len();
            if len != e.payload_bytes() {
                return Err(Error::Manifest(format!(
                    "{}: {len} bytes on disk, manifest says {}",
                    p.display(),
                    e.payload_bytes()
                )));
            }
            let t = read_trace(&p, None)?;
            let agrees = t.label.as_deref() == Some(e.label.as_str())
                && t.sample_rate_hz == e.sample_rate_hz
                && t.center_freq_hz == e.center_freq_hz
                && t.seed == e.seed;
            if !agrees {
                return Err(Error::Manifest(format!(
                    "{}: sidecar disagrees with manifest",
                    p.display()
                )));
            }
        }
        Ok(())
    }
}

/// Removes what a failed bulk write left behind.
fn cleanup(root: &Path, created_root: bool, dirs: &[PathBuf]) {
    if created_root {
        let _ = fs::remove_dir_all(root);
    } else {
        for d in dirs {
            let _ = fs::remove_dir_all(d);
        }
        let _ = fs::remove_file(root.join(MANIFEST_FILE));
    }
}

fn prepare_root(root: &Path, labels: &[String]) -> Result<(bool, Vec<PathBuf>)> {
    let created_root = !root.exists();
    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    let mut dirs = Vec::new();
    for l in labels {
        if l.is_empty() || l.contains(['/', '\\']) || l == "." || l == ".." {
            cleanup(root, created_root, &dirs);
            return Err(Error::invalid(format!("label `{l}` cannot name a directory")));
        }
        let d = root.join(l);
        if !d.exists() {
            if let Err(e) = fs::create_dir(&d) {
                cleanup(root, created_root, &dirs);
                return Err(Error::io(&d, e));
            }
            dirs.push(d);
        }
    }
    Ok((created_root, dirs))
}

/// Synthesizes `per_class` traces for each class of `profile` and writes them
/// with a manifest. Trace `i` of class `c` uses seed `derive_seed(seed, [c, i])`.
pub fn build_corpus(
    profile: &EmitterProfile,
    per_class: usize,
    duration_s: f64,
    rate_hz: f64,
    seed: u64,
    root: &Path,
) -> Result<CorpusManifest> {
    if per_class == 0 {
        return Err(Error::invalid("per_class must be at least 1"));
    }
    profile.validate()?;
    let labels = profile.class_ids();
    let (created_root, dirs) = prepare_root(root, &labels)?;
    let jobs: Vec<(usize, usize)> = (0..labels.len())
        .flat_map(|c| (0..per_class).map(move |i| (c, i)))
        .collect();
    let result = jobs
        .par_iter()
        .map(|&(c, i)| {
            let trace_seed = derive_seed(seed, &[c as u64, i as u64]);
            let trace = synth_trace(profile, &labels[c], duration_s, rate_hz, trace_seed)?;
            let rel = format!("{}/{i:05}.cf32", labels[c]);
            write_trace(&trace, &root.join(&labels[c]).join(format!("{i:05}.cf32")))?;
            Ok(ManifestEntry::for_trace(rel, &trace))
        })
        .collect::<Result<Vec<_>>>()
        .and_then(|entries| {
            let m = CorpusManifest::new(root, entries);
            m.save()?;
            Ok(m)
        });
    if result.is_err() {
        cleanup(root, created_root, &dirs);
    }
    result
}

/// Down-samples every entry into `dest_root`, keeping relative paths. Entries
/// already at the target rate are copied verbatim.
pub fn resample_corpus(manifest: &CorpusManifest, target_rate_hz: f64, dest_root: &Path) -> Result<CorpusManifest> {
    for e in &manifest.entries {
        ResamplePlan::new(e.sample_rate_hz, target_rate_hz)?;
    }
    let labels = manifest.labels();
    let (created_root, dirs) = prepare_root(dest_root, &labels)?;
    let result = manifest
        .entries
        .par_iter()
        .map(|e| {
            let src = manifest.entry_path(e);
            let rel: PathBuf = e.path.split('/').collect();
            let dst = dest_root.join(&rel);
            if let Some(parent) = dst.parent() {
                fs::create_dir_all(parent).map_err(|err| Error::io(parent, err))?;
            }
            if e.sample_rate_hz == target_rate_hz {
                fs::copy(&src, &dst).map_err(|err| Error::io(&src, err))?;
                let side = sidecar_path(&src);
                fs::copy(&side, sidecar_path(&dst)).map_err(|err| Error::io(&side, err))?;
                return Ok(e.clone());
            }
            let out = downsample(&read_trace(&src, None)?, target_rate_hz)?;
            write_trace(&out, &dst)?;
            Ok(ManifestEntry::for_trace(e.path.clone(), &out))
        })
        .collect::<Result<Vec<_>>>()
        .and_then(|entries| {
            let m = CorpusManifest::new(dest_root, entries);
            m.save()?;
            Ok(m)
        });
    if result.is_err() {
        cleanup(dest_root, created_root, &dirs);
    }
    result
}

/// Stratified, seeded train/test partition. Each label contributes
/// `round(n * train_fraction)` entries to the train side, clamped so both
/// sides keep at least one.
pub fn split(manifest: &CorpusManifest, train_fraction: f64, seed: u64) -> Result<(CorpusManifest, CorpusManifest)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (c, label) in manifest.labels().iter().enumerate() {
        let mut members: Vec<usize> = (0..manifest.len())
            .filter(|&i| &manifest.entries[i].label == label)
            .collect();
        if members.len() < 2 {
            return Err(Error::InsufficientSamples {
                class: label.clone(),
                have: members.len(),
                need: 2,
            });
        }
        members.shuffle(&mut rng_from(derive_seed(seed, &[c as u64])));
        let n_train = ((members.len() as f64 * train_fraction).round() as usize).clamp(1, members.len() - 1);
        train.extend_from_slice(&members[..n_train]);
        test.extend_from_slice(&members[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    let pick = |idx: &[usize]| {
        CorpusManifest::new(
            manifest.root.clone(),
            idx.iter().map(|&i| manifest.entries[i].clone()).collect(),
        )
    };
    Ok((pick(&train), pick(&test)))
}

/// Payload bytes a corpus of `n_traces` traces of `duration_s` would occupy.
pub fn corpus_payload_bytes(n_traces: u64, rate_hz: f64, duration_s: f64) -> u64 {
    n_traces * samples_in(rate_hz, duration_s) * BYTES_PER_SAMPLE
}
