//! Labeled feature matrices shared by the classifier and the novelty detector.
//!
//! On disk a dataset is a short UTF-8 header followed by a flat binary body:
//!
//! ```text
//! emsca-dataset/1
//! rows=2400
//! cols=500
//! classes=4
//! class=3des
//! class=aes128
//! ...
//! end_header
//! <rows*cols f64 little-endian, row-major><rows u32 little-endian class indices>
//! ```

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

const DATASET_MAGIC: &str = "emsca-dataset/1";

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<usize>,
    class_table: Vec<String>,
    feature_dim: usize,
}

impl Dataset {
    pub fn empty(feature_dim: usize, class_table: Vec<String>) -> Self {
        Dataset {
            features: Vec::new(),
            labels: Vec::new(),
            class_table,
            feature_dim,
        }
    }

    /// Builds a dataset whose class table is the sorted set of labels.
    pub fn from_labeled(rows: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let table: Vec<String> = rows
            .iter()
            .map(|(l, _)| l.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        Self::with_class_table(rows, table)
    }

    /// Builds a dataset against an existing class table; unknown labels fail.
    pub fn with_class_table(rows: Vec<(String, Vec<f64>)>, class_table: Vec<String>) -> Result<Self> {
        let dim = rows.first().map_or(0, |(_, v)| v.len());
        let mut ds = Dataset::empty(dim, class_table);
        ds.features.reserve(rows.len() * dim);
        for (label, values) in rows {
            let idx = ds
                .class_table
                .iter()
                .position(|c| *c == label)
                .ok_or_else(|| Error::IncompatibleDataset(format!("label `{label}` not in class table")))?;
            ds.push(&values, idx)?;
        }
        Ok(ds)
    }

    pub fn push(&mut self, values: &[f64], class_index: usize) -> Result<()> {
        if values.len() != self.feature_dim {
            return Err(Error::Shape {
                expected: self.feature_dim,
                actual: values.len(),
            });
        }
        if class_index >= self.class_table.len() {
            return Err(Error::InvalidDataset(format!(
                "class index {class_index} outside table of {}",
                self.class_table.len()
            )));
        }
        self.features.extend_from_slice(values);
        self.labels.push(class_index);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn class_table(&self) -> &[String] {
        &self.class_table
    }

    pub fn n_classes(&self) -> usize {
        self.class_table.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.feature_dim..(i + 1) * self.feature_dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.len()).map(move |i| self.row(i))
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_table.len()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut out = Dataset::empty(self.feature_dim, self.class_table.clone());
        out.features.reserve(indices.len() * self.feature_dim);
        for &i in indices {
            out.features.extend_from_slice(self.row(i));
            out.labels.push(self.labels[i]);
        }
        out
    }

    /// Multiplies every feature by `factor`.
    pub fn scaled(&self, factor: f64) -> Dataset {
        let mut out = self.clone();
        out.features.iter_mut().for_each(|v| *v *= factor);
        out
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut header = format!(
            "{DATASET_MAGIC}\nrows={}\ncols={}\nclasses={}\n",
            self.len(),
            self.feature_dim,
            self.class_table.len()
        );
        for c in &self.class_table {
            header.push_str(&format!("class={c}\n"));
        }
        header.push_str("end_header\n");
        let mut out = header.into_bytes();
        out.reserve(self.features.len() * 8 + self.labels.len() * 4);
        for v in &self.features {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for &l in &self.labels {
            out.extend_from_slice(&(l as u32).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Dataset> {
        let bad = |m: &str| Error::InvalidDataset(m.to_string());
        let marker = b"end_header\n";
        let end = bytes
            .windows(marker.len())
            .position(|w| w == marker)
            .ok_or_else(|| bad("missing end_header"))?;
        let header = std::str::from_utf8(&bytes[..end]).map_err(|_| bad("header is not UTF-8"))?;
        let mut lines = header.lines();
        if lines.next() != Some(DATASET_MAGIC) {
            return Err(bad("not an emsca dataset"));
        }
        let mut field = |name: &str| -> Result<usize> {
            lines
                .next()
                .and_then(|l| l.strip_prefix(name))
                .and_then(|v| v.strip_prefix('='))
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| bad(&format!("bad `{name}` line")))
        };
        let rows = field("rows")?;
        let cols = field("cols")?;
        let classes = field("classes")?;
        let class_table: Vec<String> = lines
            .map(|l| l.strip_prefix("class=").map(str::to_string))
            .collect::<Option<_>>()
            .ok_or_else(|| bad("bad class line"))?;
        if class_table.len() != classes {
            return Err(bad("class count does not match header"));
        }
        let body = &bytes[end + marker.len()..];
        if body.len() != rows * cols * 8 + rows * 4 {
            return Err(bad("body size does not match header"));
        }
        let (feat, lab) = body.split_at(rows * cols * 8);
        let features = feat
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let labels = lab
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()) as usize)
            .collect::<Vec<_>>();
        if labels.iter().any(|&l| l >= classes) {
            return Err(bad("class index out of range"));
        }
        Ok(Dataset {
            features,
            labels,
            class_table,
            feature_dim: cols,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Dataset> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Dataset {
        Dataset::from_labeled(vec![
            ("b".into(), vec![1.0, 2.0]),
            ("a".into(), vec![3.0, 4.0]),
            ("b".into(), vec![5.0, 6.0]),
        ])
        .unwrap()
    }

    #[test]
    fn sorted_class_table() {
        let ds = sample();
        assert_eq!(ds.class_table(), ["a", "b"]);
        assert_eq!(ds.labels(), [1, 0, 1]);
        assert_eq!(ds.row(1), [3.0, 4.0]);
        assert_eq!(ds.class_counts(), [1, 2]);
    }

    #[test]
    fn empty_input() {
        let ds = Dataset::from_labeled(vec![]).unwrap();
        assert!(ds.is_empty());
        assert_eq!(ds.n_classes(), 0);
    }

    #[test]
    fn ragged_rows_rejected() {
        let r = Dataset::from_labeled(vec![("a".into(), vec![1.0]), ("a".into(), vec![1.0, 2.0])]);
        assert!(matches!(r, Err(Error::Shape { expected: 1, actual: 2 })));
    }

    #[test]
    fn binary_export_round_trips() {
        let ds = sample();
        assert_eq!(Dataset::from_bytes(&ds.to_bytes()).unwrap(), ds);
        let mut cut = ds.to_bytes();
        cut.pop();
        assert!(Dataset::from_bytes(&cut).is_err());
    }
}
