use std::fmt::Write as _;

use super::MlpModel;
use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Confusion matrix (rows = true class, columns = predicted) with per-class
/// precision, recall and F1.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationReport {
    pub class_table: Vec<String>,
    pub confusion: Vec<Vec<usize>>,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    pub support: Vec<usize>,
    pub accuracy: f64,
}

impl ClassificationReport {
    pub fn from_confusion(class_table: Vec<String>, confusion: Vec<Vec<usize>>) -> Self {
        let c = class_table.len();
        assert!(confusion.len() == c && confusion.iter().all(|r| r.len() == c));
        let support: Vec<usize> = confusion.iter().map(|r| r.iter().sum()).collect();
        let predicted: Vec<usize> = (0..c).map(|j| confusion.iter().map(|r| r[j]).sum()).collect();
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision: Vec<f64> = (0..c).map(|i| ratio(confusion[i][i], predicted[i])).collect();
        let recall: Vec<f64> = (0..c).map(|i| ratio(confusion[i][i], support[i])).collect();
        let f1 = precision
            .iter()
            .zip(&recall)
            .map(|(&p, &r)| if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 })
            .collect();
        let total: usize = support.iter().sum();
        let correct: usize = (0..c).map(|i| confusion[i][i]).sum();
        ClassificationReport {
            class_table,
            confusion,
            precision,
            recall,
            f1,
            support,
            accuracy: ratio(correct, total),
        }
    }

    pub fn total(&self) -> usize {
        self.support.iter().sum()
    }

    /// Element-wise sum of two reports over the same classes.
    pub fn merge(&self, other: &ClassificationReport) -> ClassificationReport {
        assert_eq!(self.class_table, other.class_table);
        let confusion = self
            .confusion
            .iter()
            .zip(&other.confusion)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        Self::from_confusion(self.class_table.clone(), confusion)
    }

    /// Activity / Precision / Recall / F1-Score table. `rows` lists class
    /// indices with display names, in the order to print.
    pub fn render_table(&self, rows: &[(usize, String)]) -> String {
        let width = rows
            .iter()
            .map(|(_, n)| n.len())
            .chain(["Activity".len()])
            .max()
            .unwrap();
        let mut s = format!(
            "{:<width$}  {:>9}  {:>6}  {:>8}\n",
            "Activity", "Precision", "Recall", "F1-Score"
        );
        for (i, name) in rows {
            let _ = writeln!(
                s,
                "{:<width$}  {:>9.2}  {:>6.2}  {:>8.2}",
                name, self.precision[*i], self.recall[*i], self.f1[*i]
            );
        }
        let _ = writeln!(s, "accuracy {:.4} over {} samples", self.accuracy, self.total());
        s
    }

    /// Rows in class-table order with the class names as they are.
    pub fn default_rows(&self) -> Vec<(usize, String)> {
        self.class_table.iter().cloned().enumerate().collect()
    }

    /// Confusion grid with the given axis labels.
    pub fn render_confusion(&self, labels: &[String]) -> String {
        let w = labels
            .iter()
            .map(|l| l.len())
            .chain(self.confusion.iter().flatten().map(|v| v.to_string().len()))
            .max()
            .unwrap_or(1)
            .max(4);
        let mut s = format!("{:>w$} ", "true");
        for l in labels {
            let _ = write!(s, " {l:>w$}");
        }
        s.push('\n');
        for (l, row) in labels.iter().zip(&self.confusion) {
            let _ = write!(s, "{l:>w$} ");
            for v in row {
                let _ = write!(s, " {v:>w$}");
            }
            s.push('\n');
        }
        s
    }

    pub fn to_csv(&self, rows: &[(usize, String)]) -> String {
        let mut s = String::from("class,precision,recall,f1,support\n");
        for (i, name) in rows {
            let _ = writeln!(
                s,
                "{},{:.6},{:.6},{:.6},{}",
                name, self.precision[*i], self.recall[*i], self.f1[*i], self.support[*i]
            );
        }
        s
    }

    pub fn confusion_csv(&self, labels: &[String]) -> String {
        let mut s = String::from("true\\pred");
        for l in labels {
            let _ = write!(s, ",{l}");
        }
        s.push('\n');
        for (l, row) in labels.iter().zip(&self.confusion) {
            s.push_str(l);
            for v in row {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        s
    }
}

pub fn evaluate(model: &MlpModel, dataset: &Dataset) -> Result<ClassificationReport> {
    if model.class_table != dataset.class_table() {
        return Err(Error::IncompatibleDataset(format!(
            "model classes {:?} differ from dataset classes {:?}",
            model.class_table,
            dataset.class_table()
        )));
    }
    let c = model.class_table.len();
    let mut confusion = vec![vec![0usize; c]; c];
    for (row, &label) in dataset.rows().zip(dataset.labels()) {
        let p = model.predict(row)?;
        confusion[label][p.class_index] += 1;
    }
    Ok(ClassificationReport::from_confusion(model.class_table.clone(), confusion))
}
