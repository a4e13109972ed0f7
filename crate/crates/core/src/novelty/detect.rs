use std::fmt::Write as _;

use rayon::prelude::*;

use super::NoveltyModel;
use crate::error::Result;
use crate::features::{make_features, FeatureConfig};
use crate::signal::IqTrace;

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    /// Position in the input plus the trace label when there is one.
    pub id: String,
    pub score: f64,
    pub inlier: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TamperReport {
    pub verdicts: Vec<Verdict>,
    pub inliers: usize,
    pub outliers: usize,
}

impl TamperReport {
    pub fn fraction_flagged(&self) -> f64 {
        let n = self.verdicts.len();
        if n == 0 {
            0.0
        } else {
            self.outliers as f64 / n as f64
        }
    }

    pub fn summary_line(&self) -> String {
        format!(
            "traces={} inliers={} outliers={} flagged={:.4}",
            self.verdicts.len(),
            self.inliers,
            self.outliers,
            self.fraction_flagged()
        )
    }

    /// `trace  score  verdict` table followed by the summary line.
    pub fn render(&self) -> String {
        let w = self.verdicts.iter().map(|v| v.id.len()).max().unwrap_or(0).max(5);
        let mut s = format!("{:<w$}  {:>12}  verdict\n", "trace", "score");
        for v in &self.verdicts {
            let tag = if v.inlier { "legit" } else { "TAMPERED" };
            let _ = writeln!(s, "{:<w$}  {:>12.6}  {tag}", v.id, v.score);
        }
        s.push_str(&self.summary_line());
        s.push('\n');
        s
    }
}

pub fn detect_tampering(
    model: &NoveltyModel,
    traces: &[IqTrace],
    feature_config: &FeatureConfig,
) -> Result<TamperReport> {
    let verdicts = traces
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            let fv = make_features(t, feature_config)?;
            let score = model.score(&fv.values)?;
            let id = match &t.label {
                Some(l) => format!("{i}:{l}"),
                None => i.to_string(),
            };
            Ok(Verdict {
                id,
                score,
                inlier: score >= 0.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let inliers = verdicts.iter().filter(|v| v.inlier).count();
    Ok(TamperReport {
        outliers: verdicts.len() - inliers,
        inliers,
        verdicts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::novelty::{fit, NoveltyConfig};

    #[test]
    fn empty_collection() {
        let rows = crate::novelty::tests::cluster(20, 4, 1.0, 0);
        let m = fit(&rows, &NoveltyConfig::default()).unwrap();
        let r = detect_tampering(&m, &[], &FeatureConfig::crypto()).unwrap();
        assert_eq!(r, TamperReport::default());
        assert_eq!(r.fraction_flagged(), 0.0);
        assert!(r.render().ends_with("traces=0 inliers=0 outliers=0 flagged=0.0000\n"));
    }
}
