//! One-class novelty detection with a radial-basis kernel.
//!
//! Trained on legitimate firmware only, the model separates the training data
//! from the origin in kernel space with maximum margin. `nu` upper-bounds the
//! fraction of training rows left outside the boundary. New feature vectors
//! score positive when they look like the training data and negative when
//! they do not.

mod detect;
mod io;
mod smo;

use crate::error::{Error, Result};
use crate::stats::Standardizer;

pub use detect::{detect_tampering, TamperReport, Verdict};
pub use io::{load_novelty_model, read_novelty_model, save_novelty_model, write_novelty_model, NOVELTY_MAGIC, NOVELTY_VERSION};
pub use smo::{solve_one_class, OneClassSolution};

/// Kernel width. `Scale` resolves to `1 / (dim * var)` over the standardized
/// training matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gamma {
    Scale,
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoveltyConfig {
    pub nu: f64,
    pub gamma: Gamma,
    pub seed: u64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for NoveltyConfig {
    fn default() -> Self {
        NoveltyConfig {
            nu: 0.1,
            gamma: Gamma::Scale,
            seed: 0,
            tolerance: 1e-6,
            max_iterations: 100_000,
        }
    }
}

impl NoveltyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu <= 1.0) {
            return Err(Error::invalid(format!("nu must be in (0, 1], got {}", self.nu)));
        }
        if let Gamma::Value(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::invalid(format!("gamma must be positive, got {g}")));
            }
        }
        if !(self.tolerance > 0.0) || self.max_iterations == 0 {
            return Err(Error::invalid("solver tolerance and iteration cap must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoveltyModel {
    pub dim: usize,
    /// Standardized support vectors, row-major.
    pub support_vectors: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub rho: f64,
    /// Resolved kernel width.
    pub gamma: f64,
    pub standardizer: Standardizer,
    pub config: NoveltyConfig,
}

pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

/// Minimum number of legitimate rows accepted by [`fit`].
pub const MIN_TRAINING_ROWS: usize = 10;

pub fn fit(rows: &[Vec<f64>], config: &NoveltyConfig) -> Result<NoveltyModel> {
    config.validate()?;
    if rows.len() < MIN_TRAINING_ROWS {
        return Err(Error::InvalidDataset(format!(
            "need at least {MIN_TRAINING_ROWS} training rows, got {}",
            rows.len()
        )));
    }
    let dim = rows[0].len();
    if dim == 0 {
        return Err(Error::InvalidDataset("zero-dimensional features".into()));
    }
    if let Some(r) = rows.iter().find(|r| r.len() != dim) {
        return Err(Error::Shape {
            expected: dim,
            actual: r.len(),
        });
    }
    if rows.iter().all(|r| r == &rows[0]) {
        return Err(Error::DegenerateData("all training rows are identical".into()));
    }

    let standardizer = Standardizer::fit(rows.iter().map(|r| r.as_slice()), dim);
    let x: Vec<Vec<f64>> = rows.iter().map(|r| standardizer.transform(r)).collect();
    let gamma = match config.gamma {
        Gamma::Value(g) => g,
        Gamma::Scale => {
            let n = (x.len() * dim) as f64;
            let mean = x.iter().flatten().sum::<f64>() / n;
            let var = x.iter().flatten().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            if !(var > 0.0) {
                return Err(Error::DegenerateData("zero feature variance".into()));
            }
            1.0 / (dim as f64 * var)
        }
    };

    let n = x.len();
    let mut kernel = vec![0.0; n * n];
    for i in 0..n {
        kernel[i * n + i] = 1.0;
        for j in 0..i {
            let k = rbf(&x[i], &x[j], gamma);
            kernel[i * n + j] = k;
            kernel[j * n + i] = k;
        }
    }
    let sol = solve_one_class(&kernel, n, config.nu, config.tolerance, config.max_iterations, config.seed)?;

    let mut support_vectors = Vec::new();
    let mut coefficients = Vec::new();
    for (i, &a) in sol.alpha.iter().enumerate() {
        if a > 0.0 {
            support_vectors.extend_from_slice(&x[i]);
            coefficients.push(a);
        }
    }
    Ok(NoveltyModel {
        dim,
        support_vectors,
        coefficients,
        rho: sol.rho,
        gamma,
        standardizer,
        config: *config,
    })
}

impl NoveltyModel {
    pub fn n_support(&self) -> usize {
        self.coefficients.len()
    }

    pub fn support_vector(&self, i: usize) -> &[f64] {
        &self.support_vectors[i * self.dim..(i + 1) * self.dim]
    }

    /// Decision value for an already standardized row.
    pub fn decision_standardized(&self, z: &[f64]) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(i, c)| c * rbf(self.support_vector(i), z, self.gamma))
            .sum::<f64>()
            - self.rho
    }

    /// Signed decision value; positive means inlier.
    pub fn score(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.dim {
            return Err(Error::Shape {
                expected: self.dim,
                actual: features.len(),
            });
        }
        Ok(self.decision_standardized(&self.standardizer.transform(features)))
    }

    pub fn is_inlier(&self, features: &[f64]) -> Result<bool> {
        Ok(self.score(features)? >= 0.0)
    }

    /// Fraction of `rows` scored as outliers.
    pub fn outlier_fraction(&self, rows: &[Vec<f64>]) -> Result<f64> {
        if rows.is_empty() {
            return Ok(0.0);
        }
        let mut flagged = 0usize;
        for r in rows {
            if self.score(r)? < 0.0 {
                flagged += 1;
            }
        }
        Ok(flagged as f64 / rows.len() as f64)
    }
}
