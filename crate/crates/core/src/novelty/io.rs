//! Binary model file, laid out like the classifier file:
//! magic `EMSCAOCS`, u32 version, then dim, nu, gamma, seed, tolerance,
//! iteration cap, standardization mean and std, support-vector count,
//! coefficients, support vectors row-major, and rho. Little-endian throughout.

use std::fs;
use std::path::Path;

use super::{Gamma, NoveltyConfig, NoveltyModel};
use crate::binio::{Reader, Writer};
use crate::error::{Error, Result};
use crate::stats::Standardizer;

pub const NOVELTY_MAGIC: &[u8; 8] = b"EMSCAOCS";
pub const NOVELTY_VERSION: u32 = 1;

pub fn write_novelty_model(m: &NoveltyModel) -> Vec<u8> {
    let mut w = Writer::default();
    w.bytes(NOVELTY_MAGIC);
    w.u32(NOVELTY_VERSION);
    w.u32(m.dim as u32);
    w.f64(m.config.nu);
    match m.config.gamma {
        Gamma::Scale => {
            w.u8(0);
            w.f64(0.0);
        }
        Gamma::Value(g) => {
            w.u8(1);
            w.f64(g);
        }
    }
    w.u64(m.config.seed);
    w.f64(m.config.tolerance);
    w.u64(m.config.max_iterations as u64);
    w.f64(m.gamma);
    w.f64s(&m.standardizer.mean);
    w.f64s(&m.standardizer.std);
    w.u32(m.coefficients.len() as u32);
    w.f64s(&m.coefficients);
    w.f64s(&m.support_vectors);
    w.f64(m.rho);
    w.buf
}

pub fn read_novelty_model(bytes: &[u8]) -> Result<NoveltyModel> {
    let mut r = Reader::new(bytes);
    if r.take(8)? != NOVELTY_MAGIC {
        return Err(Error::ModelFormat("not a novelty model file".into()));
    }
    let version = r.u32()?;
    if version != NOVELTY_VERSION {
        return Err(Error::ModelFormat(format!(
            "unsupported version {version}, expected {NOVELTY_VERSION}"
        )));
    }
    let dim = r.u32()? as usize;
    if dim == 0 || dim > 1 << 20 {
        return Err(Error::ModelFormat(format!("implausible dimension {dim}")));
    }
    let nu = r.f64()?;
    let gamma = match (r.u8()?, r.f64()?) {
        (0, _) => Gamma::Scale,
        (1, g) => Gamma::Value(g),
        (f, _) => return Err(Error::ModelFormat(format!("bad gamma flag {f}"))),
    };
    let config = NoveltyConfig {
        nu,
        gamma,
        seed: r.u64()?,
        tolerance: r.f64()?,
        max_iterations: r.u64()? as usize,
    };
    let resolved = r.f64()?;
    let standardizer = Standardizer {
        mean: r.f64s(dim)?,
        std: r.f64s(dim)?,
    };
    let n_sv = r.u32()? as usize;
    let coefficients = r.f64s(n_sv)?;
    let support_vectors = r.f64s(n_sv * dim)?;
    let rho = r.f64()?;
    r.finish()?;
    Ok(NoveltyModel {
        dim,
        support_vectors,
        coefficients,
        rho,
        gamma: resolved,
        standardizer,
        config,
    })
}

pub fn save_novelty_model(m: &NoveltyModel, path: &Path) -> Result<()> {
    fs::write(path, write_novelty_model(m)).map_err(|e| Error::io(path, e))
}

pub fn load_novelty_model(path: &Path) -> Result<NoveltyModel> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_novelty_model(&bytes)
}
