//! Versioned binary model file.
//!
//! Layout (all little-endian):
//!
//! | field | type |
//! |---|---|
//! | magic `EMSCAMLP` | 8 bytes |
//! | format version | u32 |
//! | activation code (0 tanh, 1 logistic) | u8 |
//! | layer count + 1, then topology sizes | u32, u32 x n |
//! | class count, then each name (u32 length + UTF-8) | u32, ... |
//! | standardization flag, then mean and std (f64 x input) | u8, ... |
//! | per layer: weights row-major (outputs x inputs), biases | f64 ... |

use std::fs;
use std::path::Path;

use super::{Activation, MlpModel, Network};
use crate::binio::{Reader, Writer};
use crate::error::{Error, Result};
use crate::stats::Standardizer;

pub const MODEL_MAGIC: &[u8; 8] = b"EMSCAMLP";
pub const MODEL_VERSION: u32 = 1;

pub fn write_model(model: &MlpModel) -> Vec<u8> {
    let mut w = Writer::default();
    w.bytes(MODEL_MAGIC);
    w.u32(MODEL_VERSION);
    w.u8(model.network.activation.code());
    let topo = model.topology();
    w.u32(topo.len() as u32);
    topo.iter().for_each(|&t| w.u32(t as u32));
    w.u32(model.class_table.len() as u32);
    model.class_table.iter().for_each(|c| w.str(c));
    match &model.standardizer {
        Some(s) => {
            w.u8(1);
            w.f64s(&s.mean);
            w.f64s(&s.std);
        }
        None => w.u8(0),
    }
    for layer in &model.network.layers {
        w.f64s(&layer.weights);
        w.f64s(&layer.biases);
    }
    w.buf
}

pub fn read_model(bytes: &[u8]) -> Result<MlpModel> {
    let bad = |m: String| Error::ModelFormat(m);
    let mut r = Reader::new(bytes);
    if r.take(8)? != MODEL_MAGIC {
        return Err(bad("not an MLP model file".into()));
    }
    let version = r.u32()?;
    if version != MODEL_VERSION {
        return Err(bad(format!("unsupported version {version}, expected {MODEL_VERSION}")));
    }
    let code = r.u8()?;
    let activation =
        Activation::from_code(code).ok_or_else(|| bad(format!("unknown activation {code}")))?;
    let n = r.u32()? as usize;
    if !(3..=64).contains(&n) {
        return Err(bad(format!("implausible layer count {n}")));
    }
    let topo = (0..n)
        .map(|_| r.u32().map(|v| v as usize))
        .collect::<Result<Vec<_>>>()?;
    if topo.contains(&0) {
        return Err(bad("zero-width layer".into()));
    }
    let classes = r.u32()? as usize;
    if classes != topo[n - 1] {
        return Err(bad(format!("{classes} classes but {} outputs", topo[n - 1])));
    }
    let class_table = (0..classes).map(|_| r.str()).collect::<Result<Vec<_>>>()?;
    let standardizer = match r.u8()? {
        0 => None,
        1 => Some(Standardizer {
            mean: r.f64s(topo[0])?,
            std: r.f64s(topo[0])?,
        }),
        f => return Err(bad(format!("bad standardization flag {f}"))),
    };
    let mut network = Network::zeros(&topo, activation);
    for layer in &mut network.layers {
        layer.weights = r.f64s(layer.inputs * layer.outputs)?;
        layer.biases = r.f64s(layer.outputs)?;
    }
    r.finish()?;
    Ok(MlpModel {
        network,
        standardizer,
        class_table,
    })
}

pub fn save_model(model: &MlpModel, path: &Path) -> Result<()> {
    fs::write(path, write_model(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<MlpModel> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_model(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::{train, MlpConfig};
    use crate::rng::rng_from;
    use rand::Rng;

    fn model() -> MlpModel {
        let ds = crate::mlp::tests::blobs(20, 4);
        train(&ds, &MlpConfig { epochs: 5, ..MlpConfig::default() }).unwrap()
    }

    #[test]
    fn round_trip_preserves_predictions() {
        let m = model();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.mlp");
        save_model(&m, &p).unwrap();
        let back = load_model(&p).unwrap();
        assert_eq!(back, m);
        let mut rng = rng_from(0);
        for _ in 0..100 {
            let x = [rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)];
            assert_eq!(back.predict(&x).unwrap(), m.predict(&x).unwrap());
        }
    }

    #[test]
    fn header_records_topology() {
        let m = MlpModel {
            network: Network::zeros(&[500, 10, 5, 4], Activation::Tanh),
            standardizer: None,
            class_table: ["3des", "aes128", "aes256", "other"].map(String::from).to_vec(),
        };
        let bytes = write_model(&m);
        let mut r = Reader::new(&bytes[13..]);
        let n = r.u32().unwrap();
        let topo: Vec<u32> = (0..n).map(|_| r.u32().unwrap()).collect();
        assert_eq!(topo, [500, 10, 5, 4]);
    }

    #[test]
    fn corruption_is_detected() {
        let bytes = write_model(&model());
        for cut in [0, 7, 12, 30, bytes.len() - 1] {
            assert!(matches!(read_model(&bytes[..cut]), Err(Error::ModelFormat(_))), "cut {cut}");
        }
        let mut wrong_version = bytes.clone();
        wrong_version[8] = 9;
        assert!(matches!(read_model(&wrong_version), Err(Error::ModelFormat(_))));
        let mut trailing = bytes;
        trailing.push(0);
        assert!(matches!(read_model(&trailing), Err(Error::ModelFormat(_))));
    }
}
