//! Train the MLP to recognise which cipher the high-end emitter is running,
//! evaluate it on held-out traces and round-trip the model through a file.
//!
//! ```bash
//! cargo run --example crypto_classifier -- 100
//! ```

use emsca::emitter::high_end_profile;
use emsca::experiments::{synthetic_dataset, CRYPTO_ROWS};
use emsca::mlp::{evaluate, load_model, save_model, train};
use emsca::{FeatureConfig, MlpConfig};

fn main() -> anyhow::Result<()> {
    let per_class: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(60);
    let profile = high_end_profile();
    let fc = FeatureConfig::crypto();

    // Different seeds give disjoint traces.
    let train_set = synthetic_dataset(&profile, per_class, 0.01, 20e6, 1, &fc)?;
    let test_set = synthetic_dataset(&profile, per_class / 2 + 1, 0.01, 20e6, 2, &fc)?;
    let cfg = MlpConfig {
        learning_rate: 0.05,
        epochs: 40,
        ..MlpConfig::default()
    };
    let model = train(&train_set, &cfg)?;
    let report = evaluate(&model, &test_set)?;

    let rows: Vec<(usize, String)> = CRYPTO_ROWS
        .iter()
        .map(|(id, name)| (report.class_table.iter().position(|c| c == id).unwrap(), name.to_string()))
        .collect();
    print!("{}", report.render_table(&rows));

    let path = std::env::temp_dir().join("emsca_crypto.model");
    save_model(&model, &path)?;
    let again = load_model(&path)?;
    assert_eq!(evaluate(&again, &test_set)?, report);
    println!("model saved to {}", path.display());
    Ok(())
}
