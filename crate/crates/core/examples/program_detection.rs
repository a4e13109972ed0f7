//! Cross-validate the ten-program classifier on the low-end emitter and print
//! the pooled confusion matrix.
//!
//! ```bash
//! cargo run --example program_detection -- 60 5
//! ```

use emsca::emitter::low_end_profile;
use emsca::experiments::synthetic_dataset;
use emsca::mlp::cross_validate;
use emsca::{FeatureConfig, MlpConfig};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let per_class: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(40);
    let k: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(5);

    let ds = synthetic_dataset(&low_end_profile(), per_class, 0.01, 20e6, 0, &FeatureConfig::programs())?;
    let cfg = MlpConfig {
        learning_rate: 0.05,
        epochs: 40,
        ..MlpConfig::default()
    }
    .with_hidden(&[10, 3]);
    let cv = cross_validate(&ds, &cfg, k)?;

    let labels: Vec<String> = (0..ds.n_classes()).map(|i| i.to_string()).collect();
    print!("{}", cv.pooled.render_confusion(&labels));
    for (i, a) in cv.fold_accuracies.iter().enumerate() {
        println!("fold {i}: {a:.3}");
    }
    println!("mean accuracy {:.4} +/- {:.4}", cv.mean_accuracy, cv.ci95_halfwidth);
    Ok(())
}
