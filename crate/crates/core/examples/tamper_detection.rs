//! Fit a one-class model on one legitimate program, then score held-out
//! legitimate traces and a handful of modified builds of the same program.
//!
//! ```bash
//! cargo run --example tamper_detection
//! ```

use emsca::emitter::{low_end_profile, modified_variants, synth_trace};
use emsca::features::make_features;
use emsca::novelty::{detect_tampering, fit, Gamma};
use emsca::rng::derive_seed;
use emsca::{FeatureConfig, NoveltyConfig};

fn main() -> anyhow::Result<()> {
    let profile = low_end_profile();
    let fc = FeatureConfig::programs();
    let legit = |i: u64| synth_trace(&profile, "prog0", 0.01, 20e6, derive_seed(0, &[0, i]));

    let rows = (0..500)
        .map(|i| Ok(make_features(&legit(i)?, &fc)?.values))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let cfg = NoveltyConfig {
        gamma: Gamma::Value(1e-5),
        ..NoveltyConfig::default()
    };
    let model = fit(&rows, &cfg)?;
    println!("{} support vectors out of {} rows, rho {:.4}", model.n_support(), rows.len(), model.rho);

    let held_out = (500..600).map(legit).collect::<emsca::Result<Vec<_>>>()?;
    let report = detect_tampering(&model, &held_out, &fc)?;
    println!("legitimate: {}", report.summary_line());

    let variants = modified_variants(profile.class("prog0")?, 5);
    let variant_profile = profile.with_classes(variants.clone());
    let modified = variants
        .iter()
        .enumerate()
        .map(|(v, spec)| synth_trace(&variant_profile, &spec.class_id, 0.01, 20e6, 100 + v as u64))
        .collect::<emsca::Result<Vec<_>>>()?;
    let report = detect_tampering(&model, &modified, &fc)?;
    print!("{}", report.render());
    println!("modified: {}", report.summary_line());
    Ok(())
}
