//! Walk through feature extraction: FFT magnitude with DC in the middle, the
//! middle-half trim, then bucket reduction. Prints the strongest buckets for
//! two classes so the difference between them is visible.
//!
//! ```bash
//! cargo run --example spectral_features
//! ```

use emsca::emitter::{high_end_profile, synth_trace};
use emsca::features::{bucketize, fft_magnitude, make_features, trim_middle_half};
use emsca::{FeatureConfig, Reduction};

fn top_buckets(values: &[f64], n: usize) -> Vec<(usize, f64)> {
    let mut idx: Vec<(usize, f64)> = values.iter().copied().enumerate().collect();
    idx.sort_by(|a, b| b.1.total_cmp(&a.1));
    idx.truncate(n);
    idx
}

fn main() -> anyhow::Result<()> {
    let profile = high_end_profile();
    for class in ["aes128", "3des"] {
        let trace = synth_trace(&profile, class, 0.01, 20e6, 1)?;
        let spectrum = fft_magnitude(&trace)?;
        let middle = trim_middle_half(&spectrum)?;
        let mean = bucketize(middle, 500, Reduction::Mean)?;
        let max = bucketize(middle, 500, Reduction::Max)?;
        println!("{class}: {} bins, {} after trim", spectrum.len(), middle.len());
        println!("  top mean buckets {:?}", fmt(&top_buckets(&mean, 5)));
        println!("  top max buckets  {:?}", fmt(&top_buckets(&max, 5)));

        // make_features is the same pipeline in one call.
        let fv = make_features(&trace, &FeatureConfig::crypto())?;
        assert_eq!(fv.values, mean);
    }
    Ok(())
}

fn fmt(v: &[(usize, f64)]) -> Vec<String> {
    v.iter().map(|(i, m)| format!("{i}:{m:.1}")).collect()
}
