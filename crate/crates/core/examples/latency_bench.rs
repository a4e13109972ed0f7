//! Per-window processing delay across sample rates, measured over a loopback
//! stream against the 200 ms deadline.
//!
//! ```bash
//! cargo run --example latency_bench -- 200
//! ```

use emsca::emitter::high_end_profile;
use emsca::experiments::synthetic_dataset;
use emsca::mlp::train;
use emsca::stream::{benchmark_latency, render_latency_table, BenchConfig};
use emsca::{FeatureConfig, MlpConfig};

fn main() -> anyhow::Result<()> {
    let windows: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(100);
    let profile = high_end_profile();
    let fc = FeatureConfig::crypto();
    let ds = synthetic_dataset(&profile, 20, 0.01, 20e6, 0, &fc)?;
    let model = train(&ds, &MlpConfig { epochs: 20, ..MlpConfig::default() })?;

    let cfg = BenchConfig {
        n_windows: windows,
        ..BenchConfig::new(vec![20e6, 16e6, 12e6, 8e6, 4e6], "aes128")
    };
    let reports = benchmark_latency(&cfg, &model, &fc, &profile)?;
    print!("{}", render_latency_table(&reports));
    Ok(())
}
