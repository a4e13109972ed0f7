//! Down-sample one capture down the rate ladder and show what each step costs
//! in storage and how much of the spectrum survives.
//!
//! ```bash
//! cargo run --example downsample
//! ```

use emsca::emitter::{high_end_profile, synth_trace};
use emsca::experiments::RATE_LADDER_HZ;
use emsca::signal::{downsample, storage_budget};

fn main() -> anyhow::Result<()> {
    let profile = high_end_profile();
    let source = synth_trace(&profile, "aes256", 0.01, 20e6, 3)?;
    let full = storage_budget(20e6, 60.0);
    println!("{:>10}  {:>8}  {:>12}  {:>8}", "rate", "samples", "bytes/min", "saved");
    println!("{:>10}  {:>8}  {:>12}  {:>8}", "20 MHz", source.len(), full.total_bytes, "0%");
    for rate in RATE_LADDER_HZ {
        let t = downsample(&source, rate)?;
        let b = storage_budget(rate, 60.0);
        println!(
            "{:>10}  {:>8}  {:>12}  {:>7.1}%",
            format!("{} kHz", rate / 1e3),
            t.len(),
            b.total_bytes,
            100.0 * (1.0 - b.total_bytes as f64 / full.total_bytes as f64)
        );
    }
    Ok(())
}
