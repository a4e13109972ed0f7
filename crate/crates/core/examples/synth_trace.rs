//! Synthesize a trace from the high-end emitter, write it as `cf32` with a
//! `.meta` sidecar, read it back and print the storage cost of a long capture.
//!
//! ```bash
//! cargo run --example synth_trace -- aes128 /tmp/aes128.cf32
//! ```

use std::path::PathBuf;

use emsca::emitter::{high_end_profile, synth_trace};
use emsca::signal::{read_trace, storage_budget, write_trace};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let class = args.next().unwrap_or_else(|| "aes128".into());
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join(format!("emsca_{class}.cf32")));

    let profile = high_end_profile();
    println!("classes: {}", profile.class_ids().join(", "));

    let trace = synth_trace(&profile, &class, 0.01, 20e6, 7)?;
    let power: f64 = trace.samples.iter().map(|s| s.norm_sqr() as f64).sum::<f64>() / trace.len() as f64;
    println!(
        "{class}: {} samples at {} Hz ({:.1} ms), mean power {power:.4}",
        trace.len(),
        trace.sample_rate_hz,
        trace.duration_s() * 1e3
    );

    write_trace(&trace, &path)?;
    let back = read_trace(&path, None)?;
    assert_eq!(back.samples, trace.samples);
    println!("wrote {} ({} bytes) and read it back", path.display(), trace.payload_bytes());

    // One minute at the same rate.
    println!("60 s at 20 MHz: {}", storage_budget(20e6, 60.0));
    Ok(())
}
