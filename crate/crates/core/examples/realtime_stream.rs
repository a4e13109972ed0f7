//! Serve the low-end emitter over loopback TCP, switching from `prog0` to
//! `prog3` halfway, and classify the stream window by window as it arrives.
//!
//! ```bash
//! cargo run --example realtime_stream
//! ```

use std::thread;

use emsca::emitter::low_end_profile;
use emsca::experiments::synthetic_dataset;
use emsca::mlp::train;
use emsca::stream::{bind, connect_and_consume, serve_stream, ConsumeConfig, ScheduleEntry, StreamSource};
use emsca::{FeatureConfig, MlpConfig};

fn main() -> anyhow::Result<()> {
    let rate = 4e6;
    let profile = low_end_profile();
    let fc = FeatureConfig::programs();
    let ds = synthetic_dataset(&profile, 100, 0.01, rate, 11, &fc)?;
    let model = train(&ds, &MlpConfig { learning_rate: 0.05, epochs: 40, ..MlpConfig::default() }.with_hidden(&[10, 5]))?;

    let listener = bind("127.0.0.1:0")?;
    let endpoint = listener.local_addr()?.to_string();
    let source = StreamSource::Emitter {
        profile,
        schedule: vec![
            ScheduleEntry { start_s: 0.0, class_id: "prog0".into() },
            ScheduleEntry { start_s: 0.5, class_id: "prog3".into() },
        ],
        duration_s: 1.0,
        seed: 5,
    };
    let server = thread::spawn(move || serve_stream(&source, rate, &listener));

    let mut last = String::new();
    let summary = connect_and_consume(&endpoint, rate, &ConsumeConfig::default(), &model, &fc, |w| {
        if w.class != last {
            println!("window {:>3}: now {} (delay {:.2} ms)", w.seq, w.class, w.processing_delay_ms);
            last = w.class.clone();
        }
    })?;
    let sent = server.join().expect("server thread")?;
    let l = &summary.latency;
    println!(
        "{} windows, mean {:.2} ms, p95 {:.2} ms, {} overruns; server sent {} bytes",
        l.windows, l.mean_ms, l.p95_ms, l.overruns, sent.bytes_sent
    );
    Ok(())
}
