//! Real-time analysis over a raw `cf32` byte stream.
//!
//! The wire format is the payload file format with no framing: interleaved
//! little-endian `f32` I then Q, eight bytes per sample. A server paces a
//! trace or a live synthetic emitter onto a TCP connection; a consumer cuts the
//! stream into fixed windows, classifies each one and measures how long the
//! feature extraction and inference took against a deadline.
//!
//! The 200 ms default deadline is a processing budget. It is not the TCP
//! retransmission timer, which the transport handles on its own.

mod bench;
mod consume;
mod serve;

use std::time::Duration;

use crate::stats::{mean, percentile};

pub use bench::{benchmark_latency, render_latency_table, BenchConfig};
pub use consume::{consume_stream, connect_and_consume, ConsumeConfig, ConsumeSummary, StreamWindow, WindowResult};
pub use serve::{bind, serve_on, serve_stream, ScheduleEntry, ServeSummary, StreamSource};

pub const DEFAULT_DEADLINE_MS: f64 = 200.0;
pub const DEFAULT_QUEUE_WINDOWS: usize = 16;

/// Per-window processing delay statistics for one session.
#[derive(Debug, Clone, PartialEq)]
pub struct LatencyReport {
    pub sample_rate_hz: f64,
    pub window_len_samples: usize,
    pub windows: usize,
    pub min_ms: f64,
    pub mean_ms: f64,
    pub p95_ms: f64,
    pub max_ms: f64,
    pub deadline_ms: f64,
    /// Windows whose processing delay exceeded `deadline_ms`.
    pub overruns: usize,
    /// Times the reader found the window queue full and had to wait.
    pub backpressure_events: usize,
}

impl LatencyReport {
    pub fn from_delays(sample_rate_hz: f64, window_len_samples: usize, delays_ms: &[f64], deadline_ms: f64, backpressure_events: usize) -> Self {
        LatencyReport {
            sample_rate_hz,
            window_len_samples,
            windows: delays_ms.len(),
            min_ms: if delays_ms.is_empty() { 0.0 } else { delays_ms.iter().copied().fold(f64::INFINITY, f64::min) },
            mean_ms: mean(delays_ms),
            p95_ms: percentile(delays_ms, 95.0),
            max_ms: delays_ms.iter().copied().fold(0.0, f64::max),
            deadline_ms,
            overruns: delays_ms.iter().filter(|&&d| d > deadline_ms).count(),
            backpressure_events,
        }
    }
}

pub(crate) fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overruns_count_strictly_late_windows() {
        let r = LatencyReport::from_delays(20e6, 200_000, &[10.0, 200.0, 200.5, 350.0], 200.0, 0);
        assert_eq!(r.overruns, 2);
        assert_eq!(r.windows, 4);
        assert_eq!(r.min_ms, 10.0);
        assert_eq!(r.max_ms, 350.0);
        assert_eq!(r.p95_ms, 350.0);
    }
}

#[cfg(test)]
mod session_tests {
    use std::io::{Cursor, Read};
    use std::net::TcpStream;
    use std::thread;

    use super::*;
    use crate::dataset::Dataset;
    use crate::emitter::low_end_profile;
    use crate::error::Error;
    use crate::features::{FeatureConfig, Reduction, Trim};
    use crate::mlp::{train, MlpConfig, MlpModel};
    use crate::signal::{encode_cf32, IqTrace};
    use crate::ComplexSample;

    fn small_features() -> FeatureConfig {
        FeatureConfig::new(0.001, 8, Reduction::Mean, Trim::MiddleHalf)
    }

    fn tiny_model() -> MlpModel {
        let rows = (0..20)
            .map(|i| (if i % 2 == 0 { "a" } else { "b" }.to_string(), (0..8).map(|j| (i * j) as f64).collect()))
            .collect();
        train(&Dataset::from_labeled(rows).unwrap(), &MlpConfig { epochs: 2, ..MlpConfig::default() }).unwrap()
    }

    fn ramp(n: usize) -> Vec<ComplexSample> {
        (0..n).map(|i| ComplexSample::new(i as f32, -(i as f32))).collect()
    }

    #[test]
    fn partial_window_and_partial_sample_at_eof() {
        // 1 kHz windows of 1 ms at 1 MHz: 1000 samples each.
        let mut bytes = Vec::new();
        encode_cf32(&ramp(3500), &mut bytes);
        bytes.extend_from_slice(&[1, 2, 3]);
        let cfg = ConsumeConfig { window_s: 0.001, ..ConsumeConfig::default() };
        let mut seqs = Vec::new();
        let s = consume_stream(Cursor::new(bytes), 1e6, &cfg, &tiny_model(), &small_features(), |w| seqs.push(w.seq)).unwrap();
        assert_eq!(seqs, [0, 1, 2]);
        assert_eq!(s.samples_received, 3500);
        assert_eq!(s.leftover_samples, 500);
        assert_eq!(s.trailing_bytes, 3);
        assert_eq!(s.latency.windows, 3);
        assert_eq!(s.latency.overruns, 0);
    }

    #[test]
    fn overlapping_windows_follow_the_hop() {
        let mut bytes = Vec::new();
        encode_cf32(&ramp(3000), &mut bytes);
        let cfg = ConsumeConfig { window_s: 0.001, hop_s: Some(0.0005), ..ConsumeConfig::default() };
        let mut n = 0;
        consume_stream(Cursor::new(bytes), 1e6, &cfg, &tiny_model(), &small_features(), |_| n += 1).unwrap();
        // Starts at 0, 500, ..., 2000.
        assert_eq!(n, 5);
    }

    #[test]
    fn every_window_is_reported_even_past_the_deadline() {
        let mut bytes = Vec::new();
        encode_cf32(&ramp(5000), &mut bytes);
        let cfg = ConsumeConfig { window_s: 0.001, deadline_ms: 0.0, queue_windows: 1, ..ConsumeConfig::default() };
        let mut results = Vec::new();
        let s = consume_stream(Cursor::new(bytes), 1e6, &cfg, &tiny_model(), &small_features(), |w| results.push(w.clone())).unwrap();
        assert_eq!(results.len(), 5);
        assert!(results.iter().all(|r| r.overrun));
        assert_eq!(s.latency.overruns, 5);
    }

    #[test]
    fn model_and_features_must_agree() {
        let fc = FeatureConfig::new(0.001, 16, Reduction::Mean, Trim::MiddleHalf);
        let r = consume_stream(Cursor::new(Vec::new()), 1e6, &ConsumeConfig::default(), &tiny_model(), &fc, |_| {});
        assert!(matches!(r, Err(Error::Shape { expected: 8, actual: 16 })));
    }

    fn serve_in_background(source: StreamSource, rate: f64) -> (String, thread::JoinHandle<crate::Result<ServeSummary>>) {
        let l = bind("127.0.0.1:0").unwrap();
        let addr = l.local_addr().unwrap().to_string();
        (addr, thread::spawn(move || serve_stream(&source, rate, &l)))
    }

    #[test]
    fn pacing_matches_wire_rate() {
        let trace = IqTrace::new(ramp(200_000), 20e6, 0.0).unwrap();
        let (addr, server) = serve_in_background(StreamSource::Trace { trace, total_samples: Some(20_000_000) }, 20e6);
        let mut conn = TcpStream::connect(addr).unwrap();
        let mut buf = vec![0u8; 1 << 20];
        let mut total = 0u64;
        let t0 = std::time::Instant::now();
        loop {
            let n = conn.read(&mut buf).unwrap();
            if n == 0 {
                break;
            }
            total += n as u64;
        }
        let elapsed = t0.elapsed().as_secs_f64();
        let s = server.join().unwrap().unwrap();
        assert_eq!(total, 160_000_000);
        assert_eq!(s.bytes_sent, 160_000_000);
        assert!((elapsed - 1.0).abs() <= 0.05, "took {elapsed} s");
    }

    #[test]
    fn disconnect_ends_cleanly_with_count() {
        let trace = IqTrace::new(ramp(1000), 1e6, 0.0).unwrap();
        let (addr, server) = serve_in_background(StreamSource::Trace { trace, total_samples: Some(10_000_000) }, 1e6);
        {
            let mut conn = TcpStream::connect(addr).unwrap();
            let mut buf = [0u8; 4096];
            conn.read_exact(&mut buf).unwrap();
        }
        let s = server.join().unwrap().unwrap();
        assert!(s.client_disconnected);
        assert!(s.bytes_sent >= 4096 && s.bytes_sent < 80_000_000);
        assert_eq!(s.bytes_sent % 8, 0);
    }

    #[test]
    fn rejects_bad_rates_and_sources() {
        let l = bind("127.0.0.1:0").unwrap();
        let trace = IqTrace::new(ramp(10), 1e6, 0.0).unwrap();
        let src = StreamSource::Trace { trace, total_samples: None };
        assert!(matches!(serve_stream(&src, 0.0, &l), Err(Error::InvalidArgument(_))));
        let bad = StreamSource::Emitter {
            profile: low_end_profile(),
            schedule: vec![ScheduleEntry { start_s: 0.5, class_id: "prog0".into() }],
            duration_s: 1.0,
            seed: 0,
        };
        assert!(serve_stream(&bad, 4e6, &l).is_err());
    }

    #[test]
    fn occupied_port_is_a_network_error() {
        let l = bind("127.0.0.1:0").unwrap();
        let addr = l.local_addr().unwrap().to_string();
        assert!(matches!(bind(&addr), Err(Error::Network { .. })));
    }
}
