use std::fmt::Write as _;
use std::thread;

use super::{bind, connect_and_consume, serve_stream, ConsumeConfig, LatencyReport, StreamSource, DEFAULT_DEADLINE_MS};
use crate::emitter::{synth_trace, EmitterProfile};
use crate::error::{Error, Result};
use crate::features::FeatureConfig;
use crate::mlp::MlpModel;
use crate::rng::derive_seed;
use crate::signal::samples_in;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub rates_hz: Vec<f64>,
    pub window_s: f64,
    pub n_windows: usize,
    pub deadline_ms: f64,
    /// Class streamed by the loopback server.
    pub class_id: String,
    pub seed: u64,
}

impl BenchConfig {
    pub fn new(rates_hz: Vec<f64>, class_id: impl Into<String>) -> Self {
        BenchConfig {
            rates_hz,
            window_s: 0.01,
            n_windows: 100,
            deadline_ms: DEFAULT_DEADLINE_MS,
            class_id: class_id.into(),
            seed: 0,
        }
    }
}

/// Distinct windows synthesized per rate; the server cycles through them.
const DISTINCT_WINDOWS: usize = 10;

/// Loopback serve and consume at each rate, `n_windows` windows each.
pub fn benchmark_latency(
    config: &BenchConfig,
    model: &MlpModel,
    feature_config: &FeatureConfig,
    profile: &EmitterProfile,
) -> Result<Vec<LatencyReport>> {
    if config.n_windows == 0 {
        return Err(Error::invalid("need at least one window"));
    }
    if config.rates_hz.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::invalid("rates must be positive"));
    }
    let consume_cfg = ConsumeConfig {
        window_s: config.window_s,
        deadline_ms: config.deadline_ms,
        ..ConsumeConfig::default()
    };
    let mut reports = Vec::new();
    for (i, &rate) in config.rates_hz.iter().enumerate() {
        let window = samples_in(rate, config.window_s);
        let base = synth_trace(
            profile,
            &config.class_id,
            config.window_s * DISTINCT_WINDOWS.min(config.n_windows) as f64,
            rate,
            derive_seed(config.seed, &[i as u64]),
        )?;
        let source = StreamSource::Trace {
            trace: base,
            total_samples: Some(window * config.n_windows as u64),
        };
        let listener = bind("127.0.0.1:0")?;
        let addr = listener.local_addr().map_err(|source| Error::Network {
            endpoint: "127.0.0.1:0".into(),
            source,
        })?;
        let (served, consumed) = thread::scope(|scope| {
            let server = scope.spawn(|| serve_stream(&source, rate, &listener));
            let consumed = connect_and_consume(&addr.to_string(), rate, &consume_cfg, model, feature_config, |_| {});
            (server.join().expect("server panicked"), consumed)
        });
        served?;
        let summary = consumed?;
        if summary.latency.windows != config.n_windows {
            return Err(Error::invalid(format!(
                "expected {} windows at {rate} Hz, consumed {}",
                config.n_windows, summary.latency.windows
            )));
        }
        reports.push(summary.latency);
    }
    Ok(reports)
}

pub fn render_latency_table(reports: &[LatencyReport]) -> String {
    let mut s = String::from("rate_mhz  window_samples  windows  min_ms  mean_ms  p95_ms  max_ms  deadline_ms  overruns\n");
    for r in reports {
        let _ = writeln!(
            s,
            "{:>8}  {:>14}  {:>7}  {:>6.2}  {:>7.2}  {:>6.2}  {:>6.2}  {:>11}  {:>8}",
            r.sample_rate_hz / 1e6,
            r.window_len_samples,
            r.windows,
            r.min_ms,
            r.mean_ms,
            r.p95_ms,
            r.max_ms,
            r.deadline_ms,
            r.overruns
        );
    }
    s
}
