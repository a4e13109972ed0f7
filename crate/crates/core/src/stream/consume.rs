use std::io::{ErrorKind, Read};
use std::net::TcpStream;
use std::sync::mpsc::{sync_channel, TrySendError};
use std::thread;
use std::time::Instant;

use super::{ms, LatencyReport, DEFAULT_DEADLINE_MS, DEFAULT_QUEUE_WINDOWS};
use crate::error::{Error, Result};
use crate::features::{features_of, FeatureConfig};
use crate::mlp::MlpModel;
use crate::signal::{check_rate, decode_cf32, samples_in, ComplexSample};

#[derive(Debug, Clone, PartialEq)]
pub struct ConsumeConfig {
    pub window_s: f64,
    /// Distance between window starts. `None` means `window_s`, giving
    /// contiguous windows; a smaller hop makes them overlap.
    pub hop_s: Option<f64>,
    pub deadline_ms: f64,
    pub queue_windows: usize,
}

impl Default for ConsumeConfig {
    fn default() -> Self {
        ConsumeConfig {
            window_s: 0.01,
            hop_s: None,
            deadline_ms: DEFAULT_DEADLINE_MS,
            queue_windows: DEFAULT_QUEUE_WINDOWS,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StreamWindow {
    pub seq: u64,
    pub samples: Vec<ComplexSample>,
    pub received_at: Instant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowResult {
    pub seq: u64,
    pub class: String,
    /// Softmax score of the predicted class.
    pub score: f64,
    /// Feature extraction plus inference time.
    pub processing_delay_ms: f64,
    /// Time from the window's last byte arriving to its result.
    pub end_to_end_ms: f64,
    pub overrun: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsumeSummary {
    pub latency: LatencyReport,
    pub samples_received: u64,
    /// Samples at the tail that did not fill a final window.
    pub leftover_samples: u64,
    /// Bytes at EOF that did not make up a whole sample. Non-zero means the
    /// stream was truncated mid-sample.
    pub trailing_bytes: usize,
}

/// Reads `input` to EOF, classifying each window and calling `on_window` with
/// results in sequence order. Overruns are counted, never skipped.
pub fn consume_stream<R, F>(
    input: R,
    rate_hz: f64,
    config: &ConsumeConfig,
    model: &MlpModel,
    feature_config: &FeatureConfig,
    mut on_window: F,
) -> Result<ConsumeSummary>
where
    R: Read + Send,
    F: FnMut(&WindowResult),
{
    check_rate(rate_hz)?;
    feature_config.validate()?;
    if model.input_dim() != feature_config.n_buckets {
        return Err(Error::Shape {
            expected: model.input_dim(),
            actual: feature_config.n_buckets,
        });
    }
    let window = samples_in(rate_hz, config.window_s) as usize;
    let hop = config.hop_s.map_or(window, |h| samples_in(rate_hz, h) as usize);
    if window < 2 || hop == 0 || hop > window {
        return Err(Error::invalid(format!(
            "window of {window} samples with hop {hop} is not usable"
        )));
    }
    if config.queue_windows == 0 {
        return Err(Error::invalid("queue must hold at least one window"));
    }

    let (tx, rx) = sync_channel::<StreamWindow>(config.queue_windows);
    let mut delays = Vec::new();
    let (reader_result, worker_result) = thread::scope(|scope| {
        let reader = scope.spawn(move || -> Result<(u64, u64, usize, usize)> {
            let mut input = input;
            let mut bytes = vec![0u8; 1 << 16];
            let mut carry: Vec<u8> = Vec::with_capacity(8);
            let mut pending: Vec<ComplexSample> = Vec::with_capacity(window * 2);
            let mut received = 0u64;
            let mut seq = 0u64;
            let mut backpressure = 0usize;
            loop {
                let n = match input.read(&mut bytes) {
                    Ok(0) => break,
                    Ok(n) => n,
                    Err(e) if e.kind() == ErrorKind::Interrupted => continue,
                    Err(e) if e.kind() == ErrorKind::ConnectionReset => break,
                    Err(e) => return Err(Error::Network { endpoint: "stream".into(), source: e }),
                };
                carry.extend_from_slice(&bytes[..n]);
                let whole = carry.len() / 8 * 8;
                let decoded = decode_cf32(&carry[..whole]).expect("whole samples");
                carry.drain(..whole);
                received += decoded.len() as u64;
                pending.extend(decoded);
                while pending.len() >= window {
                    let w = StreamWindow {
                        seq,
                        samples: pending[..window].to_vec(),
                        received_at: Instant::now(),
                    };
                    pending.drain(..hop);
                    seq += 1;
                    match tx.try_send(w) {
                        Ok(()) => {}
                        Err(TrySendError::Full(w)) => {
                            backpressure += 1;
                            if tx.send(w).is_err() {
                                return Ok((received, pending.len() as u64, carry.len(), backpressure));
                            }
                        }
                        Err(TrySendError::Disconnected(_)) => {
                            return Ok((received, pending.len() as u64, carry.len(), backpressure));
                        }
                    }
                }
            }
            Ok((received, pending.len() as u64, carry.len(), backpressure))
        });

        let worker = (|| -> Result<()> {
            for w in rx {
                let t0 = Instant::now();
                let values = features_of(&w.samples, feature_config)?;
                let p = model.predict(&values)?;
                let delay = ms(t0.elapsed());
                let result = WindowResult {
                    seq: w.seq,
                    score: p.confidence(),
                    class: p.class,
                    processing_delay_ms: delay,
                    end_to_end_ms: ms(w.received_at.elapsed()),
                    overrun: delay > config.deadline_ms,
                };
                delays.push(delay);
                on_window(&result);
            }
            Ok(())
        })();
        (reader.join().expect("stream reader panicked"), worker)
    });
    worker_result?;
    let (samples_received, leftover_samples, trailing_bytes, backpressure) = reader_result?;
    if trailing_bytes != 0 {
        eprintln!("warning: stream ended mid-sample, {trailing_bytes} trailing bytes ignored");
    }
    Ok(ConsumeSummary {
        latency: LatencyReport::from_delays(rate_hz, window, &delays, config.deadline_ms, backpressure),
        samples_received,
        leftover_samples,
        trailing_bytes,
    })
}

/// Connects to a serving endpoint and consumes it to EOF.
pub fn connect_and_consume<F: FnMut(&WindowResult)>(
    endpoint: &str,
    rate_hz: f64,
    config: &ConsumeConfig,
    model: &MlpModel,
    feature_config: &FeatureConfig,
    on_window: F,
) -> Result<ConsumeSummary> {
    let conn = TcpStream::connect(endpoint).map_err(|source| Error::Network {
        endpoint: endpoint.to_string(),
        source,
    })?;
    consume_stream(conn, rate_hz, config, model, feature_config, on_window)
}
