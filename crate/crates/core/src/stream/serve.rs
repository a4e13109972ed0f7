use std::io::{ErrorKind, Write};
use std::net::{TcpListener, TcpStream};
use std::thread;
use std::time::{Duration, Instant};

use crate::emitter::{synth_trace, EmitterProfile};
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::signal::{check_rate, encode_cf32, samples_in, IqTrace};

/// Switch the emitted program class to `class_id` from `start_s` onwards.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleEntry {
    pub start_s: f64,
    pub class_id: String,
}

#[derive(Debug, Clone)]
pub enum StreamSource {
    /// Sends the trace samples, cycling through them until `total_samples`
    /// have gone out (or once, when `None`).
    Trace { trace: IqTrace, total_samples: Option<u64> },
    /// Synthesizes the signal chunk by chunk following `schedule`, which must
    /// start at 0 s and be sorted by start time.
    Emitter {
        profile: EmitterProfile,
        schedule: Vec<ScheduleEntry>,
        duration_s: f64,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServeSummary {
    pub bytes_sent: u64,
    pub samples_sent: u64,
    pub elapsed_s: f64,
    /// The client hung up before the source was exhausted.
    pub client_disconnected: bool,
}

/// Pacing granularity: one chunk is written every 10 ms of stream time.
const CHUNK_S: f64 = 0.01;

impl StreamSource {
    fn validate(&self, rate_hz: f64) -> Result<()> {
        match self {
            StreamSource::Trace { trace, .. } => {
                if trace.is_empty() {
                    return Err(Error::invalid("cannot stream an empty trace"));
                }
            }
            StreamSource::Emitter { profile, schedule, duration_s, .. } => {
                if !(*duration_s > 0.0) {
                    return Err(Error::invalid("stream duration must be positive"));
                }
                if schedule.first().map(|e| e.start_s) != Some(0.0) {
                    return Err(Error::invalid("schedule must start at 0 s"));
                }
                if schedule.windows(2).any(|w| w[1].start_s <= w[0].start_s) {
                    return Err(Error::invalid("schedule start times must increase"));
                }
                for e in schedule {
                    let spec = profile.class(&e.class_id)?;
                    if spec.max_offset_hz() >= rate_hz / 2.0 {
                        return Err(Error::invalid(format!(
                            "class `{}` has tones beyond the {rate_hz} Hz capture bandwidth",
                            e.class_id
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn total_samples(&self, rate_hz: f64) -> u64 {
        match self {
            StreamSource::Trace { trace, total_samples } => total_samples.unwrap_or(trace.len() as u64),
            StreamSource::Emitter { duration_s, .. } => samples_in(rate_hz, *duration_s),
        }
    }

    /// Samples `[start, start + n)` of the stream.
    fn chunk(&self, start: u64, n: usize, rate_hz: f64, index: u64) -> Result<Vec<crate::ComplexSample>> {
        match self {
            StreamSource::Trace { trace, .. } => {
                let len = trace.len() as u64;
                Ok((0..n as u64).map(|k| trace.samples[((start + k) % len) as usize]).collect())
            }
            StreamSource::Emitter { profile, schedule, seed, .. } => {
                let t = start as f64 / rate_hz;
                let class = &schedule.iter().rev().find(|e| e.start_s <= t + 1e-12).unwrap().class_id;
                let dur = n as f64 / rate_hz;
                let mut s = synth_trace(profile, class, dur, rate_hz, derive_seed(*seed, &[index]))?.samples;
                s.resize(n, Default::default());
                Ok(s)
            }
        }
    }
}

pub fn bind(endpoint: &str) -> Result<TcpListener> {
    TcpListener::bind(endpoint).map_err(|source| Error::Network {
        endpoint: endpoint.to_string(),
        source,
    })
}

/// Binds `endpoint`, waits for one client and streams to it.
pub fn serve_on(source: &StreamSource, rate_hz: f64, endpoint: &str) -> Result<ServeSummary> {
    let listener = bind(endpoint)?;
    serve_stream(source, rate_hz, &listener)
}

/// Accepts one client on `listener` and writes the source to it paced at
/// `8 * rate_hz` bytes per second.
pub fn serve_stream(source: &StreamSource, rate_hz: f64, listener: &TcpListener) -> Result<ServeSummary> {
    check_rate(rate_hz)?;
    source.validate(rate_hz)?;
    let endpoint = listener
        .local_addr()
        .map(|a| a.to_string())
        .unwrap_or_else(|_| "?".into());
    let (mut conn, _) = listener.accept().map_err(|source| Error::Network {
        endpoint: endpoint.clone(),
        source,
    })?;
    let _ = conn.set_nodelay(true);
    write_paced(source, rate_hz, &mut conn, &endpoint)
}

fn write_paced(source: &StreamSource, rate_hz: f64, conn: &mut TcpStream, endpoint: &str) -> Result<ServeSummary> {
    let total = source.total_samples(rate_hz);
    let chunk_len = samples_in(rate_hz, CHUNK_S).max(1);
    let start = Instant::now();
    let mut sent = 0u64;
    let mut buf = Vec::new();
    let mut index = 0u64;
    let summary = |sent: u64, disconnected: bool| ServeSummary {
        bytes_sent: sent * 8,
        samples_sent: sent,
        elapsed_s: start.elapsed().as_secs_f64(),
        client_disconnected: disconnected,
    };
    while sent < total {
        let n = chunk_len.min(total - sent) as usize;
        let samples = source.chunk(sent, n, rate_hz, index)?;
        buf.clear();
        encode_cf32(&samples, &mut buf);
        // Hold each chunk until its stream time so the rate averages 8 * rate_hz bytes/s.
        let due = Duration::from_secs_f64(sent as f64 / rate_hz);
        if let Some(wait) = due.checked_sub(start.elapsed()) {
            thread::sleep(wait);
        }
        match conn.write_all(&buf) {
            Ok(()) => {}
            Err(e) if matches!(e.kind(), ErrorKind::BrokenPipe | ErrorKind::ConnectionReset | ErrorKind::ConnectionAborted) => {
                return Ok(summary(sent, true));
            }
            Err(source) => {
                return Err(Error::Network {
                    endpoint: endpoint.to_string(),
                    source,
                })
            }
        }
        sent += n as u64;
        index += 1;
    }
    let _ = conn.flush();
    let _ = conn.shutdown(std::net::Shutdown::Write);
    Ok(summary(sent, false))
}
