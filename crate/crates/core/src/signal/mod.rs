//! Complex baseband traces and the operations that preserve their sample
//! semantics: segmentation, down-sampling and storage arithmetic.

mod budget;
mod io;
mod resample;

use chrono::{DateTime, FixedOffset};
use rustfft::num_complex::Complex32;

use crate::error::{Error, Result};

pub use budget::{storage_budget, StorageBudget, BYTES_PER_SAMPLE};
pub use io::{
    decode_cf32, encode_cf32, read_trace, sidecar_path, write_trace, RawParams,
};
pub use resample::{downsample, downsample_with, lowpass_taps, ResampleConfig, ResamplePlan};

/// One I/Q sample; `re` is the in-phase and `im` the quadrature component.
pub type ComplexSample = Complex32;

/// A recorded or synthesized complex baseband capture.
#[derive(Debug, Clone, PartialEq)]
pub struct IqTrace {
    pub samples: Vec<ComplexSample>,
    pub sample_rate_hz: f64,
    pub center_freq_hz: f64,
    pub label: Option<String>,
    pub seed: Option<u64>,
    pub captured_at: Option<DateTime<FixedOffset>>,
    /// Sidecar keys this crate does not interpret, kept in file order.
    pub extra: Vec<(String, String)>,
}

impl IqTrace {
    pub fn new(samples: Vec<ComplexSample>, sample_rate_hz: f64, center_freq_hz: f64) -> Result<Self> {
        check_rate(sample_rate_hz)?;
        if !(center_freq_hz >= 0.0 && center_freq_hz.is_finite()) {
            return Err(Error::invalid(format!(
                "center frequency must be non-negative, got {center_freq_hz}"
            )));
        }
        Ok(IqTrace {
            samples,
            sample_rate_hz,
            center_freq_hz,
            label: None,
            seed: None,
            captured_at: None,
            extra: Vec::new(),
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    /// Copies every field except the samples, which are replaced.
    pub fn with_samples(&self, samples: Vec<ComplexSample>, sample_rate_hz: f64) -> Self {
        IqTrace {
            samples,
            sample_rate_hz,
            center_freq_hz: self.center_freq_hz,
            label: self.label.clone(),
            seed: self.seed,
            captured_at: self.captured_at,
            extra: self.extra.clone(),
        }
    }

    /// Index of the first non-finite sample, if any.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.samples
            .iter()
            .position(|s| !(s.re.is_finite() && s.im.is_finite()))
    }

    pub fn payload_bytes(&self) -> u64 {
        self.samples.len() as u64 * BYTES_PER_SAMPLE
    }
}

pub(crate) fn check_rate(rate_hz: f64) -> Result<()> {
    if rate_hz > 0.0 && rate_hz.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("sample rate must be positive, got {rate_hz}")))
    }
}

/// Number of whole samples covering `duration_s` at `rate_hz`, forgiving
/// floating-point products that land a hair below an integer.
pub fn samples_in(rate_hz: f64, duration_s: f64) -> u64 {
    let x = rate_hz * duration_s;
    if !(x > 0.0) || !x.is_finite() {
        return 0;
    }
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.max(1.0) {
        r as u64
    } else {
        x.floor() as u64
    }
}

/// Contiguous sub-trace starting at `start_s` lasting `duration_s`.
///
/// The sample count is `round(duration_s * rate)`; metadata is inherited.
pub fn segment(trace: &IqTrace, start_s: f64, duration_s: f64) -> Result<IqTrace> {
    let available = trace.duration_s();
    let end = start_s + duration_s;
    let slack = 1e-9 * available.max(1.0);
    if !(start_s >= 0.0) || !(duration_s >= 0.0) || end > available + slack {
        return Err(Error::Range {
            start_s,
            end_s: end,
            available_s: available,
        });
    }
    let start = (start_s * trace.sample_rate_hz).round() as usize;
    let count = (duration_s * trace.sample_rate_hz).round() as usize;
    if start + count > trace.len() {
        return Err(Error::Range {
            start_s,
            end_s: end,
            available_s: available,
        });
    }
    Ok(trace.with_samples(
        trace.samples[start..start + count].to_vec(),
        trace.sample_rate_hz,
    ))
}
