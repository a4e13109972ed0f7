//! Anti-aliased sample-rate reduction.
//!
//! Integer ratios use a windowed-sinc low-pass followed by keeping every k-th
//! sample, evaluated only at the retained output positions. Rational ratios
//! (e.g. 20 -> 16 MHz is 4/5) run the same design as a polyphase
//! upsample-by-L / decimate-by-M filter.

use std::f64::consts::PI;

use rustfft::num_complex::Complex32;

use super::{check_rate, ComplexSample, IqTrace};
use crate::error::{Error, Result};

/// Largest interpolation factor accepted for rational resampling.
const MAX_UPSAMPLE: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResampleConfig {
    /// Taps per polyphase branch; the full prototype has `taps * L` (odd).
    pub taps: usize,
    /// Low-pass cutoff as a fraction of the target rate.
    pub cutoff_fraction: f64,
}

impl Default for ResampleConfig {
    fn default() -> Self {
        ResampleConfig {
            taps: 129,
            cutoff_fraction: 0.45,
        }
    }
}

/// How a source rate maps to a target rate: `target = source * up / down`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResamplePlan {
    pub up: u64,
    pub down: u64,
}

impl ResamplePlan {
    pub fn new(source_hz: f64, target_hz: f64) -> Result<Self> {
        check_rate(source_hz)?;
        check_rate(target_hz)?;
        if target_hz > source_hz * (1.0 + 1e-12) {
            return Err(Error::invalid(format!(
                "target rate {target_hz} Hz exceeds source rate {source_hz} Hz"
            )));
        }
        let ratio = source_hz / target_hz;
        for up in 1..=MAX_UPSAMPLE {
            let down = ratio * up as f64;
            let rounded = down.round();
            if rounded >= 1.0 && (down - rounded).abs() <= 1e-9 * down {
                return Ok(ResamplePlan {
                    up,
                    down: rounded as u64,
                });
            }
        }
        Err(Error::UnsupportedRatio {
            source_hz,
            target_hz,
        })
    }

    pub fn is_identity(&self) -> bool {
        self.up == 1 && self.down == 1
    }

    pub fn output_len(&self, input_len: usize) -> usize {
        (input_len as u128 * self.up as u128 / self.down as u128) as usize
    }
}

/// Hamming-windowed sinc low-pass with unit DC gain.
///
/// `cutoff` is in cycles per sample, strictly inside (0, 0.5).
pub fn lowpass_taps(num_taps: usize, cutoff: f64) -> Vec<f64> {
    assert!(num_taps >= 1, "need at least one tap");
    assert!(cutoff > 0.0 && cutoff < 0.5, "cutoff must be in (0, 1/2)");
    if num_taps == 1 {
        return vec![1.0];
    }
    let mid = (num_taps - 1) as f64 / 2.0;
    let mut taps: Vec<f64> = (0..num_taps)
        .map(|n| {
            let x = n as f64 - mid;
            let sinc = if x == 0.0 {
                2.0 * cutoff
            } else {
                (2.0 * PI * cutoff * x).sin() / (PI * x)
            };
            let w = 0.54 - 0.46 * (2.0 * PI * n as f64 / (num_taps - 1) as f64).cos();
            sinc * w
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

pub fn downsample(trace: &IqTrace, target_rate_hz: f64) -> Result<IqTrace> {
    downsample_with(trace, target_rate_hz, &ResampleConfig::default())
}

pub fn downsample_with(
    trace: &IqTrace,
    target_rate_hz: f64,
    config: &ResampleConfig,
) -> Result<IqTrace> {
    if config.taps == 0 || !(config.cutoff_fraction > 0.0 && config.cutoff_fraction < 0.5) {
        return Err(Error::invalid(format!("bad resampler configuration {config:?}")));
    }
    let plan = ResamplePlan::new(trace.sample_rate_hz, target_rate_hz)?;
    if plan.is_identity() {
        return Ok(trace.clone());
    }
    let out = if plan.up == 1 {
        decimate(&trace.samples, plan.down as usize, config)
    } else {
        resample_rational(&trace.samples, plan, config)
    };
    Ok(trace.with_samples(out, target_rate_hz))
}

fn decimate(input: &[ComplexSample], k: usize, config: &ResampleConfig) -> Vec<ComplexSample> {
    let n_taps = config.taps | 1;
    let taps = lowpass_taps(n_taps, config.cutoff_fraction / k as f64);
    let delay = (n_taps - 1) / 2;
    let out_len = input.len() / k;
    let mut out = Vec::with_capacity(out_len);
    for m in 0..out_len {
        // y[m] = sum_j h[j] x[m k + delay - j]
        let centre = m * k + delay;
        let j_lo = centre.saturating_sub(input.len() - 1);
        let j_hi = centre.min(n_taps - 1);
        let (mut re, mut im) = (0.0f64, 0.0f64);
        for j in j_lo..=j_hi {
            let x = input[centre - j];
            re += taps[j] * x.re as f64;
            im += taps[j] * x.im as f64;
        }
        out.push(Complex32::new(re as f32, im as f32));
    }
    out
}

fn resample_rational(
    input: &[ComplexSample],
    plan: ResamplePlan,
    config: &ResampleConfig,
) -> Vec<ComplexSample> {
    let up = plan.up as usize;
    let down = plan.down as usize;
    let n_taps = (config.taps * up) | 1;
    // Cutoff relative to the upsampled rate, limited by the lower of the two rates.
    let cutoff = config.cutoff_fraction * (up as f64 / down as f64).min(1.0) / up as f64;
    let taps: Vec<f64> = lowpass_taps(n_taps, cutoff)
        .into_iter()
        .map(|t| t * up as f64)
        .collect();
    let delay = (n_taps - 1) / 2;
    let out_len = plan.output_len(input.len());
    let mut out = Vec::with_capacity(out_len);
    for m in 0..out_len {
        // Upsampled-domain index of this output, shifted by the group delay.
        let u = m * down + delay;
        // Zero-stuffed input n contributes through tap j = u - n * up.
        let n_hi = (u / up).min(input.len().saturating_sub(1));
        let (mut re, mut im) = (0.0f64, 0.0f64);
        let mut n = n_hi as isize;
        while n >= 0 {
            let j = u - n as usize * up;
            if j >= n_taps {
                break;
            }
            let x = input[n as usize];
            re += taps[j] * x.re as f64;
            im += taps[j] * x.im as f64;
            n -= 1;
        }
        out.push(Complex32::new(re as f32, im as f32));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(n: usize, rate: f64, freq: f64, amp: f32) -> IqTrace {
        let samples = (0..n)
            .map(|i| {
                let ph = 2.0 * PI * freq * i as f64 / rate;
                Complex32::new(amp * ph.cos() as f32, amp * ph.sin() as f32)
            })
            .collect();
        IqTrace::new(samples, rate, 0.0).unwrap()
    }

    /// Single-bin DFT of the steady-state middle of a trace, normalized to amplitude.
    fn tone_amplitude(t: &IqTrace, freq: f64) -> f64 {
        let skip = t.len() / 8;
        let body = &t.samples[skip..t.len() - skip];
        let (mut re, mut im) = (0.0, 0.0);
        for (i, s) in body.iter().enumerate() {
            let ph = -2.0 * PI * freq * (i + skip) as f64 / t.sample_rate_hz;
            re += s.re as f64 * ph.cos() - s.im as f64 * ph.sin();
            im += s.re as f64 * ph.sin() + s.im as f64 * ph.cos();
        }
        (re * re + im * im).sqrt() / body.len() as f64
    }

    #[test]
    fn plans() {
        assert_eq!(ResamplePlan::new(20e6, 4e6).unwrap(), ResamplePlan { up: 1, down: 5 });
        assert_eq!(ResamplePlan::new(20e6, 16e6).unwrap(), ResamplePlan { up: 4, down: 5 });
        assert_eq!(ResamplePlan::new(20e6, 12e6).unwrap(), ResamplePlan { up: 3, down: 5 });
        assert_eq!(ResamplePlan::new(20e6, 0.5e6).unwrap(), ResamplePlan { up: 1, down: 40 });
        assert!(matches!(
            ResamplePlan::new(20e6, 20e6 / 1.001),
            Err(Error::UnsupportedRatio { .. })
        ));
        assert!(matches!(ResamplePlan::new(4e6, 20e6), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn taps_have_unit_gain_and_symmetry() {
        let h = lowpass_taps(129, 0.09);
        assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for i in 0..64 {
            assert!((h[i] - h[128 - i]).abs() < 1e-15);
        }
    }

    #[test]
    fn identity_rate_is_verbatim() {
        let t = tone(1000, 1e6, 1e4, 1.0);
        assert_eq!(downsample(&t, 1e6).unwrap(), t);
    }

    #[test]
    fn output_length_and_rate() {
        let t = tone(200_001, 20e6, 1e5, 1.0);
        let d = downsample(&t, 4e6).unwrap();
        assert_eq!(d.len(), 40_000);
        assert_eq!(d.sample_rate_hz, 4e6);
        let r = downsample(&t, 16e6).unwrap();
        assert_eq!(r.len(), 200_001 * 4 / 5);
    }

    #[test]
    fn passband_tone_preserved() {
        let t = tone(200_000, 20e6, 1e5, 1.0);
        let before = tone_amplitude(&t, 1e5);
        for target in [4e6, 16e6, 12e6, 2e6] {
            let d = downsample(&t, target).unwrap();
            let after = tone_amplitude(&d, 1e5);
            assert!(
                (after / before - 1.0).abs() < 0.01,
                "{target}: {before} -> {after}"
            );
        }
    }

    #[test]
    fn out_of_band_tone_rejected_by_40_db() {
        for (target, freq) in [(4e6, 3e6), (16e6, 9e6), (12e6, -7.5e6), (0.5e6, 0.6e6)] {
            let t = tone(400_000, 20e6, freq, 1.0);
            let d = downsample(&t, target).unwrap();
            let skip = d.len() / 8;
            let residual: f64 = d.samples[skip..d.len() - skip]
                .iter()
                .map(|s| s.norm_sqr() as f64)
                .sum::<f64>()
                / (d.len() - 2 * skip) as f64;
            let db = 10.0 * residual.log10();
            assert!(db <= -40.0, "{target} Hz / {freq} Hz: {db} dB");
        }
    }
}
