//! Trace segments to fixed-length feature vectors.
//!
//! The pipeline is: take the leading `segment_s` of a trace, compute the DFT
//! magnitude with DC in the middle, keep the middle half of the bins (the band
//! around the carrier), and reduce contiguous buckets by mean or max.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::ops::Range;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::signal::{segment, ComplexSample, IqTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    Mean,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trim {
    MiddleHalf,
    None,
}

/// Window applied before the FFT. Off by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Taper {
    None,
    Hann,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureConfig {
    pub segment_s: f64,
    pub n_buckets: usize,
    pub reduction: Reduction,
    pub trim: Trim,
    pub taper: Taper,
}

impl FeatureConfig {
    pub fn new(segment_s: f64, n_buckets: usize, reduction: Reduction, trim: Trim) -> Self {
        FeatureConfig {
            segment_s,
            n_buckets,
            reduction,
            trim,
            taper: Taper::None,
        }
    }

    /// 10 ms segment, 500 mean buckets over the middle half.
    pub fn crypto() -> Self {
        Self::new(0.01, 500, Reduction::Mean, Trim::MiddleHalf)
    }

    /// 10 ms segment, 1000 max buckets over the middle half.
    pub fn programs() -> Self {
        Self::new(0.01, 1000, Reduction::Max, Trim::MiddleHalf)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.segment_s > 0.0) || self.n_buckets == 0 {
            return Err(Error::invalid(format!(
                "feature config needs segment_s > 0 and n_buckets >= 1: {self:?}"
            )));
        }
        Ok(())
    }
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self::crypto()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub config: FeatureConfig,
    pub source_label: Option<String>,
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// DFT magnitude of the whole segment, rotated so that bin `len/2` is DC and
/// negative frequencies come first.
pub fn fft_magnitude(segment: &IqTrace) -> Result<Vec<f64>> {
    fft_magnitude_of(&segment.samples, Taper::None)
}

pub fn fft_magnitude_of(samples: &[ComplexSample], taper: Taper) -> Result<Vec<f64>> {
    let n = samples.len();
    if n == 0 {
        return Err(Error::invalid("cannot transform an empty segment"));
    }
    let mut buf: Vec<Complex64> = match taper {
        Taper::None => samples
            .iter()
            .map(|s| Complex64::new(s.re as f64, s.im as f64))
            .collect(),
        Taper::Hann => samples
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let w = 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos();
                Complex64::new(s.re as f64 * w, s.im as f64 * w)
            })
            .collect(),
    };
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n));
    fft.process(&mut buf);
    let half = n / 2;
    Ok((0..n).map(|j| buf[(j + n - half) % n].norm()).collect())
}

/// Bins `[floor(L/4), floor(3L/4))`.
pub fn trim_middle_half(spectrum: &[f64]) -> Result<&[f64]> {
    let len = spectrum.len();
    if len < 4 {
        return Err(Error::invalid(format!(
            "middle-half trim needs at least 4 bins, got {len}"
        )));
    }
    Ok(&spectrum[len / 4..3 * len / 4])
}

/// Splits `len` indices into `n_buckets` contiguous ranges whose sizes differ
/// by at most one; the leading buckets take the remainder.
pub fn bucket_ranges(len: usize, n_buckets: usize) -> Result<Vec<Range<usize>>> {
    if n_buckets == 0 || n_buckets > len {
        return Err(Error::invalid(format!(
            "cannot split {len} bins into {n_buckets} buckets"
        )));
    }
    let base = len / n_buckets;
    let extra = len % n_buckets;
    let mut start = 0;
    Ok((0..n_buckets)
        .map(|b| {
            let size = base + usize::from(b < extra);
            let r = start..start + size;
            start += size;
            r
        })
        .collect())
}

pub fn bucketize(spectrum: &[f64], n_buckets: usize, reduction: Reduction) -> Result<Vec<f64>> {
    Ok(bucket_ranges(spectrum.len(), n_buckets)?
        .into_iter()
        .map(|r| {
            let bucket = &spectrum[r];
            match reduction {
                Reduction::Mean => bucket.iter().sum::<f64>() / bucket.len() as f64,
                Reduction::Max => bucket.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect())
}

pub fn make_features(trace: &IqTrace, config: &FeatureConfig) -> Result<FeatureVector> {
    config.validate()?;
    let available = trace.duration_s();
    if available + 1e-9 * available.max(1.0) < config.segment_s {
        return Err(Error::InsufficientData {
            needed_s: config.segment_s,
            available_s: available,
        });
    }
    let seg = segment(trace, 0.0, config.segment_s)?;
    let values = features_of(&seg.samples, config)?;
    Ok(FeatureVector {
        values,
        config: *config,
        source_label: trace.label.clone(),
    })
}

/// Feature values for a block of samples that is already the segment.
pub fn features_of(samples: &[ComplexSample], config: &FeatureConfig) -> Result<Vec<f64>> {
    let spectrum = fft_magnitude_of(samples, config.taper)?;
    let band = match config.trim {
        Trim::MiddleHalf => trim_middle_half(&spectrum)?,
        Trim::None => &spectrum[..],
    };
    bucketize(band, config.n_buckets, config.reduction)
}

/// One feature row per trace, input order preserved, sorted class table.
pub fn batch_features(traces: &[IqTrace], config: &FeatureConfig) -> Result<Dataset> {
    for (i, t) in traces.iter().enumerate() {
        if t.label.is_none() {
            return Err(Error::MissingLabel(format!("#{i}")));
        }
    }
    let rows = traces
        .par_iter()
        .map(|t| {
            let fv = make_features(t, config)?;
            Ok((t.label.clone().unwrap_or_default(), fv.values))
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::from_labeled(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rustfft::num_complex::Complex32;

    fn trace(samples: Vec<Complex32>, rate: f64) -> IqTrace {
        IqTrace::new(samples, rate, 0.0).unwrap()
    }

    #[test]
    fn dc_lands_in_the_centre_bin() {
        for n in [7usize, 8, 64] {
            let t = trace(vec![Complex32::new(1.0, 0.0); n], 1.0);
            let mag = fft_magnitude(&t).unwrap();
            assert!((mag[n / 2] - n as f64).abs() < 1e-9);
            for (j, m) in mag.iter().enumerate() {
                if j != n / 2 {
                    assert!(*m < 1e-9, "n={n} bin {j}: {m}");
                }
            }
        }
    }

    #[test]
    fn exponential_at_bin_k() {
        let n = 256;
        let k = 37;
        let samples = (0..n)
            .map(|i| {
                let ph = 2.0 * PI * (k * i) as f64 / n as f64;
                Complex32::new(ph.cos() as f32, ph.sin() as f32)
            })
            .collect();
        let mag = fft_magnitude(&trace(samples, 1.0)).unwrap();
        let peak = mag
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(peak, n / 2 + k);
        assert!((mag[peak] - n as f64).abs() < 1e-3);
    }

    #[test]
    fn empty_segment_rejected() {
        assert!(fft_magnitude(&trace(vec![], 1.0)).is_err());
    }

    #[test]
    fn trim_examples() {
        assert_eq!(trim_middle_half(&[1.0, 2.0, 3.0, 4.0]).unwrap(), [2.0, 3.0]);
        assert_eq!(trim_middle_half(&vec![0.0; 200_000]).unwrap().len(), 100_000);
        assert!(trim_middle_half(&[1.0, 2.0, 3.0]).is_err());
        let v: Vec<f64> = (0..1000).map(|i| (i * 7919 % 1000) as f64).collect();
        assert_eq!(trim_middle_half(&v).unwrap(), &v[250..750]);
    }

    #[test]
    fn bucket_examples() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert_eq!(bucketize(&v, 2, Reduction::Mean).unwrap(), [2.0, 5.0]);
        assert_eq!(bucketize(&v, 2, Reduction::Max).unwrap(), [3.0, 6.0]);
        assert_eq!(bucketize(&v, 6, Reduction::Mean).unwrap(), v);
        assert_eq!(bucketize(&v, 6, Reduction::Max).unwrap(), v);
        assert_eq!(bucketize(&v, 4, Reduction::Max).unwrap(), [2.0, 4.0, 5.0, 6.0]);
        assert!(bucketize(&v, 7, Reduction::Mean).is_err());
        assert!(bucketize(&v, 0, Reduction::Mean).is_err());
    }

    #[test]
    fn insufficient_data() {
        let t = trace(vec![Complex32::new(0.0, 0.0); 100], 1e3);
        let cfg = FeatureConfig::new(0.2, 10, Reduction::Mean, Trim::None);
        assert!(matches!(make_features(&t, &cfg), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn missing_label_named() {
        let t = trace(vec![Complex32::new(0.0, 0.0); 100], 1e3);
        let cfg = FeatureConfig::new(0.05, 10, Reduction::Mean, Trim::None);
        match batch_features(&[t], &cfg) {
            Err(Error::MissingLabel(name)) => assert_eq!(name, "#0"),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(batch_features(&[], &cfg).unwrap().len(), 0);
    }

    #[test]
    fn hann_taper_changes_leakage_only() {
        let samples: Vec<Complex32> = (0..64).map(|i| Complex32::new((i % 5) as f32, 0.0)).collect();
        let plain = fft_magnitude_of(&samples, Taper::None).unwrap();
        let hann = fft_magnitude_of(&samples, Taper::Hann).unwrap();
        assert_eq!(plain.len(), hann.len());
        assert_ne!(plain, hann);
    }

    proptest! {
        #[test]
        fn buckets_tile_the_spectrum(len in 1usize..5000, n in 1usize..500) {
            prop_assume!(n <= len);
            let ranges = bucket_ranges(len, n).unwrap();
            prop_assert_eq!(ranges.len(), n);
            prop_assert_eq!(ranges[0].start, 0);
            prop_assert_eq!(ranges[n - 1].end, len);
            for w in ranges.windows(2) {
                prop_assert_eq!(w[0].end, w[1].start);
                prop_assert!(w[0].len() >= w[1].len());
            }
            let sizes: Vec<usize> = ranges.iter().map(|r| r.len()).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }

        #[test]
        fn max_dominates_mean(v in prop::collection::vec(0.0f64..1e6, 1..400), n in 1usize..50) {
            prop_assume!(n <= v.len());
            let mean = bucketize(&v, n, Reduction::Mean).unwrap();
            let max = bucketize(&v, n, Reduction::Max).unwrap();
            for (a, b) in max.iter().zip(&mean) {
                prop_assert!(a >= &(b * (1.0 - 1e-12)));
            }
        }

        #[test]
        fn parseval(v in prop::collection::vec((-1.0f32..1.0, -1.0f32..1.0), 1..600)) {
            let samples: Vec<Complex32> = v.iter().map(|&(i, q)| Complex32::new(i, q)).collect();
            let n = samples.len() as f64;
            let energy: f64 = samples.iter().map(|s| (s.re as f64).powi(2) + (s.im as f64).powi(2)).sum();
            let mag = fft_magnitude_of(&samples, Taper::None).unwrap();
            let spec: f64 = mag.iter().map(|m| m * m).sum();
            prop_assert!((spec - n * energy).abs() <= 1e-6 * (n * energy).max(1e-300));
        }
    }
}
