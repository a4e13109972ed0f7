use emsca::features::{fft_magnitude, fft_magnitude_of, Taper};
use emsca::signal::{ComplexSample, IqTrace};
use proptest::prelude::*;

/// Plain O(N^2) DFT with the output arranged the same way as the library:
/// index `j` holds frequency bin `j - N/2`.
fn naive_centered_magnitude(x: &[ComplexSample]) -> Vec<f64> {
    let n = x.len();
    let twiddle: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let a = -2.0 * std::f64::consts::PI * k as f64 / n as f64;
            (a.cos(), a.sin())
        })
        .collect();
    let bin = |k: usize| {
        let (mut re, mut im) = (0.0f64, 0.0f64);
        for (t, s) in x.iter().enumerate() {
            let (c, si) = twiddle[(k * t) % n];
            let (a, b) = (s.re as f64, s.im as f64);
            re += a * c - b * si;
            im += a * si + b * c;
        }
        (re * re + im * im).sqrt()
    };
    let half = n / 2;
    (0..n).map(|j| bin((j + n - half) % n)).collect()
}

fn max_relative_error(got: &[f64], want: &[f64]) -> f64 {
    let scale = want.iter().copied().fold(0.0, f64::max);
    got.iter()
        .zip(want)
        .map(|(g, w)| (g - w).abs() / w.abs().max(1e-9 * scale).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

fn samples(n: usize) -> impl Strategy<Value = Vec<ComplexSample>> {
    prop::collection::vec((-10.0f32..10.0, -10.0f32..10.0), n)
        .prop_map(|v| v.into_iter().map(|(re, im)| ComplexSample::new(re, im)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn matches_naive_dft_n16(x in samples(16)) {
        let got = fft_magnitude_of(&x, Taper::None).unwrap();
        prop_assert!(max_relative_error(&got, &naive_centered_magnitude(&x)) < 1e-6);
    }

    #[test]
    fn matches_naive_dft_n256(x in samples(256)) {
        let got = fft_magnitude_of(&x, Taper::None).unwrap();
        prop_assert!(max_relative_error(&got, &naive_centered_magnitude(&x)) < 1e-6);
    }

    #[test]
    fn matches_naive_dft_odd_lengths(x in (1usize..300).prop_flat_map(samples)) {
        let got = fft_magnitude_of(&x, Taper::None).unwrap();
        prop_assert!(max_relative_error(&got, &naive_centered_magnitude(&x)) < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn matches_naive_dft_n4096(x in samples(4096)) {
        let got = fft_magnitude_of(&x, Taper::None).unwrap();
        prop_assert!(max_relative_error(&got, &naive_centered_magnitude(&x)) < 1e-6);
    }
}

#[test]
fn single_tone_lands_on_its_bin() {
    let n = 256;
    let k = 37;
    let x: Vec<ComplexSample> = (0..n)
        .map(|t| {
            let a = 2.0 * std::f64::consts::PI * (k * t) as f64 / n as f64;
            ComplexSample::new(a.cos() as f32, a.sin() as f32)
        })
        .collect();
    let trace = IqTrace::new(x, 1e6, 0.0).unwrap();
    let mag = fft_magnitude(&trace).unwrap();
    let peak = mag.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    assert_eq!(peak, n / 2 + k);
    assert!((mag[peak] - n as f64).abs() < 1e-3);
}

#[test]
fn parseval_holds() {
    let x: Vec<ComplexSample> = (0..1000)
        .map(|t| ComplexSample::new(((t * 7919) % 13) as f32 - 6.0, ((t * 104729) % 5) as f32 - 2.0))
        .collect();
    let mag = fft_magnitude_of(&x, Taper::None).unwrap();
    let time: f64 = x.iter().map(|s| s.norm_sqr() as f64).sum();
    let freq: f64 = mag.iter().map(|m| m * m).sum::<f64>() / x.len() as f64;
    assert!((time - freq).abs() / time < 1e-10);
}
