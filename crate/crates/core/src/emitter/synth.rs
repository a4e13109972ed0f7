use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use rustfft::num_complex::{Complex32, Complex64};

use super::{EmitterProfile, ProgramClassSpec};
use crate::error::{Error, Result};
use crate::rng::rng_from;
use crate::signal::{check_rate, samples_in, IqTrace};

/// Stream id reserved for per-trace draws (tone phases).
const TRACE_STREAM: u64 = 0xffff_ffff;

/// Samples between exact re-anchoring of the tone phasors.
const REANCHOR: usize = 4096;

/// Generates `duration_s` of baseband I/Q for one program class.
///
/// Deterministic in all arguments. The trace is labeled with `class_id` and
/// carries `seed` as provenance.
pub fn synth_trace(
    profile: &EmitterProfile,
    class_id: &str,
    duration_s: f64,
    sample_rate_hz: f64,
    seed: u64,
) -> Result<IqTrace> {
    if !(duration_s > 0.0) {
        return Err(Error::invalid(format!("duration must be positive, got {duration_s}")));
    }
    synth_crypto_session(profile, class_id, 1, 0.0, duration_s, sample_rate_hz, seed)
}

/// `n_bursts` bursts of modulated carrier separated by `gap_s` of noise only,
/// like a device running a cipher once per second and idling in between.
///
/// Randomness is split into ChaCha8 streams: stream `TRACE_STREAM` draws the
/// tone phases, and stream `(class_index << 32) | segment` feeds the noise and
/// impulses of each time segment (burst `b` is segment `2b`, the gap after it
/// `2b + 1`). A single burst therefore reproduces [`synth_trace`] exactly.
pub fn synth_crypto_session(
    profile: &EmitterProfile,
    class_id: &str,
    n_bursts: usize,
    gap_s: f64,
    burst_s: f64,
    sample_rate_hz: f64,
    seed: u64,
) -> Result<IqTrace> {
    profile.validate()?;
    check_rate(sample_rate_hz)?;
    let class_index = profile.class_index(class_id)?;
    let spec = &profile.classes[class_index];
    if n_bursts < 1 {
        return Err(Error::invalid("need at least one burst"));
    }
    if !(burst_s > 0.0) || !(gap_s >= 0.0) {
        return Err(Error::invalid(format!(
            "burst length must be positive and gap non-negative (burst {burst_s}, gap {gap_s})"
        )));
    }
    if spec.max_offset_hz() >= sample_rate_hz / 2.0 {
        return Err(Error::invalid(format!(
            "class `{class_id}` has a tone at {} Hz, outside the ±{} Hz band",
            spec.max_offset_hz(),
            sample_rate_hz / 2.0
        )));
    }

    let burst_len = samples_in(sample_rate_hz, burst_s) as usize;
    let gap_len = samples_in(sample_rate_hz, gap_s) as usize;
    let total = n_bursts * burst_len + (n_bursts - 1) * gap_len;

    let base = rng_from(seed);
    let mut trace_rng = base.clone();
    trace_rng.set_stream(TRACE_STREAM);
    let phases: Vec<f64> = spec
        .envelope_tones
        .iter()
        .map(|_| trace_rng.random::<f64>() * TAU)
        .collect();

    let noise_sigma = 10f64.powf(profile.noise_floor_db / 20.0) / 2f64.sqrt();
    let impulse_amp = 10f64.powf(profile.impulse_gain_db / 20.0);
    let mut samples = vec![Complex32::new(0.0, 0.0); total];

    let mut start = 0usize;
    for segment in 0..(2 * n_bursts - 1) {
        let is_burst = segment % 2 == 0;
        let len = if is_burst { burst_len } else { gap_len };
        let out = &mut samples[start..start + len];
        let mut rng = base.clone();
        rng.set_stream(((class_index as u64) << 32) | segment as u64);

        if is_burst {
            modulated_carrier(spec, &phases, sample_rate_hz, start, out);
        }
        add_noise(&mut rng, noise_sigma, out);
        add_impulses(&mut rng, profile.impulse_rate_hz, impulse_amp, sample_rate_hz, out);
        start += len;
    }

    Ok(IqTrace::new(samples, sample_rate_hz, profile.emission_freq_hz())?
        .with_label(class_id)
        .with_seed(seed))
}

/// Writes `1 + sum(a_k cos(2 pi f_k t + phi_k))` (gated by the duty pattern) into
/// the in-phase component; `offset` is the global index of `out[0]`.
fn modulated_carrier(
    spec: &ProgramClassSpec,
    phases: &[f64],
    rate: f64,
    offset: usize,
    out: &mut [Complex32],
) {
    let mut envelope = vec![0.0f64; out.len()];
    for (tone, &phase) in spec.envelope_tones.iter().zip(phases) {
        let step = Complex64::from_polar(1.0, TAU * tone.offset_hz / rate);
        let mut z = Complex64::new(0.0, 0.0);
        for (i, e) in envelope.iter_mut().enumerate() {
            if i % REANCHOR == 0 {
                let n = (offset + i) as f64;
                let cycles = (tone.offset_hz * n / rate).rem_euclid(1.0);
                z = Complex64::from_polar(1.0, TAU * cycles + phase);
            }
            *e += tone.amplitude * z.re;
            z *= step;
        }
    }
    for (i, (o, e)) in out.iter_mut().zip(&envelope).enumerate() {
        let gate = match spec.duty_pattern {
            Some(d) => {
                let t = (offset + i) as f64 / rate;
                ((t / d.period_s).fract() < d.on_fraction) as u8 as f64
            }
            None => 1.0,
        };
        o.re = (1.0 + gate * e) as f32;
    }
}

fn add_noise(rng: &mut ChaCha8Rng, sigma: f64, out: &mut [Complex32]) {
    for s in out.iter_mut() {
        let i: f64 = StandardNormal.sample(rng);
        let q: f64 = StandardNormal.sample(rng);
        s.re += (sigma * i) as f32;
        s.im += (sigma * q) as f32;
    }
}

fn add_impulses(rng: &mut ChaCha8Rng, rate_hz: f64, amplitude: f64, sample_rate: f64, out: &mut [Complex32]) {
    if rate_hz <= 0.0 || out.is_empty() {
        return;
    }
    let gaps = Exp::new(rate_hz).expect("positive rate");
    let mut t = 0.0f64;
    loop {
        t += gaps.sample(rng) * sample_rate;
        let idx = t as usize;
        if idx >= out.len() {
            break;
        }
        let phase = rng.random::<f64>() * TAU;
        let spike = Complex64::from_polar(amplitude, phase);
        out[idx].re += spike.re as f32;
        out[idx].im += spike.im as f32;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emitter::{high_end_profile, low_end_profile, EnvelopeTone};
    use rustfft::FftPlanner;

    fn quiet(tones: Vec<EnvelopeTone>) -> EmitterProfile {
        EmitterProfile {
            name: "quiet".into(),
            carrier_freq_hz: 16e6,
            harmonic_index: 1,
            noise_floor_db: -200.0,
            impulse_rate_hz: 0.0,
            impulse_gain_db: 0.0,
            classes: vec![ProgramClassSpec::new("a", tones)],
        }
    }

    /// Oracle spectrum: plain rustfft on f64, no shift.
    fn spectrum(t: &IqTrace) -> Vec<f64> {
        let mut buf: Vec<Complex64> = t
            .samples
            .iter()
            .map(|s| Complex64::new(s.re as f64, s.im as f64))
            .collect();
        FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
        buf.iter().map(|c| c.norm()).collect()
    }

    fn top_bins_excluding_dc(mag: &[f64], k: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (1..mag.len()).collect();
        idx.sort_by(|&a, &b| mag[b].total_cmp(&mag[a]));
        idx.truncate(k);
        idx.sort();
        idx
    }

    #[test]
    fn single_tone_gives_two_sidebands() {
        let p = quiet(vec![EnvelopeTone::new(50e3, 0.5)]);
        let t = synth_trace(&p, "a", 0.002, 1e6, 3).unwrap();
        let mag = spectrum(&t);
        let n = mag.len();
        let bin = (50e3 * n as f64 / 1e6).round() as usize;
        assert_eq!(top_bins_excluding_dc(&mag, 2), vec![bin, n - bin]);
        // Nothing else comes close.
        let third = {
            let mut m = mag.clone();
            m[0] = 0.0;
            m[bin] = 0.0;
            m[n - bin] = 0.0;
            m.iter().cloned().fold(0.0, f64::max)
        };
        assert!(third < mag[bin] * 1e-3);
    }

    #[test]
    fn strongest_tone_placement_at_minus_60_db() {
        let mut p = low_end_profile();
        p.noise_floor_db = -60.0;
        p.impulse_rate_hz = 0.0;
        for class in ["prog0", "prog3", "prog8"] {
            let t = synth_trace(&p, class, 0.005, 4e6, 11).unwrap();
            let spec = p.class(class).unwrap();
            let strongest = spec
                .envelope_tones
                .iter()
                .max_by(|a, b| a.amplitude.total_cmp(&b.amplitude))
                .unwrap();
            let mag = spectrum(&t);
            let n = mag.len() as i64;
            let want = (strongest.offset_hz * n as f64 / 4e6).round() as i64;
            let top = top_bins_excluding_dc(&mag, 2);
            for b in top {
                let b = b as i64;
                let d = (b - want).abs().min((b - (n - want)).abs());
                assert!(d <= 1, "{class}: bin {b} vs ±{want}");
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let p = high_end_profile();
        let a = synth_trace(&p, "aes128", 0.001, 20e6, 99).unwrap();
        let b = synth_trace(&p, "aes128", 0.001, 20e6, 99).unwrap();
        let c = synth_trace(&p, "aes128", 0.001, 20e6, 100).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.samples, c.samples);
        assert_eq!(a.label.as_deref(), Some("aes128"));
        assert_eq!(a.seed, Some(99));
        assert_eq!(a.center_freq_hz, 1.4e9);
    }

    #[test]
    fn ten_ms_at_20_mhz() {
        let (_, lo) = crate::emitter::default_profiles();
        let t = synth_trace(&lo, "prog1", 0.01, 20e6, 0).unwrap();
        assert_eq!(t.len(), 200_000);
        assert_eq!(t.center_freq_hz, 288e6);
    }

    #[test]
    fn unknown_class_and_out_of_band_tone() {
        let lo = low_end_profile();
        assert!(matches!(
            synth_trace(&lo, "nope", 0.001, 20e6, 0),
            Err(Error::UnknownClass { .. })
        ));
        // prog3 carries a 1.2 MHz tone, which a 2 MHz capture cannot hold.
        assert!(matches!(
            synth_trace(&lo, "prog3", 0.001, 2e6, 0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(synth_trace(&lo, "prog1", 0.0, 2e6, 0).is_err());
    }

    #[test]
    fn single_burst_session_equals_trace() {
        let p = high_end_profile();
        let a = synth_trace(&p, "3des", 0.002, 20e6, 5).unwrap();
        let b = synth_crypto_session(&p, "3des", 1, 1.0, 0.002, 20e6, 5).unwrap();
        assert_eq!(a, b);
    }

    /// Counts maximal runs where a smoothed amplitude exceeds `threshold`.
    fn active_intervals(t: &IqTrace, smooth: usize, threshold: f64) -> Vec<(usize, usize)> {
        let amp: Vec<f64> = t.samples.iter().map(|s| s.norm() as f64).collect();
        let mut runs = Vec::new();
        let mut acc: f64 = amp[..smooth].iter().sum();
        let mut start = None;
        for i in smooth..=amp.len() {
            let above = acc / smooth as f64 > threshold;
            match (above, start) {
                (true, None) => start = Some(i - smooth),
                (false, Some(s)) => {
                    runs.push((s, i - smooth));
                    start = None;
                }
                _ => {}
            }
            if i < amp.len() {
                acc += amp[i] - amp[i - smooth];
            }
        }
        if let Some(s) = start {
            runs.push((s, amp.len()));
        }
        runs
    }

    #[test]
    fn three_bursts_with_one_second_gaps() {
        let p = high_end_profile();
        let rate = 2e6;
        let t = synth_crypto_session(&p, "aes256", 3, 1.0, 0.2, rate, 17).unwrap();
        assert_eq!(t.len(), samples_in(rate, 3.0 * 0.2 + 2.0 * 1.0) as usize);
        // Idle RMS measured in the middle of the first gap.
        let gap = &t.samples[500_000..2_300_000];
        let idle_rms =
            (gap.iter().map(|s| s.norm_sqr() as f64).sum::<f64>() / gap.len() as f64).sqrt();
        let runs = active_intervals(&t, 2000, 3.0 * idle_rms);
        assert_eq!(runs.len(), 3, "{runs:?}");
        let burst = 400_000usize;
        let gap_len = 2_000_000usize;
        for (b, (s, e)) in runs.iter().enumerate() {
            let expected_start = b * (burst + gap_len);
            assert!(s.abs_diff(expected_start) < 4000, "{b}: {s}");
            assert!(e.abs_diff(expected_start + burst) < 4000, "{b}: {e}");
        }
    }

    /// Power outside DC and the tone bins, per sample.
    fn out_of_tone_rms(t: &IqTrace, tone_bins: &[usize]) -> f64 {
        let mag = spectrum(t);
        let n = mag.len();
        let mut excluded = vec![false; n];
        for &b in tone_bins.iter().chain([0usize].iter()) {
            for d in [n - 1, 0, 1] {
                excluded[(b + d) % n] = true;
                excluded[(n - b + d) % n] = true;
            }
        }
        let p: f64 = mag
            .iter()
            .zip(&excluded)
            .filter(|(_, &x)| !x)
            .map(|(m, _)| m * m)
            .sum();
        (p / (n as f64 * n as f64)).sqrt()
    }

    #[test]
    fn doubling_noise_amplitude_doubles_rms() {
        let mut p = quiet(vec![EnvelopeTone::new(50e3, 0.5)]);
        p.noise_floor_db = -40.0;
        let a = synth_trace(&p, "a", 0.01, 1e6, 8).unwrap();
        p.noise_floor_db += 20.0 * 2f64.log10();
        let b = synth_trace(&p, "a", 0.01, 1e6, 8).unwrap();
        let bin = 500;
        let ratio = out_of_tone_rms(&b, &[bin]) / out_of_tone_rms(&a, &[bin]);
        assert!((ratio - 2.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn impulses_arrive_at_roughly_the_mean_rate() {
        let mut p = quiet(vec![EnvelopeTone::new(10e3, 0.1)]);
        p.impulse_rate_hz = 1000.0;
        p.impulse_gain_db = 20.0;
        let t = synth_trace(&p, "a", 1.0, 100e3, 4).unwrap();
        let spikes = t.samples.iter().filter(|s| s.norm() > 5.0).count();
        // Poisson(1000): four sigma is ~126.
        assert!((870..=1130).contains(&spikes), "{spikes}");
    }
}
