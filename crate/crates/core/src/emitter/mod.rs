//! Synthetic model of a leaking processor.
//!
//! Software activity amplitude-modulates a clock-derived carrier, which shows
//! up as side-bands at `carrier ± f_alt`. Simulation happens at baseband: the
//! carrier sits at DC and each program class contributes a set of envelope
//! tones. White Gaussian noise and Poisson-timed impulses are added on top.
//! Carrier frequency and harmonic index are provenance metadata; they set the
//! center frequency recorded on every synthesized trace.

mod file;
mod synth;

use crate::error::{Error, Result};

pub use file::{format_profile, parse_profile, read_profile, write_profile, PROFILE_FORMAT};
pub use synth::{synth_crypto_session, synth_trace};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeTone {
    /// Modulation frequency `f_alt`; side-bands appear at ±`offset_hz`.
    pub offset_hz: f64,
    /// Modulation depth relative to the carrier, in (0, 1].
    pub amplitude: f64,
}

impl EnvelopeTone {
    pub const fn new(offset_hz: f64, amplitude: f64) -> Self {
        EnvelopeTone {
            offset_hz,
            amplitude,
        }
    }
}

/// Periodic on/off gating of the modulation (bursty workloads).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DutyPattern {
    pub period_s: f64,
    pub on_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProgramClassSpec {
    pub class_id: String,
    pub envelope_tones: Vec<EnvelopeTone>,
    pub duty_pattern: Option<DutyPattern>,
}

impl ProgramClassSpec {
    pub fn new(class_id: impl Into<String>, envelope_tones: Vec<EnvelopeTone>) -> Self {
        ProgramClassSpec {
            class_id: class_id.into(),
            envelope_tones,
            duty_pattern: None,
        }
    }

    pub fn with_duty(mut self, period_s: f64, on_fraction: f64) -> Self {
        self.duty_pattern = Some(DutyPattern {
            period_s,
            on_fraction,
        });
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.class_id.is_empty() || self.class_id.contains(char::is_whitespace) {
            return Err(Error::invalid(format!(
                "class id `{}` must be non-empty without whitespace",
                self.class_id
            )));
        }
        if self.envelope_tones.is_empty() {
            return Err(Error::invalid(format!(
                "class `{}` needs at least one envelope tone",
                self.class_id
            )));
        }
        for t in &self.envelope_tones {
            if !(t.amplitude > 0.0 && t.amplitude <= 1.0) || !t.offset_hz.is_finite() {
                return Err(Error::invalid(format!(
                    "class `{}`: tone {:?} needs a finite offset and amplitude in (0, 1]",
                    self.class_id, t
                )));
            }
        }
        if let Some(d) = self.duty_pattern {
            if !(d.period_s > 0.0) || !(d.on_fraction > 0.0 && d.on_fraction <= 1.0) {
                return Err(Error::invalid(format!(
                    "class `{}`: bad duty pattern {d:?}",
                    self.class_id
                )));
            }
        }
        Ok(())
    }

    /// Largest |f_alt| among the envelope tones.
    pub fn max_offset_hz(&self) -> f64 {
        self.envelope_tones
            .iter()
            .map(|t| t.offset_hz.abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmitterProfile {
    pub name: String,
    /// Fundamental clock frequency of the processor.
    pub carrier_freq_hz: f64,
    /// Harmonic of the clock that leaks most; 1 is the fundamental.
    pub harmonic_index: u32,
    /// Noise power relative to the carrier, dB (negative).
    pub noise_floor_db: f64,
    /// Mean rate of impulsive interference spikes.
    pub impulse_rate_hz: f64,
    /// Spike amplitude relative to the carrier, dB.
    pub impulse_gain_db: f64,
    pub classes: Vec<ProgramClassSpec>,
}

impl EmitterProfile {
    /// Frequency of the observed emission: carrier × harmonic index.
    pub fn emission_freq_hz(&self) -> f64 {
        self.carrier_freq_hz * self.harmonic_index as f64
    }

    pub fn class_ids(&self) -> Vec<String> {
        self.classes.iter().map(|c| c.class_id.clone()).collect()
    }

    pub fn class_index(&self, class_id: &str) -> Result<usize> {
        self.classes
            .iter()
            .position(|c| c.class_id == class_id)
            .ok_or_else(|| Error::UnknownClass {
                class: class_id.to_string(),
                known: self.class_ids(),
            })
    }

    pub fn class(&self, class_id: &str) -> Result<&ProgramClassSpec> {
        Ok(&self.classes[self.class_index(class_id)?])
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.carrier_freq_hz > 0.0) || !self.carrier_freq_hz.is_finite() {
            return Err(Error::invalid("carrier frequency must be positive"));
        }
        if self.harmonic_index < 1 {
            return Err(Error::invalid("harmonic index must be at least 1"));
        }
        if !(self.noise_floor_db < 0.0) {
            return Err(Error::invalid(format!(
                "noise floor must be below the carrier, got {} dB",
                self.noise_floor_db
            )));
        }
        if !(self.impulse_rate_hz >= 0.0) || !self.impulse_gain_db.is_finite() {
            return Err(Error::invalid("impulse rate must be >= 0 with a finite gain"));
        }
        for (i, c) in self.classes.iter().enumerate() {
            c.validate()?;
            if self.classes[..i].iter().any(|o| o.class_id == c.class_id) {
                return Err(Error::invalid(format!("duplicate class id `{}`", c.class_id)));
            }
        }
        Ok(())
    }

    /// Replaces the class list, keeping every emitter parameter.
    pub fn with_classes(&self, classes: Vec<ProgramClassSpec>) -> Self {
        EmitterProfile {
            classes,
            ..self.clone()
        }
    }
}

/// Synthetic noise floor used by the bundled profiles, dB below the carrier.
pub const DEFAULT_NOISE_FLOOR_DB: f64 = -30.0;

/// The two bundled device profiles: a 1.4 GHz single-board computer observed
/// at its fundamental with four crypto workloads, and a 16 MHz
/// microcontroller observed at its 18th harmonic with ten programs.
pub fn default_profiles() -> (EmitterProfile, EmitterProfile) {
    (high_end_profile(), low_end_profile())
}

pub fn high_end_profile() -> EmitterProfile {
    let t = EnvelopeTone::new;
    // Two narrow-band groups split by a wide-band tone: below ~1 MHz of
    // bandwidth the wide tones fall out of view and pairs become identical.
    EmitterProfile {
        name: "high_end".into(),
        carrier_freq_hz: 1.4e9,
        harmonic_index: 1,
        noise_floor_db: DEFAULT_NOISE_FLOOR_DB,
        impulse_rate_hz: 50.0,
        impulse_gain_db: 20.0,
        classes: vec![
            ProgramClassSpec::new("other", vec![t(45e3, 0.30), t(700e3, 0.25)]),
            ProgramClassSpec::new("aes256", vec![t(45e3, 0.30), t(850e3, 0.25)]),
            ProgramClassSpec::new("aes128", vec![t(110e3, 0.30), t(700e3, 0.25)]),
            ProgramClassSpec::new("3des", vec![t(110e3, 0.30), t(850e3, 0.25)]),
        ],
    }
}

pub fn low_end_profile() -> EmitterProfile {
    let t = EnvelopeTone::new;
    let p = |i: usize, tones| ProgramClassSpec::new(format!("prog{i}"), tones);
    EmitterProfile {
        name: "low_end".into(),
        carrier_freq_hz: 16e6,
        harmonic_index: 18,
        noise_floor_db: DEFAULT_NOISE_FLOOR_DB,
        impulse_rate_hz: 50.0,
        impulse_gain_db: 20.0,
        classes: vec![
            p(0, vec![t(30e3, 0.30), t(600e3, 0.20)]),
            p(1, vec![t(60e3, 0.30)]),
            p(2, vec![t(90e3, 0.30), t(300e3, 0.20)]),
            p(3, vec![t(120e3, 0.30), t(1.2e6, 0.20)]),
            p(4, vec![t(150e3, 0.30), t(450e3, 0.20)]),
            p(5, vec![t(180e3, 0.30), t(1.5e6, 0.20)]),
            p(6, vec![t(210e3, 0.30), t(1.8e6, 0.20)]).with_duty(2e-3, 0.5),
            // prog7..prog9 share their narrow-band tone and differ only above 0.5 MHz.
            p(7, vec![t(240e3, 0.30), t(700e3, 0.25)]),
            p(8, vec![t(240e3, 0.30), t(800e3, 0.25)]),
            p(9, vec![t(240e3, 0.30), t(900e3, 0.25)]),
        ],
    }
}

/// `count` tampered variants of `base`: each keeps the legitimate envelope
/// and adds one extra tone, as a patched firmware adds new activity.
pub fn modified_variants(base: &ProgramClassSpec, count: usize) -> Vec<ProgramClassSpec> {
    (0..count)
        .map(|i| {
            let mut spec = base.clone();
            spec.class_id = format!("{}_mod{i:02}", base.class_id);
            let offset = 75e3 + 43e3 * i as f64;
            spec.envelope_tones.push(EnvelopeTone::new(offset, 0.12));
            spec
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_profiles_are_valid() {
        let (hi, lo) = default_profiles();
        hi.validate().unwrap();
        lo.validate().unwrap();
    }

    #[test]
    fn paper_frequencies() {
        let (hi, lo) = default_profiles();
        assert_eq!(lo.emission_freq_hz(), 288e6);
        assert_eq!(hi.carrier_freq_hz, 1.4e9);
        assert_eq!(hi.harmonic_index, 1);
        assert_eq!(hi.class_ids(), ["other", "aes256", "aes128", "3des"]);
        assert_eq!(lo.classes.len(), 10);
        for (i, c) in lo.classes.iter().enumerate() {
            assert_eq!(c.class_id, format!("prog{i}"));
        }
    }

    #[test]
    fn low_end_classes_pairwise_distinct() {
        let lo = low_end_profile();
        for (i, a) in lo.classes.iter().enumerate() {
            for b in &lo.classes[i + 1..] {
                assert_ne!(a.envelope_tones, b.envelope_tones, "{} vs {}", a.class_id, b.class_id);
            }
        }
    }

    #[test]
    fn at_least_three_classes_differ_only_above_half_mhz() {
        let lo = low_end_profile();
        let narrow = |c: &ProgramClassSpec| {
            c.envelope_tones
                .iter()
                .filter(|t| t.offset_hz.abs() <= 0.5e6)
                .copied()
                .collect::<Vec<_>>()
        };
        let groups = lo
            .classes
            .iter()
            .map(|c| lo.classes.iter().filter(|o| narrow(o) == narrow(c)).count())
            .max()
            .unwrap();
        assert!(groups >= 3);
    }

    #[test]
    fn unknown_class_lists_known() {
        let lo = low_end_profile();
        match lo.class("prog42") {
            Err(Error::UnknownClass { known, .. }) => assert_eq!(known.len(), 10),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicates_and_bad_tones() {
        let mut p = high_end_profile();
        p.classes.push(p.classes[0].clone());
        assert!(p.validate().is_err());
        let mut p = high_end_profile();
        p.classes[0].envelope_tones[0].amplitude = 1.5;
        assert!(p.validate().is_err());
        let mut p = high_end_profile();
        p.classes[0].envelope_tones.clear();
        assert!(p.validate().is_err());
        let mut p = high_end_profile();
        p.noise_floor_db = 3.0;
        assert!(p.validate().is_err());
        let mut p = high_end_profile();
        p.harmonic_index = 0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn variants_are_distinct_from_base_and_each_other() {
        let base = &low_end_profile().classes[0];
        let mods = modified_variants(base, 20);
        assert_eq!(mods.len(), 20);
        for (i, m) in mods.iter().enumerate() {
            assert_ne!(m.envelope_tones, base.envelope_tones);
            for o in &mods[i + 1..] {
                assert_ne!(m.envelope_tones, o.envelope_tones);
            }
            m.validate().unwrap();
        }
    }
}
