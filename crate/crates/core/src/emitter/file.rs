//! Text format for emitter profiles.
//!
//! ```text
//! format=emsca-profile/1
//! name=low_end
//! carrier_freq_hz=16000000
//! harmonic_index=18
//! noise_floor_db=-30
//! impulse_rate_hz=50
//! impulse_gain_db=20
//!
//! [class prog0]
//! tone=30000 0.3        # offset_hz amplitude, repeatable
//! duty=0.002 0.5        # period_s on_fraction, optional
//! ```
//!
//! Header keys come before the first class block; `#` starts a comment.
//! Version 1 is the only version; files with another `format` are rejected.

use std::fs;
use std::path::Path;

use super::{DutyPattern, EmitterProfile, EnvelopeTone, ProgramClassSpec};
use crate::error::{Error, Result};

pub const PROFILE_FORMAT: &str = "emsca-profile/1";

pub fn format_profile(p: &EmitterProfile) -> String {
    let mut s = format!(
        "format={PROFILE_FORMAT}\nname={}\ncarrier_freq_hz={}\nharmonic_index={}\n\
         noise_floor_db={}\nimpulse_rate_hz={}\nimpulse_gain_db={}\n",
        p.name,
        p.carrier_freq_hz,
        p.harmonic_index,
        p.noise_floor_db,
        p.impulse_rate_hz,
        p.impulse_gain_db
    );
    for c in &p.classes {
        s.push_str(&format!("\n[class {}]\n", c.class_id));
        for t in &c.envelope_tones {
            s.push_str(&format!("tone={} {}\n", t.offset_hz, t.amplitude));
        }
        if let Some(d) = c.duty_pattern {
            s.push_str(&format!("duty={} {}\n", d.period_s, d.on_fraction));
        }
    }
    s
}

pub fn parse_profile(text: &str) -> Result<EmitterProfile> {
    let mut format = None;
    let mut name = None;
    let mut carrier = None;
    let mut harmonic = None;
    let mut noise = None;
    let mut impulse_rate = None;
    let mut impulse_gain = None;
    let mut classes: Vec<ProgramClassSpec> = Vec::new();

    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let err = |message: String| Error::Profile {
            line: line_no,
            message,
        };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('[') {
            let id = header
                .strip_suffix(']')
                .and_then(|h| h.trim().strip_prefix("class"))
                .map(str::trim)
                .filter(|id| !id.is_empty())
                .ok_or_else(|| err(format!("expected `[class <id>]`, got `{line}`")))?;
            classes.push(ProgramClassSpec::new(id, Vec::new()));
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| err(format!("expected key=value, got `{line}`")))?;
        let num = |v: &str| {
            v.parse::<f64>()
                .map_err(|e| err(format!("{key}: `{v}`: {e}")))
        };
        let pair = |v: &str| -> Result<(f64, f64)> {
            let mut it = v.split_whitespace();
            match (it.next(), it.next(), it.next()) {
                (Some(a), Some(b), None) => Ok((num(a)?, num(b)?)),
                _ => Err(err(format!("{key}: expected two numbers, got `{v}`"))),
            }
        };

        if let Some(class) = classes.last_mut() {
            match key {
                "tone" => {
                    let (offset, amp) = pair(value)?;
                    class.envelope_tones.push(EnvelopeTone::new(offset, amp));
                }
                "duty" => {
                    let (period_s, on_fraction) = pair(value)?;
                    class.duty_pattern = Some(DutyPattern {
                        period_s,
                        on_fraction,
                    });
                }
                _ => return Err(err(format!("unknown class key `{key}`"))),
            }
            continue;
        }
        match key {
            "format" => format = Some(value.to_string()),
            "name" => name = Some(value.to_string()),
            "carrier_freq_hz" => carrier = Some(num(value)?),
            "harmonic_index" => {
                harmonic = Some(
                    value
                        .parse::<u32>()
                        .map_err(|e| err(format!("harmonic_index: {e}")))?,
                )
            }
            "noise_floor_db" => noise = Some(num(value)?),
            "impulse_rate_hz" => impulse_rate = Some(num(value)?),
            "impulse_gain_db" => impulse_gain = Some(num(value)?),
            _ => return Err(err(format!("unknown key `{key}`"))),
        }
    }

    let missing = |what: &str| Error::Profile {
        line: 0,
        message: format!("missing `{what}`"),
    };
    match format.as_deref() {
        Some(PROFILE_FORMAT) => {}
        Some(other) => {
            return Err(Error::Profile {
                line: 0,
                message: format!("unsupported format `{other}`, expected `{PROFILE_FORMAT}`"),
            })
        }
        None => return Err(missing("format")),
    }
    let profile = EmitterProfile {
        name: name.unwrap_or_default(),
        carrier_freq_hz: carrier.ok_or_else(|| missing("carrier_freq_hz"))?,
        harmonic_index: harmonic.unwrap_or(1),
        noise_floor_db: noise.ok_or_else(|| missing("noise_floor_db"))?,
        impulse_rate_hz: impulse_rate.unwrap_or(0.0),
        impulse_gain_db: impulse_gain.unwrap_or(0.0),
        classes,
    };
    profile.validate()?;
    Ok(profile)
}

pub fn read_profile(path: &Path) -> Result<EmitterProfile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_profile(&text)
}

pub fn write_profile(profile: &EmitterProfile, path: &Path) -> Result<()> {
    fs::write(path, format_profile(profile)).map_err(|e| Error::io(path, e))
}
