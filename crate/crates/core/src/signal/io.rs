//! Raw `cf32` payloads and their `.meta` sidecars.
//!
//! The payload is headerless: interleaved little-endian `f32` pairs, I then Q,
//! eight bytes per sample. Everything else lives in a UTF-8 `key=value`
//! sidecar next to it so the payload stays readable by ordinary SDR tools.

use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::DateTime;
use rustfft::num_complex::Complex32;

use super::{check_rate, ComplexSample, IqTrace};
use crate::error::{Error, Result};

/// Stream parameters for payloads that arrive without a sidecar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawParams {
    pub sample_rate_hz: f64,
    pub center_freq_hz: f64,
}

/// `<payload>.meta`
pub fn sidecar_path(payload: &Path) -> PathBuf {
    let mut name = OsString::from(payload.as_os_str());
    name.push(".meta");
    PathBuf::from(name)
}

/// Decodes interleaved little-endian float32 I/Q. The byte count must be a
/// multiple of 8; the caller maps the error to its own context.
pub fn decode_cf32(bytes: &[u8]) -> std::result::Result<Vec<ComplexSample>, usize> {
    if bytes.len() % 8 != 0 {
        return Err(bytes.len());
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| {
            Complex32::new(
                f32::from_le_bytes([c[0], c[1], c[2], c[3]]),
                f32::from_le_bytes([c[4], c[5], c[6], c[7]]),
            )
        })
        .collect())
}

pub fn encode_cf32(samples: &[ComplexSample], out: &mut Vec<u8>) {
    out.reserve(samples.len() * 8);
    for s in samples {
        out.extend_from_slice(&s.re.to_le_bytes());
        out.extend_from_slice(&s.im.to_le_bytes());
    }
}

/// Reads a payload and, when present, its sidecar.
///
/// Without a sidecar the caller must supply `fallback`; those parameters are
/// recorded on the returned trace.
pub fn read_trace(path: &Path, fallback: Option<RawParams>) -> Result<IqTrace> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let samples = decode_cf32(&bytes).map_err(|len| Error::MalformedTrace {
        path: path.to_path_buf(),
        len: len as u64,
    })?;
    if let Some(index) = samples
        .iter()
        .position(|s| !(s.re.is_finite() && s.im.is_finite()))
    {
        return Err(Error::CorruptSample { index });
    }

    let meta_path = sidecar_path(path);
    if meta_path.exists() {
        let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let mut trace = parse_sidecar(&text, &meta_path)?;
        trace.samples = samples;
        Ok(trace)
    } else if let Some(p) = fallback {
        IqTrace::new(samples, p.sample_rate_hz, p.center_freq_hz)
    } else {
        Err(Error::Metadata {
            path: meta_path,
            message: "no sidecar and no sample rate/center frequency supplied".into(),
        })
    }
}

/// Writes the payload and always (re)writes the sidecar.
pub fn write_trace(trace: &IqTrace, path: &Path) -> Result<()> {
    if let Some(index) = trace.first_non_finite() {
        return Err(Error::CorruptSample { index });
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::with_capacity(1 << 20, file);
    let mut buf = Vec::with_capacity(64 * 1024);
    for chunk in trace.samples.chunks(8192) {
        buf.clear();
        encode_cf32(chunk, &mut buf);
        w.write_all(&buf).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;

    let meta_path = sidecar_path(path);
    fs::write(&meta_path, format_sidecar(trace)).map_err(|e| Error::io(&meta_path, e))
}

fn format_sidecar(trace: &IqTrace) -> String {
    let mut s = String::new();
    s.push_str(&format!("sample_rate_hz={}\n", trace.sample_rate_hz));
    s.push_str(&format!("center_freq_hz={}\n", trace.center_freq_hz));
    if let Some(label) = &trace.label {
        s.push_str(&format!("label={label}\n"));
    }
    if let Some(seed) = trace.seed {
        s.push_str(&format!("seed={seed}\n"));
    }
    if let Some(at) = &trace.captured_at {
        s.push_str(&format!("captured_at={}\n", at.to_rfc3339()));
    }
    for (k, v) in &trace.extra {
        s.push_str(&format!("{k}={v}\n"));
    }
    s
}

fn parse_sidecar(text: &str, path: &Path) -> Result<IqTrace> {
    let bad = |message: String| Error::Metadata {
        path: path.to_path_buf(),
        message,
    };
    let mut rate = None;
    let mut center = None;
    let mut label = None;
    let mut seed = None;
    let mut captured_at = None;
    let mut extra = Vec::new();

    for (n, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("line {}: expected key=value", n + 1)))?;
        let parse_f64 = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| bad(format!("line {}: {key}: {e}", n + 1)))
        };
        match key.trim() {
            "sample_rate_hz" => rate = Some(parse_f64(value)?),
            "center_freq_hz" => center = Some(parse_f64(value)?),
            "label" => label = Some(value.to_string()),
            "seed" => {
                seed = Some(
                    value
                        .trim()
                        .parse::<u64>()
                        .map_err(|e| bad(format!("line {}: seed: {e}", n + 1)))?,
                )
            }
            "captured_at" => {
                captured_at = Some(
                    DateTime::parse_from_rfc3339(value.trim())
                        .map_err(|e| bad(format!("line {}: captured_at: {e}", n + 1)))?,
                )
            }
            _ => extra.push((key.to_string(), value.to_string())),
        }
    }

    let rate = rate.ok_or_else(|| bad("missing sample_rate_hz".into()))?;
    check_rate(rate).map_err(|e| bad(e.to_string()))?;
    let center = center.ok_or_else(|| bad("missing center_freq_hz".into()))?;
    let mut trace = IqTrace::new(Vec::new(), rate, center).map_err(|e| bad(e.to_string()))?;
    trace.label = label;
    trace.seed = seed;
    trace.captured_at = captured_at;
    trace.extra = extra;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tmp() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn empty_payload_with_caller_rate() {
        let dir = tmp();
        let p = dir.path().join("empty.cf32");
        fs::write(&p, []).unwrap();
        let t = read_trace(
            &p,
            Some(RawParams {
                sample_rate_hz: 20e6,
                center_freq_hz: 0.0,
            }),
        )
        .unwrap();
        assert_eq!(t.len(), 0);
        assert_eq!(t.duration_s(), 0.0);
        assert_eq!(t.sample_rate_hz, 20e6);
    }

    #[test]
    fn hand_encoded_sixteen_bytes() {
        // 1.0 = 0x3f800000, 0.0 = 0, -1.0 = 0xbf800000, little-endian
        let bytes: [u8; 16] = [
            0x00, 0x00, 0x80, 0x3f, 0x00, 0x00, 0x00, 0x00, //
            0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x80, 0xbf,
        ];
        let dir = tmp();
        let p = dir.path().join("two.cf32");
        fs::write(&p, bytes).unwrap();
        let t = read_trace(
            &p,
            Some(RawParams {
                sample_rate_hz: 1.0,
                center_freq_hz: 0.0,
            }),
        )
        .unwrap();
        assert_eq!(t.samples, vec![Complex32::new(1.0, 0.0), Complex32::new(0.0, -1.0)]);
    }

    #[test]
    fn truncated_payload_is_malformed() {
        let dir = tmp();
        let p = dir.path().join("bad.cf32");
        fs::write(&p, [0u8; 12]).unwrap();
        let err = read_trace(&p, Some(RawParams { sample_rate_hz: 1.0, center_freq_hz: 0.0 }))
            .unwrap_err();
        assert!(matches!(err, Error::MalformedTrace { len: 12, .. }));
    }

    #[test]
    fn nan_sample_reports_first_index() {
        let dir = tmp();
        let p = dir.path().join("nan.cf32");
        let mut bytes = Vec::new();
        encode_cf32(
            &[
                Complex32::new(0.0, 0.0),
                Complex32::new(1.0, 1.0),
                Complex32::new(0.0, f32::NAN),
                Complex32::new(f32::INFINITY, 0.0),
            ],
            &mut bytes,
        );
        fs::write(&p, bytes).unwrap();
        let err = read_trace(&p, Some(RawParams { sample_rate_hz: 1.0, center_freq_hz: 0.0 }))
            .unwrap_err();
        assert!(matches!(err, Error::CorruptSample { index: 2 }));
    }

    #[test]
    fn missing_sidecar_without_fallback() {
        let dir = tmp();
        let p = dir.path().join("raw.cf32");
        fs::write(&p, [0u8; 8]).unwrap();
        assert!(matches!(read_trace(&p, None), Err(Error::Metadata { .. })));
    }

    #[test]
    fn two_samples_make_sixteen_bytes() {
        let dir = tmp();
        let p = dir.path().join("t.cf32");
        let t = IqTrace::new(vec![Complex32::new(0.5, 0.25); 2], 8.0, 1.0).unwrap();
        write_trace(&t, &p).unwrap();
        assert_eq!(fs::metadata(&p).unwrap().len(), 16);
        assert!(sidecar_path(&p).exists());
    }

    #[test]
    fn write_rejects_non_finite() {
        let dir = tmp();
        let t = IqTrace::new(vec![Complex32::new(f32::NAN, 0.0)], 8.0, 1.0).unwrap();
        assert!(matches!(
            write_trace(&t, &dir.path().join("x.cf32")),
            Err(Error::CorruptSample { index: 0 })
        ));
    }

    #[test]
    fn unknown_sidecar_keys_survive_rewrite() {
        let dir = tmp();
        let p = dir.path().join("k.cf32");
        fs::write(&p, [0u8; 8]).unwrap();
        fs::write(
            sidecar_path(&p),
            "sample_rate_hz=2000000\ncenter_freq_hz=288000000\nantenna=loop probe\ngain_db=14\n",
        )
        .unwrap();
        let t = read_trace(&p, None).unwrap();
        let q = dir.path().join("k2.cf32");
        write_trace(&t, &q).unwrap();
        let meta = fs::read_to_string(sidecar_path(&q)).unwrap();
        assert!(meta.contains("antenna=loop probe\n"));
        assert!(meta.contains("gain_db=14\n"));
        assert_eq!(read_trace(&q, None).unwrap(), t);
    }

    fn arb_sample() -> impl Strategy<Value = ComplexSample> {
        (
            any::<f32>().prop_filter("finite", |v| v.is_finite()),
            any::<f32>().prop_filter("finite", |v| v.is_finite()),
        )
            .prop_map(|(i, q)| Complex32::new(i, q))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn round_trip_is_bit_exact(
            samples in prop::collection::vec(arb_sample(), 0..300),
            rate in 1.0f64..1e9,
            center in 0.0f64..3e9,
            label in prop::option::of("[a-z0-9_]{1,12}"),
            seed in prop::option::of(any::<u64>()),
            stamp in prop::option::of(0i64..4_000_000_000),
        ) {
            let dir = tmp();
            let p = dir.path().join("rt.cf32");
            let mut t = IqTrace::new(samples, rate, center).unwrap();
            t.label = label;
            t.seed = seed;
            t.captured_at = stamp.map(|s| {
                DateTime::from_timestamp(s, 0).unwrap().fixed_offset()
            });
            write_trace(&t, &p).unwrap();
            let back = read_trace(&p, None).unwrap();
            prop_assert_eq!(back.samples.len(), t.samples.len());
            for (a, b) in back.samples.iter().zip(&t.samples) {
                prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
                prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
            }
            prop_assert_eq!(back.sample_rate_hz.to_bits(), t.sample_rate_hz.to_bits());
            prop_assert_eq!(back.center_freq_hz.to_bits(), t.center_freq_hz.to_bits());
            prop_assert_eq!(&back.label, &t.label);
            prop_assert_eq!(back.seed, t.seed);
            prop_assert_eq!(back.captured_at, t.captured_at);
        }
    }
}
