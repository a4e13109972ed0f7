use std::fmt;

use super::samples_in;

/// Wire and disk cost of one I/Q sample: two little-endian `f32`.
pub const BYTES_PER_SAMPLE: u64 = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StorageBudget {
    pub bytes_per_sample: u64,
    pub sample_rate_hz: f64,
    pub duration_s: f64,
    pub samples: u64,
    pub total_bytes: u64,
}

impl StorageBudget {
    /// Decimal gigabytes (10^9 bytes).
    pub fn gb(&self) -> f64 {
        self.total_bytes as f64 / 1e9
    }

    /// Binary gibibytes (2^30 bytes).
    pub fn gib(&self) -> f64 {
        self.total_bytes as f64 / (1u64 << 30) as f64
    }
}

impl fmt::Display for StorageBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} bytes ({:.2} GB, {:.2} GiB)",
            self.total_bytes,
            self.gb(),
            self.gib()
        )
    }
}

/// Bytes needed to store `duration_s` of I/Q at `sample_rate_hz`, truncated
/// to whole samples.
pub fn storage_budget(sample_rate_hz: f64, duration_s: f64) -> StorageBudget {
    let samples = samples_in(sample_rate_hz, duration_s);
    StorageBudget {
        bytes_per_sample: BYTES_PER_SAMPLE,
        sample_rate_hz,
        duration_s,
        samples,
        total_bytes: samples * BYTES_PER_SAMPLE,
    }
}
