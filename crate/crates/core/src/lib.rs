//! Electromagnetic side-channel triage toolkit.
//!
//! The crate models the whole desk-scale pipeline for inferring what software
//! an IoT device is running from its unintentional emissions:
//!
//! - [`signal`]: complex baseband traces, raw `cf32` payloads with `.meta`
//!   sidecars, segmentation, anti-aliased down-sampling and storage arithmetic.
//! - [`emitter`]: a deterministic synthetic stand-in for a leaking processor
//!   (AM side-bands on a clock carrier, white noise, impulsive interference).
//! - [`features`]: FFT magnitude, middle-half trim and bucketed reduction into
//!   fixed-length feature vectors.
//! - [`mlp`]: a small feed-forward classifier with k-fold cross-validation and
//!   precision/recall/F1 reporting.
//! - [`novelty`]: one-class RBF boundary for firmware-tampering detection.
//! - [`stream`]: paced raw I/Q over TCP, windowed consumption, and a latency
//!   benchmark against a processing deadline.
//! - [`store`]: on-disk corpora with manifests, resampling and splits.
//! - [`experiments`]: the four end-to-end experiments as single calls.
//!
//! The runnable programs under `examples/` walk through each capability.

mod binio;
pub mod dataset;
pub mod emitter;
pub mod error;
pub mod experiments;
pub mod features;
pub mod mlp;
pub mod novelty;
pub mod rng;
pub mod signal;
pub mod stats;
pub mod store;
pub mod stream;

pub use dataset::Dataset;
pub use emitter::{default_profiles, EmitterProfile, ProgramClassSpec};
pub use error::{Error, Result};
pub use features::{FeatureConfig, FeatureVector, Reduction, Trim};
pub use mlp::{MlpConfig, MlpModel};
pub use novelty::{NoveltyConfig, NoveltyModel};
pub use signal::{ComplexSample, IqTrace};
