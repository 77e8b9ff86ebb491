//! Benchmarking toolkit for full-duplex spoken dialogue systems.
//!
//! The crate covers the full evaluation loop: assembling interruption-laden
//! audio sessions from per-utterance recordings ([`corpus`]), streaming them
//! in paced chunks to a duplex model server while recording everything it
//! emits ([`stream`], [`protocol`]), segmenting both sides into utterance
//! timelines ([`segment`]), classifying interaction events such as successful
//! replies and barge-in interrupts ([`events`]), and aggregating everything
//! into a metric report ([`metrics`]). A deterministic scripted server
//! ([`mockd`]) provides a ground-truth oracle for end-to-end tests, and
//! [`judge`]/[`scriptgen`] hold the external-service clients for quality
//! scoring and conversation generation.
//!
//! Signal processing is generic over the sample scalar (see [`num::Sample`]);
//! the concrete aliases below fix `f32` as the working type.

pub mod audio;
pub mod corpus;
pub mod events;
pub mod hashutil;
pub mod judge;
pub mod metrics;
pub mod mockd;
pub mod num;
pub mod protocol;
pub mod scriptgen;
pub mod segment;
pub mod stream;
pub mod svc;

/// Waveform with `f32` samples, the working type throughout the pipeline.
pub type Wave = audio::Waveform<f32>;

/// Double-precision waveform, used where extra headroom matters in tests.
pub type WaveF64 = audio::Waveform<f64>;

/// Sample rate every pipeline stage expects, in Hz.
pub const SAMPLE_RATE_HZ: u32 = 24_000;
