//! Conversation scripts and session corpus assembly.
//!
//! A [`ConversationScript`] describes a multi-round user/assistant dialogue
//! with typed interruption annotations. [`assemble_session`] turns the
//! per-utterance audio for one script into a single session waveform with
//! difficulty-controlled silence gaps, emitting a ground-truth
//! [`SessionManifest`]. [`mix_noise`] injects SNR-controlled noise either
//! across the whole session or only into the silence gaps.

mod assemble;
mod manifest;
mod noise;
mod script;

pub use assemble::assemble_session;
pub use manifest::{Difficulty, GapSpan, NoiseMode, SessionManifest, UserSegment};
pub use noise::{mix_noise, realized_snr_db};
pub use script::{
    parse_script_json, validate_script, ConversationScript, InterruptType, Interruption,
    InterruptionDoc, Round, RoundDoc, ScriptDoc, UtteranceSpec, Violation,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("malformed script document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("script is invalid: {0:?}")]
    InvalidScript(Vec<Violation>),
    #[error("script expects {expected} utterance waveforms, got {got}")]
    UtteranceCountMismatch { expected: usize, got: usize },
    #[error("utterance {index} has sample rate {got} Hz, expected {expected} Hz")]
    BadSampleRate { index: usize, expected: u32, got: u32 },
    #[error("utterance {index} is empty")]
    EmptyUtterance { index: usize },
    #[error("noise source is empty")]
    EmptyNoise,
    #[error("signal region is silent, SNR is undefined")]
    UndefinedSnr,
    #[error("noise has zero power over the insertion span")]
    ZeroNoisePower,
    #[error("manifest is inconsistent: {0}")]
    InvalidManifest(String),
    #[error("audio error: {0}")]
    Audio(#[from] crate::audio::AudioError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
