//! Deterministic scripted full-duplex server.
//!
//! The server reacts to input speech energy with configurable reply and
//! barge-in behavior. Its output is a 440 Hz tone (trivially detectable by
//! the segmenter) plus a fixed text sentence per reply. Behavior is a pure
//! function of the input chunk sequence and the clock, which makes it a
//! ground-truth oracle for end-to-end metric tests: the same chunks at the
//! same timestamps always produce the same frames.

mod machine;
mod server;

pub use machine::{MockMachine, MockOutput, REPLY_TEXT, REPLY_TONE_HZ};
pub use server::{serve_blocking, spawn_server, MockServer};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MockError {
    #[error("invalid behavior: {0}")]
    InvalidBehavior(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("behavior file error: {0}")]
    Parse(#[from] serde_json::Error),
}

/// Scripted server behavior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorScript {
    /// Delay after the detected end of user speech before replying.
    pub reply_delay_ms: i64,
    /// Length of each reply.
    pub reply_duration_ms: i64,
    /// Whether detected user speech halts an ongoing reply.
    pub stop_on_barge_in: bool,
    /// Delay after a detected barge-in onset before output halts.
    pub barge_in_stop_delay_ms: i64,
    /// Whether a reply is scheduled after an interrupting utterance ends.
    pub resume_after_interrupt: bool,
    /// Start replying this long before the expected end of the current
    /// utterance; 0 disables early replies.
    #[serde(default)]
    pub early_reply_lead_ms: i64,
    /// Utterance duration the early-reply schedule assumes. Required when
    /// `early_reply_lead_ms` is nonzero; the oracle cannot see the future,
    /// so tests feed it utterances of exactly this length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assumed_utterance_ms: Option<i64>,
    /// Mean absolute amplitude treated as "speech present", in (0, 1).
    pub react_to_energy_threshold: f64,
}

impl Default for BehaviorScript {
    fn default() -> Self {
        Self {
            reply_delay_ms: 500,
            reply_duration_ms: 3000,
            stop_on_barge_in: true,
            barge_in_stop_delay_ms: 300,
            resume_after_interrupt: true,
            early_reply_lead_ms: 0,
            assumed_utterance_ms: None,
            react_to_energy_threshold: 0.05,
        }
    }
}

impl BehaviorScript {
    pub fn validate(&self) -> Result<(), MockError> {
        if self.reply_delay_ms < 0
            || self.reply_duration_ms < 0
            || self.barge_in_stop_delay_ms < 0
            || self.early_reply_lead_ms < 0
        {
            return Err(MockError::InvalidBehavior("delays must be >= 0".into()));
        }
        if !(self.react_to_energy_threshold > 0.0 && self.react_to_energy_threshold < 1.0) {
            return Err(MockError::InvalidBehavior(
                "react_to_energy_threshold must be in (0, 1)".into(),
            ));
        }
        if self.early_reply_lead_ms > 0 && self.assumed_utterance_ms.is_none() {
            return Err(MockError::InvalidBehavior(
                "early_reply_lead_ms requires assumed_utterance_ms".into(),
            ));
        }
        Ok(())
    }

    pub fn read_file(path: &std::path::Path) -> Result<Self, MockError> {
        let behavior: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        behavior.validate()?;
        Ok(behavior)
    }

    pub fn write_file(&self, path: &std::path::Path) -> Result<(), MockError> {
        std::fs::write(path, serde_json::to_string_pretty(self).expect("serializes"))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_behavior_is_valid() {
        BehaviorScript::default().validate().unwrap();
    }

    #[test]
    fn threshold_bounds_are_enforced() {
        let mut b = BehaviorScript::default();
        b.react_to_energy_threshold = 1.0;
        assert!(b.validate().is_err());
        b.react_to_energy_threshold = 0.0;
        assert!(b.validate().is_err());
    }

    #[test]
    fn early_reply_requires_assumed_duration() {
        let mut b = BehaviorScript::default();
        b.early_reply_lead_ms = 2500;
        assert!(b.validate().is_err());
        b.assumed_utterance_ms = Some(4000);
        b.validate().unwrap();
    }
}
