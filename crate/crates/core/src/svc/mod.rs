//! External-service adapters: chat completion, log-probability, ASR and VAD
//! services, plus record/replay implementations that make every
//! service-dependent test offline and deterministic.
//!
//! Replay files are JSON objects keyed by the request's content hash; values
//! are either a single response string or a list consumed sequentially, so a
//! retried request can see a different response.

mod http;
mod replay;

pub use http::{post_wav_for_spans, post_wav_for_transcript, HttpLogprobClient, OpenAiChatClient};
pub use replay::{ReplayChatClient, ReplayFile, ReplayLogprobClient, RecordingChatClient};

use thiserror::Error;

use crate::hashutil::sha256_hex_parts;

#[derive(Debug, Error)]
pub enum SvcError {
    #[error("service request failed: {0}")]
    Request(String),
    #[error("service returned an unusable response: {0}")]
    BadResponse(String),
    #[error("missing credentials: environment variable {0} is not set")]
    MissingCredentials(String),
    #[error("no replay entry for request {key}")]
    ReplayMiss { key: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("replay file error: {0}")]
    Format(#[from] serde_json::Error),
}

/// One chat-completion request.
#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub system: String,
    pub user: String,
    pub temperature: f64,
}

impl ChatRequest {
    /// Content hash used as the replay/record key.
    pub fn key(&self) -> String {
        sha256_hex_parts(&[
            self.system.as_bytes(),
            self.user.as_bytes(),
            format!("{:.3}", self.temperature).as_bytes(),
        ])
    }
}

pub trait ChatClient: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, SvcError>;
}

/// Per-token log-probabilities of the reply given the dialogue context.
pub trait LogprobClient: Send + Sync {
    fn reply_logprobs(&self, context: &str, reply: &str) -> Result<Vec<f64>, SvcError>;
}

pub fn logprob_key(context: &str, reply: &str) -> String {
    sha256_hex_parts(&[context.as_bytes(), reply.as_bytes()])
}

/// Pulls the first JSON object out of a model response, tolerating prose or
/// markdown fences around it.
pub fn extract_json_object(text: &str) -> Option<&str> {
    let start = text.find('{')?;
    let end = text.rfind('}')?;
    (end >= start).then(|| &text[start..=end])
}
