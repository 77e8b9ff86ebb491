//! HTTP implementations of the service adapters.
//!
//! The chat client speaks the OpenAI-style `/v1/chat/completions` shape with
//! credentials taken from an environment variable. The ASR, VAD, and
//! log-probability endpoints use a minimal JSON contract documented in the
//! project README, intended for thin user-written wrappers around whatever
//! actually serves the model.

use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use crate::audio::wav_bytes;
use crate::segment::{SegmentSpan, Transcript};
use crate::Wave;

use super::{ChatClient, ChatRequest, LogprobClient, SvcError};

const HTTP_TIMEOUT: Duration = Duration::from_secs(120);

fn http_client() -> Result<reqwest::blocking::Client, SvcError> {
    reqwest::blocking::Client::builder()
        .timeout(HTTP_TIMEOUT)
        .build()
        .map_err(|e| SvcError::Request(e.to_string()))
}

/// Chat-completions client for the judge and the script generator.
pub struct OpenAiChatClient {
    pub base_url: String,
    pub model: String,
    /// Environment variable holding the API key; no header is sent when the
    /// variable name is empty.
    pub api_key_env: String,
}

impl OpenAiChatClient {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            model: model.into(),
            api_key_env: "OPENAI_API_KEY".into(),
        }
    }
}

impl ChatClient for OpenAiChatClient {
    fn complete(&self, request: &ChatRequest) -> Result<String, SvcError> {
        let url = format!("{}/v1/chat/completions", self.base_url.trim_end_matches('/'));
        let body = json!({
            "model": self.model,
            "temperature": request.temperature,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
        });
        let mut req = http_client()?.post(url).json(&body);
        if !self.api_key_env.is_empty() {
            let key = std::env::var(&self.api_key_env)
                .map_err(|_| SvcError::MissingCredentials(self.api_key_env.clone()))?;
            req = req.bearer_auth(key);
        }
        let response = req.send().map_err(|e| SvcError::Request(e.to_string()))?;
        if !response.status().is_success() {
            return Err(SvcError::Request(format!("status {}", response.status())));
        }

        #[derive(Deserialize)]
        struct Completion {
            choices: Vec<Choice>,
        }
        #[derive(Deserialize)]
        struct Choice {
            message: Message,
        }
        #[derive(Deserialize)]
        struct Message {
            content: String,
        }
        let completion: Completion =
            response.json().map_err(|e| SvcError::BadResponse(e.to_string()))?;
        completion
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| SvcError::BadResponse("no choices in completion".into()))
    }
}

/// Log-probability service client: POST `{context, reply}`, receive
/// `{"logprobs": [...]}` with one value per reply token.
pub struct HttpLogprobClient {
    pub url: String,
}

impl LogprobClient for HttpLogprobClient {
    fn reply_logprobs(&self, context: &str, reply: &str) -> Result<Vec<f64>, SvcError> {
        let response = http_client()?
            .post(&self.url)
            .json(&json!({"context": context, "reply": reply}))
            .send()
            .map_err(|e| SvcError::Request(e.to_string()))?;
        if !response.status().is_success() {
            return Err(SvcError::Request(format!("status {}", response.status())));
        }
        #[derive(Deserialize)]
        struct Logprobs {
            logprobs: Vec<f64>,
        }
        let parsed: Logprobs =
            response.json().map_err(|e| SvcError::BadResponse(e.to_string()))?;
        Ok(parsed.logprobs)
    }
}

/// ASR service call: WAV bytes in, `{"text": ..., "words": [...]}` out.
pub fn post_wav_for_transcript(
    url: &str,
    wave: &Wave,
    beam_size: u32,
) -> Result<Transcript, SvcError> {
    let bytes = wav_bytes(wave).map_err(|e| SvcError::Request(e.to_string()))?;
    let response = http_client()?
        .post(url)
        .query(&[("beam_size", beam_size.to_string())])
        .header("content-type", "audio/wav")
        .body(bytes)
        .send()
        .map_err(|e| SvcError::Request(e.to_string()))?;
    if !response.status().is_success() {
        return Err(SvcError::Request(format!("status {}", response.status())));
    }
    response.json().map_err(|e| SvcError::BadResponse(e.to_string()))
}

/// VAD service call: WAV bytes in, JSON list of `{start_ms, end_ms}` out.
pub fn post_wav_for_spans(
    url: &str,
    wave: &Wave,
    threshold: f64,
) -> Result<Vec<SegmentSpan>, SvcError> {
    let bytes = wav_bytes(wave).map_err(|e| SvcError::Request(e.to_string()))?;
    let response = http_client()?
        .post(url)
        .query(&[("threshold", threshold.to_string())])
        .header("content-type", "audio/wav")
        .body(bytes)
        .send()
        .map_err(|e| SvcError::Request(e.to_string()))?;
    if !response.status().is_success() {
        return Err(SvcError::Request(format!("status {}", response.status())));
    }
    response.json().map_err(|e| SvcError::BadResponse(e.to_string()))
}
