//! Reply-quality scoring clients: six-dimension judge scores and
//! conditioned perplexity.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::svc::{extract_json_object, ChatClient, ChatRequest, LogprobClient, SvcError};

/// Versioned judge prompt shipped with the crate.
pub const JUDGE_PROMPT_VERSION: &str = "v1";
const JUDGE_SYSTEM_PROMPT: &str = include_str!("assets/judge_prompt_v1.txt");

#[derive(Debug, Error)]
pub enum JudgeError {
    #[error("scoring failed after {attempts} attempts: {last}")]
    ScoringFailed { attempts: u32, last: String },
    #[error("score {value} for {field} is outside [1, 10]")]
    OutOfRange { field: &'static str, value: f64 },
    #[error("reply has no tokens, perplexity is undefined")]
    EmptyReply,
    #[error(transparent)]
    Service(#[from] SvcError),
}

/// Six sub-scores on a 1-10 scale plus their arithmetic mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubjectiveScore {
    pub relevance: f64,
    pub encouragement: f64,
    pub simplicity: f64,
    pub flexibility: f64,
    pub practicality: f64,
    pub creativity: f64,
    pub mean: f64,
}

impl SubjectiveScore {
    pub fn from_parts(
        relevance: f64,
        encouragement: f64,
        simplicity: f64,
        flexibility: f64,
        practicality: f64,
        creativity: f64,
    ) -> Result<Self, JudgeError> {
        let fields = [
            ("relevance", relevance),
            ("encouragement", encouragement),
            ("simplicity", simplicity),
            ("flexibility", flexibility),
            ("practicality", practicality),
            ("creativity", creativity),
        ];
        for (field, value) in fields {
            if !(1.0..=10.0).contains(&value) || !value.is_finite() {
                return Err(JudgeError::OutOfRange { field, value });
            }
        }
        let mean = (relevance + encouragement + simplicity + flexibility + practicality
            + creativity)
            / 6.0;
        Ok(Self {
            relevance,
            encouragement,
            simplicity,
            flexibility,
            practicality,
            creativity,
            mean,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct JudgeConfig {
    pub temperature: f64,
    pub max_retries: u32,
    /// Bound on concurrent in-flight requests in [`score_batch`].
    pub max_in_flight: usize,
}

impl Default for JudgeConfig {
    fn default() -> Self {
        Self { temperature: 0.2, max_retries: 3, max_in_flight: 4 }
    }
}

/// Builds the judge request for one (context, reply) pair.
pub fn judge_request(context: &str, reply: &str, temperature: f64) -> ChatRequest {
    ChatRequest {
        system: JUDGE_SYSTEM_PROMPT.to_string(),
        user: format!("Conversation so far:\n{context}\n\nAssistant reply to grade:\n{reply}"),
        temperature,
    }
}

/// Scores one reply. Unparseable or out-of-range responses are retried up to
/// `max_retries` times before surfacing a scoring failure.
pub fn score_reply(
    context: &str,
    reply: &str,
    client: &dyn ChatClient,
    config: &JudgeConfig,
) -> Result<SubjectiveScore, JudgeError> {
    let request = judge_request(context, reply, config.temperature);
    let attempts = config.max_retries.max(1);
    let mut last = String::new();
    for _ in 0..attempts {
        match client.complete(&request) {
            Err(e) => last = e.to_string(),
            Ok(response) => match parse_score_response(&response) {
                Ok(score) => return Ok(score),
                Err(e) => last = e.to_string(),
            },
        }
    }
    Err(JudgeError::ScoringFailed { attempts, last })
}

fn parse_score_response(response: &str) -> Result<SubjectiveScore, JudgeError> {
    #[derive(Deserialize)]
    struct Raw {
        relevance: f64,
        encouragement: f64,
        simplicity: f64,
        flexibility: f64,
        practicality: f64,
        creativity: f64,
    }
    let json = extract_json_object(response)
        .ok_or_else(|| JudgeError::ScoringFailed { attempts: 1, last: "no JSON object".into() })?;
    let raw: Raw = serde_json::from_str(json).map_err(|e| JudgeError::ScoringFailed {
        attempts: 1,
        last: format!("bad JSON: {e}"),
    })?;
    SubjectiveScore::from_parts(
        raw.relevance,
        raw.encouragement,
        raw.simplicity,
        raw.flexibility,
        raw.practicality,
        raw.creativity,
    )
}

/// Batch scoring outcome: one slot per input, plus the failure tally.
#[derive(Debug)]
pub struct BatchScores {
    pub scores: Vec<Option<SubjectiveScore>>,
    pub failures: usize,
}

/// Scores many replies with at most `max_in_flight` concurrent requests.
/// Results keep input order; failed items are `None` and counted.
pub fn score_batch(
    items: &[(String, String)],
    client: &dyn ChatClient,
    config: &JudgeConfig,
) -> BatchScores {
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Mutex;

    let next = AtomicUsize::new(0);
    let results: Vec<Mutex<Option<SubjectiveScore>>> =
        items.iter().map(|_| Mutex::new(None)).collect();
    let workers = config.max_in_flight.max(1).min(items.len().max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= items.len() {
                    break;
                }
                let (context, reply) = &items[i];
                if let Ok(score) = score_reply(context, reply, client, config) {
                    *results[i].lock().unwrap() = Some(score);
                }
            });
        }
    });

    let scores: Vec<Option<SubjectiveScore>> =
        results.into_iter().map(|m| m.into_inner().unwrap()).collect();
    let failures = scores.iter().filter(|s| s.is_none()).count();
    BatchScores { scores, failures }
}

/// Conditioned perplexity from per-token log-probabilities of the reply
/// given the context: `exp(-(1/N) * sum(logprobs))`.
pub fn conditioned_ppl(logprobs: &[f64]) -> Result<f64, JudgeError> {
    if logprobs.is_empty() {
        return Err(JudgeError::EmptyReply);
    }
    let mean = logprobs.iter().sum::<f64>() / logprobs.len() as f64;
    Ok((-mean).exp())
}

/// Fetches reply log-probabilities from the adapter and reduces them.
pub fn conditioned_ppl_for(
    context: &str,
    reply: &str,
    lm: &dyn LogprobClient,
) -> Result<f64, JudgeError> {
    let logprobs = lm.reply_logprobs(context, reply)?;
    conditioned_ppl(&logprobs)
}
