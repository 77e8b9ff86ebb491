//! Conversation generation client with schema validation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{parse_script_json, validate_script, ConversationScript, InterruptType};
use crate::svc::{extract_json_object, ChatClient, ChatRequest, SvcError};

pub const SCRIPTGEN_PROMPT_VERSION: &str = "v1";
const SCRIPTGEN_SYSTEM_PROMPT: &str = include_str!("assets/scriptgen_prompt_v1.txt");

#[derive(Debug, Error)]
pub enum ScriptGenError {
    #[error("generation service failed: {0}")]
    Service(#[from] SvcError),
    #[error(
        "script {script_index} still invalid after {attempts} attempts; last problems: {last:?}"
    )]
    RetryBudgetExhausted { script_index: usize, attempts: u32, last: Vec<String> },
}

#[derive(Debug, Clone, Copy)]
pub struct GenParams {
    /// Attempts per script before giving up.
    pub retry_budget: u32,
    pub temperature: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        Self { retry_budget: 3, temperature: 0.7 }
    }
}

/// Builds the generation request for one conversation.
pub fn generation_request(conversation_id: &str, topic: &str, temperature: f64) -> ChatRequest {
    ChatRequest {
        system: SCRIPTGEN_SYSTEM_PROMPT.to_string(),
        user: format!("conversation_id: {conversation_id}\ntopic: {topic}"),
        temperature,
    }
}

/// Requests `count` conversations, cycling through `topics`. Scripts that
/// fail schema validation are regenerated up to the retry budget.
pub fn generate_scripts(
    topics: &[String],
    count: usize,
    client: &dyn ChatClient,
    params: &GenParams,
) -> Result<Vec<ConversationScript>, ScriptGenError> {
    let mut scripts = Vec::with_capacity(count);
    for i in 0..count {
        let topic = topics.get(i % topics.len().max(1)).map(String::as_str).unwrap_or("daily life");
        let conversation_id = format!("conv{i:04}");
        let request = generation_request(&conversation_id, topic, params.temperature);
        let attempts = params.retry_budget.max(1);
        let mut last: Vec<String> = Vec::new();
        let mut accepted = None;
        for _ in 0..attempts {
            let response = client.complete(&request)?;
            let json = extract_json_object(&response).unwrap_or(&response);
            match parse_script_json(json) {
                Err(e) => last = vec![format!("parse error: {e}")],
                Ok(doc) => match validate_script(&doc) {
                    Ok(script) => {
                        accepted = Some(script);
                        break;
                    }
                    Err(violations) => {
                        last = violations.iter().map(|v| v.to_string()).collect()
                    }
                },
            }
        }
        match accepted {
            Some(script) => scripts.push(script),
            None => {
                return Err(ScriptGenError::RetryBudgetExhausted {
                    script_index: i,
                    attempts,
                    last,
                })
            }
        }
    }
    Ok(scripts)
}

/// Interruption statistics of a script corpus, in the shape of a summary
/// table row: per-type label counts and the number of interruption
/// utterances. A dual-labeled utterance counts under both its types but
/// once in the total.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub conversations: usize,
    pub type_counts: BTreeMap<InterruptType, usize>,
    pub total_interruptions: usize,
}

pub fn corpus_stats(scripts: &[ConversationScript]) -> CorpusStats {
    let mut type_counts: BTreeMap<InterruptType, usize> = BTreeMap::new();
    let mut total = 0usize;
    for script in scripts {
        for round in &script.rounds {
            for interruption in &round.interruptions {
                total += 1;
                *type_counts.entry(interruption.kind).or_insert(0) += 1;
                if let Some(second) = interruption.secondary_type {
                    *type_counts.entry(second).or_insert(0) += 1;
                }
            }
        }
    }
    CorpusStats { conversations: scripts.len(), type_counts, total_interruptions: total }
}

impl std::fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "convs={}", self.conversations)?;
        for ty in InterruptType::ALL {
            write!(f, " {}={}", ty, self.type_counts.get(&ty).copied().unwrap_or(0))?;
        }
        write!(f, " total={}", self.total_interruptions)
    }
}
