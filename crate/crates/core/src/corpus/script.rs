//! Conversation script schema and validation.

use serde::{Deserialize, Serialize};

use super::CorpusError;

pub const MAX_ROUNDS: usize = 5;
pub const MAX_INTERRUPTIONS: usize = 4;

/// The five interruption categories: affirmative acknowledgment, denial and
/// discontent, further inquiry, requiring a repeat, and topic shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum InterruptType {
    A,
    D,
    F,
    R,
    S,
}

impl InterruptType {
    pub const ALL: [InterruptType; 5] = [
        InterruptType::A,
        InterruptType::D,
        InterruptType::F,
        InterruptType::R,
        InterruptType::S,
    ];

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "A" => Some(Self::A),
            "D" => Some(Self::D),
            "F" => Some(Self::F),
            "R" => Some(Self::R),
            "S" => Some(Self::S),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::A => "A",
            Self::D => "D",
            Self::F => "F",
            Self::R => "R",
            Self::S => "S",
        }
    }
}

impl std::fmt::Display for InterruptType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Raw script document as parsed from JSON. Interruption types are kept as
/// strings so that an unknown type surfaces as a semantic violation, not a
/// parse error.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScriptDoc {
    pub conversation_id: String,
    #[serde(default)]
    pub topic: String,
    pub rounds: Vec<RoundDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundDoc {
    pub user_text: String,
    #[serde(default)]
    pub interruptions: Vec<InterruptionDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InterruptionDoc {
    #[serde(rename = "type")]
    pub kind: String,
    pub text: String,
    /// Second label for utterances that combine an acknowledgment or denial
    /// with a further inquiry or topic shift.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secondary_type: Option<String>,
}

/// Validated conversation script.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversationScript {
    pub conversation_id: String,
    pub topic: String,
    pub rounds: Vec<Round>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Round {
    pub user_text: String,
    pub interruptions: Vec<Interruption>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interruption {
    #[serde(rename = "type")]
    pub kind: InterruptType,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secondary_type: Option<InterruptType>,
}

/// A broken validation rule, naming the offending field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl Violation {
    fn new(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Self { field: field.into(), rule: rule.into() }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

/// Parses a script JSON document. Failure here means the document itself is
/// malformed, as opposed to a well-formed document breaking a schema rule.
pub fn parse_script_json(json: &str) -> Result<ScriptDoc, CorpusError> {
    Ok(serde_json::from_str(json)?)
}

/// Checks every script invariant, returning the typed script when all hold.
pub fn validate_script(doc: &ScriptDoc) -> Result<ConversationScript, Vec<Violation>> {
    let mut violations = Vec::new();

    if doc.rounds.is_empty() {
        violations.push(Violation::new("rounds", "conversation must have at least 1 round"));
    }
    if doc.rounds.len() > MAX_ROUNDS {
        violations.push(Violation::new(
            "rounds",
            format!("rounds > {MAX_ROUNDS} (got {})", doc.rounds.len()),
        ));
    }

    let total_interruptions: usize = doc.rounds.iter().map(|r| r.interruptions.len()).sum();
    if total_interruptions > MAX_INTERRUPTIONS {
        violations.push(Violation::new(
            "interruptions",
            format!("total interruptions > {MAX_INTERRUPTIONS} (got {total_interruptions})"),
        ));
    }

    let mut rounds = Vec::with_capacity(doc.rounds.len());
    for (ri, round) in doc.rounds.iter().enumerate() {
        if round.user_text.trim().is_empty() {
            violations.push(Violation::new(
                format!("rounds[{ri}].user_text"),
                "user_text must be non-empty",
            ));
        }
        let mut interruptions = Vec::with_capacity(round.interruptions.len());
        for (ii, int) in round.interruptions.iter().enumerate() {
            let kind = match InterruptType::parse(&int.kind) {
                Some(k) => k,
                None => {
                    violations.push(Violation::new(
                        format!("rounds[{ri}].interruptions[{ii}].type"),
                        format!("unknown interruption type {:?}", int.kind),
                    ));
                    InterruptType::A // placeholder, result discarded on violation
                }
            };
            let secondary_type = match &int.secondary_type {
                None => None,
                Some(s) => match InterruptType::parse(s) {
                    Some(k) => Some(k),
                    None => {
                        violations.push(Violation::new(
                            format!("rounds[{ri}].interruptions[{ii}].secondary_type"),
                            format!("unknown interruption type {s:?}"),
                        ));
                        None
                    }
                },
            };
            interruptions.push(Interruption { kind, text: int.text.clone(), secondary_type });
        }
        rounds.push(Round { user_text: round.user_text.clone(), interruptions });
    }

    if violations.is_empty() {
        Ok(ConversationScript {
            conversation_id: doc.conversation_id.clone(),
            topic: doc.topic.clone(),
            rounds,
        })
    } else {
        Err(violations)
    }
}

/// One user utterance in conversational order: the round inquiry first, then
/// its interruptions.
#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceSpec {
    pub text: String,
    pub is_interrupt: bool,
    pub interrupt_type: Option<InterruptType>,
    pub interrupt_type_extra: Option<InterruptType>,
}

impl ConversationScript {
    /// Number of user utterances (round inquiries plus interruptions).
    pub fn utterance_count(&self) -> usize {
        self.rounds.len() + self.rounds.iter().map(|r| r.interruptions.len()).sum::<usize>()
    }

    pub fn utterances_in_order(&self) -> Vec<UtteranceSpec> {
        let mut out = Vec::with_capacity(self.utterance_count());
        for round in &self.rounds {
            out.push(UtteranceSpec {
                text: round.user_text.clone(),
                is_interrupt: false,
                interrupt_type: None,
                interrupt_type_extra: None,
            });
            for int in &round.interruptions {
                out.push(UtteranceSpec {
                    text: int.text.clone(),
                    is_interrupt: true,
                    interrupt_type: Some(int.kind),
                    interrupt_type_extra: int.secondary_type,
                });
            }
        }
        out
    }
}
