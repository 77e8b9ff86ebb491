//! Record/replay adapters keyed by request content hash.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{ChatClient, ChatRequest, LogprobClient, SvcError};

/// On-disk form: hash -> response, or hash -> [responses...] consumed in
/// order with the last entry repeating once exhausted.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum ReplayValue {
    One(String),
    Many(Vec<String>),
}

#[derive(Debug, Default)]
pub struct ReplayFile {
    entries: BTreeMap<String, Vec<String>>,
}

impl ReplayFile {
    pub fn load(path: &Path) -> Result<Self, SvcError> {
        let raw: BTreeMap<String, ReplayValue> =
            serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let entries = raw
            .into_iter()
            .map(|(k, v)| {
                let list = match v {
                    ReplayValue::One(s) => vec![s],
                    ReplayValue::Many(l) => l,
                };
                (k, list)
            })
            .collect();
        Ok(Self { entries })
    }

    pub fn save(&self, path: &Path) -> Result<(), SvcError> {
        let raw: BTreeMap<&String, ReplayValue> = self
            .entries
            .iter()
            .map(|(k, v)| (k, ReplayValue::Many(v.clone())))
            .collect();
        std::fs::write(path, serde_json::to_string_pretty(&raw)?)?;
        Ok(())
    }

    pub fn insert(&mut self, key: String, response: String) {
        self.entries.entry(key).or_default().push(response);
    }

    pub fn responses(&self, key: &str) -> Option<&[String]> {
        self.entries.get(key).map(|v| v.as_slice())
    }
}

/// Deterministic chat client answering from a replay file.
pub struct ReplayChatClient {
    file: ReplayFile,
    cursors: Mutex<BTreeMap<String, usize>>,
}

impl ReplayChatClient {
    pub fn from_file(path: &Path) -> Result<Self, SvcError> {
        Ok(Self { file: ReplayFile::load(path)?, cursors: Mutex::new(BTreeMap::new()) })
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (String, Vec<String>)>) -> Self {
        let mut file = ReplayFile::default();
        for (k, list) in entries {
            for r in list {
                file.insert(k.clone(), r);
            }
        }
        Self { file, cursors: Mutex::new(BTreeMap::new()) }
    }

    /// Builds a client whose responses are matched by request order of a
    /// single known request key.
    pub fn for_request(request: &ChatRequest, responses: Vec<String>) -> Self {
        Self::from_entries([(request.key(), responses)])
    }
}

impl ChatClient for ReplayChatClient {
    fn complete(&self, request: &ChatRequest) -> Result<String, SvcError> {
        let key = request.key();
        let responses = self
            .file
            .responses(&key)
            .ok_or_else(|| SvcError::ReplayMiss { key: key.clone() })?;
        let mut cursors = self.cursors.lock().unwrap();
        let cursor = cursors.entry(key).or_insert(0);
        let response = responses[(*cursor).min(responses.len() - 1)].clone();
        *cursor += 1;
        Ok(response)
    }
}

/// Wraps a live client and appends every response to a replay file.
pub struct RecordingChatClient<C> {
    inner: C,
    path: PathBuf,
    file: Mutex<ReplayFile>,
}

impl<C: ChatClient> RecordingChatClient<C> {
    pub fn new(inner: C, path: PathBuf) -> Self {
        let file = ReplayFile::load(&path).unwrap_or_default();
        Self { inner, path, file: Mutex::new(file) }
    }
}

impl<C: ChatClient> ChatClient for RecordingChatClient<C> {
    fn complete(&self, request: &ChatRequest) -> Result<String, SvcError> {
        let response = self.inner.complete(request)?;
        let mut file = self.file.lock().unwrap();
        file.insert(request.key(), response.clone());
        file.save(&self.path)?;
        Ok(response)
    }
}

/// Log-probability client answering from canned vectors.
pub struct ReplayLogprobClient {
    entries: BTreeMap<String, Vec<f64>>,
    /// Fallback returned for unknown requests, if any.
    pub default: Option<Vec<f64>>,
}

impl ReplayLogprobClient {
    pub fn new(entries: BTreeMap<String, Vec<f64>>) -> Self {
        Self { entries, default: None }
    }

    pub fn constant(logprobs: Vec<f64>) -> Self {
        Self { entries: BTreeMap::new(), default: Some(logprobs) }
    }
}

impl LogprobClient for ReplayLogprobClient {
    fn reply_logprobs(&self, context: &str, reply: &str) -> Result<Vec<f64>, SvcError> {
        let key = super::logprob_key(context, reply);
        if let Some(v) = self.entries.get(&key) {
            return Ok(v.clone());
        }
        self.default
            .clone()
            .ok_or(SvcError::ReplayMiss { key })
    }
}
