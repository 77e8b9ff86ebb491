//! ASR invocation glue: adapters, retries, and a content-addressed cache.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::hashutil::sha256_hex;
use crate::Wave;

use super::SegmentError;

pub const DEFAULT_BEAM_SIZE: u32 = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordSpan {
    pub word: String,
    pub start_ms: i64,
    pub end_ms: i64,
}

/// Transcript with optional word-level timestamps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub text: String,
    #[serde(default)]
    pub words: Vec<WordSpan>,
}

pub trait AsrAdapter: Send + Sync {
    fn transcribe(&self, wave: &Wave, beam_size: u32) -> Result<Transcript, SegmentError>;
}

/// Transcribes audio through the adapter. Defaults live on the adapters;
/// this is the spec-shaped entry point.
pub fn transcribe(
    wave: &Wave,
    asr: &dyn AsrAdapter,
    beam_size: u32,
) -> Result<Transcript, SegmentError> {
    asr.transcribe(wave, beam_size)
}

/// Key for cache and precomputed lookups: hash of the audio content.
pub fn audio_content_key(wave: &Wave) -> String {
    let bytes: Vec<u8> = wave
        .to_i16_samples()
        .iter()
        .flat_map(|s| s.to_le_bytes())
        .collect();
    sha256_hex(&bytes)
}

/// Reads transcripts from a directory of `<content-hash>.json` files.
pub struct PrecomputedAsr {
    pub dir: PathBuf,
}

impl AsrAdapter for PrecomputedAsr {
    fn transcribe(&self, wave: &Wave, _beam_size: u32) -> Result<Transcript, SegmentError> {
        let path = self.dir.join(format!("{}.json", audio_content_key(wave)));
        let text = std::fs::read_to_string(&path).map_err(|e| {
            SegmentError::AsrAdapter(format!("no precomputed transcript {}: {e}", path.display()))
        })?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Calls an external ASR service over HTTP: WAV bytes in, transcript JSON out.
pub struct HttpAsr {
    pub url: String,
}

impl AsrAdapter for HttpAsr {
    fn transcribe(&self, wave: &Wave, beam_size: u32) -> Result<Transcript, SegmentError> {
        crate::svc::post_wav_for_transcript(&self.url, wave, beam_size)
            .map_err(|e| SegmentError::AsrAdapter(e.to_string()))
    }
}

/// Caching and retry layer over any adapter.
///
/// A warm cache answers without touching the service; a cold cache retries
/// the service up to `max_retries` times and then surfaces a retriable
/// error.
pub struct CachedAsr<A> {
    inner: A,
    cache_dir: PathBuf,
    max_retries: u32,
}

impl<A: AsrAdapter> CachedAsr<A> {
    pub fn new(inner: A, cache_dir: PathBuf, max_retries: u32) -> Result<Self, SegmentError> {
        std::fs::create_dir_all(&cache_dir)?;
        Ok(Self { inner, cache_dir, max_retries })
    }

    fn cache_path(&self, wave: &Wave) -> PathBuf {
        self.cache_dir.join(format!("{}.json", audio_content_key(wave)))
    }
}

impl<A: AsrAdapter> AsrAdapter for CachedAsr<A> {
    fn transcribe(&self, wave: &Wave, beam_size: u32) -> Result<Transcript, SegmentError> {
        let path = self.cache_path(wave);
        if let Ok(text) = std::fs::read_to_string(&path) {
            if let Ok(cached) = serde_json::from_str::<Transcript>(&text) {
                return Ok(cached);
            }
        }
        let mut last = String::new();
        for _ in 0..self.max_retries.max(1) {
            match self.inner.transcribe(wave, beam_size) {
                Ok(transcript) => {
                    let json = serde_json::to_string_pretty(&transcript).expect("serializes");
                    std::fs::write(&path, json)?;
                    return Ok(transcript);
                }
                Err(e) => last = e.to_string(),
            }
        }
        Err(SegmentError::AsrUnavailable { attempts: self.max_retries.max(1), last })
    }
}
