//! Utterance segmentation and transcript accuracy.
//!
//! [`extract_timeline`] turns audio into an utterance-level
//! [`SegmentTimeline`] through a pluggable VAD adapter: the built-in energy
//! detector for offline tests, a precomputed timestamp file, or an external
//! service. [`word_error_rate`] scores the model's spoken output (via ASR)
//! against its own text output.

mod asr;
mod energy;
mod wer;

pub use asr::{
    audio_content_key, transcribe, AsrAdapter, CachedAsr, HttpAsr, PrecomputedAsr, Transcript,
    WordSpan, DEFAULT_BEAM_SIZE,
};
pub use energy::EnergyVad;
pub use wer::{normalize_text, pooled_wer, word_error_rate, WerReport};

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Wave;

#[derive(Debug, Error)]
pub enum SegmentError {
    #[error("vad adapter failed: {0}")]
    VadAdapter(String),
    #[error("asr service failed after {attempts} attempts: {last}")]
    AsrUnavailable { attempts: u32, last: String },
    #[error("asr adapter failed: {0}")]
    AsrAdapter(String),
    #[error("timeline violates its invariants: {0}")]
    InvalidTimeline(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad timestamp file: {0}")]
    Format(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    User,
    Model,
}

/// One speech span in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentSpan {
    pub start_ms: i64,
    pub end_ms: i64,
}

impl SegmentSpan {
    pub fn duration_ms(&self) -> i64 {
        self.end_ms - self.start_ms
    }
}

/// Ordered, non-overlapping speech segments for one channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentTimeline {
    pub channel: Channel,
    pub segments: Vec<SegmentSpan>,
}

impl SegmentTimeline {
    pub fn validate(&self) -> Result<(), SegmentError> {
        for (i, s) in self.segments.iter().enumerate() {
            if s.start_ms >= s.end_ms {
                return Err(SegmentError::InvalidTimeline(format!(
                    "segment {i} has non-positive duration"
                )));
            }
        }
        for w in self.segments.windows(2) {
            if w[1].start_ms < w[0].end_ms {
                return Err(SegmentError::InvalidTimeline(
                    "segments overlap or are out of order".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn write_file(&self, path: &Path) -> Result<(), SegmentError> {
        std::fs::write(path, serde_json::to_string_pretty(self).expect("serializes"))?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Self, SegmentError> {
        let timeline: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        timeline.validate()?;
        Ok(timeline)
    }
}

/// VAD tuning knobs. The defaults suppress flicker: sub-250 ms blips are
/// dropped and pauses under 300 ms do not split an utterance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VadParams {
    pub threshold: f64,
    pub min_speech_ms: i64,
    pub min_silence_ms: i64,
}

impl Default for VadParams {
    fn default() -> Self {
        Self { threshold: 0.5, min_speech_ms: 250, min_silence_ms: 300 }
    }
}

/// Raw speech-span detector behind [`extract_timeline`].
pub trait VadAdapter: Send + Sync {
    fn detect(&self, wave: &Wave, threshold: f64) -> Result<Vec<SegmentSpan>, SegmentError>;
}

/// Adapter reading spans from a precomputed timestamp file: a JSON list of
/// `{start_ms, end_ms}`.
pub struct FileVad {
    pub path: PathBuf,
}

impl VadAdapter for FileVad {
    fn detect(&self, _wave: &Wave, _threshold: f64) -> Result<Vec<SegmentSpan>, SegmentError> {
        let text = std::fs::read_to_string(&self.path)
            .map_err(|e| SegmentError::VadAdapter(format!("{}: {e}", self.path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Adapter invoking an external VAD service: WAV bytes in, JSON spans out.
pub struct ServiceVad {
    pub url: String,
}

impl VadAdapter for ServiceVad {
    fn detect(&self, wave: &Wave, threshold: f64) -> Result<Vec<SegmentSpan>, SegmentError> {
        crate::svc::post_wav_for_spans(&self.url, wave, threshold)
            .map_err(|e| SegmentError::VadAdapter(e.to_string()))
    }
}

/// Extracts the utterance-level timeline of one channel.
///
/// Spans from the adapter are sorted, gaps shorter than `min_silence_ms` are
/// merged, and anything still shorter than `min_speech_ms` is dropped.
pub fn extract_timeline(
    wave: &Wave,
    vad: &dyn VadAdapter,
    params: &VadParams,
    channel: Channel,
) -> Result<SegmentTimeline, SegmentError> {
    let mut spans = if wave.is_empty() {
        Vec::new()
    } else {
        vad.detect(wave, params.threshold)?
    };
    spans.retain(|s| s.end_ms > s.start_ms);
    spans.sort_by_key(|s| (s.start_ms, s.end_ms));

    let mut merged: Vec<SegmentSpan> = Vec::with_capacity(spans.len());
    for span in spans {
        match merged.last_mut() {
            Some(last) if span.start_ms - last.end_ms < params.min_silence_ms => {
                last.end_ms = last.end_ms.max(span.end_ms);
            }
            _ => merged.push(span),
        }
    }
    merged.retain(|s| s.duration_ms() >= params.min_speech_ms);

    let timeline = SegmentTimeline { channel, segments: merged };
    timeline.validate()?;
    Ok(timeline)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn all_zero_waveform_has_empty_timeline() {
        let wave = Wave::silence(2000, 24_000);
        let t = extract_timeline(&wave, &EnergyVad::default(), &VadParams::default(), Channel::User)
            .unwrap();
        assert!(t.segments.is_empty());
    }

    #[test]
    fn tone_boundaries_are_recovered_within_one_frame() {
        let mut wave = Wave::silence(1000, 24_000);
        wave.append(&Wave::sine(440.0, 1000, 0.5, 24_000));
        wave.extend_silence(1000 * 24);
        let t = extract_timeline(&wave, &EnergyVad::default(), &VadParams::default(), Channel::Model)
            .unwrap();
        assert_eq!(t.segments.len(), 1);
        let frame = EnergyVad::FRAME_MS;
        assert!((t.segments[0].start_ms - 1000).abs() <= frame);
        assert!((t.segments[0].end_ms - 2000).abs() <= frame);
    }

    #[test]
    fn short_silence_between_tones_is_merged() {
        let mut wave = Wave::sine(440.0, 400, 0.5, 24_000);
        wave.extend_silence(100 * 24);
        wave.append(&Wave::sine(440.0, 400, 0.5, 24_000));
        let t = extract_timeline(&wave, &EnergyVad::default(), &VadParams::default(), Channel::Model)
            .unwrap();
        assert_eq!(t.segments.len(), 1);
    }

    #[test]
    fn long_silence_splits_utterances() {
        let mut wave = Wave::sine(440.0, 400, 0.5, 24_000);
        wave.extend_silence(800 * 24);
        wave.append(&Wave::sine(440.0, 400, 0.5, 24_000));
        let t = extract_timeline(&wave, &EnergyVad::default(), &VadParams::default(), Channel::Model)
            .unwrap();
        assert_eq!(t.segments.len(), 2);
    }

    #[test]
    fn blips_below_min_speech_are_dropped() {
        let mut wave = Wave::silence(500, 24_000);
        wave.append(&Wave::sine(440.0, 100, 0.5, 24_000));
        wave.extend_silence(500 * 24);
        let t = extract_timeline(&wave, &EnergyVad::default(), &VadParams::default(), Channel::Model)
            .unwrap();
        assert!(t.segments.is_empty());
    }

    #[test]
    fn file_adapter_round_trips_spans() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("spans.json");
        std::fs::write(&path, r#"[{"start_ms":100,"end_ms":900},{"start_ms":1500,"end_ms":2500}]"#)
            .unwrap();
        let wave = Wave::silence(3000, 24_000);
        let t = extract_timeline(
            &wave,
            &FileVad { path },
            &VadParams::default(),
            Channel::User,
        )
        .unwrap();
        assert_eq!(t.segments.len(), 2);
        assert_eq!(t.segments[0], SegmentSpan { start_ms: 100, end_ms: 900 });
    }

    struct StubVad(Vec<SegmentSpan>);
    impl VadAdapter for StubVad {
        fn detect(&self, _: &Wave, _: f64) -> Result<Vec<SegmentSpan>, SegmentError> {
            Ok(self.0.clone())
        }
    }

    proptest! {
        /// the post-processed timeline always satisfies its invariants, no
        /// matter what the adapter returns
        #[test]
        fn timeline_invariants_hold_for_arbitrary_adapter_output(
            raw in proptest::collection::vec((0i64..20_000, 0i64..20_000), 0..40)
        ) {
            let spans: Vec<SegmentSpan> = raw
                .into_iter()
                .map(|(a, b)| SegmentSpan { start_ms: a.min(b), end_ms: a.max(b) })
                .collect();
            let wave = Wave::sine(440.0, 100, 0.5, 24_000);
            let t = extract_timeline(
                &wave,
                &StubVad(spans),
                &VadParams::default(),
                Channel::Model,
            ).unwrap();
            prop_assert!(t.validate().is_ok());
            for s in &t.segments {
                prop_assert!(s.duration_ms() >= 250);
            }
            for w in t.segments.windows(2) {
                prop_assert!(w[1].start_ms - w[0].end_ms >= 300);
            }
        }
    }
}
