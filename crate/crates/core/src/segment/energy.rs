//! Built-in frame-energy VAD, sufficient for tone-based test audio.

use crate::audio::{mean_square, ms_from_samples, samples_from_ms};
use crate::Wave;

use super::{SegmentError, SegmentSpan, VadAdapter};

/// Maps per-frame RMS to a [0, 1] speech probability and thresholds it.
///
/// The probability is `rms * 4` clamped to 1, so a half-scale sine
/// (RMS ~0.35) scores 1.0 and low-level noise floors score near 0. With the
/// default 0.5 threshold anything with RMS above 0.125 counts as speech.
#[derive(Debug, Clone, Copy)]
pub struct EnergyVad {
    pub frame_ms: i64,
}

impl EnergyVad {
    pub const FRAME_MS: i64 = 20;
}

impl Default for EnergyVad {
    fn default() -> Self {
        Self { frame_ms: Self::FRAME_MS }
    }
}

impl VadAdapter for EnergyVad {
    fn detect(&self, wave: &Wave, threshold: f64) -> Result<Vec<SegmentSpan>, SegmentError> {
        if self.frame_ms <= 0 {
            return Err(SegmentError::VadAdapter("frame_ms must be positive".into()));
        }
        let rate = wave.sample_rate();
        let frame_samples = samples_from_ms(self.frame_ms, rate).max(1);
        let mut spans: Vec<SegmentSpan> = Vec::new();
        let mut open: Option<i64> = None;
        for (i, frame) in wave.samples().chunks(frame_samples).enumerate() {
            let prob = (mean_square(frame).sqrt() * 4.0).min(1.0);
            let start_ms = ms_from_samples(i * frame_samples, rate);
            let end_ms = ms_from_samples(i * frame_samples + frame.len(), rate);
            if prob >= threshold {
                open.get_or_insert(start_ms);
            } else if let Some(s) = open.take() {
                spans.push(SegmentSpan { start_ms: s, end_ms: start_ms });
            }
            if prob >= threshold && end_ms == wave.duration_ms() {
                // speech runs to the end of the audio
                if let Some(s) = open.take() {
                    spans.push(SegmentSpan { start_ms: s, end_ms });
                }
            }
        }
        Ok(spans)
    }
}
