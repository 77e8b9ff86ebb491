//! Ground-truth timeline of a constructed session.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::script::InterruptType;
use super::CorpusError;

pub const ALLOWED_SNR_DB: [i32; 3] = [0, 10, 20];

/// Interruption difficulty, controlling the silence inserted between
/// consecutive user utterances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
}

impl Difficulty {
    /// Closed range of valid gap durations in milliseconds.
    pub fn gap_range_ms(self) -> (i64, i64) {
        match self {
            Difficulty::Easy => (6000, 10_000),
            Difficulty::Medium => (4000, 6000),
            Difficulty::Hard => (2000, 4000),
        }
    }
}

impl std::fmt::Display for Difficulty {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Difficulty::Easy => "easy",
            Difficulty::Medium => "medium",
            Difficulty::Hard => "hard",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    None,
    Bg,
    Gap,
}

/// One user utterance span on the session timeline. Boundaries are stored
/// both in rounded milliseconds and in exact sample indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserSegment {
    pub start_ms: i64,
    pub end_ms: i64,
    pub start_sample: usize,
    pub end_sample: usize,
    pub text: String,
    pub is_interrupt: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interrupt_type: Option<InterruptType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interrupt_type_extra: Option<InterruptType>,
}

impl UserSegment {
    /// Type labels carried by this segment (one or two for interrupts).
    pub fn interrupt_types(&self) -> impl Iterator<Item = InterruptType> + '_ {
        self.interrupt_type.into_iter().chain(self.interrupt_type_extra)
    }
}

/// Silence span between two consecutive user segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSpan {
    pub start_ms: i64,
    pub end_ms: i64,
    pub start_sample: usize,
    pub end_sample: usize,
    pub has_noise: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionManifest {
    pub session_id: String,
    pub sample_rate_hz: u32,
    pub difficulty: Difficulty,
    pub noise_mode: NoiseMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<i32>,
    pub rng_seed: u64,
    pub segments: Vec<UserSegment>,
    pub gaps: Vec<GapSpan>,
}

impl SessionManifest {
    /// End of the session timeline in milliseconds (last segment end).
    pub fn session_end_ms(&self) -> i64 {
        self.segments.last().map(|s| s.end_ms).unwrap_or(0)
    }

    pub fn total_samples(&self) -> usize {
        self.segments.last().map(|s| s.end_sample).unwrap_or(0)
    }

    pub fn interrupt_segment_count(&self) -> usize {
        self.segments.iter().filter(|s| s.is_interrupt).count()
    }

    pub fn noise_gap_count(&self) -> usize {
        self.gaps.iter().filter(|g| g.has_noise).count()
    }

    /// Checks the structural invariants of the manifest.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let fail = |msg: String| Err(CorpusError::InvalidManifest(msg));

        for (i, s) in self.segments.iter().enumerate() {
            if s.start_ms >= s.end_ms || s.start_sample >= s.end_sample {
                return fail(format!("segment {i} has non-positive duration"));
            }
            if s.interrupt_type.is_some() != s.is_interrupt {
                return fail(format!("segment {i} type labels disagree with is_interrupt"));
            }
            if s.interrupt_type_extra.is_some() && s.interrupt_type.is_none() {
                return fail(format!("segment {i} has an extra type label but no primary"));
            }
        }
        for w in self.segments.windows(2) {
            if w[1].start_ms <= w[0].start_ms || w[1].start_sample < w[0].end_sample {
                return fail("segments must be non-overlapping and strictly increasing".into());
            }
        }

        let expected_gaps = self.segments.len().saturating_sub(1);
        if self.gaps.len() != expected_gaps {
            return fail(format!(
                "expected {expected_gaps} gaps for {} segments, got {}",
                self.segments.len(),
                self.gaps.len()
            ));
        }
        let (lo, hi) = self.difficulty.gap_range_ms();
        for (i, g) in self.gaps.iter().enumerate() {
            if g.start_ms >= g.end_ms || g.start_sample >= g.end_sample {
                return fail(format!("gap {i} has non-positive duration"));
            }
            let dur = g.end_ms - g.start_ms;
            if dur < lo || dur > hi {
                return fail(format!(
                    "gap {i} duration {dur} ms outside {} range [{lo},{hi}]",
                    self.difficulty
                ));
            }
            // gaps must exactly tile the space between consecutive segments
            if g.start_sample != self.segments[i].end_sample
                || g.end_sample != self.segments[i + 1].start_sample
                || g.start_ms != self.segments[i].end_ms
                || g.end_ms != self.segments[i + 1].start_ms
            {
                return fail(format!("gap {i} does not tile its inter-segment interval"));
            }
        }

        match self.noise_mode {
            NoiseMode::None => {
                if self.snr_db.is_some() {
                    return fail("snr_db must be absent when noise_mode is none".into());
                }
                if self.gaps.iter().any(|g| g.has_noise) {
                    return fail("no gap may be marked noisy when noise_mode is none".into());
                }
            }
            NoiseMode::Bg | NoiseMode::Gap => match self.snr_db {
                None => return fail("snr_db is required when noise is enabled".into()),
                Some(snr) if !ALLOWED_SNR_DB.contains(&snr) => {
                    return fail(format!("snr_db {snr} not in {ALLOWED_SNR_DB:?}"));
                }
                _ => {}
            },
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, CorpusError> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn write_file(&self, path: &Path) -> Result<(), CorpusError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Self, CorpusError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
