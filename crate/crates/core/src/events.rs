//! Full-duplex interaction event detection.
//!
//! Aligns the ground-truth user timeline from the session manifest with the
//! model's output timeline and classifies, per user segment, whether the
//! model replied, replied too early, missed, was successfully interrupted,
//! or ignored the interrupt — with the associated timings: ERT (how early a
//! reply started relative to the user's utterance end), EIT (the same for
//! early interrupts), IRD (interrupt onset to model speech cessation), and
//! FSED (interrupt end to the model's next speech onset). Noisy gaps where
//! the model went quiet are flagged as noise interrupts.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::SessionManifest;
use crate::segment::SegmentTimeline;

#[derive(Debug, Error)]
pub enum EventError {
    #[error(
        "timeline clock mismatch: model speech at {model_end_ms} ms is beyond \
         session end {session_end_ms} ms plus {slack_ms} ms slack"
    )]
    ClockMismatch { model_end_ms: i64, session_end_ms: i64, slack_ms: i64 },
    #[error("model timeline is invalid: {0}")]
    InvalidTimeline(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad event line: {0}")]
    Format(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    SuccessReply,
    MissedReply,
    EarlyInterrupt,
    SuccessInterrupt,
    FailedInterrupt,
    SuccessReplyToInterrupt,
    MissedReplyToInterrupt,
    NoiseInterrupt,
}

/// One classified interaction event.
///
/// `timing_ms` is present for exactly four kinds: ERT on `SuccessReply`
/// (positive means the reply started before the user finished), EIT on
/// `EarlyInterrupt`, IRD on `SuccessInterrupt`, FSED on
/// `SuccessReplyToInterrupt`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionEvent {
    pub kind: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_segment_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<i64>,
}

/// Denominator for the noise-interrupt rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NiDenominator {
    /// Every gap that carries noise.
    AllGaps,
    /// Only noisy gaps where the model was speaking as the gap opened.
    GapsWithModelSpeech,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Boundary between a slightly early reply and an early interrupt: a
    /// model segment starting more than this before the user's utterance end
    /// is an early interrupt.
    pub t_early_ms: i64,
    /// Longest model-stop latency still counted as a successful interrupt.
    pub t_si_max_ms: i64,
    pub ni_denominator: NiDenominator,
    /// Model speech may extend at most this far past the session end before
    /// the timelines are considered misaligned.
    pub alignment_slack_ms: i64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            t_early_ms: 1000,
            t_si_max_ms: 15_000,
            ni_denominator: NiDenominator::AllGaps,
            alignment_slack_ms: 30_000,
        }
    }
}

/// Denominators for this session's rates, resolved against model behavior:
/// an interrupt-labeled segment with nothing to interrupt counts as an
/// ordinary inquiry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SessionCounts {
    pub non_interrupt_inquiries: usize,
    pub interrupt_inquiries: usize,
    pub noise_gaps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionAnalysis {
    pub session_id: String,
    pub counts: SessionCounts,
    pub events: Vec<InteractionEvent>,
}

/// Classifies all interaction events for one session. See [`detect_session`]
/// for the variant that also returns rate denominators.
pub fn detect_events(
    manifest: &SessionManifest,
    model: &SegmentTimeline,
    config: &DetectorConfig,
) -> Result<Vec<InteractionEvent>, EventError> {
    Ok(detect_session(manifest, model, config)?.events)
}

pub fn detect_session(
    manifest: &SessionManifest,
    model: &SegmentTimeline,
    config: &DetectorConfig,
) -> Result<SessionAnalysis, EventError> {
    model
        .validate()
        .map_err(|e| EventError::InvalidTimeline(e.to_string()))?;
    if let Some(last) = model.segments.last() {
        let session_end = manifest.session_end_ms();
        if last.end_ms > session_end + config.alignment_slack_ms {
            return Err(EventError::ClockMismatch {
                model_end_ms: last.end_ms,
                session_end_ms: session_end,
                slack_ms: config.alignment_slack_ms,
            });
        }
    }

    // (anchor_ms, emission order) keeps the final list chronological
    let mut tagged: Vec<(i64, usize, InteractionEvent)> = Vec::new();
    let mut counts = SessionCounts::default();
    let mut seq = 0usize;
    let mut push = |tagged: &mut Vec<(i64, usize, InteractionEvent)>, anchor: i64, ev: InteractionEvent| {
        tagged.push((anchor, seq, ev));
        seq += 1;
    };

    let segs = &manifest.segments;
    for (i, user) in segs.iter().enumerate() {
        let next_start = segs.get(i + 1).map(|s| s.start_ms).unwrap_or(i64::MAX);
        let first_after = model
            .segments
            .iter()
            .find(|m| m.start_ms > user.start_ms && m.start_ms < next_start);
        let active_at_onset = model
            .segments
            .iter()
            .find(|m| m.start_ms <= user.start_ms && user.start_ms < m.end_ms);

        if user.is_interrupt && active_at_onset.is_some() {
            counts.interrupt_inquiries += 1;
            let active = active_at_onset.expect("checked");
            let t_stop = active.end_ms;
            if t_stop <= user.start_ms + config.t_si_max_ms && t_stop < next_start {
                push(&mut tagged, user.start_ms, InteractionEvent {
                    kind: EventKind::SuccessInterrupt,
                    user_segment_index: Some(i),
                    gap_index: None,
                    timing_ms: Some(t_stop - user.start_ms),
                });
                let resume = model
                    .segments
                    .iter()
                    .find(|m| m.start_ms > user.end_ms && m.start_ms < next_start);
                match resume {
                    Some(m) => push(&mut tagged, user.start_ms, InteractionEvent {
                        kind: EventKind::SuccessReplyToInterrupt,
                        user_segment_index: Some(i),
                        gap_index: None,
                        timing_ms: Some(m.start_ms - user.end_ms),
                    }),
                    None => push(&mut tagged, user.start_ms, InteractionEvent {
                        kind: EventKind::MissedReplyToInterrupt,
                        user_segment_index: Some(i),
                        gap_index: None,
                        timing_ms: None,
                    }),
                }
            } else {
                push(&mut tagged, user.start_ms, InteractionEvent {
                    kind: EventKind::FailedInterrupt,
                    user_segment_index: Some(i),
                    gap_index: None,
                    timing_ms: None,
                });
            }
            // early interrupts are assessed for every inquiry, including
            // interrupt-labeled ones
            if let Some(m) = first_after {
                if m.start_ms < user.end_ms - config.t_early_ms {
                    push(&mut tagged, user.start_ms, InteractionEvent {
                        kind: EventKind::EarlyInterrupt,
                        user_segment_index: Some(i),
                        gap_index: None,
                        timing_ms: Some(user.end_ms - m.start_ms),
                    });
                }
            }
        } else {
            // ordinary inquiry, or an interrupt with nothing to interrupt
            counts.non_interrupt_inquiries += 1;
            match first_after {
                None => push(&mut tagged, user.start_ms, InteractionEvent {
                    kind: EventKind::MissedReply,
                    user_segment_index: Some(i),
                    gap_index: None,
                    timing_ms: None,
                }),
                Some(m) if m.start_ms >= user.end_ms - config.t_early_ms => {
                    push(&mut tagged, user.start_ms, InteractionEvent {
                        kind: EventKind::SuccessReply,
                        user_segment_index: Some(i),
                        gap_index: None,
                        timing_ms: Some(user.end_ms - m.start_ms),
                    })
                }
                Some(m) => push(&mut tagged, user.start_ms, InteractionEvent {
                    kind: EventKind::EarlyInterrupt,
                    user_segment_index: Some(i),
                    gap_index: None,
                    timing_ms: Some(user.end_ms - m.start_ms),
                }),
            }
        }
    }

    for (g, gap) in manifest.gaps.iter().enumerate() {
        if !gap.has_noise {
            continue;
        }
        let active_at_gap_start = model
            .segments
            .iter()
            .find(|m| m.start_ms <= gap.start_ms && gap.start_ms < m.end_ms);
        match config.ni_denominator {
            NiDenominator::AllGaps => counts.noise_gaps += 1,
            NiDenominator::GapsWithModelSpeech => {
                if active_at_gap_start.is_some() {
                    counts.noise_gaps += 1;
                }
            }
        }
        if let Some(m) = active_at_gap_start {
            if m.end_ms <= gap.end_ms {
                push(&mut tagged, gap.start_ms, InteractionEvent {
                    kind: EventKind::NoiseInterrupt,
                    user_segment_index: None,
                    gap_index: Some(g),
                    timing_ms: None,
                });
            }
        }
    }

    tagged.sort_by_key(|(anchor, seq, _)| (*anchor, *seq));
    Ok(SessionAnalysis {
        session_id: manifest.session_id.clone(),
        counts,
        events: tagged.into_iter().map(|(_, _, e)| e).collect(),
    })
}

/// Writes a session analysis as JSON lines: a header with the counts, then
/// one event per line.
pub fn write_events_jsonl(analysis: &SessionAnalysis, path: &Path) -> Result<(), EventError> {
    #[derive(Serialize)]
    struct Header<'a> {
        session_id: &'a str,
        counts: &'a SessionCounts,
    }
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    let header = Header { session_id: &analysis.session_id, counts: &analysis.counts };
    writeln!(file, "{}", serde_json::to_string(&header)?)?;
    for event in &analysis.events {
        writeln!(file, "{}", serde_json::to_string(event)?)?;
    }
    Ok(())
}

pub fn read_events_jsonl(path: &Path) -> Result<SessionAnalysis, EventError> {
    #[derive(Deserialize)]
    struct Header {
        session_id: String,
        counts: SessionCounts,
    }
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut lines = file.lines();
    let header: Header = serde_json::from_str(
        &lines.next().ok_or_else(|| {
            EventError::Io(std::io::Error::new(
                std::io::ErrorKind::UnexpectedEof,
                "empty events file",
            ))
        })??,
    )?;
    let mut events = Vec::new();
    for line in lines {
        let line = line?;
        if !line.trim().is_empty() {
            events.push(serde_json::from_str(&line)?);
        }
    }
    Ok(SessionAnalysis { session_id: header.session_id, counts: header.counts, events })
}
