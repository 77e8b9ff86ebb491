//! Per-connection state machine behind the mock server.

use crate::audio::{mean_abs, sample_to_i16, samples_from_ms};

use super::BehaviorScript;

pub const REPLY_TONE_HZ: f64 = 440.0;
pub const REPLY_TONE_AMPLITUDE: f64 = 0.5;
pub const REPLY_TEXT: &str = "here is the scripted reply you asked for";

/// Chunks of agreeing energy polarity required to flip the speech state.
const HYSTERESIS_CHUNKS: usize = 3;
const DEFAULT_EMIT_CHUNK_MS: i64 = 80;

/// One output frame with the session timestamp it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub enum MockOutput {
    Audio { at_ms: i64, samples: Vec<i16> },
    Text { at_ms: i64, text: String },
}

impl MockOutput {
    pub fn at_ms(&self) -> i64 {
        match self {
            MockOutput::Audio { at_ms, .. } | MockOutput::Text { at_ms, .. } => *at_ms,
        }
    }
}

#[derive(Debug, Clone)]
struct ActiveReply {
    start_ms: i64,
    end_ms: i64,
    emitted_to_ms: i64,
    text_sent: bool,
}

/// Scripted reply scheduler driven by input chunk energy.
///
/// Timestamps are session milliseconds supplied by the caller: wall-clock
/// offsets over TCP, simulated time under a virtual clock. Given the same
/// behavior, chunk payloads and timestamps, two machines emit identical
/// output sequences.
pub struct MockMachine {
    behavior: BehaviorScript,
    sample_rate: u32,
    emit_chunk_ms: i64,
    clock_ms: i64,
    /// Emissions may never start before this point (end of prior speech).
    emission_floor_ms: i64,
    speaking: bool,
    run_len: usize,
    run_start_ms: i64,
    early_served: bool,
    cur_caused_stop: bool,
    pending_reply_at_ms: Option<i64>,
    active: Option<ActiveReply>,
    input_done: bool,
}

impl MockMachine {
    pub fn new(behavior: BehaviorScript, sample_rate: u32) -> Self {
        Self {
            behavior,
            sample_rate,
            emit_chunk_ms: DEFAULT_EMIT_CHUNK_MS,
            clock_ms: 0,
            emission_floor_ms: 0,
            speaking: false,
            run_len: 0,
            run_start_ms: 0,
            early_served: false,
            cur_caused_stop: false,
            pending_reply_at_ms: None,
            active: None,
            input_done: false,
        }
    }

    /// Feeds one input chunk stamped with its session start time.
    pub fn on_chunk(&mut self, t_ms: i64, samples: &[f32]) -> Vec<MockOutput> {
        let mut out = Vec::new();
        self.advance_to(t_ms, &mut out);

        if !samples.is_empty() {
            let chunk_ms = (samples.len() as i64 * 1000) / self.sample_rate as i64;
            if chunk_ms > 0 {
                self.emit_chunk_ms = chunk_ms;
            }
            let speechy = mean_abs(samples) >= self.behavior.react_to_energy_threshold;
            self.track_speech(t_ms, speechy);
        }

        self.advance_to(t_ms, &mut out);
        out
    }

    /// Marks the end of client input. Ongoing user speech is treated as
    /// ending exactly here.
    pub fn on_end_input(&mut self, t_ms: i64) -> Vec<MockOutput> {
        let mut out = Vec::new();
        self.advance_to(t_ms, &mut out);
        if self.speaking {
            self.speaking = false;
            self.run_len = 0;
            self.handle_utterance_end(t_ms, t_ms);
        }
        self.input_done = true;
        self.advance_to(t_ms, &mut out);
        out
    }

    /// Advances the clock without input, emitting anything that became due.
    pub fn poll(&mut self, t_ms: i64) -> Vec<MockOutput> {
        let mut out = Vec::new();
        self.advance_to(t_ms, &mut out);
        out
    }

    /// True when nothing is playing or scheduled.
    pub fn is_idle(&self) -> bool {
        self.active.is_none() && self.pending_reply_at_ms.is_none()
    }

    pub fn emit_chunk_ms(&self) -> i64 {
        self.emit_chunk_ms
    }

    fn track_speech(&mut self, t_ms: i64, speechy: bool) {
        if speechy == self.speaking {
            self.run_len = 0;
            return;
        }
        if self.run_len == 0 {
            self.run_start_ms = t_ms;
        }
        self.run_len += 1;
        if self.run_len < HYSTERESIS_CHUNKS {
            return;
        }
        let boundary = self.run_start_ms;
        self.run_len = 0;
        self.speaking = speechy;
        if speechy {
            self.handle_utterance_onset(boundary, t_ms);
        } else {
            self.handle_utterance_end(boundary, t_ms);
        }
    }

    fn handle_utterance_onset(&mut self, onset_est_ms: i64, now_ms: i64) {
        self.early_served = false;
        self.cur_caused_stop = false;

        if let Some(active) = &mut self.active {
            if self.behavior.stop_on_barge_in {
                let stop_at = (onset_est_ms + self.behavior.barge_in_stop_delay_ms)
                    .max(active.emitted_to_ms);
                if stop_at < active.end_ms {
                    active.end_ms = stop_at;
                }
                self.cur_caused_stop = true;
            }
        }

        // a fresh onset supersedes any reply that has not started yet
        self.pending_reply_at_ms = None;
        if self.behavior.early_reply_lead_ms > 0 {
            if let Some(assumed) = self.behavior.assumed_utterance_ms {
                let lead_in = (assumed - self.behavior.early_reply_lead_ms).max(0);
                self.pending_reply_at_ms = Some((onset_est_ms + lead_in).max(now_ms));
            }
        }
    }

    fn handle_utterance_end(&mut self, end_est_ms: i64, now_ms: i64) {
        let normal_at = (end_est_ms + self.behavior.reply_delay_ms).max(now_ms);
        if self.early_served {
            // the early reply was this utterance's reply
            return;
        }
        if self.cur_caused_stop {
            self.pending_reply_at_ms =
                if self.behavior.resume_after_interrupt { Some(normal_at) } else { None };
            return;
        }
        if self.active.is_some() {
            // still talking over the user and not stopping: no reply
            return;
        }
        // covers both the normal schedule and re-anchoring an early reply
        // that never started
        self.pending_reply_at_ms = Some(normal_at);
    }

    fn advance_to(&mut self, t_ms: i64, out: &mut Vec<MockOutput>) {
        loop {
            if let Some(active) = &mut self.active {
                while active.emitted_to_ms < active.end_ms && active.emitted_to_ms <= t_ms {
                    let chunk_start = active.emitted_to_ms;
                    let chunk_end = (chunk_start + self.emit_chunk_ms).min(active.end_ms);
                    if !active.text_sent {
                        active.text_sent = true;
                        out.push(MockOutput::Text {
                            at_ms: chunk_start,
                            text: REPLY_TEXT.to_string(),
                        });
                    }
                    out.push(MockOutput::Audio {
                        at_ms: chunk_start,
                        samples: tone_span(
                            self.sample_rate,
                            chunk_start - active.start_ms,
                            chunk_end - active.start_ms,
                        ),
                    });
                    active.emitted_to_ms = chunk_end;
                }
                if active.emitted_to_ms >= active.end_ms && active.end_ms <= t_ms {
                    self.emission_floor_ms = self.emission_floor_ms.max(active.end_ms);
                    self.active = None;
                } else {
                    break;
                }
            }
            match self.pending_reply_at_ms {
                Some(at) if self.active.is_none() && at.max(self.emission_floor_ms) <= t_ms => {
                    let start = at.max(self.emission_floor_ms);
                    self.pending_reply_at_ms = None;
                    if self.behavior.reply_duration_ms > 0 {
                        self.active = Some(ActiveReply {
                            start_ms: start,
                            end_ms: start + self.behavior.reply_duration_ms,
                            emitted_to_ms: start,
                            text_sent: false,
                        });
                        if self.speaking {
                            self.early_served = true;
                        }
                    }
                }
                _ => break,
            }
        }
        self.clock_ms = self.clock_ms.max(t_ms);
    }
}

/// Reply tone samples covering `[from_ms, to_ms)` relative to reply start,
/// phase-continuous across chunks.
fn tone_span(sample_rate: u32, from_ms: i64, to_ms: i64) -> Vec<i16> {
    let n0 = samples_from_ms(from_ms, sample_rate);
    let n1 = samples_from_ms(to_ms, sample_rate);
    let w = 2.0 * std::f64::consts::PI * REPLY_TONE_HZ / sample_rate as f64;
    (n0..n1)
        .map(|n| sample_to_i16(REPLY_TONE_AMPLITUDE * (w * n as f64).sin()))
        .collect()
}
