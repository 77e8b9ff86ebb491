//! Duplex session streaming and trace capture.
//!
//! [`run_session_tcp`] paces a session's audio to a server in fixed chunks
//! over the wire protocol while a reader thread records everything the
//! server emits, all on one monotonic session clock zeroed at the first
//! chunk send. [`run_session_virtual`] drives the in-process mock machine
//! with simulated time instead, so a 40 s session replays in milliseconds
//! with identical timestamp semantics.

mod tcp;
mod trace;

pub use tcp::run_session_tcp;
pub use trace::{read_trace_jsonl, write_trace_jsonl};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{i16_to_sample, ms_from_samples, samples_from_ms};
use crate::corpus::SessionManifest;
use crate::mockd::{BehaviorScript, MockMachine, MockOutput};
use crate::protocol::FrameError;
use crate::Wave;

/// Safety bound on how long the mock may keep emitting after input ends.
const VIRTUAL_FLUSH_CAP_MS: i64 = 600_000;

#[derive(Debug, Error)]
pub enum StreamError {
    #[error("could not connect to {addr}: {source}")]
    Connect { addr: String, source: std::io::Error },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("protocol error: {0}")]
    Protocol(#[from] FrameError),
    #[error("invalid input: {0}")]
    BadInput(String),
    #[error("mock error: {0}")]
    Mock(#[from] crate::mockd::MockError),
    #[error("trace file error: {0}")]
    TraceFormat(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClockMode {
    /// Wall-clock pacing against a network endpoint.
    #[serde(rename = "real")]
    RealTime,
    Virtual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceEventKind {
    ChunkSent,
    AudioReceived,
    TextReceived,
    StreamEnd,
}

/// One timestamped event on the session clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub t_ms: i64,
    pub kind: TraceEventKind,
    pub payload_bytes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

/// Audio payload of one `AudioReceived` event, kept out of the JSONL form.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedAudio {
    pub t_ms: i64,
    pub samples: Vec<i16>,
}

/// Timestamped record of everything sent to and received from the server
/// during one streamed session.
#[derive(Debug, Clone, PartialEq)]
pub struct DuplexTrace {
    pub session_id: String,
    pub chunk_ms: i64,
    pub clock_mode: ClockMode,
    pub events: Vec<TraceEvent>,
    /// False when the connection dropped or the server misbehaved.
    pub complete: bool,
    pub failure: Option<String>,
    pub received_audio: Vec<ReceivedAudio>,
}

impl DuplexTrace {
    pub fn sent_chunk_times(&self) -> Vec<i64> {
        self.events
            .iter()
            .filter(|e| e.kind == TraceEventKind::ChunkSent)
            .map(|e| e.t_ms)
            .collect()
    }

    pub fn received_text(&self) -> Vec<&str> {
        self.events
            .iter()
            .filter(|e| e.kind == TraceEventKind::TextReceived)
            .filter_map(|e| e.text.as_deref())
            .collect()
    }

    /// Total duration of received audio in milliseconds.
    pub fn received_audio_ms(&self) -> i64 {
        let samples: usize = self.received_audio.iter().map(|r| r.samples.len()).sum();
        ms_from_samples(samples, crate::SAMPLE_RATE_HZ)
    }
}

/// Where a received chunk lands on the playback timeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub receive_t_ms: i64,
    pub playback_start_ms: i64,
    pub duration_ms: i64,
}

/// Places received audio on the session clock the way a real-time playback
/// buffer would: each chunk starts at its receive time or at the end of the
/// previous chunk, whichever is later, since a listener cannot hear audio
/// faster than real time.
pub fn reconstruct_output_timeline(trace: &DuplexTrace) -> (Wave, Vec<Placement>) {
    let rate = crate::SAMPLE_RATE_HZ;
    let mut placements = Vec::with_capacity(trace.received_audio.len());
    let mut spans: Vec<(usize, &[i16])> = Vec::with_capacity(trace.received_audio.len());
    let mut cursor = 0usize;
    for chunk in &trace.received_audio {
        let receive_sample = samples_from_ms(chunk.t_ms, rate);
        let start = receive_sample.max(cursor);
        cursor = start + chunk.samples.len();
        spans.push((start, &chunk.samples));
        placements.push(Placement {
            receive_t_ms: chunk.t_ms,
            playback_start_ms: ms_from_samples(start, rate),
            duration_ms: ms_from_samples(chunk.samples.len(), rate),
        });
    }
    let mut samples = vec![0f32; cursor];
    for (start, chunk) in spans {
        for (i, &v) in chunk.iter().enumerate() {
            samples[start + i] = i16_to_sample(v);
        }
    }
    (Wave::new(samples, rate), placements)
}

/// Streams a session against the in-process mock machine under a simulated
/// clock. Chunk `k` carries the samples starting at `k * chunk_ms` and is
/// stamped with exactly that time, mirroring the real-time client.
pub fn run_session_virtual(
    wave: &Wave,
    manifest: &SessionManifest,
    behavior: &BehaviorScript,
    chunk_ms: i64,
) -> Result<DuplexTrace, StreamError> {
    if chunk_ms <= 0 {
        return Err(StreamError::BadInput("chunk_ms must be positive".into()));
    }
    behavior.validate()?;
    let rate = wave.sample_rate();
    let chunk_samples = samples_from_ms(chunk_ms, rate);

    let mut trace = DuplexTrace {
        session_id: manifest.session_id.clone(),
        chunk_ms,
        clock_mode: ClockMode::Virtual,
        events: Vec::new(),
        complete: true,
        failure: None,
        received_audio: Vec::new(),
    };

    let mut machine = MockMachine::new(behavior.clone(), rate);
    let mut t_end = 0i64;
    if !wave.is_empty() {
        for (k, chunk) in wave.samples().chunks(chunk_samples).enumerate() {
            let t = k as i64 * chunk_ms;
            // everything the machine returns here is stamped <= t
            record_outputs(&mut trace, machine.on_chunk(t, chunk));
            trace.events.push(TraceEvent {
                t_ms: t,
                kind: TraceEventKind::ChunkSent,
                payload_bytes: chunk.len() * 2,
                text: None,
            });
            t_end = t + ms_from_samples(chunk.len(), rate);
        }
        record_outputs(&mut trace, machine.on_end_input(t_end));
        let mut t = t_end;
        while !machine.is_idle() && t < t_end + VIRTUAL_FLUSH_CAP_MS {
            t += chunk_ms;
            record_outputs(&mut trace, machine.poll(t));
        }
    }

    let last_t = trace.events.last().map(|e| e.t_ms).unwrap_or(0).max(t_end);
    trace.events.push(TraceEvent {
        t_ms: last_t,
        kind: TraceEventKind::StreamEnd,
        payload_bytes: 0,
        text: None,
    });
    Ok(trace)
}

fn record_outputs(trace: &mut DuplexTrace, outputs: Vec<MockOutput>) {
    for out in outputs {
        push_output(trace, out);
    }
}

fn push_output(trace: &mut DuplexTrace, out: MockOutput) {
    match out {
        MockOutput::Audio { at_ms, samples } => {
            trace.events.push(TraceEvent {
                t_ms: at_ms,
                kind: TraceEventKind::AudioReceived,
                payload_bytes: samples.len() * 2,
                text: None,
            });
            trace.received_audio.push(ReceivedAudio { t_ms: at_ms, samples });
        }
        MockOutput::Text { at_ms, text } => {
            trace.events.push(TraceEvent {
                t_ms: at_ms,
                kind: TraceEventKind::TextReceived,
                payload_bytes: text.len(),
                text: Some(text),
            });
        }
    }
}
