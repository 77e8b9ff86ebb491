//! Trace persistence: JSON lines, one event per line, after a header line.
//!
//! Received audio payloads are not part of the JSONL form; they are saved
//! separately as the reconstructed output WAV.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ClockMode, DuplexTrace, StreamError, TraceEvent};

#[derive(Serialize, Deserialize)]
struct TraceHeader {
    session_id: String,
    chunk_ms: i64,
    clock_mode: ClockMode,
    complete: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    failure: Option<String>,
}

pub fn write_trace_jsonl(trace: &DuplexTrace, path: &Path) -> Result<(), StreamError> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    let header = TraceHeader {
        session_id: trace.session_id.clone(),
        chunk_ms: trace.chunk_ms,
        clock_mode: trace.clock_mode,
        complete: trace.complete,
        failure: trace.failure.clone(),
    };
    writeln!(file, "{}", serde_json::to_string(&header).expect("header serializes"))?;
    for event in &trace.events {
        writeln!(file, "{}", serde_json::to_string(event).expect("event serializes"))?;
    }
    Ok(())
}

/// Reads a trace back without audio payloads.
pub fn read_trace_jsonl(path: &Path) -> Result<DuplexTrace, StreamError> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut lines = file.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| StreamError::TraceFormat("empty trace file".into()))??;
    let header: TraceHeader = serde_json::from_str(&header_line)
        .map_err(|e| StreamError::TraceFormat(format!("bad header: {e}")))?;
    let mut events: Vec<TraceEvent> = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        events.push(
            serde_json::from_str(&line)
                .map_err(|e| StreamError::TraceFormat(format!("bad event line: {e}")))?,
        );
    }
    Ok(DuplexTrace {
        session_id: header.session_id,
        chunk_ms: header.chunk_ms,
        clock_mode: header.clock_mode,
        events,
        complete: header.complete,
        failure: header.failure,
        received_audio: Vec::new(),
    })
}
