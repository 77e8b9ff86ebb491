//! Real-time paced TCP client.

use std::io::Read;
use std::net::TcpStream;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use crate::audio::{ms_from_samples, samples_from_ms, sample_to_i16};
use crate::corpus::SessionManifest;
use crate::protocol::{decode_frame, write_frame, Frame, FrameError, HEADER_LEN};
use crate::Wave;

use super::{
    ClockMode, DuplexTrace, ReceivedAudio, StreamError, TraceEvent, TraceEventKind,
};

/// Abort the session if the server goes quiet for this long after input
/// ends. While input is still streaming the server may stay silent for as
/// long as it likes.
const SERVER_IDLE_TIMEOUT: Duration = Duration::from_secs(30);
const READ_POLL: Duration = Duration::from_millis(20);

#[derive(Default)]
struct SharedTrace {
    events: Vec<TraceEvent>,
    received_audio: Vec<ReceivedAudio>,
    failure: Option<String>,
    ended: bool,
}

/// Streams the session to `addr` in `chunk_ms` chunks paced on the wall
/// clock, recording server frames concurrently. Timestamps are zeroed at the
/// first chunk send and taken at I/O completion.
///
/// A refused connection is an error; a connection dropped mid-session comes
/// back as a trace with `complete = false` and the failure point recorded.
pub fn run_session_tcp(
    wave: &Wave,
    manifest: &SessionManifest,
    addr: &str,
    chunk_ms: i64,
) -> Result<DuplexTrace, StreamError> {
    if chunk_ms <= 0 {
        return Err(StreamError::BadInput("chunk_ms must be positive".into()));
    }
    let stream = TcpStream::connect(addr).map_err(|source| StreamError::Connect {
        addr: addr.to_string(),
        source,
    })?;
    stream.set_nodelay(true)?;
    stream.set_read_timeout(Some(READ_POLL))?;
    let mut writer = stream.try_clone()?;

    let shared = Arc::new(Mutex::new(SharedTrace::default()));
    let input_done = Arc::new(AtomicBool::new(false));
    let start = Instant::now();

    let reader_shared = Arc::clone(&shared);
    let reader_input_done = Arc::clone(&input_done);
    let reader = std::thread::spawn(move || {
        read_loop(stream, start, &reader_shared, &reader_input_done);
    });

    let chunk_samples = samples_from_ms(chunk_ms, wave.sample_rate());
    let mut send_failure: Option<String> = None;
    if !wave.is_empty() {
        for (k, chunk) in wave.samples().chunks(chunk_samples).enumerate() {
            sleep_until(start + Duration::from_millis((k as i64 * chunk_ms) as u64));
            let samples: Vec<i16> = chunk.iter().map(|&s| sample_to_i16(s)).collect();
            if let Err(e) = write_frame(&mut writer, &Frame::ChunkIn(samples)) {
                send_failure = Some(format!("send failed at chunk {k}: {e}"));
                break;
            }
            let t = elapsed_ms(start);
            shared.lock().unwrap().events.push(TraceEvent {
                t_ms: t,
                kind: TraceEventKind::ChunkSent,
                payload_bytes: chunk.len() * 2,
                text: None,
            });
        }
    }
    if send_failure.is_none() {
        if let Err(e) = write_frame(&mut writer, &Frame::EndIn) {
            send_failure = Some(format!("send failed at end-of-input: {e}"));
        }
    }
    input_done.store(true, Ordering::SeqCst);

    let _ = reader.join();

    let mut s = match Arc::try_unwrap(shared) {
        Ok(m) => m.into_inner().unwrap(),
        Err(_) => unreachable!("reader joined"),
    };
    let failure = send_failure.or(s.failure.take());
    let complete = failure.is_none() && s.ended;
    let failure = match (complete, failure) {
        (false, None) => Some("stream ended without server end-of-output".to_string()),
        (_, f) => f,
    };

    let end_t = elapsed_ms(start)
        .max(s.events.last().map(|e| e.t_ms).unwrap_or(0))
        .max(ms_from_samples(wave.len(), wave.sample_rate()));
    s.events.push(TraceEvent {
        t_ms: end_t,
        kind: TraceEventKind::StreamEnd,
        payload_bytes: 0,
        text: None,
    });

    Ok(DuplexTrace {
        session_id: manifest.session_id.clone(),
        chunk_ms,
        clock_mode: ClockMode::RealTime,
        events: s.events,
        complete,
        failure,
        received_audio: s.received_audio,
    })
}

/// Receives frames until EndOut, a protocol error, or a post-input timeout.
///
/// Reads are polled with a short timeout into a growing buffer and frames
/// are parsed only once complete, so a timeout never drops half a frame. A
/// silent server is fine while input is still streaming; once input is done
/// it has [`SERVER_IDLE_TIMEOUT`] to finish.
fn read_loop(
    mut stream: TcpStream,
    start: Instant,
    shared: &Mutex<SharedTrace>,
    input_done: &AtomicBool,
) {
    let mut buf: Vec<u8> = Vec::new();
    let mut consumed = 0usize;
    let mut scratch = [0u8; 16 * 1024];
    let mut idle_since: Option<Instant> = None;
    loop {
        // drain complete frames from the buffer
        while buf.len() - consumed >= HEADER_LEN {
            match decode_frame(&buf[consumed..]) {
                Ok((frame, n)) => {
                    consumed += n;
                    match frame {
                        Frame::AudioOut(samples) => {
                            let t = elapsed_ms(start);
                            let mut s = shared.lock().unwrap();
                            s.events.push(TraceEvent {
                                t_ms: t,
                                kind: TraceEventKind::AudioReceived,
                                payload_bytes: samples.len() * 2,
                                text: None,
                            });
                            s.received_audio.push(ReceivedAudio { t_ms: t, samples });
                        }
                        Frame::TextOut(text) => {
                            let t = elapsed_ms(start);
                            let mut s = shared.lock().unwrap();
                            s.events.push(TraceEvent {
                                t_ms: t,
                                kind: TraceEventKind::TextReceived,
                                payload_bytes: text.len(),
                                text: Some(text),
                            });
                        }
                        Frame::EndOut => {
                            shared.lock().unwrap().ended = true;
                            return;
                        }
                        frame => {
                            shared.lock().unwrap().failure =
                                Some(format!("server sent client-only frame {frame:?}"));
                            return;
                        }
                    }
                }
                Err(e) if e.is_disconnect() => break, // frame incomplete, read more
                Err(e) => {
                    shared.lock().unwrap().failure = Some(format!("receive failed: {e}"));
                    return;
                }
            }
        }
        if consumed > 0 {
            buf.drain(..consumed);
            consumed = 0;
        }

        match stream.read(&mut scratch) {
            Ok(0) => {
                shared.lock().unwrap().failure =
                    Some("connection closed before end-of-output".to_string());
                return;
            }
            Ok(n) => {
                buf.extend_from_slice(&scratch[..n]);
                idle_since = None;
            }
            Err(e)
                if e.kind() == std::io::ErrorKind::WouldBlock
                    || e.kind() == std::io::ErrorKind::TimedOut =>
            {
                if input_done.load(Ordering::SeqCst) {
                    let since = *idle_since.get_or_insert_with(Instant::now);
                    if since.elapsed() > SERVER_IDLE_TIMEOUT {
                        shared.lock().unwrap().failure = Some(format!(
                            "server idle for {}s after end-of-input",
                            SERVER_IDLE_TIMEOUT.as_secs()
                        ));
                        return;
                    }
                }
            }
            Err(e) => {
                shared.lock().unwrap().failure = Some(format!("receive failed: {e}"));
                return;
            }
        }
    }
}

fn elapsed_ms(start: Instant) -> i64 {
    start.elapsed().as_millis() as i64
}

/// Coarse sleep followed by a short spin for sub-millisecond pacing.
fn sleep_until(target: Instant) {
    const SPIN_WINDOW: Duration = Duration::from_millis(2);
    loop {
        let now = Instant::now();
        if now >= target {
            return;
        }
        let remaining = target - now;
        if remaining > SPIN_WINDOW {
            std::thread::sleep(remaining - SPIN_WINDOW);
        } else {
            std::hint::spin_loop();
        }
    }
}
