//! TCP front end for the mock machine.

use std::io::Write;
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Arc};
use std::time::{Duration, Instant};

use crate::audio::i16_to_sample;
use crate::protocol::{read_frame, write_frame, Frame, FrameError};

use super::machine::{MockMachine, MockOutput};
use super::{BehaviorScript, MockError};

const POLL_INTERVAL: Duration = Duration::from_millis(5);

/// Handle to a server spawned in the background.
pub struct MockServer {
    addr: SocketAddr,
    shutdown: Arc<AtomicBool>,
    handle: Option<std::thread::JoinHandle<()>>,
}

impl MockServer {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.stop();
    }
}

/// Binds `addr` (use port 0 for an ephemeral port) and serves connections on
/// a background thread until the handle is dropped.
pub fn spawn_server(behavior: BehaviorScript, addr: &str) -> Result<MockServer, MockError> {
    behavior.validate()?;
    let listener = TcpListener::bind(addr)?;
    let addr = listener.local_addr()?;
    let shutdown = Arc::new(AtomicBool::new(false));
    let flag = Arc::clone(&shutdown);
    let handle = std::thread::spawn(move || serve_blocking(behavior, listener, flag));
    Ok(MockServer { addr, shutdown, handle: Some(handle) })
}

/// Accept loop; returns when `shutdown` is set.
pub fn serve_blocking(behavior: BehaviorScript, listener: TcpListener, shutdown: Arc<AtomicBool>) {
    listener.set_nonblocking(true).expect("nonblocking listener");
    let mut workers = Vec::new();
    while !shutdown.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, _)) => {
                let behavior = behavior.clone();
                workers.push(std::thread::spawn(move || {
                    let _ = handle_connection(stream, behavior);
                }));
            }
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                std::thread::sleep(Duration::from_millis(10));
            }
            Err(_) => break,
        }
    }
    for w in workers {
        let _ = w.join();
    }
}

fn handle_connection(stream: TcpStream, behavior: BehaviorScript) -> Result<(), MockError> {
    stream.set_nodelay(true)?;
    let mut writer = stream.try_clone()?;
    let mut reader = stream;

    // blocking reads stay on their own thread so partially-read frames are
    // never dropped by a timeout
    let (tx, rx) = mpsc::channel::<Result<Frame, FrameError>>();
    std::thread::spawn(move || loop {
        let frame = read_frame(&mut reader);
        let done = frame.is_err();
        if tx.send(frame).is_err() || done {
            break;
        }
    });

    let mut machine = MockMachine::new(behavior, crate::SAMPLE_RATE_HZ);
    let mut session_start: Option<Instant> = None;
    let now_ms = |start: &Option<Instant>| -> i64 {
        start.map(|s| s.elapsed().as_millis() as i64).unwrap_or(0)
    };

    loop {
        match rx.recv_timeout(POLL_INTERVAL) {
            Ok(Ok(Frame::ChunkIn(samples))) => {
                if session_start.is_none() {
                    session_start = Some(Instant::now());
                }
                let t = now_ms(&session_start);
                let samples: Vec<f32> = samples.iter().map(|&v| i16_to_sample(v)).collect();
                send_outputs(&mut writer, machine.on_chunk(t, &samples))?;
            }
            Ok(Ok(Frame::EndIn)) => {
                let t = now_ms(&session_start);
                send_outputs(&mut writer, machine.on_end_input(t))?;
                while !machine.is_idle() {
                    std::thread::sleep(POLL_INTERVAL);
                    send_outputs(&mut writer, machine.poll(now_ms(&session_start)))?;
                }
                write_frame(&mut writer, &Frame::EndOut).map_err(io_of)?;
                writer.flush()?;
                break;
            }
            Ok(Ok(_)) => {
                // client sent a server-only frame: report and close
                let _ = write_frame(
                    &mut writer,
                    &Frame::TextOut("error: unexpected frame type from client".into()),
                );
                let _ = write_frame(&mut writer, &Frame::EndOut);
                break;
            }
            Ok(Err(_)) => break, // client disconnected or sent garbage
            Err(mpsc::RecvTimeoutError::Timeout) => {
                if session_start.is_some() {
                    send_outputs(&mut writer, machine.poll(now_ms(&session_start)))?;
                }
            }
            Err(mpsc::RecvTimeoutError::Disconnected) => break,
        }
    }
    Ok(())
}

fn send_outputs(writer: &mut TcpStream, outputs: Vec<MockOutput>) -> Result<(), MockError> {
    for out in outputs {
        let frame = match out {
            MockOutput::Audio { samples, .. } => Frame::AudioOut(samples),
            MockOutput::Text { text, .. } => Frame::TextOut(text),
        };
        write_frame(writer, &frame).map_err(io_of)?;
    }
    Ok(())
}

fn io_of(e: FrameError) -> MockError {
    match e {
        FrameError::Io(io) => MockError::Io(io),
        other => MockError::Io(std::io::Error::other(other.to_string())),
    }
}
