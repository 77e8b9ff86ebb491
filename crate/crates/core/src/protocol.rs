//! Reference wire protocol for duplex audio sessions.
//!
//! Length-prefixed binary frames over a single bidirectional stream:
//!
//! ```text
//! magic 0xFD 0x01 | type (1 byte) | payload length u32 LE | payload
//! ```
//!
//! Types: `0x01` ChunkIn, `0x11` AudioOut, `0x12` TextOut, `0x0F` EndIn,
//! `0x1F` EndOut. Audio payloads are s16le mono 24 kHz.

use std::io::{Read, Write};

use thiserror::Error;

pub const MAGIC: [u8; 2] = [0xFD, 0x01];
pub const HEADER_LEN: usize = 7;
/// Upper bound on payload size; anything larger is treated as corruption.
pub const MAX_PAYLOAD: u32 = 16 * 1024 * 1024;

const TYPE_CHUNK_IN: u8 = 0x01;
const TYPE_AUDIO_OUT: u8 = 0x11;
const TYPE_TEXT_OUT: u8 = 0x12;
const TYPE_END_IN: u8 = 0x0F;
const TYPE_END_OUT: u8 = 0x1F;

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("bad magic bytes {0:02x?}")]
    BadMagic([u8; 2]),
    #[error("unknown frame type 0x{0:02x}")]
    UnknownType(u8),
    #[error("payload length {0} exceeds limit {MAX_PAYLOAD}")]
    PayloadTooLarge(u32),
    #[error("audio payload of {0} bytes is not a whole number of s16le samples")]
    OddAudioPayload(usize),
    #[error("text payload is not valid utf-8")]
    InvalidText,
    #[error("unexpected payload on end frame")]
    UnexpectedPayload,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl FrameError {
    /// True when the error represents a clean end-of-stream between frames.
    pub fn is_disconnect(&self) -> bool {
        matches!(self, FrameError::Io(e) if e.kind() == std::io::ErrorKind::UnexpectedEof)
    }
}

/// One protocol frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Frame {
    /// Client-to-server audio chunk.
    ChunkIn(Vec<i16>),
    /// Server-to-client audio.
    AudioOut(Vec<i16>),
    /// Server-to-client text.
    TextOut(String),
    /// Client is done sending.
    EndIn,
    /// Server is done emitting.
    EndOut,
}

impl Frame {
    fn type_byte(&self) -> u8 {
        match self {
            Frame::ChunkIn(_) => TYPE_CHUNK_IN,
            Frame::AudioOut(_) => TYPE_AUDIO_OUT,
            Frame::TextOut(_) => TYPE_TEXT_OUT,
            Frame::EndIn => TYPE_END_IN,
            Frame::EndOut => TYPE_END_OUT,
        }
    }

    pub fn payload_len(&self) -> usize {
        match self {
            Frame::ChunkIn(s) | Frame::AudioOut(s) => s.len() * 2,
            Frame::TextOut(t) => t.len(),
            Frame::EndIn | Frame::EndOut => 0,
        }
    }
}

/// Serializes a frame to its exact byte layout.
pub fn encode_frame(frame: &Frame) -> Vec<u8> {
    let payload_len = frame.payload_len();
    let mut out = Vec::with_capacity(HEADER_LEN + payload_len);
    out.extend_from_slice(&MAGIC);
    out.push(frame.type_byte());
    out.extend_from_slice(&(payload_len as u32).to_le_bytes());
    match frame {
        Frame::ChunkIn(samples) | Frame::AudioOut(samples) => {
            for s in samples {
                out.extend_from_slice(&s.to_le_bytes());
            }
        }
        Frame::TextOut(text) => out.extend_from_slice(text.as_bytes()),
        Frame::EndIn | Frame::EndOut => {}
    }
    out
}

/// Decodes one frame from a byte slice, returning the bytes consumed.
pub fn decode_frame(bytes: &[u8]) -> Result<(Frame, usize), FrameError> {
    let mut cursor = std::io::Cursor::new(bytes);
    let frame = read_frame(&mut cursor)?;
    Ok((frame, cursor.position() as usize))
}

/// Reads one frame from a stream. An EOF before the first header byte comes
/// back as an `Io` error of kind `UnexpectedEof`.
pub fn read_frame<R: Read>(r: &mut R) -> Result<Frame, FrameError> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)?;
    if header[0..2] != MAGIC {
        return Err(FrameError::BadMagic([header[0], header[1]]));
    }
    let frame_type = header[2];
    let len = u32::from_le_bytes([header[3], header[4], header[5], header[6]]);
    if len > MAX_PAYLOAD {
        return Err(FrameError::PayloadTooLarge(len));
    }
    let mut payload = vec![0u8; len as usize];
    r.read_exact(&mut payload)?;

    match frame_type {
        TYPE_CHUNK_IN | TYPE_AUDIO_OUT => {
            if payload.len() % 2 != 0 {
                return Err(FrameError::OddAudioPayload(payload.len()));
            }
            let samples: Vec<i16> = payload
                .chunks_exact(2)
                .map(|b| i16::from_le_bytes([b[0], b[1]]))
                .collect();
            Ok(if frame_type == TYPE_CHUNK_IN {
                Frame::ChunkIn(samples)
            } else {
                Frame::AudioOut(samples)
            })
        }
        TYPE_TEXT_OUT => {
            let text = String::from_utf8(payload).map_err(|_| FrameError::InvalidText)?;
            Ok(Frame::TextOut(text))
        }
        TYPE_END_IN | TYPE_END_OUT => {
            if !payload.is_empty() {
                return Err(FrameError::UnexpectedPayload);
            }
            Ok(if frame_type == TYPE_END_IN { Frame::EndIn } else { Frame::EndOut })
        }
        t => Err(FrameError::UnknownType(t)),
    }
}

pub fn write_frame<W: Write>(w: &mut W, frame: &Frame) -> Result<(), FrameError> {
    w.write_all(&encode_frame(frame))?;
    Ok(())
}
