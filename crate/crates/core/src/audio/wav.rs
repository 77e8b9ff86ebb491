//! WAV I/O pinned to the corpus format: 16-bit PCM, mono.

use std::path::Path;

use super::{AudioError, Waveform};
use crate::num::Sample;

/// Reads a mono 16-bit PCM WAV file, rejecting any other layout.
///
/// Rates other than `expected_rate_hz` are rejected rather than resampled.
pub fn read_wav<S: Sample>(path: &Path, expected_rate_hz: u32) -> Result<Waveform<S>, AudioError> {
    let mut reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    if spec.channels != 1
        || spec.sample_rate != expected_rate_hz
        || spec.bits_per_sample != 16
        || spec.sample_format != hound::SampleFormat::Int
    {
        return Err(AudioError::UnsupportedFormat {
            expected: expected_rate_hz,
            got: format!(
                "{} Hz, {} ch, {}-bit {:?}",
                spec.sample_rate, spec.channels, spec.bits_per_sample, spec.sample_format
            ),
        });
    }
    let samples: Result<Vec<i16>, _> = reader.samples::<i16>().collect();
    Ok(Waveform::from_i16_samples(&samples?, expected_rate_hz))
}

/// In-memory WAV encoding of a waveform, for service uploads.
pub fn wav_bytes<S: Sample>(wave: &Waveform<S>) -> Result<Vec<u8>, AudioError> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: wave.sample_rate(),
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut cursor = std::io::Cursor::new(Vec::new());
    {
        let mut writer = hound::WavWriter::new(&mut cursor, spec)?;
        for v in wave.to_i16_samples() {
            writer.write_sample(v)?;
        }
        writer.finalize()?;
    }
    Ok(cursor.into_inner())
}

/// Writes a waveform as mono 16-bit PCM.
pub fn write_wav<S: Sample>(path: &Path, wave: &Waveform<S>) -> Result<(), AudioError> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: wave.sample_rate(),
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec)?;
    for v in wave.to_i16_samples() {
        writer.write_sample(v)?;
    }
    writer.finalize()?;
    Ok(())
}
