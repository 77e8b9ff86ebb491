//! Waveform container and the small amount of signal math the harness needs.
//!
//! Samples are normalized floats in [-1, 1]; disk and wire formats are
//! 16-bit signed little-endian PCM. All session audio is mono 24 kHz.

mod wav;

pub use wav::{read_wav, wav_bytes, write_wav};

use crate::num::Sample;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("wav error: {0}")]
    Wav(#[from] hound::Error),
    #[error("expected {expected} Hz mono 16-bit PCM, got {got}")]
    UnsupportedFormat { expected: u32, got: String },
    #[error("empty waveform")]
    Empty,
}

/// Mono waveform over a generic sample scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform<S: Sample = f32> {
    samples: Vec<S>,
    sample_rate: u32,
}

impl<S: Sample> Waveform<S> {
    pub fn new(samples: Vec<S>, sample_rate: u32) -> Self {
        Self { samples, sample_rate }
    }

    pub fn empty(sample_rate: u32) -> Self {
        Self { samples: Vec::new(), sample_rate }
    }

    /// All-zero waveform of the given duration.
    pub fn silence(duration_ms: i64, sample_rate: u32) -> Self {
        let n = samples_from_ms(duration_ms, sample_rate);
        Self { samples: vec![S::zero(); n], sample_rate }
    }

    /// Sine tone, useful as trivially detectable synthetic speech.
    pub fn sine(freq_hz: f64, duration_ms: i64, amplitude: f64, sample_rate: u32) -> Self {
        let n = samples_from_ms(duration_ms, sample_rate);
        let w = 2.0 * std::f64::consts::PI * freq_hz / sample_rate as f64;
        let samples = (0..n)
            .map(|i| S::from_f64_lossy(amplitude * (w * i as f64).sin()))
            .collect();
        Self { samples, sample_rate }
    }

    pub fn samples(&self) -> &[S] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [S] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<S> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Duration rounded to the nearest millisecond.
    pub fn duration_ms(&self) -> i64 {
        ms_from_samples(self.samples.len(), self.sample_rate)
    }

    pub fn append(&mut self, other: &Waveform<S>) {
        debug_assert_eq!(self.sample_rate, other.sample_rate);
        self.samples.extend_from_slice(&other.samples);
    }

    pub fn extend_silence(&mut self, n_samples: usize) {
        self.samples.extend(std::iter::repeat(S::zero()).take(n_samples));
    }

    /// Mean squared amplitude over the whole waveform.
    pub fn power(&self) -> f64 {
        mean_square(&self.samples)
    }

    pub fn to_i16_samples(&self) -> Vec<i16> {
        self.samples.iter().map(|&s| sample_to_i16(s)).collect()
    }

    pub fn from_i16_samples(samples: &[i16], sample_rate: u32) -> Self {
        let samples = samples.iter().map(|&v| i16_to_sample(v)).collect();
        Self { samples, sample_rate }
    }
}

pub fn sample_to_i16<S: Sample>(s: S) -> i16 {
    let v = s.to_f64_lossy().clamp(-1.0, 1.0);
    (v * 32767.0).round() as i16
}

pub fn i16_to_sample<S: Sample>(v: i16) -> S {
    S::from_f64_lossy(v as f64 / 32768.0)
}

/// Mean squared amplitude; 0.0 for an empty slice.
pub fn mean_square<S: Sample>(samples: &[S]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let sum: f64 = samples.iter().map(|&s| {
        let v = s.to_f64_lossy();
        v * v
    }).sum();
    sum / samples.len() as f64
}

/// Mean absolute amplitude; 0.0 for an empty slice.
pub fn mean_abs<S: Sample>(samples: &[S]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let sum: f64 = samples.iter().map(|&s| s.to_f64_lossy().abs()).sum();
    sum / samples.len() as f64
}

/// Millisecond offset to sample index. Exact for rates divisible by 1000.
pub fn samples_from_ms(ms: i64, sample_rate: u32) -> usize {
    ((ms.max(0) as i128 * sample_rate as i128) / 1000) as usize
}

/// Sample index to milliseconds, rounded to nearest.
pub fn ms_from_samples(samples: usize, sample_rate: u32) -> i64 {
    ((samples as i128 * 1000 + sample_rate as i128 / 2) / sample_rate as i128) as i64
}
