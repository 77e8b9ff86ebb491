//! SNR-controlled noise injection.
//!
//! Signal power is measured over the speech segments of the manifest only;
//! gaps are silent and would inflate the ratio arbitrarily. Noise power is
//! measured over the span the noise is inserted into, before scaling.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::audio::{mean_square, Waveform};
use crate::num::Sample;

use super::manifest::{NoiseMode, SessionManifest};
use super::CorpusError;

/// Crossfade applied when a short noise clip has to be tiled, in samples
/// (10 ms at 24 kHz), to avoid clicks at the seams.
const TILE_FADE_SAMPLES: usize = 240;

/// Mixes noise into a session at the requested SNR.
///
/// `Bg` covers the full session; `Gap` touches only the silence gaps and
/// leaves every speech sample bit-identical. Returns the mixed waveform and
/// the manifest updated with the noise configuration.
pub fn mix_noise<S: Sample>(
    wave: &Waveform<S>,
    manifest: &SessionManifest,
    mode: NoiseMode,
    snr_db: i32,
    noise: &Waveform<S>,
    noise_seed: u64,
) -> Result<(Waveform<S>, SessionManifest), CorpusError> {
    if matches!(mode, NoiseMode::None) {
        return Err(CorpusError::InvalidManifest(
            "mix_noise requires bg or gap mode".into(),
        ));
    }
    if noise.is_empty() {
        return Err(CorpusError::EmptyNoise);
    }

    let track = noise_track(noise, wave.len(), noise_seed);

    let speech: Vec<S> = manifest
        .segments
        .iter()
        .flat_map(|s| wave.samples()[s.start_sample..s.end_sample.min(wave.len())].iter().copied())
        .collect();
    let p_signal = mean_square(&speech);
    if p_signal <= 0.0 {
        return Err(CorpusError::UndefinedSnr);
    }

    let span_ranges: Vec<(usize, usize)> = match mode {
        NoiseMode::Bg => vec![(0, wave.len())],
        NoiseMode::Gap => manifest
            .gaps
            .iter()
            .map(|g| (g.start_sample, g.end_sample.min(wave.len())))
            .collect(),
        NoiseMode::None => unreachable!(),
    };
    let span: Vec<S> = span_ranges
        .iter()
        .flat_map(|&(a, b)| track[a..b].iter().copied())
        .collect();
    let p_noise = mean_square(&span);
    if p_noise <= 0.0 {
        return Err(CorpusError::ZeroNoisePower);
    }

    // 10*log10(p_signal / (k^2 * p_noise)) = snr_db  =>  k below
    let scale = (p_signal / (p_noise * 10f64.powf(snr_db as f64 / 10.0))).sqrt();
    let scale_s = S::from_f64_lossy(scale);

    let mut mixed = wave.clone();
    for &(a, b) in &span_ranges {
        let out = &mut mixed.samples_mut()[a..b];
        for (o, n) in out.iter_mut().zip(&track[a..b]) {
            *o = *o + *n * scale_s;
        }
    }

    let mut updated = manifest.clone();
    updated.noise_mode = mode;
    updated.snr_db = Some(snr_db);
    for g in &mut updated.gaps {
        g.has_noise = true;
    }
    Ok((mixed, updated))
}

/// Measures the SNR actually present in a mixed session by comparing it with
/// the clean original: signal power over speech segments, noise power over
/// the insertion span.
pub fn realized_snr_db<S: Sample>(
    clean: &Waveform<S>,
    mixed: &Waveform<S>,
    manifest: &SessionManifest,
    mode: NoiseMode,
) -> Option<f64> {
    let speech: Vec<S> = manifest
        .segments
        .iter()
        .flat_map(|s| clean.samples()[s.start_sample..s.end_sample.min(clean.len())].iter().copied())
        .collect();
    let p_signal = mean_square(&speech);

    let ranges: Vec<(usize, usize)> = match mode {
        NoiseMode::Bg => vec![(0, clean.len())],
        NoiseMode::Gap => manifest
            .gaps
            .iter()
            .map(|g| (g.start_sample, g.end_sample.min(clean.len())))
            .collect(),
        NoiseMode::None => return None,
    };
    let residual: Vec<f64> = ranges
        .iter()
        .flat_map(|&(a, b)| {
            clean.samples()[a..b]
                .iter()
                .zip(&mixed.samples()[a..b])
                .map(|(&c, &m)| m.to_f64_lossy() - c.to_f64_lossy())
        })
        .collect();
    if residual.is_empty() {
        return None;
    }
    let p_noise: f64 =
        residual.iter().map(|v| v * v).sum::<f64>() / residual.len() as f64;
    if p_signal <= 0.0 || p_noise <= 0.0 {
        return None;
    }
    Some(10.0 * (p_signal / p_noise).log10())
}

/// Builds a noise track of exactly `len` samples from a source clip.
///
/// A clip at least as long as the session is cut at a seeded random offset;
/// a shorter clip is tiled circularly with a short crossfade at each seam.
fn noise_track<S: Sample>(noise: &Waveform<S>, len: usize, seed: u64) -> Vec<S> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let src = noise.samples();
    if src.len() >= len {
        let offset = rng.gen_range(0..=src.len() - len);
        return src[offset..offset + len].to_vec();
    }

    let offset = rng.gen_range(0..src.len());
    let fade = TILE_FADE_SAMPLES.min(src.len().saturating_sub(1));
    let mut buf: Vec<S> = src.to_vec();
    while buf.len() < offset + len {
        let base = buf.len() - fade;
        for i in 0..fade {
            let w = S::from_f64_lossy((i + 1) as f64 / (fade + 1) as f64);
            buf[base + i] = buf[base + i] * (S::one() - w) + src[i] * w;
        }
        buf.extend_from_slice(&src[fade..]);
    }
    buf[offset..offset + len].to_vec()
}
