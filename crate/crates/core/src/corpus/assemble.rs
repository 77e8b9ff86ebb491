//! Session assembly: utterances joined by seeded random silence gaps.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::audio::{ms_from_samples, Waveform};
use crate::num::Sample;

use super::manifest::{Difficulty, GapSpan, NoiseMode, SessionManifest, UserSegment};
use super::script::ConversationScript;
use super::CorpusError;

/// Concatenates the script's user utterances into one session waveform,
/// drawing each inter-utterance gap uniformly from the difficulty's range.
///
/// Identical inputs and seed produce a bit-identical waveform and manifest.
/// Segment boundaries in the manifest are sample-exact; millisecond fields
/// are rounded from the sample positions.
pub fn assemble_session<S: Sample>(
    utterance_audio: &[Waveform<S>],
    script: &ConversationScript,
    difficulty: Difficulty,
    rng_seed: u64,
) -> Result<(Waveform<S>, SessionManifest), CorpusError> {
    let specs = script.utterances_in_order();
    if utterance_audio.len() != specs.len() {
        return Err(CorpusError::UtteranceCountMismatch {
            expected: specs.len(),
            got: utterance_audio.len(),
        });
    }
    let rate = utterance_audio
        .first()
        .map(|w| w.sample_rate())
        .unwrap_or(crate::SAMPLE_RATE_HZ);
    for (index, w) in utterance_audio.iter().enumerate() {
        if w.sample_rate() != crate::SAMPLE_RATE_HZ {
            return Err(CorpusError::BadSampleRate {
                index,
                expected: crate::SAMPLE_RATE_HZ,
                got: w.sample_rate(),
            });
        }
        if w.is_empty() {
            return Err(CorpusError::EmptyUtterance { index });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let (gap_lo, gap_hi) = difficulty.gap_range_ms();

    let mut session = Waveform::empty(rate);
    let mut segments = Vec::with_capacity(specs.len());
    let mut gaps = Vec::with_capacity(specs.len().saturating_sub(1));

    for (i, (spec, wave)) in specs.iter().zip(utterance_audio).enumerate() {
        let start_sample = session.len();
        session.append(wave);
        let end_sample = session.len();
        segments.push(UserSegment {
            start_ms: ms_from_samples(start_sample, rate),
            end_ms: ms_from_samples(end_sample, rate),
            start_sample,
            end_sample,
            text: spec.text.clone(),
            is_interrupt: spec.is_interrupt,
            interrupt_type: spec.interrupt_type,
            interrupt_type_extra: spec.interrupt_type_extra,
        });

        if i + 1 < specs.len() {
            let gap_ms: i64 = rng.gen_range(gap_lo..=gap_hi);
            let gap_samples = (gap_ms * rate as i64 / 1000) as usize;
            let gap_start = session.len();
            session.extend_silence(gap_samples);
            gaps.push(GapSpan {
                start_ms: ms_from_samples(gap_start, rate),
                end_ms: ms_from_samples(gap_start + gap_samples, rate),
                start_sample: gap_start,
                end_sample: gap_start + gap_samples,
                has_noise: false,
            });
        }
    }

    let manifest = SessionManifest {
        session_id: script.conversation_id.clone(),
        sample_rate_hz: rate,
        difficulty,
        noise_mode: NoiseMode::None,
        snr_db: None,
        rng_seed,
        segments,
        gaps,
    };
    debug_assert!(manifest.validate().is_ok());
    Ok((session, manifest))
}
