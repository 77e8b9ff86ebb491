//! Word error rate over normalized word tokens.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WerError {
    #[error("reference is empty after normalization, WER is undefined")]
    EmptyReference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WerReport {
    pub wer_percent: f64,
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub ref_words: usize,
}

/// Lowercases, strips punctuation, and collapses whitespace. Idempotent.
pub fn normalize_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for c in text.chars() {
        if c.is_alphanumeric() {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            for lc in c.to_lowercase() {
                out.push(lc);
            }
        } else if c.is_whitespace() {
            pending_space = true;
        }
        // punctuation and symbols are dropped without forcing a word break,
        // so "don't" stays one token
    }
    out
}

/// WER = (S + D + I) / N_ref * 100 via minimal word-level edit distance.
pub fn word_error_rate(reference: &str, hypothesis: &str) -> Result<WerReport, WerError> {
    let ref_words: Vec<String> =
        normalize_text(reference).split_whitespace().map(str::to_owned).collect();
    if ref_words.is_empty() {
        return Err(WerError::EmptyReference);
    }
    let hyp_words: Vec<String> =
        normalize_text(hypothesis).split_whitespace().map(str::to_owned).collect();
    let (s, d, i) = align_counts(&ref_words, &hyp_words);
    Ok(WerReport {
        wer_percent: (s + d + i) as f64 / ref_words.len() as f64 * 100.0,
        substitutions: s,
        deletions: d,
        insertions: i,
        ref_words: ref_words.len(),
    })
}

/// Corpus-level WER: edit operations pooled over all pairs, divided by the
/// pooled reference length.
pub fn pooled_wer(pairs: &[(String, String)]) -> Result<WerReport, WerError> {
    let mut s = 0;
    let mut d = 0;
    let mut i = 0;
    let mut n = 0;
    for (reference, hypothesis) in pairs {
        let r = word_error_rate(reference, hypothesis)?;
        s += r.substitutions;
        d += r.deletions;
        i += r.insertions;
        n += r.ref_words;
    }
    if n == 0 {
        return Err(WerError::EmptyReference);
    }
    Ok(WerReport {
        wer_percent: (s + d + i) as f64 / n as f64 * 100.0,
        substitutions: s,
        deletions: d,
        insertions: i,
        ref_words: n,
    })
}

/// Levenshtein alignment with an operation-count backtrace. Ties prefer
/// match/substitution, then deletion, then insertion.
fn align_counts(reference: &[String], hypothesis: &[String]) -> (usize, usize, usize) {
    let n = reference.len();
    let m = hypothesis.len();
    let mut dist = vec![vec![0u32; m + 1]; n + 1];
    for (i, row) in dist.iter_mut().enumerate() {
        row[0] = i as u32;
    }
    for j in 0..=m {
        dist[0][j] = j as u32;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = dist[i - 1][j - 1] + u32::from(reference[i - 1] != hypothesis[j - 1]);
            let del = dist[i - 1][j] + 1;
            let ins = dist[i][j - 1] + 1;
            dist[i][j] = sub.min(del).min(ins);
        }
    }

    let (mut i, mut j) = (n, m);
    let (mut subs, mut dels, mut inss) = (0, 0, 0);
    while i > 0 || j > 0 {
        if i > 0 && j > 0 {
            let cost = u32::from(reference[i - 1] != hypothesis[j - 1]);
            if dist[i][j] == dist[i - 1][j - 1] + cost {
                subs += cost as usize;
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && dist[i][j] == dist[i - 1][j] + 1 {
            dels += 1;
            i -= 1;
        } else {
            inss += 1;
            j -= 1;
        }
    }
    (subs, dels, inss)
}
