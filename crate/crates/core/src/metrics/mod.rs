//! Metric aggregation into the report schema.
//!
//! Rates: SRR (success replies per non-interrupt inquiry), SIR (success
//! interrupts per interrupt inquiry), SRIR (successful replies-to-interrupt
//! per success interrupt), EIR (early interrupts per inquiry), NIR (noise
//! interrupts per noise gap). Timings are medians over all collected values;
//! an even count takes the mean of the two middle values. Degenerate
//! denominators produce absent fields, never zeros.

mod render;

pub use render::{
    column_headers, render_csv, render_markdown, render_svg_plots, render_to_dir, RenderFormat,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{InterruptType, SessionManifest};
use crate::events::{EventKind, SessionAnalysis};
use crate::judge::SubjectiveScore;

/// Identifies one (model, dataset) evaluation for report rows.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ReportLabel {
    pub model: String,
    pub dataset: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MetricCounts {
    pub non_interrupt_inquiries: usize,
    pub interrupt_inquiries: usize,
    pub all_inquiries: usize,
    pub noise_gaps: usize,
    pub success_replies: usize,
    pub success_interrupts: usize,
    pub success_replies_to_interrupt: usize,
    pub early_interrupts: usize,
    pub noise_interrupts: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RatesPercent {
    pub srr: Option<f64>,
    pub sir: Option<f64>,
    pub srir: Option<f64>,
    pub eir: Option<f64>,
    pub nir: Option<f64>,
}

/// Medians plus the raw value lists they were computed from.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Timings {
    pub ird_median_ms: Option<f64>,
    pub fsed_median_ms: Option<f64>,
    pub ert_median_ms: Option<f64>,
    pub eit_median_ms: Option<f64>,
    pub ird_values_ms: Vec<i64>,
    pub fsed_values_ms: Vec<i64>,
    pub ert_values_ms: Vec<i64>,
    pub eit_values_ms: Vec<i64>,
}

/// Per-dimension means of the subjective scores, plus their overall mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubjectiveSummary {
    pub relevance: f64,
    pub encouragement: f64,
    pub simplicity: f64,
    pub flexibility: f64,
    pub practicality: f64,
    pub creativity: f64,
    pub overall: f64,
    pub scored_replies: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TypeRates {
    pub interrupts: usize,
    pub success_interrupts: usize,
    pub success_replies_to_interrupt: usize,
    pub sir: Option<f64>,
    pub srir: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    #[serde(default)]
    pub label: ReportLabel,
    pub counts: MetricCounts,
    pub rates_percent: RatesPercent,
    pub timings_ms: Timings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wer_percent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_ppl: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subjective: Option<SubjectiveSummary>,
    #[serde(default)]
    pub per_type: BTreeMap<InterruptType, TypeRates>,
}

impl MetricReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }
}

/// Quality inputs attached at aggregation time. Subjective scores must come
/// from successful replies only (the pipeline scores SR and SRI events).
#[derive(Debug, Clone, Default)]
pub struct QualityInputs {
    pub wer_percent: Option<f64>,
    pub c_ppl: Option<f64>,
    pub subjective: Vec<SubjectiveScore>,
}

/// Median; even cardinality takes the mean of the two middle values.
pub fn median(values: &[i64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    Some(if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] as f64 + sorted[n / 2] as f64) / 2.0
    })
}

fn rate(numerator: usize, denominator: usize) -> Option<f64> {
    if denominator == 0 {
        None
    } else {
        Some(numerator as f64 / denominator as f64 * 100.0)
    }
}

/// Folds per-session events and counts into one report.
pub fn aggregate(sessions: &[SessionAnalysis], quality: &QualityInputs) -> MetricReport {
    let mut counts = MetricCounts::default();
    let mut timings = Timings::default();

    for session in sessions {
        counts.non_interrupt_inquiries += session.counts.non_interrupt_inquiries;
        counts.interrupt_inquiries += session.counts.interrupt_inquiries;
        counts.noise_gaps += session.counts.noise_gaps;
        for event in &session.events {
            match event.kind {
                EventKind::SuccessReply => {
                    counts.success_replies += 1;
                    timings.ert_values_ms.extend(event.timing_ms);
                }
                EventKind::EarlyInterrupt => {
                    counts.early_interrupts += 1;
                    timings.eit_values_ms.extend(event.timing_ms);
                }
                EventKind::SuccessInterrupt => {
                    counts.success_interrupts += 1;
                    timings.ird_values_ms.extend(event.timing_ms);
                }
                EventKind::SuccessReplyToInterrupt => {
                    counts.success_replies_to_interrupt += 1;
                    timings.fsed_values_ms.extend(event.timing_ms);
                }
                EventKind::NoiseInterrupt => counts.noise_interrupts += 1,
                EventKind::MissedReply
                | EventKind::FailedInterrupt
                | EventKind::MissedReplyToInterrupt => {}
            }
        }
    }
    counts.all_inquiries = counts.non_interrupt_inquiries + counts.interrupt_inquiries;

    timings.ird_median_ms = median(&timings.ird_values_ms);
    timings.fsed_median_ms = median(&timings.fsed_values_ms);
    timings.ert_median_ms = median(&timings.ert_values_ms);
    timings.eit_median_ms = median(&timings.eit_values_ms);

    let rates = RatesPercent {
        srr: rate(counts.success_replies, counts.non_interrupt_inquiries),
        sir: rate(counts.success_interrupts, counts.interrupt_inquiries),
        srir: rate(counts.success_replies_to_interrupt, counts.success_interrupts),
        eir: rate(counts.early_interrupts, counts.all_inquiries),
        nir: rate(counts.noise_interrupts, counts.noise_gaps),
    };

    let subjective = summarize_scores(&quality.subjective);

    MetricReport {
        label: ReportLabel::default(),
        counts,
        rates_percent: rates,
        timings_ms: timings,
        wer_percent: quality.wer_percent,
        c_ppl: quality.c_ppl,
        subjective,
        per_type: BTreeMap::new(),
    }
}

fn summarize_scores(scores: &[SubjectiveScore]) -> Option<SubjectiveSummary> {
    if scores.is_empty() {
        return None;
    }
    let n = scores.len() as f64;
    let mean = |f: fn(&SubjectiveScore) -> f64| scores.iter().map(f).sum::<f64>() / n;
    let summary = SubjectiveSummary {
        relevance: mean(|s| s.relevance),
        encouragement: mean(|s| s.encouragement),
        simplicity: mean(|s| s.simplicity),
        flexibility: mean(|s| s.flexibility),
        practicality: mean(|s| s.practicality),
        creativity: mean(|s| s.creativity),
        overall: mean(|s| s.mean),
        scored_replies: scores.len(),
    };
    Some(summary)
}

/// SIR and SRIR within each interruption type's subpopulation. A segment
/// carrying two labels counts in both; types with no interrupts are absent.
pub fn breakdown_by_type(
    sessions: &[(&SessionAnalysis, &SessionManifest)],
) -> BTreeMap<InterruptType, TypeRates> {
    let mut map: BTreeMap<InterruptType, TypeRates> = BTreeMap::new();
    for (analysis, manifest) in sessions {
        for event in &analysis.events {
            let (is_si, is_fi, is_sri) = match event.kind {
                EventKind::SuccessInterrupt => (true, false, false),
                EventKind::FailedInterrupt => (false, true, false),
                EventKind::SuccessReplyToInterrupt => (false, false, true),
                _ => continue,
            };
            let Some(index) = event.user_segment_index else { continue };
            let Some(segment) = manifest.segments.get(index) else { continue };
            for label in segment.interrupt_types() {
                let entry = map.entry(label).or_default();
                if is_si {
                    entry.interrupts += 1;
                    entry.success_interrupts += 1;
                } else if is_fi {
                    entry.interrupts += 1;
                } else if is_sri {
                    entry.success_replies_to_interrupt += 1;
                }
            }
        }
    }
    for entry in map.values_mut() {
        entry.sir = rate(entry.success_interrupts, entry.interrupts);
        entry.srir = rate(entry.success_replies_to_interrupt, entry.success_interrupts);
    }
    map
}

#[cfg(test)]
mod tests;
