use super::*;
use crate::corpus::{Difficulty, NoiseMode, UserSegment};
use crate::events::{InteractionEvent, SessionCounts};

fn event(kind: EventKind, index: usize, timing: Option<i64>) -> InteractionEvent {
    InteractionEvent {
        kind,
        user_segment_index: Some(index),
        gap_index: None,
        timing_ms: timing,
    }
}

fn session(events: Vec<InteractionEvent>, counts: SessionCounts) -> SessionAnalysis {
    SessionAnalysis { session_id: "s".into(), counts, events }
}

#[test]
fn median_rules() {
    assert_eq!(median(&[1000, 1345, 2000]), Some(1345.0));
    assert_eq!(median(&[1000, 2000]), Some(1500.0));
    assert_eq!(median(&[7]), Some(7.0));
    assert_eq!(median(&[]), None);
    // reversal invariance
    assert_eq!(median(&[5, 3, 9, 1]), median(&[1, 9, 3, 5]));
}

#[test]
fn two_of_three_success_replies_is_66_7() {
    let s = session(
        vec![
            event(EventKind::SuccessReply, 0, Some(-400)),
            event(EventKind::SuccessReply, 1, Some(-500)),
            event(EventKind::MissedReply, 2, None),
        ],
        SessionCounts { non_interrupt_inquiries: 3, interrupt_inquiries: 0, noise_gaps: 0 },
    );
    let report = aggregate(&[s], &QualityInputs::default());
    let srr = report.rates_percent.srr.unwrap();
    assert!((srr - 66.66667).abs() < 1e-3);
    assert_eq!(format!("{srr:.1}"), "66.7");
}

#[test]
fn empty_denominators_leave_fields_absent() {
    let s = session(
        vec![event(EventKind::SuccessReply, 0, Some(-100))],
        SessionCounts { non_interrupt_inquiries: 1, interrupt_inquiries: 0, noise_gaps: 0 },
    );
    let report = aggregate(&[s], &QualityInputs::default());
    assert!(report.rates_percent.sir.is_none());
    assert!(report.rates_percent.srir.is_none());
    assert!(report.rates_percent.nir.is_none());
    assert!(report.timings_ms.ird_median_ms.is_none());
    assert!(report.timings_ms.ird_values_ms.is_empty());
}

#[test]
fn rates_stay_within_0_100_and_timings_take_medians() {
    let s = session(
        vec![
            event(EventKind::SuccessInterrupt, 0, Some(1000)),
            event(EventKind::SuccessReplyToInterrupt, 0, Some(700)),
            event(EventKind::SuccessInterrupt, 1, Some(1345)),
            event(EventKind::MissedReplyToInterrupt, 1, None),
            event(EventKind::SuccessInterrupt, 2, Some(2000)),
            event(EventKind::SuccessReplyToInterrupt, 2, Some(300)),
        ],
        SessionCounts { non_interrupt_inquiries: 0, interrupt_inquiries: 3, noise_gaps: 0 },
    );
    let report = aggregate(&[s], &QualityInputs::default());
    assert_eq!(report.rates_percent.sir, Some(100.0));
    let srir = report.rates_percent.srir.unwrap();
    assert!((srir - 66.66667).abs() < 1e-3);
    assert_eq!(report.timings_ms.ird_median_ms, Some(1345.0));
    assert_eq!(report.timings_ms.fsed_median_ms, Some(500.0)); // mean of 300,700
}

#[test]
fn aggregate_is_permutation_invariant() {
    let a = session(
        vec![event(EventKind::SuccessReply, 0, Some(-100))],
        SessionCounts { non_interrupt_inquiries: 2, interrupt_inquiries: 0, noise_gaps: 1 },
    );
    let b = session(
        vec![
            event(EventKind::SuccessInterrupt, 0, Some(900)),
            event(EventKind::SuccessReplyToInterrupt, 0, Some(400)),
        ],
        SessionCounts { non_interrupt_inquiries: 0, interrupt_inquiries: 1, noise_gaps: 0 },
    );
    let q = QualityInputs::default();
    let r1 = aggregate(&[a.clone(), b.clone()], &q);
    let r2 = aggregate(&[b, a], &q);
    assert_eq!(r1.counts, r2.counts);
    assert_eq!(r1.rates_percent, r2.rates_percent);
    assert_eq!(r1.timings_ms.ird_median_ms, r2.timings_ms.ird_median_ms);
}

#[test]
fn merging_event_sets_equals_aggregating_concatenation() {
    let a = session(
        vec![
            event(EventKind::SuccessReply, 0, Some(-200)),
            event(EventKind::EarlyInterrupt, 1, Some(1500)),
        ],
        SessionCounts { non_interrupt_inquiries: 2, interrupt_inquiries: 0, noise_gaps: 0 },
    );
    let b = session(
        vec![event(EventKind::SuccessReply, 0, Some(-400))],
        SessionCounts { non_interrupt_inquiries: 1, interrupt_inquiries: 0, noise_gaps: 0 },
    );
    let q = QualityInputs::default();
    let merged = aggregate(&[a.clone(), b.clone()], &q);

    // fold the two sessions into one event list with the summed counts
    let mut all_events = a.events.clone();
    all_events.extend(b.events.clone());
    let combined = session(
        all_events,
        SessionCounts { non_interrupt_inquiries: 3, interrupt_inquiries: 0, noise_gaps: 0 },
    );
    let folded = aggregate(&[combined], &q);
    assert_eq!(merged.counts, folded.counts);
    assert_eq!(merged.rates_percent, folded.rates_percent);
}

#[test]
fn subjective_summary_means_and_filtering_contract() {
    let scores = vec![
        SubjectiveScore::from_parts(8.0, 6.0, 7.0, 5.0, 9.0, 7.0).unwrap(),
        SubjectiveScore::from_parts(6.0, 6.0, 7.0, 7.0, 7.0, 9.0).unwrap(),
    ];
    let s = session(
        vec![event(EventKind::SuccessReply, 0, Some(0))],
        SessionCounts { non_interrupt_inquiries: 1, interrupt_inquiries: 0, noise_gaps: 0 },
    );
    let report = aggregate(
        &[s],
        &QualityInputs { wer_percent: Some(5.3), c_ppl: Some(20.0), subjective: scores },
    );
    let subjective = report.subjective.unwrap();
    assert_eq!(subjective.relevance, 7.0);
    assert_eq!(subjective.overall, 7.0);
    assert_eq!(subjective.scored_replies, 2);
    assert_eq!(report.wer_percent, Some(5.3));
}

fn manifest_with_types(types: &[&[InterruptType]]) -> SessionManifest {
    // one non-interrupt inquiry followed by typed interrupts
    let mut segments = vec![UserSegment {
        start_ms: 0,
        end_ms: 1000,
        start_sample: 0,
        end_sample: 24_000,
        text: String::new(),
        is_interrupt: false,
        interrupt_type: None,
        interrupt_type_extra: None,
    }];
    for (i, labels) in types.iter().enumerate() {
        let start = 10_000 + i as i64 * 5000;
        segments.push(UserSegment {
            start_ms: start,
            end_ms: start + 2000,
            start_sample: (start * 24) as usize,
            end_sample: ((start + 2000) * 24) as usize,
            text: String::new(),
            is_interrupt: true,
            interrupt_type: labels.first().copied(),
            interrupt_type_extra: labels.get(1).copied(),
        });
    }
    SessionManifest {
        session_id: "s".into(),
        sample_rate_hz: 24_000,
        difficulty: Difficulty::Easy,
        noise_mode: NoiseMode::None,
        snr_db: None,
        rng_seed: 0,
        segments,
        gaps: vec![],
    }
}

#[test]
fn per_type_breakdown_with_dual_labels_and_absent_types() {
    use InterruptType::*;
    // segment 1: R succeeds, not replied to; segment 2: [F,A] succeeds and
    // is replied to; segment 3: S fails
    let manifest = manifest_with_types(&[&[R], &[F, A], &[S]]);
    let analysis = SessionAnalysis {
        session_id: "s".into(),
        counts: SessionCounts { non_interrupt_inquiries: 1, interrupt_inquiries: 3, noise_gaps: 0 },
        events: vec![
            event(EventKind::SuccessInterrupt, 1, Some(500)),
            event(EventKind::MissedReplyToInterrupt, 1, None),
            event(EventKind::SuccessInterrupt, 2, Some(700)),
            event(EventKind::SuccessReplyToInterrupt, 2, Some(400)),
            event(EventKind::FailedInterrupt, 3, None),
        ],
    };
    let map = breakdown_by_type(&[(&analysis, &manifest)]);

    let r = &map[&R];
    assert_eq!((r.sir, r.srir), (Some(100.0), Some(0.0)));
    // dual label: the [F,A] interrupt counts fully under both F and A
    for ty in [F, A] {
        let t = &map[&ty];
        assert_eq!(t.interrupts, 1);
        assert_eq!((t.sir, t.srir), (Some(100.0), Some(100.0)));
    }
    let s = &map[&S];
    assert_eq!(s.sir, Some(0.0));
    assert!(s.srir.is_none(), "0/0 stays absent");
    assert!(!map.contains_key(&D), "no D interrupts, entry absent");
}

#[test]
fn table_column_order_matches_the_schema() {
    assert_eq!(
        column_headers(false),
        vec!["WER", "SRR", "SRIR", "SIR", "EIR", "IRD", "FSED", "ERT", "EIT", "C-PPL", "Score"]
    );
    assert_eq!(
        column_headers(true),
        vec![
            "WER", "SRR", "SRIR", "SIR", "EIR", "NIR", "IRD", "FSED", "ERT", "EIT", "C-PPL",
            "Score"
        ]
    );
}

#[test]
fn report_json_roundtrips() {
    let s = session(
        vec![event(EventKind::SuccessReply, 0, Some(-250))],
        SessionCounts { non_interrupt_inquiries: 1, interrupt_inquiries: 0, noise_gaps: 0 },
    );
    let report = aggregate(&[s], &QualityInputs::default());
    let back = MetricReport::from_json(&report.to_json()).unwrap();
    assert_eq!(report, back);
}

#[test]
fn csv_has_one_row_per_model_dataset() {
    let s = session(
        vec![event(EventKind::SuccessReply, 0, Some(-250))],
        SessionCounts { non_interrupt_inquiries: 1, interrupt_inquiries: 0, noise_gaps: 0 },
    );
    let mut r1 = aggregate(&[s.clone()], &QualityInputs::default());
    r1.label = ReportLabel { model: "mock".into(), dataset: "5-E".into() };
    let mut r2 = aggregate(&[s], &QualityInputs::default());
    r2.label = ReportLabel { model: "mock".into(), dataset: "5-H".into() };
    let csv = render_csv(&[&r1, &r2]);
    let lines: Vec<&str> = csv.trim_end().lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("model,dataset,WER,SRR,SRIR,SIR,EIR,IRD"));
    assert!(lines[1].starts_with("mock,5-E,"));
    assert!(lines[2].starts_with("mock,5-H,"));
}

#[test]
fn markdown_mirrors_the_table_layout() {
    let s = session(
        vec![event(EventKind::SuccessReply, 0, Some(-250))],
        SessionCounts { non_interrupt_inquiries: 1, interrupt_inquiries: 0, noise_gaps: 0 },
    );
    let mut report = aggregate(&[s], &QualityInputs::default());
    report.label = ReportLabel { model: "mock".into(), dataset: "5-E".into() };
    let md = render_markdown(&[&report]);
    let header = md.lines().next().unwrap();
    assert_eq!(
        header,
        "| Model | Data | WER | SRR | SRIR | SIR | EIR | IRD | FSED | ERT | EIT | C-PPL | Score |"
    );
    assert!(md.contains("| mock | 5-E |"));
    assert!(md.contains("100.0"), "SRR 1/1 renders as 100.0: {md}");
}

#[test]
fn svg_plots_have_a_bar_group_per_type() {
    use InterruptType::*;
    let mut report = aggregate(&[], &QualityInputs::default());
    report.per_type.insert(R, TypeRates {
        interrupts: 4,
        success_interrupts: 4,
        success_replies_to_interrupt: 1,
        sir: Some(100.0),
        srir: Some(25.0),
    });
    let plots = render_svg_plots(&report);
    assert_eq!(plots.len(), 2);
    for (name, svg) in &plots {
        assert!(name.ends_with(".svg"));
        assert!(svg.starts_with("<svg"));
        for ty in ["A", "D", "F", "R", "S"] {
            assert!(svg.contains(&format!("data-type=\"{ty}\"")), "{name} missing group {ty}");
        }
    }
    assert!(plots[0].1.matches("<rect").count() == 1, "only R has a bar");
}
