mod common;

use confchain::metrics::reliability_csv;
use confchain::trace::write_traces;
use confchain::{
    ece, parse_trace, stream_corpus, validate_corpus, Error, InferenceTrace, LabeledScore,
    RccScorer, ReasoningStep, SegmentationRule, TokenRecord,
};
use proptest::prelude::*;

#[test]
fn mixed_corpus_summary() {
    let s = validate_corpus(stream_corpus(common::fixture("mixed.jsonl")).unwrap());
    assert_eq!(s.traces, 4);
    assert_eq!(s.labeled, 2);
    assert_eq!(s.vectors, 1);
    assert_eq!(s.precomputed, 1);
    assert_eq!(s.unscorable, 2);
    assert_eq!(s.unknown_field_warnings, 1);
    assert_eq!(s.duplicates, vec!["vec-1".to_string()]);
    let lines: Vec<Option<usize>> = s.problems.iter().map(|p| p.line).collect();
    assert_eq!(lines, vec![Some(5), Some(7)]);
    assert!(
        s.problems[1].message.contains("badprob"),
        "{}",
        s.problems[1].message
    );
    assert_eq!(s.problem_count(), 3);
}

#[test]
fn streaming_continues_past_bad_lines() {
    let items: Vec<_> = stream_corpus(common::fixture("mixed.jsonl"))
        .unwrap()
        .collect();
    assert_eq!(items.len(), 6);
    let ids: Vec<String> = items
        .iter()
        .filter_map(|r| r.as_ref().ok().map(|t| t.id.clone()))
        .collect();
    assert_eq!(ids, ["vec-1", "pre-1", "bare-1", "vec-1"]);
    assert!(matches!(items[3], Err(Error::Line { line: 5, .. })));
    match &items[5] {
        Err(Error::Line { line, source, .. }) => {
            assert_eq!(*line, 7);
            assert!(matches!(**source, Error::Value { .. }));
        }
        other => panic!("expected a line error, got {other:?}"),
    }
}

#[test]
fn vectors_and_precomputed_both_score() {
    let scorer = RccScorer::new(0.5, 0.4, &SegmentationRule::default()).unwrap();
    let traces: Vec<InferenceTrace> = stream_corpus(common::fixture("mixed.jsonl"))
        .unwrap()
        .filter_map(|r| r.ok())
        .collect();
    // both chains reduce to q = [0.7 or 0.8, 0.9]; see the fixture
    let vec1 = scorer.score(&traces[0]).unwrap().confidence;
    assert!((vec1 - (0.4 * 0.9 + 0.6 * 0.8)).abs() < 1e-12, "{vec1}");
    let pre1 = scorer.score(&traces[1]).unwrap().confidence;
    assert!((pre1 - (0.4 * 0.9 + 0.6 * 0.7)).abs() < 1e-12, "{pre1}");

    let err = scorer.score(&traces[2]).unwrap_err();
    assert!(matches!(err, Error::MissingVectors { ref trace_id } if trace_id == "bare-1"));
    assert!(err.to_string().contains("bare-1"));
}

#[test]
fn reliability_csv_matches_golden() {
    let samples: Vec<LabeledScore> = [
        (0.05, true),
        (0.15, false),
        (0.15, true),
        (0.35, false),
        (0.62, true),
        (0.68, true),
        (0.68, false),
        (0.9, true),
        (1.0, true),
        (0.0, false),
    ]
    .iter()
    .map(|&(c, y)| LabeledScore::new(c, y))
    .collect();
    let (_, bins) = ece(&samples, 10).unwrap();
    let golden = std::fs::read_to_string(common::fixture("reliability_golden.csv")).unwrap();
    assert_eq!(reliability_csv(&bins), golden);
}

fn arb_step(d: usize, max_len: usize) -> impl Strategy<Value = ReasoningStep> {
    prop::collection::vec(
        (
            "[a-z ]{0,4}",
            1e-6f64..=1.0,
            prop::collection::vec(-5.0f64..5.0, d),
        ),
        1..max_len,
    )
    .prop_map(|toks| {
        ReasoningStep::new(
            toks.into_iter()
                .map(|(t, p, v)| TokenRecord::new(t, p).with_vector(v))
                .collect(),
        )
    })
}

fn arb_trace() -> impl Strategy<Value = InferenceTrace> {
    (1usize..6).prop_flat_map(|d| {
        (
            "[a-z0-9-]{1,8}",
            arb_step(d, 5),
            prop::collection::vec(arb_step(d, 5), 0..4),
            arb_step(d, 4),
            prop::option::of(any::<bool>()),
            prop::option::of(0.0f64..=1.0),
        )
            .prop_map(move |(id, instruction, steps, answer, correct, verbal)| {
                InferenceTrace {
                    id,
                    embedding_dim: Some(d),
                    instruction,
                    steps,
                    answer,
                    correct,
                    verbalized_confidence: verbal,
                    answer_key: None,
                    group_id: None,
                    precomputed_attention: None,
                    extra: Default::default(),
                }
            })
    })
}

proptest! {
    #[test]
    fn serialize_parse_round_trip(t in arb_trace()) {
        let mut buf = Vec::new();
        write_traces(&mut buf, [&t]).unwrap();
        let back = parse_trace(&buf).unwrap();
        prop_assert_eq!(back, t);
    }
}
