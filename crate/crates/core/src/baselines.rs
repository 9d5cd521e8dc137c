//! Comparison scorers computable from the trace alone.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::score::{Method, ScoredTrace};
use crate::trace::InferenceTrace;

/// Joint probability of the answer tokens.
pub fn score_logits_final(trace: &InferenceTrace) -> ScoredTrace {
    let joint = trace.answer.tokens.iter().map(|t| t.prob).product();
    ScoredTrace::new(&trace.id, Method::LogitsFinal, joint)
}

/// Length-normalized (geometric-mean) probability over every response token:
/// reasoning steps plus the answer.
pub fn score_logits_average(trace: &InferenceTrace) -> ScoredTrace {
    let (sum_ln, n) = trace
        .response_steps()
        .flat_map(|s| s.tokens.iter())
        .fold((0.0, 0usize), |(acc, n), t| (acc + t.prob.ln(), n + 1));
    let conf = (sum_ln / n as f64).exp().min(1.0);
    ScoredTrace::new(&trace.id, Method::LogitsAverage, conf)
}

/// Agreement rate of each trace's `answer_key` within its sample group.
/// Output order follows `group`.
pub fn score_self_consistency(group: &[&InferenceTrace]) -> Result<Vec<ScoredTrace>> {
    let keys = group
        .iter()
        .map(|t| {
            t.answer_key
                .as_deref()
                .ok_or_else(|| Error::MissingAnswerKey {
                    trace_id: t.id.clone(),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for k in &keys {
        *counts.entry(k).or_default() += 1;
    }
    let size = group.len() as f64;
    Ok(group
        .iter()
        .zip(&keys)
        .map(|(t, k)| ScoredTrace::new(&t.id, Method::SelfConsistency, counts[k] as f64 / size))
        .collect())
}

/// Reads the model's own stated confidence, clamped to `[0, 1]`.
pub fn score_verbalized(trace: &InferenceTrace) -> Result<ScoredTrace> {
    let raw = trace
        .verbalized_confidence
        .ok_or_else(|| Error::MissingField {
            trace_id: trace.id.clone(),
            field: "verbalized_confidence",
        })?;
    let conf = raw.clamp(0.0, 1.0);
    if conf != raw {
        log::warn!(
            "trace {}: verbalized_confidence {raw} clamped to {conf}",
            trace.id
        );
    }
    Ok(ScoredTrace::new(&trace.id, Method::Verbalized, conf))
}

/// How traces are grouped for self-consistency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroupBy {
    /// The `group_id` wire field (falls back to the trace id when absent).
    #[default]
    GroupId,
    /// Identical instruction text.
    Instruction,
}

fn group_key(trace: &InferenceTrace, by: GroupBy) -> String {
    match by {
        GroupBy::GroupId => trace.group_id.clone().unwrap_or_else(|| trace.id.clone()),
        GroupBy::Instruction => trace
            .instruction
            .tokens
            .iter()
            .map(|t| t.text.as_str())
            .collect(),
    }
}

/// Groups trace indices by key, groups ordered by first appearance.
pub fn group_traces(traces: &[InferenceTrace], by: GroupBy) -> Vec<Vec<usize>> {
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, t) in traces.iter().enumerate() {
        let g = *index.entry(group_key(t, by)).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(i);
    }
    groups
}

/// Self-consistency over a whole corpus; output in input order.
pub fn score_self_consistency_corpus(
    traces: &[InferenceTrace],
    by: GroupBy,
) -> Result<Vec<ScoredTrace>> {
    let mut out: Vec<Option<ScoredTrace>> = vec![None; traces.len()];
    for idx in group_traces(traces, by) {
        let members: Vec<&InferenceTrace> = idx.iter().map(|&i| &traces[i]).collect();
        for (i, s) in idx.iter().zip(score_self_consistency(&members)?) {
            out[*i] = Some(s);
        }
    }
    Ok(out
        .into_iter()
        .map(|s| s.expect("every trace is grouped"))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{ReasoningStep, TokenRecord};
    use proptest::prelude::*;

    fn trace(id: &str, steps: &[&[f64]], answer: &[f64]) -> InferenceTrace {
        let step =
            |ps: &[f64]| ReasoningStep::new(ps.iter().map(|&p| TokenRecord::new("t", p)).collect());
        InferenceTrace {
            id: id.into(),
            embedding_dim: None,
            instruction: step(&[1.0]),
            steps: steps.iter().map(|s| step(s)).collect(),
            answer: step(answer),
            correct: None,
            verbalized_confidence: None,
            answer_key: None,
            group_id: None,
            precomputed_attention: None,
            extra: Default::default(),
        }
    }

    #[test]
    fn logits_final_is_joint_probability() {
        let s = score_logits_final(&trace("a", &[], &[0.9, 0.8]));
        assert!((s.confidence - 0.72).abs() < 1e-15);
        assert_eq!(s.method, Method::LogitsFinal);
        assert_eq!(
            score_logits_final(&trace("a", &[], &[0.37])).confidence,
            0.37
        );
        assert_eq!(
            score_logits_final(&trace("a", &[], &[1.0, 1.0])).confidence,
            1.0
        );
    }

    #[test]
    fn logits_average_is_geometric_mean() {
        let s = score_logits_average(&trace("a", &[&[0.25]], &[1.0]));
        assert!((s.confidence - 0.5).abs() < 1e-15);
        let s = score_logits_average(&trace("a", &[&[0.3, 0.3]], &[0.3]));
        assert!((s.confidence - 0.3).abs() < 1e-15);
        let s = score_logits_average(&trace("a", &[], &[0.42]));
        assert!((s.confidence - 0.42).abs() < 1e-15);
    }

    #[test]
    fn self_consistency_counts() {
        let keys = ["A", "A", "B", "A", "C"];
        let traces: Vec<InferenceTrace> = keys
            .iter()
            .enumerate()
            .map(|(i, k)| {
                let mut t = trace(&format!("t{i}"), &[], &[0.5]);
                t.answer_key = Some(k.to_string());
                t
            })
            .collect();
        let refs: Vec<&InferenceTrace> = traces.iter().collect();
        let scores: Vec<f64> = score_self_consistency(&refs)
            .unwrap()
            .iter()
            .map(|s| s.confidence)
            .collect();
        assert_eq!(scores, vec![0.6, 0.6, 0.2, 0.6, 0.2]);

        let one = score_self_consistency(&refs[..1]).unwrap();
        assert_eq!(one[0].confidence, 1.0);

        let mut missing = traces[0].clone();
        missing.answer_key = None;
        assert!(matches!(
            score_self_consistency(&[&missing]),
            Err(Error::MissingAnswerKey { .. })
        ));
    }

    #[test]
    fn corpus_grouping_by_group_id_and_instruction() {
        let mut traces = Vec::new();
        for (i, (g, k)) in [
            ("q1", "A"),
            ("q2", "B"),
            ("q1", "A"),
            ("q1", "C"),
            ("q2", "B"),
        ]
        .iter()
        .enumerate()
        {
            let mut t = trace(&format!("t{i}"), &[], &[0.5]);
            t.group_id = Some(g.to_string());
            t.answer_key = Some(k.to_string());
            t.instruction.tokens[0].text = g.to_string();
            traces.push(t);
        }
        for by in [GroupBy::GroupId, GroupBy::Instruction] {
            assert_eq!(group_traces(&traces, by), vec![vec![0, 2, 3], vec![1, 4]]);
            let s = score_self_consistency_corpus(&traces, by).unwrap();
            let conf: Vec<f64> = s.iter().map(|s| s.confidence).collect();
            assert_eq!(conf, vec![2.0 / 3.0, 1.0, 2.0 / 3.0, 1.0 / 3.0, 1.0]);
            assert_eq!(s[3].id, "t3");
        }
    }

    #[test]
    fn verbalized_readout() {
        let mut t = trace("v", &[], &[0.5]);
        assert!(matches!(
            score_verbalized(&t),
            Err(Error::MissingField { .. })
        ));
        t.verbalized_confidence = Some(0.85);
        assert_eq!(score_verbalized(&t).unwrap().confidence, 0.85);
        t.verbalized_confidence = Some(1.3);
        assert_eq!(score_verbalized(&t).unwrap().confidence, 1.0);
        t.verbalized_confidence = Some(-0.2);
        assert_eq!(score_verbalized(&t).unwrap().confidence, 0.0);
    }

    proptest! {
        #[test]
        fn appending_answer_tokens_never_raises_joint(
            probs in prop::collection::vec(0.01f64..1.0, 1..10),
            extra in 0.01f64..1.0,
        ) {
            let base = score_logits_final(&trace("a", &[], &probs)).confidence;
            let mut longer = probs.clone();
            longer.push(extra);
            let after = score_logits_final(&trace("a", &[], &longer)).confidence;
            prop_assert!(after <= base);
        }

        #[test]
        fn geometric_mean_duplication_invariant(
            step in prop::collection::vec(0.01f64..=1.0, 1..10),
            answer in prop::collection::vec(0.01f64..=1.0, 1..5),
        ) {
            let once = score_logits_average(&trace("a", &[&step], &answer)).confidence;
            let doubled_steps: Vec<f64> = step.iter().chain(answer.iter()).chain(step.iter()).copied().collect();
            let twice = score_logits_average(&trace("a", &[&doubled_steps], &answer)).confidence;
            prop_assert!((once - twice).abs() < 1e-12);
        }

        #[test]
        fn self_consistency_sum_of_squares(keys in prop::collection::vec(0u8..4, 1..30)) {
            let traces: Vec<InferenceTrace> = keys.iter().enumerate().map(|(i, k)| {
                let mut t = trace(&format!("t{i}"), &[], &[0.5]);
                t.answer_key = Some(k.to_string());
                t
            }).collect();
            let refs: Vec<&InferenceTrace> = traces.iter().collect();
            let scores = score_self_consistency(&refs).unwrap();
            let total: f64 = scores.iter().map(|s| s.confidence).sum();
            let mut counts = [0usize; 4];
            for k in &keys { counts[*k as usize] += 1; }
            let expected: f64 = counts.iter().map(|&c| (c * c) as f64).sum::<f64>() / keys.len() as f64;
            prop_assert!((total - expected).abs() < 1e-9);
            prop_assert!(scores.iter().all(|s| s.confidence > 0.0 && s.confidence <= 1.0));
        }
    }
}
