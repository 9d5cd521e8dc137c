//! Trace data model and the JSONL wire format.
//!
//! One line holds one [`InferenceTrace`]: the instruction (chain step `s_0`),
//! the segmented reasoning steps, and the answer span (the final chain step).
//! Every generated token carries its softmax probability and, optionally, a
//! hidden-state vector. Unknown top-level fields are kept verbatim in
//! [`InferenceTrace::extra`] and counted as warnings.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// One emitted (or instruction) token.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TokenRecord {
    pub text: String,
    pub prob: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vector: Option<Vec<f64>>,
}

impl TokenRecord {
    pub fn new(text: impl Into<String>, prob: f64) -> Self {
        Self {
            text: text.into(),
            prob,
            vector: None,
        }
    }

    pub fn with_vector(mut self, vector: Vec<f64>) -> Self {
        self.vector = Some(vector);
        self
    }
}

/// A contiguous token span of the chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReasoningStep {
    pub tokens: Vec<TokenRecord>,
}

impl ReasoningStep {
    pub fn new(tokens: Vec<TokenRecord>) -> Self {
        Self { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// The step's confidence chain: per-token probabilities in order.
    pub fn confidences(&self) -> Vec<f64> {
        self.tokens.iter().map(|t| t.prob).collect()
    }

    fn has_all_vectors(&self) -> bool {
        self.tokens.iter().all(|t| t.vector.is_some())
    }
}

/// One instruction/response pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InferenceTrace {
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embedding_dim: Option<usize>,
    pub instruction: ReasoningStep,
    pub steps: Vec<ReasoningStep>,
    pub answer: ReasoningStep,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correct: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verbalized_confidence: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub answer_key: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precomputed_attention: Option<Vec<Matrix>>,
    /// Unrecognized top-level fields, preserved for round-tripping.
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl InferenceTrace {
    /// Number of chain transitions: reasoning steps plus the answer.
    pub fn chain_len(&self) -> usize {
        self.steps.len() + 1
    }

    /// Chain steps `s_0..s_n`: instruction, reasoning steps, answer.
    pub fn chain(&self) -> impl Iterator<Item = &ReasoningStep> + '_ {
        std::iter::once(&self.instruction)
            .chain(self.steps.iter())
            .chain(std::iter::once(&self.answer))
    }

    /// Generated steps `s_1..s_n` (reasoning steps, then the answer).
    pub fn response_steps(&self) -> impl Iterator<Item = &ReasoningStep> + '_ {
        self.steps.iter().chain(std::iter::once(&self.answer))
    }

    /// True when every chain token carries a vector.
    pub fn has_vectors(&self) -> bool {
        self.chain().all(ReasoningStep::has_all_vectors)
    }

    pub fn has_precomputed_attention(&self) -> bool {
        self.precomputed_attention.is_some()
    }

    /// True when an attention chain can be built for this trace.
    pub fn is_scorable(&self) -> bool {
        self.has_vectors() || self.has_precomputed_attention()
    }

    pub fn unknown_field_count(&self) -> usize {
        self.extra.len()
    }

    /// Serializes to one JSONL line (no trailing newline).
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("trace serialization is infallible")
    }
}

const KNOWN_FIELDS: &[&str] = &[
    "id",
    "embedding_dim",
    "instruction",
    "steps",
    "answer",
    "correct",
    "verbalized_confidence",
    "answer_key",
    "group_id",
    "precomputed_attention",
];

/// Parses and validates one wire-format line.
pub fn parse_trace(line: &[u8]) -> Result<InferenceTrace> {
    let value: Value = serde_json::from_slice(line).map_err(|e| Error::Json {
        trace_id: "<unknown>".into(),
        message: e.to_string(),
    })?;
    let Value::Object(mut obj) = value else {
        return Err(Error::Json {
            trace_id: "<unknown>".into(),
            message: "line is not a JSON object".into(),
        });
    };

    let id = match obj.remove("id") {
        Some(Value::String(s)) => s,
        Some(_) => return Err(schema("<unknown>", "id", "expected a string")),
        None => return Err(schema("<unknown>", "id", "missing")),
    };
    let p = FieldParser { id: &id };

    let embedding_dim = match obj.remove("embedding_dim") {
        None | Some(Value::Null) => None,
        Some(v) => match v.as_u64() {
            Some(d) if d >= 1 => Some(d as usize),
            _ => return Err(schema(&id, "embedding_dim", "expected a positive integer")),
        },
    };

    let instruction = p.step(obj.remove("instruction"), "instruction")?;
    let steps = match obj.remove("steps") {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Array(items)) => items
            .into_iter()
            .enumerate()
            .map(|(i, v)| p.step(Some(v), &format!("steps[{i}]")))
            .collect::<Result<_>>()?,
        Some(_) => return Err(schema(&id, "steps", "expected an array")),
    };
    let answer = p.step(obj.remove("answer"), "answer")?;

    let correct = match obj.remove("correct") {
        None | Some(Value::Null) => None,
        Some(Value::Bool(b)) => Some(b),
        Some(_) => return Err(schema(&id, "correct", "expected a boolean")),
    };
    let verbalized_confidence = match obj.remove("verbalized_confidence") {
        None | Some(Value::Null) => None,
        Some(v) => Some(p.real(&v, "verbalized_confidence")?),
    };
    let answer_key = p.opt_string(obj.remove("answer_key"), "answer_key")?;
    let group_id = p.opt_string(obj.remove("group_id"), "group_id")?;
    let precomputed_attention = match obj.remove("precomputed_attention") {
        None | Some(Value::Null) => None,
        Some(v) => Some(p.matrices(v)?),
    };

    debug_assert!(KNOWN_FIELDS.iter().all(|k| !obj.contains_key(*k)));

    let mut trace = InferenceTrace {
        id,
        embedding_dim,
        instruction,
        steps,
        answer,
        correct,
        verbalized_confidence,
        answer_key,
        group_id,
        precomputed_attention,
        extra: obj,
    };
    check_dimensions(&mut trace)?;
    Ok(trace)
}

fn schema(id: &str, field: &str, message: &str) -> Error {
    Error::Schema {
        trace_id: id.to_string(),
        field: field.to_string(),
        message: message.to_string(),
    }
}

struct FieldParser<'a> {
    id: &'a str,
}

impl FieldParser<'_> {
    fn real(&self, v: &Value, field: &str) -> Result<f64> {
        v.as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| schema(self.id, field, "expected a finite number"))
    }

    fn opt_string(&self, v: Option<Value>, field: &str) -> Result<Option<String>> {
        match v {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(_) => Err(schema(self.id, field, "expected a string")),
        }
    }

    fn step(&self, v: Option<Value>, field: &str) -> Result<ReasoningStep> {
        let mut obj = match v {
            Some(Value::Object(o)) => o,
            Some(_) => return Err(schema(self.id, field, "expected an object")),
            None => return Err(schema(self.id, field, "missing")),
        };
        let items = match obj.remove("tokens") {
            Some(Value::Array(a)) => a,
            Some(_) => {
                return Err(schema(
                    self.id,
                    &format!("{field}.tokens"),
                    "expected an array",
                ))
            }
            None => return Err(schema(self.id, &format!("{field}.tokens"), "missing")),
        };
        if items.is_empty() {
            return Err(schema(
                self.id,
                &format!("{field}.tokens"),
                "a step needs at least one token",
            ));
        }
        let tokens = items
            .into_iter()
            .enumerate()
            .map(|(i, t)| self.token(t, &format!("{field}.tokens[{i}]")))
            .collect::<Result<_>>()?;
        Ok(ReasoningStep { tokens })
    }

    fn token(&self, v: Value, field: &str) -> Result<TokenRecord> {
        let Value::Object(mut obj) = v else {
            return Err(schema(self.id, field, "expected an object"));
        };
        let text = match obj.remove("text") {
            Some(Value::String(s)) => s,
            Some(_) => {
                return Err(schema(
                    self.id,
                    &format!("{field}.text"),
                    "expected a string",
                ))
            }
            None => return Err(schema(self.id, &format!("{field}.text"), "missing")),
        };
        let prob_field = format!("{field}.prob");
        let prob = match obj.remove("prob") {
            Some(v) => self.real(&v, &prob_field)?,
            None => return Err(schema(self.id, &prob_field, "missing")),
        };
        if !(prob > 0.0 && prob <= 1.0) {
            return Err(Error::Value {
                trace_id: self.id.to_string(),
                field: prob_field,
                value: prob,
                range: "(0, 1]",
            });
        }
        let vector = match obj.remove("vector") {
            None | Some(Value::Null) => None,
            Some(Value::Array(xs)) => {
                let vf = format!("{field}.vector");
                Some(
                    xs.iter()
                        .map(|x| self.real(x, &vf))
                        .collect::<Result<Vec<_>>>()?,
                )
            }
            Some(_) => {
                return Err(schema(
                    self.id,
                    &format!("{field}.vector"),
                    "expected an array",
                ))
            }
        };
        Ok(TokenRecord { text, prob, vector })
    }

    fn matrices(&self, v: Value) -> Result<Vec<Matrix>> {
        let Value::Array(mats) = v else {
            return Err(schema(
                self.id,
                "precomputed_attention",
                "expected an array",
            ));
        };
        mats.into_iter()
            .enumerate()
            .map(|(i, m)| {
                let field = format!("precomputed_attention[{i}]");
                let Value::Array(rows) = m else {
                    return Err(schema(self.id, &field, "expected an array of rows"));
                };
                let rows = rows
                    .into_iter()
                    .map(|r| match r {
                        Value::Array(xs) => xs.iter().map(|x| self.real(x, &field)).collect(),
                        _ => Err(schema(self.id, &field, "expected an array of rows")),
                    })
                    .collect::<Result<Vec<Vec<f64>>>>()?;
                Matrix::from_rows(rows).ok_or_else(|| schema(self.id, &field, "ragged rows"))
            })
            .collect()
    }
}

/// Checks vector lengths and attention shapes, inferring `embedding_dim`
/// from the first vector when the producer omitted it.
fn check_dimensions(trace: &mut InferenceTrace) -> Result<()> {
    let first_len = trace
        .chain()
        .flat_map(|s| s.tokens.iter())
        .find_map(|t| t.vector.as_ref().map(Vec::len));
    let dim = match (trace.embedding_dim, first_len) {
        (Some(d), _) => Some(d),
        (None, Some(0)) => {
            return Err(schema(&trace.id, "vector", "vectors must be non-empty"));
        }
        (None, Some(len)) => Some(len),
        (None, None) => None,
    };

    let labels = chain_labels(trace);
    let mut any_vector = false;
    let mut first_missing: Option<String> = None;
    for (label, step) in labels.iter().zip(trace.chain()) {
        for (k, tok) in step.tokens.iter().enumerate() {
            match (&tok.vector, dim) {
                (Some(v), Some(d)) => {
                    any_vector = true;
                    if v.len() != d {
                        return Err(Error::Dimension {
                            trace_id: trace.id.clone(),
                            location: format!("{label}.tokens[{k}].vector"),
                            expected: d,
                            found: v.len(),
                        });
                    }
                }
                (Some(_), None) => unreachable!("dim is known whenever a vector exists"),
                (None, _) => {
                    if first_missing.is_none() {
                        first_missing = Some(format!("{label}.tokens[{k}].vector"));
                    }
                }
            }
        }
    }

    if let Some(mats) = &trace.precomputed_attention {
        let n = trace.chain_len();
        if mats.len() != n {
            return Err(Error::Dimension {
                trace_id: trace.id.clone(),
                location: "precomputed_attention (matrix count)".into(),
                expected: n,
                found: mats.len(),
            });
        }
        let steps: Vec<&ReasoningStep> = trace.chain().collect();
        for (i, m) in mats.iter().enumerate() {
            let (er, ec) = (steps[i].len(), steps[i + 1].len());
            if m.rows() != er {
                return Err(Error::Dimension {
                    trace_id: trace.id.clone(),
                    location: format!("precomputed_attention[{i}] rows"),
                    expected: er,
                    found: m.rows(),
                });
            }
            if m.cols() != ec {
                return Err(Error::Dimension {
                    trace_id: trace.id.clone(),
                    location: format!("precomputed_attention[{i}] cols"),
                    expected: ec,
                    found: m.cols(),
                });
            }
        }
    } else if any_vector {
        if let Some(field) = first_missing {
            return Err(schema(
                &trace.id,
                &field,
                "missing while other tokens carry vectors and no precomputed_attention is given",
            ));
        }
    }

    if any_vector {
        trace.embedding_dim = dim;
    }
    Ok(())
}

fn chain_labels(trace: &InferenceTrace) -> Vec<String> {
    let mut labels = vec!["instruction".to_string()];
    labels.extend((0..trace.steps.len()).map(|i| format!("steps[{i}]")));
    labels.push("answer".into());
    labels
}

/// Lazily streamed JSONL corpus. Yields traces in file order; malformed lines
/// yield an error tagged with the 1-based line number and iteration continues.
pub struct Corpus<R = BufReader<File>> {
    reader: R,
    source_path: PathBuf,
    line_no: usize,
    buf: Vec<u8>,
    done: bool,
}

/// Opens a trace file for streaming.
pub fn stream_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(Corpus::from_reader(BufReader::new(file), path))
}

impl<R: BufRead> Corpus<R> {
    pub fn from_reader(reader: R, source_path: impl Into<PathBuf>) -> Self {
        Self {
            reader,
            source_path: source_path.into(),
            line_no: 0,
            buf: Vec::new(),
            done: false,
        }
    }

    pub fn source_path(&self) -> &Path {
        &self.source_path
    }
}

impl<R: BufRead> Iterator for Corpus<R> {
    type Item = Result<InferenceTrace>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            self.buf.clear();
            match self.reader.read_until(b'\n', &mut self.buf) {
                Ok(0) => self.done = true,
                Ok(_) => {
                    self.line_no += 1;
                    if self.buf.iter().all(u8::is_ascii_whitespace) {
                        continue;
                    }
                    return Some(parse_trace(&self.buf).map_err(|e| Error::Line {
                        path: self.source_path.clone(),
                        line: self.line_no,
                        source: Box::new(e),
                    }));
                }
                Err(e) => {
                    self.done = true;
                    return Some(Err(Error::io(&self.source_path, e)));
                }
            }
        }
        None
    }
}

/// Reads every trace of a file into memory, stopping at the first error.
pub fn read_corpus(path: impl AsRef<Path>) -> Result<Vec<InferenceTrace>> {
    stream_corpus(path)?.collect()
}

/// Writes traces as JSONL.
pub fn write_traces<'a, W: Write>(
    mut out: W,
    traces: impl IntoIterator<Item = &'a InferenceTrace>,
) -> std::io::Result<()> {
    for t in traces {
        serde_json::to_writer(&mut out, t)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// A parse failure recorded during validation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Problem {
    pub line: Option<usize>,
    pub message: String,
}

/// Counts collected by [`validate_corpus`].
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationSummary {
    pub traces: usize,
    pub labeled: usize,
    pub vectors: usize,
    pub precomputed: usize,
    pub unscorable: usize,
    pub unknown_field_warnings: usize,
    pub duplicates: Vec<String>,
    pub problems: Vec<Problem>,
}

impl ValidationSummary {
    /// Number of problems: parse failures plus duplicated ids.
    pub fn problem_count(&self) -> usize {
        self.problems.len() + self.duplicates.len()
    }
}

/// Walks a trace stream and tallies it. Parse errors are collected, not fatal.
pub fn validate_corpus<I>(corpus: I) -> ValidationSummary
where
    I: IntoIterator<Item = Result<InferenceTrace>>,
{
    let mut summary = ValidationSummary::default();
    let mut seen = HashSet::new();
    let mut reported = HashSet::new();
    for item in corpus {
        match item {
            Ok(trace) => {
                summary.traces += 1;
                summary.labeled += usize::from(trace.correct.is_some());
                summary.vectors += usize::from(trace.has_vectors());
                summary.precomputed += usize::from(trace.has_precomputed_attention());
                summary.unscorable += usize::from(!trace.is_scorable());
                summary.unknown_field_warnings += trace.unknown_field_count();
                if !seen.insert(trace.id.clone()) && reported.insert(trace.id.clone()) {
                    summary.duplicates.push(trace.id);
                }
            }
            Err(e) => {
                let line = match &e {
                    Error::Line { line, .. } => Some(*line),
                    _ => None,
                };
                summary.problems.push(Problem {
                    line,
                    message: e.to_string(),
                });
            }
        }
    }
    summary
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"id":"t0","instruction":{"tokens":[{"text":"q","prob":1.0}]},"steps":[{"tokens":[{"text":"a","prob":1.0}]}],"answer":{"tokens":[{"text":"x","prob":1.0}]}}"#;

    fn tok(text: &str, prob: f64, v: Option<Vec<f64>>) -> Value {
        let mut o = serde_json::json!({"text": text, "prob": prob});
        if let Some(v) = v {
            o["vector"] = serde_json::json!(v);
        }
        o
    }

    #[test]
    fn minimal_trace_parses() {
        let t = parse_trace(MINIMAL.as_bytes()).unwrap();
        assert_eq!(t.id, "t0");
        assert_eq!(t.steps.len(), 1);
        assert_eq!(t.answer.confidences(), vec![1.0]);
        assert!(!t.is_scorable());
        assert_eq!(t.chain_len(), 2);
    }

    #[test]
    fn short_vector_is_dimension_error() {
        let line = serde_json::json!({
            "id": "t1",
            "embedding_dim": 4,
            "instruction": {"tokens": [tok("q", 1.0, Some(vec![0.0; 4]))]},
            "steps": [{"tokens": [tok("a", 0.9, Some(vec![0.0; 3]))]}],
            "answer": {"tokens": [tok("x", 0.9, Some(vec![0.0; 4]))]},
        });
        let err = parse_trace(line.to_string().as_bytes()).unwrap_err();
        match err {
            Error::Dimension {
                expected,
                found,
                location,
                ..
            } => {
                assert_eq!((expected, found), (4, 3));
                assert!(location.starts_with("steps[0]"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_prob_is_value_error() {
        let line = MINIMAL.replacen(r#""prob":1.0}]},"steps""#, r#""prob":0.0}]},"steps""#, 1);
        assert!(matches!(
            parse_trace(line.as_bytes()),
            Err(Error::Value { .. })
        ));
        let line = MINIMAL.replace(r#"{"text":"x","prob":1.0}"#, r#"{"text":"x","prob":1.5}"#);
        assert!(matches!(
            parse_trace(line.as_bytes()),
            Err(Error::Value { .. })
        ));
    }

    #[test]
    fn schema_errors_name_field_and_id() {
        let line = r#"{"id":"abc","instruction":{"tokens":[{"text":"q","prob":1.0}]},"steps":[]}"#;
        let msg = parse_trace(line.as_bytes()).unwrap_err().to_string();
        assert!(msg.contains("abc") && msg.contains("answer"), "{msg}");

        let line = MINIMAL.replace(r#""text":"a","prob":1.0"#, r#""text":"a","prob":"high""#);
        let msg = parse_trace(line.as_bytes()).unwrap_err().to_string();
        assert!(msg.contains("steps[0].tokens[0].prob"), "{msg}");

        let line = MINIMAL.replace(
            r#""answer":{"tokens":[{"text":"x","prob":1.0}]}"#,
            r#""answer":{"tokens":[]}"#,
        );
        assert!(matches!(
            parse_trace(line.as_bytes()),
            Err(Error::Schema { .. })
        ));
    }

    #[test]
    fn partial_vectors_rejected_without_attention() {
        let line = serde_json::json!({
            "id": "p",
            "instruction": {"tokens": [tok("q", 1.0, Some(vec![1.0, 0.0]))]},
            "steps": [],
            "answer": {"tokens": [tok("x", 0.9, None)]},
        });
        assert!(matches!(
            parse_trace(line.to_string().as_bytes()),
            Err(Error::Schema { .. })
        ));
    }

    #[test]
    fn embedding_dim_inferred() {
        let line = serde_json::json!({
            "id": "p",
            "instruction": {"tokens": [tok("q", 1.0, Some(vec![1.0, 0.0]))]},
            "steps": [],
            "answer": {"tokens": [tok("x", 0.9, Some(vec![0.0, 1.0]))]},
        });
        let t = parse_trace(line.to_string().as_bytes()).unwrap();
        assert_eq!(t.embedding_dim, Some(2));
        assert!(t.has_vectors());
    }

    #[test]
    fn attention_shapes_checked() {
        let good = serde_json::json!({
            "id": "a",
            "instruction": {"tokens": [tok("q", 1.0, None), tok("r", 1.0, None)]},
            "steps": [{"tokens": [tok("a", 0.5, None)]}],
            "answer": {"tokens": [tok("x", 0.9, None), tok("y", 0.9, None)]},
            "precomputed_attention": [[[1.0], [2.0]], [[0.5, 0.25]]],
        });
        let t = parse_trace(good.to_string().as_bytes()).unwrap();
        assert!(t.is_scorable() && !t.has_vectors());

        let mut bad = good.clone();
        bad["precomputed_attention"] = serde_json::json!([[[1.0], [2.0]], [[0.5]]]);
        assert!(matches!(
            parse_trace(bad.to_string().as_bytes()),
            Err(Error::Dimension { .. })
        ));
        bad["precomputed_attention"] = serde_json::json!([[[1.0], [2.0]]]);
        assert!(matches!(
            parse_trace(bad.to_string().as_bytes()),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn unknown_fields_kept_and_counted() {
        let line = MINIMAL.replacen('{', r#"{"synth_meta":{"rho":[0.5]},"foo":1,"#, 1);
        let t = parse_trace(line.as_bytes()).unwrap();
        assert_eq!(t.unknown_field_count(), 2);
        let again = parse_trace(t.to_json_line().as_bytes()).unwrap();
        assert_eq!(again, t);
    }

    #[test]
    fn stream_reports_line_and_keeps_going() {
        let text = format!("{MINIMAL}\n{{not json\n\n{}\n", MINIMAL.replace("t0", "t2"));
        let items: Vec<_> = Corpus::from_reader(text.as_bytes(), "mem.jsonl").collect();
        assert_eq!(items.len(), 3);
        assert_eq!(items[0].as_ref().unwrap().id, "t0");
        match &items[1] {
            Err(Error::Line { line, .. }) => assert_eq!(*line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(items[2].as_ref().unwrap().id, "t2");
    }

    #[test]
    fn empty_stream() {
        assert_eq!(Corpus::from_reader(&b""[..], "e").count(), 0);
    }

    #[test]
    fn validation_counts_and_duplicates() {
        let a = parse_trace(MINIMAL.as_bytes()).unwrap();
        let mut b = a.clone();
        b.correct = Some(true);
        let summary = validate_corpus(vec![Ok(a.clone()), Ok(b), Ok(a)]);
        assert_eq!(summary.traces, 3);
        assert_eq!(summary.labeled, 1);
        assert_eq!(summary.duplicates, vec!["t0".to_string()]);
        assert_eq!(summary.unscorable, 3);
    }
}
