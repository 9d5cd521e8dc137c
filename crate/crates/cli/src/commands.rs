use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use confchain::baselines::{score_self_consistency_corpus, GroupBy};
use confchain::engine::{score_stream, thread_pool, ExplainSink, StreamStats, TraceScorer};
use confchain::io::atomic_write;
use confchain::metrics::{emit_reliability, parse_delta_grid, sweep_csv};
use confchain::rcc::RccTrace;
use confchain::score::write_scores;
use confchain::synth::generate_to_file;
use confchain::trace::read_corpus;
use confchain::{
    stream_corpus, sweep_delta, validate_corpus, CalibrationReport, InferenceTrace, LabeledScore,
    Method, RccScorer, ScoredTrace, SynthConfig,
};

use crate::{Command, EvaluateArgs, GroupByArg, ScoreArgs, SweepArgs, SynthArgs, ValidateArgs};

pub const EXIT_OK: u8 = 0;
pub const EXIT_PROBLEMS: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DATA: u8 = 3;

/// Marks an error caused by the invocation rather than the data.
#[derive(Debug)]
pub struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

/// Bad parameters exit 2; everything else (unreadable or invalid data) exits 3.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Usage>() {
            return EXIT_USAGE;
        }
        if let Some(e) = cause.downcast_ref::<confchain::Error>() {
            return match e.root() {
                confchain::Error::Domain { .. }
                | confchain::Error::Config(_)
                | confchain::Error::Rule(_) => EXIT_USAGE,
                _ => EXIT_DATA,
            };
        }
    }
    EXIT_DATA
}

pub fn run(command: Command) -> Result<u8> {
    match command {
        Command::Score(a) => score(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Sweep(a) => sweep(a),
        Command::Synth(a) => synth(a),
        Command::Validate(a) => validate(a),
    }
}

fn score(args: ScoreArgs) -> Result<u8> {
    let rule = args.segmentation.rule()?;
    // parameter checks come before any data is touched
    let rcc = RccScorer::new(args.mu, args.delta, &rule)?;
    if args.dump_attention && args.method != Method::Rcc {
        return Err(usage("--dump-attention only applies to --method rcc"));
    }

    if args.method == Method::SelfConsistency {
        let traces = read_corpus(&args.input)?;
        let by = match args.group_by {
            GroupByArg::GroupId => GroupBy::GroupId,
            GroupByArg::Instruction => GroupBy::Instruction,
        };
        let scores = score_self_consistency_corpus(&traces, by)?;
        atomic_write(&args.output, |w| write_scores(w, &scores))?;
        log::info!("scored {} traces", scores.len());
        return Ok(EXIT_OK);
    }

    let scorer = match args.method {
        Method::Rcc => TraceScorer::Rcc(rcc),
        Method::LogitsFinal => TraceScorer::LogitsFinal,
        Method::LogitsAverage => TraceScorer::LogitsAverage,
        Method::Verbalized => TraceScorer::Verbalized,
        Method::SelfConsistency => unreachable!("handled above"),
    };
    let pool = thread_pool(args.threads.threads.unwrap_or(0))?;
    let corpus = stream_corpus(&args.input)?;

    let dump_dir = args.dump_attention.then(|| {
        args.attention_dir.clone().unwrap_or_else(|| {
            let mut p = args.output.clone().into_os_string();
            p.push(".attention");
            PathBuf::from(p)
        })
    });
    if let Some(dir) = &dump_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut index = 0usize;
    let mut dump = |t: &InferenceTrace, e: &RccTrace| -> confchain::Result<()> {
        let dir = dump_dir
            .as_deref()
            .expect("sink only installed with a directory");
        let path = dir.join(format!("{index:06}-{}.json", file_stem(&t.id)));
        index += 1;
        let doc = serde_json::json!({
            "id": t.id,
            "mu": args.mu,
            "pairs": e.chain,
            "steps": e.steps,
            "trajectory": e.trajectory,
        });
        atomic_write(path, |w| {
            serde_json::to_writer_pretty(&mut *w, &doc)?;
            w.write_all(b"\n")
        })
    };
    let sink: Option<ExplainSink<'_>> = if dump_dir.is_some() {
        Some(&mut dump)
    } else {
        None
    };

    // keep the library error intact; atomic_write only needs to know it failed
    let mut failure = None;
    let mut stats = StreamStats::default();
    let written = atomic_write(&args.output, |w| {
        match score_stream(
            corpus,
            &scorer,
            &pool,
            args.chunk_size,
            args.stable_order,
            &mut &mut *w,
            sink,
        ) {
            Ok(s) => {
                stats = s;
                Ok(())
            }
            Err(e) => {
                failure = Some(e);
                Err(std::io::Error::other("scoring aborted"))
            }
        }
    });
    if let Some(e) = failure {
        return Err(e.into());
    }
    written?;
    log::info!(
        "scored {} traces ({} fallback steps)",
        stats.traces,
        stats.fallback_steps
    );
    Ok(EXIT_OK)
}

fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "-_.".contains(c) {
                c
            } else {
                '_'
            }
        })
        .take(64)
        .collect()
}

fn read_scores(path: &Path) -> Result<Vec<ScoredTrace>> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.with_context(|| format!("reading {}", path.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        let s: ScoredTrace = serde_json::from_str(&line)
            .with_context(|| format!("{}:{}: bad score record", path.display(), i + 1))?;
        if !(0.0..=1.0).contains(&s.confidence) {
            bail!(
                "{}:{}: trace {}: confidence {} is outside [0, 1]",
                path.display(),
                i + 1,
                s.id,
                s.confidence
            );
        }
        out.push(s);
    }
    Ok(out)
}

fn evaluate(args: EvaluateArgs) -> Result<u8> {
    if args.bins == 0 {
        return Err(usage("--bins must be at least 1"));
    }
    if !(args.epsilon > 0.0 && args.epsilon <= 1e-3) {
        return Err(usage(format!(
            "--epsilon {} is outside (0, 1e-3]",
            args.epsilon
        )));
    }
    let scores = read_scores(&args.scores)?;
    let Some(first) = scores.first() else {
        bail!("{}: no scores", args.scores.display());
    };
    let (method, params) = (first.method, first.params);
    if let Some(odd) = scores
        .iter()
        .find(|s| s.method != method || s.params != params)
    {
        bail!(
            "trace {}: scores mix methods or parameters ({} vs {})",
            odd.id,
            odd.method,
            method
        );
    }

    let mut labels: HashMap<String, Option<bool>> = HashMap::new();
    for item in stream_corpus(&args.traces)? {
        let t = item?;
        if let Some(prev) = labels.insert(t.id.clone(), t.correct) {
            if prev != t.correct {
                bail!("trace {}: duplicated with conflicting labels", t.id);
            }
        }
    }
    let samples = scores
        .iter()
        .map(|s| match labels.get(&s.id) {
            Some(Some(correct)) => Ok(LabeledScore::new(s.confidence, *correct)),
            Some(None) => Err(confchain::Error::Unlabeled {
                trace_id: s.id.clone(),
            }
            .into()),
            None => Err(anyhow::anyhow!(
                "trace {}: scored but absent from {}",
                s.id,
                args.traces.display()
            )),
        })
        .collect::<Result<Vec<_>>>()?;

    let report = CalibrationReport::compute(method, params, &samples, args.bins, args.epsilon)?;
    report.write_json(&args.report)?;
    emit_reliability(
        &report.bins,
        args.reliability_csv.as_deref(),
        args.reliability_svg.as_deref(),
    )?;
    log::info!(
        "n={} nll={:.6} ece={:.4}%",
        report.n,
        report.nll,
        report.ece_percent
    );
    Ok(EXIT_OK)
}

fn sweep(args: SweepArgs) -> Result<u8> {
    let deltas =
        parse_delta_grid(&args.delta_grid).map_err(|e| usage(format!("--delta-grid: {e}")))?;
    if args.bins == 0 {
        return Err(usage("--bins must be at least 1"));
    }
    let rule = args.segmentation.rule()?;
    for &d in &deltas {
        RccScorer::new(args.mu, d, &rule)?;
    }
    let pool = thread_pool(args.threads.threads.unwrap_or(0))?;
    let traces = read_corpus(&args.input)?;
    let rows = pool.install(|| sweep_delta(&traces, args.mu, &deltas, &rule, args.bins))?;
    let csv = sweep_csv(&rows);
    atomic_write(&args.output, |w| w.write_all(csv.as_bytes()))?;
    Ok(EXIT_OK)
}

fn synth(args: SynthArgs) -> Result<u8> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<SynthConfig>(&text)
                .map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        None => SynthConfig::default(),
    };
    let pair = |v: &Vec<usize>| [v[0], v[1]];
    if let Some(v) = args.n_traces {
        cfg.n_traces = v;
    }
    if let Some(v) = &args.steps_range {
        cfg.steps_range = pair(v);
    }
    if let Some(v) = &args.tokens_per_step_range {
        cfg.tokens_per_step_range = pair(v);
    }
    if let Some(v) = args.embedding_dim {
        cfg.embedding_dim = v;
    }
    if let Some(v) = args.reliability_floor {
        cfg.reliability_floor = v;
    }
    if let Some(v) = args.reliability_ceil {
        cfg.reliability_ceil = v;
    }
    if let Some(v) = args.confidence_noise {
        cfg.confidence_noise = v;
    }
    if let Some(v) = args.early_corruption_rate {
        cfg.early_corruption_rate = v;
    }
    if let Some(v) = args.corruption_reliability {
        cfg.corruption_reliability = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    cfg.validate()?;
    let pool = thread_pool(args.threads.threads.unwrap_or(0))?;
    let n = pool.install(|| generate_to_file(&cfg, &args.output))?;
    log::info!("wrote {n} traces to {}", args.output.display());
    Ok(EXIT_OK)
}

fn validate(args: ValidateArgs) -> Result<u8> {
    let summary = validate_corpus(stream_corpus(&args.input)?);
    for p in &summary.problems {
        log::warn!("{}", p.message);
    }
    for id in &summary.duplicates {
        log::warn!("trace {id}: duplicate id");
    }
    if summary.unknown_field_warnings > 0 {
        log::warn!(
            "{} unknown top-level field(s) ignored",
            summary.unknown_field_warnings
        );
    }
    let mut stdout = std::io::stdout().lock();
    serde_json::to_writer_pretty(
        &mut stdout,
        &serde_json::json!({
            "input": args.input,
            "traces": summary.traces,
            "labeled": summary.labeled,
            "with_vectors": summary.vectors,
            "with_precomputed_attention": summary.precomputed,
            "unscorable": summary.unscorable,
            "unknown_field_warnings": summary.unknown_field_warnings,
            "duplicate_ids": summary.duplicates,
            "problems": summary.problems,
            "problem_count": summary.problem_count(),
        }),
    )?;
    writeln!(stdout)?;
    Ok(if summary.problem_count() > 0 {
        EXIT_PROBLEMS
    } else {
        EXIT_OK
    })
}
