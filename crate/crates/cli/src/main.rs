mod commands;
mod logging;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use confchain::segment::{SegmentationMode, SegmentationRule, DEFAULT_MIN_STEP_TOKENS};
use confchain::Method;

/// Confidence scoring and calibration for multi-step reasoning traces.
#[derive(Debug, Parser)]
#[command(name = "confchain", version, propagate_version = true)]
struct Cli {
    /// Emit warnings on stderr as one JSON object per line.
    #[arg(long, global = true)]
    log_json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score every trace in a JSONL corpus.
    Score(ScoreArgs),
    /// Compute NLL, ECE and reliability bins for a scores file.
    Evaluate(EvaluateArgs),
    /// Evaluate RCC calibration over a grid of δ values.
    Sweep(SweepArgs),
    /// Generate a synthetic labeled corpus.
    Synth(SynthArgs),
    /// Check a trace file and print a summary.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Segmentation {
    PreSegmented,
    Sentence,
    ExplicitMarkers,
}

#[derive(Debug, Args)]
struct SegmentationArgs {
    /// How response tokens are split into steps.
    #[arg(long, value_enum, default_value = "pre-segmented")]
    segmentation: Segmentation,

    /// Step-start pattern (regex) for explicit-markers mode; repeatable.
    /// Replaces the built-in marker list.
    #[arg(long = "marker", value_name = "REGEX")]
    markers: Vec<String>,

    /// Shorter fragments are merged into a neighbour.
    #[arg(long, default_value_t = DEFAULT_MIN_STEP_TOKENS)]
    min_step_tokens: usize,

    /// JSON file holding a full segmentation rule.
    #[arg(long, value_name = "PATH", conflicts_with_all = ["segmentation", "markers", "min_step_tokens"])]
    segmentation_config: Option<PathBuf>,
}

impl SegmentationArgs {
    fn rule(&self) -> anyhow::Result<SegmentationRule> {
        if let Some(path) = &self.segmentation_config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| commands::usage(format!("{}: {e}", path.display())))?;
            return serde_json::from_str(&text)
                .map_err(|e| commands::usage(format!("{}: {e}", path.display())));
        }
        let mut rule = SegmentationRule {
            mode: match self.segmentation {
                Segmentation::PreSegmented => SegmentationMode::PreSegmented,
                Segmentation::Sentence => SegmentationMode::Sentence,
                Segmentation::ExplicitMarkers => SegmentationMode::ExplicitMarkers,
            },
            min_step_tokens: self.min_step_tokens,
            ..SegmentationRule::default()
        };
        if !self.markers.is_empty() {
            rule.marker_patterns = self.markers.clone();
        }
        Ok(rule)
    }
}

#[derive(Debug, Args)]
struct ThreadArgs {
    /// Worker threads (default: all cores).
    #[arg(long, env = "CONFCHAIN_THREADS")]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GroupByArg {
    GroupId,
    Instruction,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[arg(long, value_name = "PATH")]
    input: PathBuf,

    #[arg(long, value_name = "PATH", default_value = "scores.jsonl")]
    output: PathBuf,

    #[arg(long, default_value = "rcc", value_parser = parse_method)]
    method: Method,

    /// Attention threshold μ in [0, 1].
    #[arg(long, default_value_t = confchain::DEFAULT_MU)]
    mu: f64,

    /// Propagation weight δ in (0, 1].
    #[arg(long, default_value_t = confchain::DEFAULT_DELTA)]
    delta: f64,

    #[command(flatten)]
    segmentation: SegmentationArgs,

    #[command(flatten)]
    threads: ThreadArgs,

    /// Write scores in input order.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set, value_name = "BOOL")]
    stable_order: bool,

    /// Traces per parallel batch.
    #[arg(long, default_value_t = confchain::engine::DEFAULT_CHUNK)]
    chunk_size: usize,

    /// Write each trace's attention matrices and step confidences as JSON (rcc only).
    #[arg(long)]
    dump_attention: bool,

    /// Directory for --dump-attention output [default: <output>.attention].
    #[arg(long, value_name = "DIR", requires = "dump_attention")]
    attention_dir: Option<PathBuf>,

    /// Sample grouping for self_consistency.
    #[arg(long, value_enum, default_value = "group-id")]
    group_by: GroupByArg,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long, value_name = "PATH")]
    scores: PathBuf,

    /// Trace file carrying the `correct` labels; joined by id.
    #[arg(long, value_name = "PATH")]
    traces: PathBuf,

    #[arg(long, default_value_t = confchain::metrics::DEFAULT_BINS)]
    bins: usize,

    /// Probability clamp for NLL.
    #[arg(long, default_value_t = confchain::metrics::DEFAULT_EPSILON)]
    epsilon: f64,

    #[arg(long, value_name = "PATH", default_value = "report.json")]
    report: PathBuf,

    #[arg(long, value_name = "PATH")]
    reliability_csv: Option<PathBuf>,

    #[arg(long, value_name = "PATH")]
    reliability_svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, value_name = "PATH")]
    input: PathBuf,

    /// start:stop:step, stop included when it lands on the grid.
    #[arg(long, default_value = "0.1:1.0:0.1")]
    delta_grid: String,

    #[arg(long, default_value_t = confchain::DEFAULT_MU)]
    mu: f64,

    #[arg(long, default_value_t = confchain::metrics::DEFAULT_BINS)]
    bins: usize,

    #[arg(long, value_name = "PATH", default_value = "sweep.csv")]
    output: PathBuf,

    #[command(flatten)]
    segmentation: SegmentationArgs,

    #[command(flatten)]
    threads: ThreadArgs,
}

/// Flags override values from --config, which override the defaults.
#[derive(Debug, Args)]
struct SynthArgs {
    /// JSON generator config.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    #[arg(long, value_name = "PATH", default_value = "corpus.jsonl")]
    output: PathBuf,

    #[arg(long)]
    n_traces: Option<usize>,

    #[arg(long, value_name = "MIN,MAX", num_args = 2, value_delimiter = ',')]
    steps_range: Option<Vec<usize>>,

    #[arg(long, value_name = "MIN,MAX", num_args = 2, value_delimiter = ',')]
    tokens_per_step_range: Option<Vec<usize>>,

    #[arg(long)]
    embedding_dim: Option<usize>,

    #[arg(long)]
    reliability_floor: Option<f64>,

    #[arg(long)]
    reliability_ceil: Option<f64>,

    #[arg(long)]
    confidence_noise: Option<f64>,

    #[arg(long)]
    early_corruption_rate: Option<f64>,

    #[arg(long)]
    corruption_reliability: Option<f64>,

    #[arg(long)]
    seed: Option<u64>,

    #[command(flatten)]
    threads: ThreadArgs,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long, value_name = "PATH")]
    input: PathBuf,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse()
}

/// Prints the help of the subcommand named in `argv`, or the top-level help.
fn print_subcommand_help(argv: &[String]) {
    let mut cmd = Cli::command();
    let name = argv
        .iter()
        .skip(1)
        .find(|a| !a.starts_with('-'))
        .cloned()
        .unwrap_or_default();
    let help = match cmd.find_subcommand_mut(&name) {
        Some(sub) => sub.render_help(),
        None => cmd.render_help(),
    };
    eprintln!("{help}");
}

/// Joins the error chain, skipping causes already spelled out by their parent.
fn render(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            if e.kind() != ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                print_subcommand_help(&argv);
            }
            return ExitCode::from(commands::EXIT_USAGE);
        }
    };
    logging::init(cli.log_json);
    match commands::run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let code = commands::exit_code(&e);
            log::error!("{}", render(&e));
            if code == commands::EXIT_USAGE {
                print_subcommand_help(&argv);
            }
            ExitCode::from(code)
        }
    }
}
