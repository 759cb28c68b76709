//! `op-reward` command line and HTTP scoring service.

pub mod commands;
pub mod server;
pub mod setup;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

/// Errors that map to the usage exit code rather than the runtime one.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

#[derive(Debug, Parser)]
#[command(name = "op-reward", version, about = "Multi-perspective reward engine")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Vector-store JSONL used as the embedding provider.
    #[arg(long, global = true, conflicts_with = "embed_url")]
    pub store: Option<PathBuf>,

    /// Base URL of an embedding service exposing POST /embed.
    #[arg(long, global = true, env = "OP_EMBED_URL")]
    pub embed_url: Option<String>,

    /// TOML file with reward settings; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Matching threshold.
    #[arg(long, global = true)]
    pub tau: Option<f64>,

    /// Duplicate-clustering threshold.
    #[arg(long, global = true)]
    pub tau_dup: Option<f64>,

    /// Stepwise reward scaling (default).
    #[arg(long, global = true, conflicts_with = "linear")]
    pub ladder: bool,

    /// Linear reward scaling by the alpha weights.
    #[arg(long, global = true)]
    pub linear: bool,

    #[arg(long, global = true)]
    pub alpha_cov: Option<f64>,

    #[arg(long, global = true)]
    pub alpha_uniq: Option<f64>,

    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads for parallel stages and concurrent requests.
    #[arg(long, global = true, default_value_t = 4)]
    pub workers: usize,
}

#[derive(Debug, Clone, Args)]
pub struct LlmArgs {
    /// Recorded judge/generation transcript to replay.
    #[arg(long, conflicts_with = "llm_url")]
    pub transcript: Option<PathBuf>,

    /// Chat-completions endpoint for live calls.
    #[arg(long, env = "OP_LLM_URL")]
    pub llm_url: Option<String>,

    /// Model name sent to the endpoint.
    #[arg(long, default_value = "default")]
    pub llm_model: String,

    /// Write a replayable transcript of live calls here.
    #[arg(long, requires = "llm_url")]
    pub record: Option<PathBuf>,

    /// Attempts per judge call before the pair fails.
    #[arg(long, default_value_t = 3)]
    pub max_attempts: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score responses against reference perspectives.
    Score {
        /// Full request JSON; prints the response object.
        #[arg(long, conflicts_with_all = ["prompt_file", "responses"])]
        request: Option<PathBuf>,
        /// JSON with `prompt` and `references`.
        #[arg(long, requires = "responses")]
        prompt_file: Option<PathBuf>,
        /// JSONL of responses, each a string or `{"response": ...}`.
        #[arg(long, requires = "prompt_file")]
        responses: Option<PathBuf>,
        /// Include group advantages (request mode only).
        #[arg(long)]
        advantages: bool,
        /// List the texts the provider will be asked to embed, then exit.
        #[arg(long)]
        emit_texts: bool,
    },
    /// Match a raw similarity matrix.
    Match {
        /// JSON with `scores` and optional `tau` and `matcher`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        matcher: Option<String>,
    },
    /// Deduplicate and augment a perspective dataset.
    Refine {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        llm: LlmArgs,
        /// Stage-one cosine threshold.
        #[arg(long, default_value_t = op_reward::pipeline::DEFAULT_STAGE1_THRESHOLD)]
        threshold: f64,
        /// Write the per-row accounting report (JSON) here.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        emit_texts: bool,
    },
    /// Build (anchor, positive, negative) triplets.
    Triplets {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        llm: LlmArgs,
        #[arg(long)]
        emit_texts: bool,
    },
    /// Absolute-accuracy evaluation over a case file.
    EvalProtocol {
        #[arg(long)]
        cases: PathBuf,
        #[arg(long, default_value = "mbgm")]
        matcher: String,
        #[arg(long)]
        emit_texts: bool,
    },
    /// Evaluation over a grid of thresholds.
    Sweep {
        #[arg(long)]
        cases: PathBuf,
        #[arg(long, default_value = "mbgm")]
        matcher: String,
        /// Comma-separated thresholds; defaults to 0.65..=0.80 by 0.01.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
    },
    /// Run the HTTP scoring service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
    },
    /// Print a prompt template, or list them.
    Templates {
        name: Option<String>,
    },
    /// Generate a synthetic evaluation suite and its vector store.
    Synth {
        #[arg(long, default_value_t = 10)]
        cases_per_subtask: usize,
        #[arg(long, default_value_t = 0)]
        unsolvable: usize,
        #[arg(long, default_value_t = 0.85)]
        correct_sim: f64,
        #[arg(long, default_value_t = 0.5)]
        distractor_sim: f64,
        #[arg(long, default_value_t = 0.2)]
        noise: f64,
        /// Where to write the vector store; cases go to --out.
        #[arg(long)]
        store_out: PathBuf,
    },
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match commands::dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                EXIT_USAGE
            } else {
                EXIT_RUNTIME
            }
        }
    }
}
