mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Config, Mode};
use semstego_core::attacks_metrics::AttackKind;

#[derive(Parser)]
#[command(name = "semstego", version, about = "Hide bytes in the entities of generated sentences")]
struct Cli {
    /// JSON config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    mode: Option<Mode>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count sentence types in a corpus (one sentence per line).
    BuildDist {
        #[arg(long)]
        corpus: PathBuf,
        /// Defaults to the configured or bundled tree.
        #[arg(long)]
        tree: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = semstego_core::distribution::DEFAULT_MAX_TYPE_LEN)]
        max_type_len: u32,
    },
    /// Hide a file in stego sentences.
    Encode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write per-sentence ground truth for `eval`.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Recover the hidden file.
    Decode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Perturb the tokens of every sentence of a stego file.
    Attack {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        attack: AttackArgs,
    },
    /// Score a run directory holding stego.txt and trace.json.
    Eval {
        #[arg(long)]
        run_dir: PathBuf,
        /// Attack the sentences before decoding; omit to score the clean text.
        #[command(flatten)]
        attack: AttackArgs,
    },
}

#[derive(Args, Clone)]
pub struct AttackArgs {
    #[arg(long)]
    pub kind: Option<AttackKind>,
    /// Perturbations per sentence.
    #[arg(long)]
    pub count: Option<u32>,
    /// Only touch tokens that cannot be part of an entity.
    #[arg(long)]
    pub preserve_entities: bool,
}

/// Exit codes: 2 bad input, 3 no capacity, 4 agent or network failure,
/// 5 corrupt stego text.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into() }
    }

    pub fn capacity(message: impl Into<String>) -> Self {
        CliError { code: 3, message: message.into() }
    }

    pub fn agent(message: impl Into<String>) -> Self {
        CliError { code: 4, message: message.into() }
    }

    pub fn corrupt(message: impl Into<String>) -> Self {
        CliError { code: 5, message: message.into() }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(mode) = cli.mode {
        cfg.mode = mode;
    }
    cfg.validate()?;
    match cli.command {
        Command::BuildDist {
            corpus,
            tree,
            out,
            max_type_len,
        } => commands::build_dist(&cfg, &corpus, tree.as_deref(), &out, max_type_len),
        Command::Encode { input, out, trace } => commands::encode(&cfg, &input, &out, trace.as_deref()),
        Command::Decode { input, out } => commands::decode(&cfg, &input, &out),
        Command::Attack { input, out, attack } => commands::attack(&cfg, &input, &out, &attack),
        Command::Eval { run_dir, attack } => commands::eval(&cfg, &run_dir, &attack),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
