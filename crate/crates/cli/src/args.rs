use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "txguard", version, about = "Attack detection for blockchain transactions")]
#[command(args_override_self = true, propagate_version = true)]
pub struct Cli {
    /// Flat TOML file whose keys mirror flag names; flags given on the command line win [default: none]
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Seed for every random choice
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,

    /// Print the effective settings as TOML and exit [default: off]
    #[arg(long, global = true)]
    pub print_config: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labelled synthetic dataset
    Gen(GenArgs),
    /// Train centrally or across simulated mining nodes
    Train(TrainArgs),
    /// Score a model on a labelled dataset
    Eval(EvalArgs),
    /// Replay timestamped transactions through a model in fixed windows
    Stream(StreamArgs),
    /// Disassemble EVM bytecode
    Decode(DecodeArgs),
    /// Write the grey image of a transaction as PGM
    Encode(EncodeArgs),
    /// Fetch transactions from a node by hash
    Fetch(FetchArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Gen(_) => "gen",
            Command::Train(_) => "train",
            Command::Eval(_) => "eval",
            Command::Stream(_) => "stream",
            Command::Decode(_) => "decode",
            Command::Encode(_) => "encode",
            Command::Fetch(_) => "fetch",
        }
    }
}

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
#[command(args_override_self = true)]
pub struct GenArgs {
    /// Number of transactions
    #[arg(long, default_value_t = 14_000)]
    pub total: usize,
    /// Class proportions: `reference`, `uniform`, or a JSON file mapping class names to shares
    #[arg(long, default_value = "reference")]
    pub proportions: String,
    /// Share of normal transactions that are plain transfers with empty input
    #[arg(long, default_value_t = 0.75)]
    pub plain_transfer_share: f64,
    /// Mean gap between arrivals in milliseconds
    #[arg(long, default_value_t = 2.0)]
    pub mean_interarrival_ms: f64,
    /// Output dataset (JSON lines); a .meta.json sidecar is written next to it
    #[arg(long, default_value = "dataset.jsonl")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Centralized,
    Collab,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregationArg {
    /// Average gradients, then step
    Gradient,
    /// Step locally, then average parameters
    Parameter,
}

/// Image mode switch shared by several subcommands.
#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ValueSwitch {
    /// Leave the value row out of the image [default: off]
    #[arg(long, overrides_with = "with_value")]
    pub no_value: bool,
    /// Include the value row; overrides --no-value from a config file [default: on]
    #[arg(long, overrides_with = "no_value")]
    #[serde(skip)]
    pub with_value: bool,
}

impl ValueSwitch {
    pub fn enabled(&self) -> bool {
        !self.no_value
    }
}

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
#[command(args_override_self = true)]
pub struct TrainArgs {
    /// Training scheme
    #[arg(long, value_enum, default_value_t = ModeArg::Collab)]
    pub mode: ModeArg,
    /// Number of mining nodes in collab mode
    #[arg(long, default_value_t = 3)]
    pub nodes: usize,
    /// Training iterations
    #[arg(long, default_value_t = 1000)]
    pub iters: usize,
    /// Mini-batch size per node
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub value: ValueSwitch,
    /// Labelled dataset (JSON lines)
    #[arg(long, default_value = "dataset.jsonl")]
    pub data: PathBuf,
    /// Output directory for model files, the round log and the held-out split
    #[arg(long, default_value = "models")]
    pub out: PathBuf,
    /// Share of the data held out for testing
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    /// Log test accuracy every this many iterations (0 = never)
    #[arg(long, default_value_t = 0)]
    pub eval_every: usize,
    /// What nodes exchange each round
    #[arg(long, value_enum, default_value_t = AggregationArg::Gradient)]
    pub aggregation: AggregationArg,
    /// Adam learning rate
    #[arg(long, default_value_t = 0.001)]
    pub learning_rate: f64,
    /// Compute node gradients on separate threads [default: off]
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
#[command(args_override_self = true)]
pub struct EvalArgs {
    /// Model file written by `train`
    #[arg(long, default_value = "models/node-1.json")]
    pub model: PathBuf,
    /// Labelled dataset (JSON lines)
    #[arg(long, default_value = "models/test.jsonl")]
    pub data: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub value: ValueSwitch,
    /// Where to write the confusion matrix CSV
    #[arg(long, default_value = "confusion.csv")]
    pub csv: PathBuf,
}

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
#[command(args_override_self = true)]
pub struct StreamArgs {
    /// Model file written by `train`
    #[arg(long, default_value = "models/node-1.json")]
    pub model: PathBuf,
    /// Timestamped transactions (JSON lines) to replay
    #[arg(long, default_value = "dataset.jsonl")]
    pub data: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub value: ValueSwitch,
    /// Window length in milliseconds
    #[arg(long, default_value_t = 3000)]
    pub window_ms: u64,
    /// Windows buffered between acquisition and detection
    #[arg(long, default_value_t = 4)]
    pub queue: usize,
    /// Monitoring CSV output, `-` for standard output
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
#[command(args_override_self = true)]
pub struct DecodeArgs {
    /// Hex bytecode, with or without 0x; required unless --file is given
    #[arg(value_name = "BYTECODE")]
    #[serde(skip)]
    pub bytecode: Option<String>,
    /// Read hex bytecode from a file instead [default: none]
    #[arg(long, value_name = "PATH", conflicts_with = "bytecode")]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
#[command(args_override_self = true)]
pub struct EncodeArgs {
    /// Hex bytecode, with or without 0x
    #[arg(long, default_value = "0x")]
    pub bytecode: String,
    /// Transferred value in wei (decimal, or hex with 0x)
    #[arg(long, default_value = "0")]
    pub value_wei: String,
    /// Take the transaction from this dataset instead of --bytecode/--value-wei [default: none]
    #[arg(long, value_name = "PATH")]
    pub data: Option<PathBuf>,
    /// Record index within --data
    #[arg(long, default_value_t = 0)]
    pub index: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub value: ValueSwitch,
    /// Output image (binary PGM)
    #[arg(long, default_value = "tx.pgm")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
#[command(args_override_self = true)]
pub struct FetchArgs {
    /// Transaction hash; repeat for several [default: none]
    #[arg(long = "hash", value_name = "HASH")]
    #[serde(rename = "hash")]
    pub hashes: Vec<String>,
    /// File with one transaction hash per line [default: none]
    #[arg(long, value_name = "PATH")]
    pub hash_file: Option<PathBuf>,
    /// Node JSON-RPC endpoint
    #[arg(long, default_value = "http://127.0.0.1:8545")]
    pub url: String,
    /// Answer from recorded request/response pairs instead of the network [default: none]
    #[arg(long, value_name = "PATH")]
    pub fixture: Option<PathBuf>,
    /// Request timeout in milliseconds
    #[arg(long, default_value_t = 5000)]
    pub timeout_ms: u64,
    /// Extra attempts after a transport failure
    #[arg(long, default_value_t = 2)]
    pub retries: u32,
    /// Output dataset (JSON lines), `-` for standard output
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}
