use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::grid::Grid;

pub const DATA_DIR_ENV: &str = "GSICAST_DATA_DIR";

#[derive(Debug, Parser)]
#[command(name = "gsicast", version, about = "Capture game telemetry and forecast player gold")]
pub struct Cli {
    /// Root for sessions, jobs and run outputs.
    #[arg(long, global = true, env = DATA_DIR_ENV, default_value = "gsicast-data")]
    pub data_dir: PathBuf,

    /// Endpoint configuration file in the game-client syntax.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the ingest endpoint and the /v1 API until interrupted.
    Serve(ServeArgs),
    /// Print the game-client configuration file for an endpoint.
    EmitConfig(EmitConfigArgs),
    /// Play a synthetic match against a running server.
    Simulate(SimulateArgs),
    /// Write the windowed X/y matrices for a session or CSV.
    BuildDataset(DatasetArgs),
    /// Train one or more models, optionally over a grid of windows.
    Train(TrainArgs),
    /// Print a saved training report.
    Report(ReportArgs),
    /// Forecast the target d steps past the end of a session with a saved model.
    Forecast(ForecastArgs),
}

#[derive(Debug, Args)]
pub struct EndpointArgs {
    /// Where the game client posts, e.g. http://127.0.0.1:8080
    #[arg(long)]
    pub uri: Option<String>,
    #[arg(long)]
    pub timeout: Option<f64>,
    #[arg(long)]
    pub buffer: Option<f64>,
    #[arg(long)]
    pub throttle: Option<f64>,
    #[arg(long)]
    pub heartbeat: Option<f64>,
    #[arg(long)]
    pub auth_token: Option<String>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub endpoint: EndpointArgs,
    /// Training worker threads.
    #[arg(long, default_value_t = gsicast_server::DEFAULT_WORKERS)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct EmitConfigArgs {
    #[command(flatten)]
    pub endpoint: EndpointArgs,
    /// Also write the file here.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub endpoint: EndpointArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 3000)]
    pub ticks: u64,
    #[arg(long, default_value_t = 20)]
    pub pregame_ticks: u64,
    #[arg(long, default_value_t = 10)]
    pub postgame_ticks: u64,
    /// Virtual seconds per real second.
    #[arg(long, default_value_t = 1.0)]
    pub speedup: f64,
    /// Start this capture session on the server first and stop it afterwards.
    #[arg(long)]
    pub session: Option<String>,
    /// Where to write the run summary; defaults under the data directory.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SourceArgs {
    /// Captured session CSV.
    #[arg(long, conflicts_with = "session", required_unless_present = "session")]
    pub csv: Option<PathBuf>,
    /// Session id under the data directory.
    #[arg(long)]
    pub session: Option<String>,
}

#[derive(Debug, Args)]
pub struct WindowArgs {
    /// Rows per window.
    #[arg(long = "L", visible_alias = "lag", default_value_t = 15)]
    pub lag: usize,
    /// Steps ahead to forecast.
    #[arg(long = "d", visible_alias = "horizon", default_value_t = 20)]
    pub horizon: usize,
    #[arg(long, default_value = gsicast_core::gsi::TARGET_COLUMN)]
    pub target: String,
    /// Number of input features: the target plus its strongest correlates.
    #[arg(long, default_value_t = 10, conflicts_with = "features")]
    pub top_k: usize,
    /// Explicit comma-separated input columns.
    #[arg(long, value_delimiter = ',')]
    pub features: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub window: WindowArgs,
    /// Output directory; defaults under the data directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Chronological,
    Shuffled,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub window: WindowArgs,
    /// Comma-separated model kinds: lr, nn, lstm.
    #[arg(long, value_delimiter = ',', default_value = "lr")]
    pub model: Vec<String>,
    /// Window sweep such as `d=30..100:10` or `L=5,20`; repeatable.
    #[arg(long)]
    pub grid: Vec<Grid>,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.01)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = SplitArg::Chronological)]
    pub split: SplitArg,
    /// Shuffle seed for `--split shuffled`.
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    /// Hidden widths of the feed-forward network.
    #[arg(long, value_delimiter = ',', default_value = "256,256")]
    pub mlp_hidden: Vec<usize>,
    #[arg(long)]
    pub no_batch_norm: bool,
    /// Hidden widths of the stacked LSTM.
    #[arg(long, value_delimiter = ',', default_value = "256")]
    pub lstm_hidden: Vec<usize>,
    /// Output root; each run gets `<model>-L<L>-d<d>/` inside it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// A report.json file or a directory containing one.
    #[arg(required_unless_present = "job")]
    pub path: Option<PathBuf>,
    /// Job id under the data directory.
    #[arg(long, conflicts_with = "path")]
    pub job: Option<String>,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    /// A model.json file or a directory containing one.
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub source: SourceArgs,
}
