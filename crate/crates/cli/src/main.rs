mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Fading-rate estimation, acceptability curves and repainting simulations
/// for painted memorial hearts.
#[derive(Debug, Parser)]
#[command(name = "heartfade", version)]
pub struct Cli {
    /// Master seed for every random draw (overrides `master_seed` in configs).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Directory that receives result files and manifest.json.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    /// Format of tabular outputs.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Calibrate region colours of an image against a reference patch.
    Calibrate(CalibrateArgs),
    /// Fit per-heart fading rates and their population aggregate.
    Rate(RateArgs),
    /// Fit the acceptability curve to survey data.
    Acceptability(AcceptabilityArgs),
    /// Run the lifetime simulation.
    Simulate(SimulateArgs),
    /// Sweep weekly repainting fractions across strategies.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// PPM image (P3 or P6).
    pub image: PathBuf,
    /// Reference patch region as x,y,w,h.
    #[arg(long, value_parser = commands::parse_region)]
    pub board: heartfade::Region,
    /// Known CIELAB colour of the reference patch as L,a,b.
    #[arg(long, value_parser = commands::parse_lab, allow_hyphen_values = true)]
    pub reference: heartfade::LabColor,
    /// Heart region as x,y,w,h; repeat for several hearts.
    #[arg(long = "region", value_parser = commands::parse_region, required = true)]
    pub regions: Vec<heartfade::Region>,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    /// Observation table (heart_id,date,L,a,b,source).
    pub observations: PathBuf,
    /// JSON array of {heart_id, start_day, end_day} fit windows.
    #[arg(long)]
    pub windows: PathBuf,
    /// Fresh-paint colour as L,a,b.
    #[arg(long, value_parser = commands::parse_lab, default_value = "49.3,46.3,20.5", allow_hyphen_values = true)]
    pub baseline: heartfade::LabColor,
}

#[derive(Debug, Args)]
pub struct AcceptabilityArgs {
    /// Survey table (delta_e,frac_agree,n_respondents).
    pub survey: PathBuf,
    /// Agreement levels to convert into ΔE thresholds.
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.5")]
    pub agreement: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Simulation config (JSON, snake_case fields).
    #[arg(conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in scenario: paint1-baseline, paint1-5pct or paint2-1pct.
    #[arg(long)]
    pub preset: Option<String>,
    /// Strategies to run (defaults to the config's strategy, or the preset's set).
    #[arg(long, value_delimiter = ',')]
    pub strategies: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Base simulation config (JSON).
    #[arg(conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in base scenario.
    #[arg(long)]
    pub preset: Option<String>,
    /// Weekly repainting fractions.
    #[arg(long, value_delimiter = ',', default_value = "0,0.01,0.02,0.05,0.1,0.2,0.5,1")]
    pub fractions: Vec<f64>,
    /// Horizon in days.
    #[arg(long, default_value_t = heartfade::sim::SWEEP_HORIZON_DAYS)]
    pub horizon: u32,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
