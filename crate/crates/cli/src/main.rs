mod job;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use isrs_gn::ssfm::{GainMode, ModulationKind};

#[derive(Parser, Debug)]
#[command(name = "isrs-gn", version, about = "NLI model and split-step oracle for wideband WDM links")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "ISRS_GN_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Model SNR_NLI per channel.
    GnRun(ModelArgs),
    /// Split-step simulated SNR per channel.
    SsfmRun(SsfmArgs),
    /// Model and simulation side by side with per-channel deviation.
    Compare(SsfmArgs),
    /// Scenario file with the network add/drop plan embedded.
    ScenarioGen(ScenarioArgs),
    /// Launch power sweep with ASE noise from one amplifier per span.
    LaunchOpt(LaunchArgs),
}

#[derive(Args, Debug, Clone)]
struct ScenarioArgs {
    /// Scenario JSON file.
    #[arg(long, required_unless_present = "desk_scale")]
    scenario: Option<PathBuf>,

    /// Output file; a `<out>.manifest.json` is written next to it.
    #[arg(long)]
    out: PathBuf,

    /// Seed of the network plan and of the simulated symbols.
    #[arg(long)]
    seed: Option<u64>,

    /// Comma-separated span lengths in km.
    #[arg(long, value_delimiter = ',')]
    spans: Option<Vec<f64>>,

    /// Number of grid slots, keeping spacing and symbol rate.
    #[arg(long)]
    channels: Option<usize>,

    /// Use the built-in 5-channel, 2 × 80 km desk-scale scenario.
    #[arg(long, conflicts_with = "scenario")]
    desk_scale: bool,
}

#[derive(Args, Debug, Clone)]
struct ModelArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,

    /// Quadrature resolution of the model.
    #[arg(long)]
    quad_nodes: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct SsfmArgs {
    #[command(flatten)]
    model: ModelArgs,

    #[arg(long, value_enum, default_value_t = Modulation::Gaussian)]
    modulation: Modulation,

    /// Target SNR of the shaped constellation.
    #[arg(long, default_value_t = 15.0)]
    shaping_snr_db: f64,

    /// Symbols per realization (power of two).
    #[arg(long)]
    symbols: Option<usize>,

    #[arg(long)]
    realizations: Option<usize>,

    #[arg(long)]
    samples_per_symbol: Option<usize>,

    #[arg(long)]
    steps_per_span: Option<usize>,

    #[arg(long, value_enum, default_value_t = Gain::IsrsCompensating)]
    gain: Gain,
}

#[derive(Args, Debug, Clone)]
struct LaunchArgs {
    #[command(flatten)]
    model: ModelArgs,

    #[arg(long, default_value_t = 5.0)]
    nf_db: f64,

    #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
    min_dbm: f64,

    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    max_dbm: f64,

    #[arg(long, default_value_t = 0.5)]
    step_db: f64,

    /// Channel to optimize; defaults to the center slot.
    #[arg(long)]
    channel: Option<usize>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Modulation {
    Gaussian,
    #[value(name = "uniform-64qam")]
    Uniform64Qam,
    #[value(name = "mb-64qam")]
    Mb64Qam,
}

impl From<Modulation> for ModulationKind {
    fn from(m: Modulation) -> Self {
        match m {
            Modulation::Gaussian => ModulationKind::Gaussian,
            Modulation::Uniform64Qam => ModulationKind::Uniform64Qam,
            Modulation::Mb64Qam => ModulationKind::Mb64Qam,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Gain {
    Flat,
    IsrsCompensating,
}

impl From<Gain> for GainMode {
    fn from(g: Gain) -> Self {
        match g {
            Gain::Flat => GainMode::Flat,
            Gain::IsrsCompensating => GainMode::IsrsCompensating,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(job::EXIT_CONFIG);
        }
    }
    let result = match cli.command {
        Command::GnRun(a) => job::gn_run(&a.scenario, a.quad_nodes),
        Command::SsfmRun(a) => job::ssfm_run(&a.to_opts()),
        Command::Compare(a) => job::compare(&a.to_opts()),
        Command::ScenarioGen(a) => job::scenario_gen(&a),
        Command::LaunchOpt(a) => job::launch_opt(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(job::exit_code(&e))
        }
    }
}

impl SsfmArgs {
    fn to_opts(&self) -> job::SsfmOpts<'_> {
        job::SsfmOpts {
            scenario: &self.model.scenario,
            quad_nodes: self.model.quad_nodes,
            modulation: self.modulation.into(),
            shaping_snr_db: self.shaping_snr_db,
            symbols: self.symbols,
            realizations: self.realizations,
            samples_per_symbol: self.samples_per_symbol,
            steps_per_span: self.steps_per_span,
            gain: self.gain.into(),
        }
    }
}
