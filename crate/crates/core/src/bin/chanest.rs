//! Command-line front end: run configured Monte Carlo sweeps and emit CSV.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use chanest::channel::{generate_channel, write_channel_dump_csv};
use chanest::config::{apply_config_text, parse_estimator_list, preset_by_name, ScenarioConfig};
use chanest::harness::run_scenario;
use chanest::seed;

#[derive(Parser)]
#[command(
    name = "chanest",
    version,
    about = "OFDM link simulator with LS / decision-feedback / complex-SVR channel estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo sweep and write one CSV row per (point, estimator).
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario config file (flat key = value lines; see the README for keys).
    #[arg(long, value_name = "path", required_unless_present = "preset")]
    config: Option<PathBuf>,

    /// Start from a named preset instead of (or underneath) a config file.
    #[arg(long, value_name = "name")]
    preset: Option<String>,

    /// Output CSV path; stdout when omitted.
    #[arg(long, value_name = "csv-path")]
    out: Option<PathBuf>,

    /// Override the master seed.
    #[arg(long, value_name = "int")]
    seed: Option<u64>,

    /// Override the estimator list, e.g. "ls,df,svr".
    #[arg(long, value_name = "list")]
    estimators: Option<String>,

    /// Also dump the true channel response surface of one frame realization
    /// as CSV (symbol_index, subcarrier, magnitude, phase).
    #[arg(long, value_name = "csv-path")]
    dump_channel: Option<PathBuf>,
}

fn build_scenario(args: &SimulateArgs) -> chanest::Result<ScenarioConfig> {
    let base = match &args.preset {
        Some(name) => preset_by_name(name)?,
        None => ScenarioConfig::paper_table3(),
    };
    let mut scenario = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            apply_config_text(base, &text)?
        }
        None => base,
    };
    if let Some(seed) = args.seed {
        scenario.master_seed = seed;
    }
    if let Some(list) = &args.estimators {
        scenario.estimators = parse_estimator_list(list)?;
    }
    scenario.validate()?;
    Ok(scenario)
}

fn dump_channel(scenario: &ScenarioConfig, path: &PathBuf) -> chanest::Result<()> {
    let config = &scenario.ofdm;
    let realization = generate_channel(
        &scenario.profile,
        scenario.doppler_hz(),
        config.frame_samples(),
        config.sampling_rate_hz,
        seed::mix(&[scenario.master_seed, seed::TAG_DUMP]),
    )?;
    let mut file = io::BufWriter::new(fs::File::create(path)?);
    write_channel_dump_csv(&realization, config, &mut file)?;
    file.flush()?;
    Ok(())
}

fn simulate(args: &SimulateArgs) -> chanest::Result<()> {
    let scenario = build_scenario(args)?;
    if let Some(path) = &args.dump_channel {
        dump_channel(&scenario, path)?;
    }
    match &args.out {
        Some(path) => {
            let mut file = io::BufWriter::new(fs::File::create(path)?);
            run_scenario(&scenario, &mut file)?;
            file.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            run_scenario(&scenario, &mut lock)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(args) => simulate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
