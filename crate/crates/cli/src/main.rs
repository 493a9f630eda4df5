use clap::{Parser, Subcommand};
use stardcm_cli::{load_scenario, resolve_output_dir, CliError, RunOptions, SweepAxis};
use std::path::PathBuf;
use std::process::ExitCode;

/// Link-level ISAC simulator driven by a STAR digital coding metasurface.
#[derive(Debug, Parser)]
#[command(name = "stardcm", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a campaign and export manifest.json, slots.csv, and summary.json.
    Run {
        /// Scenario JSON file.
        scenario: PathBuf,
        /// Output directory (env STARDCM_OUT_DIR overrides).
        #[arg(short, long)]
        output: PathBuf,
        /// Override the scenario's trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Override the scenario's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Synthesize baseband blocks and log empirical SNRs (slower).
        #[arg(long)]
        signal_level: bool,
        /// Export per-slot scattering patterns for the first trial.
        #[arg(long)]
        patterns: bool,
        /// Worker threads (env STARDCM_WORKERS overrides).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run the scenario once per value along one axis and export sweep.csv.
    Sweep {
        /// Scenario JSON file.
        scenario: PathBuf,
        /// Axis: lambda | rho | p_a1 | c_r | snr.
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        /// Output directory (env STARDCM_OUT_DIR overrides).
        #[arg(short, long)]
        output: PathBuf,
        /// Override the scenario's trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Override the scenario's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (env STARDCM_WORKERS overrides).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Validate a scenario file and report the first violated constraint.
    Validate {
        /// Scenario JSON file.
        scenario: PathBuf,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            scenario,
            output,
            trials,
            seed,
            signal_level,
            patterns,
            workers,
        } => {
            let sc = load_scenario(&scenario)?;
            let opts = RunOptions {
                trials,
                seed,
                signal_level,
                patterns,
                workers,
            };
            let out_dir = resolve_output_dir(&output);
            let summary = stardcm_cli::run(&sc, &out_dir, &opts)?;
            println!(
                "{} trials, {} slots: mean sum rate {:.4} bits/s/Hz, angle RMSE {:.3e} rad -> {}",
                summary.trials,
                summary.slots_per_trial,
                summary.sum_rate.mean,
                summary.angle_rmse.mean,
                out_dir.display()
            );
            Ok(())
        }
        Command::Sweep {
            scenario,
            axis,
            values,
            output,
            trials,
            seed,
            workers,
        } => {
            let sc = load_scenario(&scenario)?;
            let opts = RunOptions {
                trials,
                seed,
                workers,
                ..Default::default()
            };
            let out_dir = resolve_output_dir(&output);
            stardcm_cli::sweep(&sc, axis, &values, &out_dir, &opts)?;
            println!(
                "swept {} over {} values -> {}",
                axis.name(),
                values.len(),
                out_dir.display()
            );
            Ok(())
        }
        Command::Validate { scenario } => {
            let sc = load_scenario(&scenario)?;
            sc.compile().map_err(|e| CliError::Config(e.to_string()))?;
            println!("scenario valid");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
