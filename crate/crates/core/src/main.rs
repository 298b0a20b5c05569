use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use reisda::cli::{
    cmd_gen_friedman, cmd_gen_timeseries, cmd_oracle, cmd_run, cmd_sweep, log_report, CliError,
};
use reisda::datagen::{FriedmanBenchmarkSpec, MotionSpec};

/// Domain adaptation for regression by iterative self-labeling.
#[derive(Parser)]
#[command(name = "reisda", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a benchmark bundle to disk.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Run every configured method on every seed and write the report files.
    Run {
        config: PathBuf,
        /// Output directory, overriding output_dir in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-ISDA for several block sizes, tracing the RMSE of labeled targets.
    Sweep {
        config: PathBuf,
        /// Comma-separated block sizes, e.g. 2,3,5.
        #[arg(long, value_delimiter = ',', required = true)]
        etas: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustive label search on a tiny bundle, compared with greedy self-labeling.
    Oracle {
        bundle: PathBuf,
        /// Comma-separated label grid.
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        grid: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        eta: usize,
        /// Ridge penalty of the grid-snapping learner.
        #[arg(long, default_value_t = 1.0)]
        penalty: f64,
    },
}

#[derive(Subcommand)]
enum GenCommand {
    /// Halton source points on a cube and shifted target points.
    Friedman(FriedmanArgs),
    /// Synthetic multi-subject time series with a t column.
    Timeseries(TimeseriesArgs),
}

#[derive(Args)]
struct FriedmanArgs {
    #[arg(long, default_value_t = 80)]
    n_source: usize,
    #[arg(long, default_value_t = 41)]
    n_target: usize,
    #[arg(long, default_value_t = 0.2, allow_negative_numbers = true)]
    low: f64,
    #[arg(long, default_value_t = 1.2, allow_negative_numbers = true)]
    high: f64,
    #[arg(long, default_value_t = 0.2, allow_negative_numbers = true)]
    shift: f64,
    #[arg(long, default_value_t = 5)]
    dims: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TimeseriesArgs {
    #[arg(long, default_value_t = 6)]
    subjects: usize,
    #[arg(long, default_value_t = 40)]
    frames: usize,
    #[arg(long, default_value_t = 31)]
    channels: usize,
    #[arg(long, default_value_t = 2021)]
    seed: u64,
    /// Subject (1-based) used as the target; defaults to the last one.
    #[arg(long)]
    target_subject: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

fn execute(command: Command) -> Result<bool, CliError> {
    match command {
        Command::Gen(GenCommand::Friedman(a)) => {
            let spec = FriedmanBenchmarkSpec {
                n_source: a.n_source,
                n_target: a.n_target,
                domain_low: a.low,
                domain_high: a.high,
                shift: a.shift,
                dims: a.dims,
            };
            for f in cmd_gen_friedman(&spec, &a.out)? {
                println!("{}", f.display());
            }
            Ok(false)
        }
        Command::Gen(GenCommand::Timeseries(a)) => {
            let spec = MotionSpec {
                subjects: a.subjects,
                frames: a.frames,
                channels: a.channels,
                seed: a.seed,
            };
            for f in cmd_gen_timeseries(&spec, a.target_subject, &a.out)? {
                println!("{}", f.display());
            }
            Ok(false)
        }
        Command::Run { config, out } => {
            let output = cmd_run(&config, out.as_deref())?;
            log_report(&output.report);
            for m in &output.report.methods {
                match m.summary.median_rmse {
                    Some(e) => println!("{:<10} median rmse {e:.4}", m.name),
                    None => println!("{:<10} failed on every seed", m.name),
                }
            }
            Ok(output.any_failed)
        }
        Command::Sweep { config, etas, out } => {
            let output = cmd_sweep(&config, &etas, out.as_deref())?;
            log_report(&output.report);
            for f in &output.files {
                println!("{}", f.display());
            }
            Ok(output.any_failed)
        }
        Command::Oracle {
            bundle,
            grid,
            eta,
            penalty,
        } => {
            let result = cmd_oracle(&bundle, &grid, eta, penalty)?;
            println!("{}", serde_json::to_string_pretty(&result).unwrap_or_default());
            Ok(false)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            eprintln!("some method runs failed; see report.json");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
