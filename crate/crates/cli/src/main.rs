use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mqs_cli::{CliError, ErrorLine, Overrides};
use mqs_core::{MqsConvention, SweepAxis, ThermalConvention};

#[derive(Parser)]
#[command(
    name = "mqs",
    version,
    about = "Collective-dephasing dynamics and cat-state formation in bosonic baths"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Directory for artifacts (overrides the config's `output_dir`).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,

    /// Worker threads; defaults to the number of available processors.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[arg(long, global = true, value_enum)]
    thermal_convention: Option<ThermalFlag>,

    #[arg(long, global = true, value_enum)]
    mqs_convention: Option<MqsFlag>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a config file or a preset by name.
    Run { config: String },
    /// Assess cat formation over a list of values of one parameter.
    Sweep {
        config: String,
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated values.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
    },
    /// List the built-in presets.
    Presets,
    /// Print a preset's config.
    EmitPreset { name: String },
}

#[derive(Clone, Copy, ValueEnum)]
enum ThermalFlag {
    /// coth(βω)
    Paper,
    /// coth(βω/2)
    Standard,
}

#[derive(Clone, Copy, ValueEnum)]
enum MqsFlag {
    /// Partner |θ − π, φ⟩
    Paper,
    /// Partner reached by L_z² twisting
    Twist,
}

fn jobs(requested: Option<usize>) -> usize {
    requested.filter(|&j| j > 0).unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    })
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let overrides = Overrides {
        output_dir: cli.output_dir,
        thermal: cli.thermal_convention.map(|t| match t {
            ThermalFlag::Paper => ThermalConvention::PaperCoth,
            ThermalFlag::Standard => ThermalConvention::StandardCothHalf,
        }),
        mqs: cli.mqs_convention.map(|m| match m {
            MqsFlag::Paper => MqsConvention::Antipodal,
            MqsFlag::Twist => MqsConvention::TwistCompatible,
        }),
    };
    let jobs = jobs(cli.jobs);
    match cli.command {
        Command::Run { config } => {
            let s = overrides.apply(mqs_cli::load_scenario(&config)?)?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| CliError::Config(format!("`--jobs`: {e}")))?;
            let summary = pool.install(|| mqs_cli::run_scenario(&s))?;
            println!("{}", mqs_cli::json_line(&summary));
        }
        Command::Sweep {
            config,
            axis,
            values,
        } => {
            let s = overrides.apply(mqs_cli::load_scenario(&config)?)?;
            let values = mqs_cli::parse_values(&values)?;
            let summary = mqs_cli::run_sweep(&s, axis, &values, jobs)?;
            println!("{}", mqs_cli::json_line(&summary));
        }
        Command::Presets => {
            for name in mqs_core::scenario::presets() {
                println!("{name}");
            }
        }
        Command::EmitPreset { name } => print!("{}", mqs_cli::emit_preset(&name)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                mqs_cli::EXIT_CONFIG
            } else {
                mqs_cli::EXIT_OK
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.exit_code();
            eprintln!("mqs: {e}");
            let message = e.to_string();
            println!(
                "{}",
                mqs_cli::json_line(&ErrorLine {
                    status: "error",
                    exit_code: code,
                    error: &message,
                })
            );
            ExitCode::from(code as u8)
        }
    }
}
