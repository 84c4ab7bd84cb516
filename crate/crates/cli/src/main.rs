//! `randbill`: seeded random-billiard experiments from the command line.
//!
//! Every subcommand writes its artifacts into the output directory and prints
//! its JSON summary on stdout. Failures print `{"error": {...}}` on stderr and
//! exit nonzero.

mod commands;
mod config;
mod error;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use config::{CommonArgs, ExperimentConfig, ExtraArgs, ReferenceArg, Table};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "randbill", version, about = "Random billiards with the four-branch reflection law")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Circle trajectory, SVG picture and summary.
    Simulate(PlotArgs),
    /// Reachable angles, transition matrix and stationary vector.
    Markov(CommonOnly),
    /// Total-variation distance to μ under the averaged kernel.
    Knudsen(KnudsenArgs),
    /// Caustic radius of the reachable set, with a picture.
    Caustic(PlotArgs),
    /// Lyapunov exponent estimate on the circle or in the pipeline.
    Lyapunov(LyapunovArgs),
    /// Invariant suite: normalization, μ-invariance, interval family.
    Check(CommonOnly),
}

#[derive(Debug, Args)]
struct CommonOnly {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Args)]
struct PlotArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Chords drawn in the SVG.
    #[arg(long)]
    max_chords: Option<usize>,
}

#[derive(Debug, Args)]
struct KnudsenArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// `mu`, `mu:a,b`, `interval:I1`, `interval:a,b` or `file:density.csv`.
    #[arg(long)]
    initial: Option<String>,
    #[arg(long, value_enum)]
    reference: Option<ReferenceArg>,
}

#[derive(Debug, Args)]
struct LyapunovArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum)]
    table: Option<Table>,
    /// Tangent vector `x,y`.
    #[arg(long, value_parser = parse_direction, allow_hyphen_values = true)]
    direction: Option<[f64; 2]>,
    /// Run the pipeline estimate for irrational α too.
    #[arg(long)]
    allow_irrational: bool,
}

fn parse_direction(s: &str) -> Result<[f64; 2], String> {
    let (x, y) = s.split_once(',').ok_or("expected `x,y`")?;
    let x: f64 = x.trim().parse().map_err(|_| format!("bad number {x:?}"))?;
    let y: f64 = y.trim().parse().map_err(|_| format!("bad number {y:?}"))?;
    Ok([x, y])
}

fn run(command: Command) -> Result<serde_json::Value, CliError> {
    let resolve = |common: &CommonArgs, extra: ExtraArgs| ExperimentConfig::resolve(common, &extra);
    match command {
        Command::Simulate(a) => {
            let cfg = resolve(&a.common, ExtraArgs { max_chords: a.max_chords, ..Default::default() })?;
            commands::simulate(&cfg)
        }
        Command::Markov(a) => commands::markov(&resolve(&a.common, ExtraArgs::default())?),
        Command::Knudsen(a) => {
            let extra = ExtraArgs {
                initial: a.initial,
                reference: a.reference,
                ..Default::default()
            };
            commands::knudsen(&resolve(&a.common, extra)?)
        }
        Command::Caustic(a) => {
            let cfg = resolve(&a.common, ExtraArgs { max_chords: a.max_chords, ..Default::default() })?;
            commands::caustic(&cfg)
        }
        Command::Lyapunov(a) => {
            let extra = ExtraArgs {
                table: a.table,
                direction: a.direction,
                allow_irrational: a.allow_irrational,
                ..Default::default()
            };
            commands::lyapunov(&resolve(&a.common, extra)?)
        }
        Command::Check(a) => commands::check(&resolve(&a.common, ExtraArgs::default())?),
    }
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&CliError::Usage(e.render().to_string().trim().to_string())),
    };
    match run(cli.command) {
        Ok(summary) => {
            let text = serde_json::to_string_pretty(&summary).expect("JSON values always serialise");
            // a closed stdout (e.g. piped into `head`) is not a failure of the run
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}
