use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

use edr_station::commands::{
    run_decide, run_sweep, run_validate, DecideArgs, OutputFormat, SweepArgs, ValidateArgs,
    EXIT_ERROR,
};

/// Participation decisions for a battery-assisted EV charging station
/// facing an emergency demand response event.
#[derive(Parser)]
#[command(name = "edr-station", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Csv,
    Both,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Text => OutputFormat::Text,
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Both => OutputFormat::Both,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether to participate in the event described by a
    /// scenario file; exit code 0 participate, 1 decline, 2 infeasible.
    Decide {
        /// Scenario config (key = value format).
        #[arg(long)]
        scenario: PathBuf,
        /// Output directory for the report files.
        #[arg(long)]
        out: PathBuf,
        /// Which report files to write.
        #[arg(long, value_enum, default_value = "both")]
        format: FormatArg,
        /// Cross-check the solver against the SOC-lattice oracle and
        /// report the gap.
        #[arg(long)]
        oracle: bool,
    },
    /// Re-solve the event over a list of battery capacities and report
    /// the profit curve with its saturation point.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        /// Capacities in kWh, comma separated (order is preserved).
        #[arg(long, value_delimiter = ',', required = true)]
        capacities: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        format: FormatArg,
    },
    /// Audit a schedule CSV against a scenario's dispatch rules;
    /// exit code 0 clean, 1 violations found.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
        /// Schedule CSV as written by `decide`.
        #[arg(long)]
        schedule: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_ERROR as u8);
        }
    };

    let result = match cli.command {
        Command::Decide {
            scenario,
            out,
            format,
            oracle,
        } => run_decide(&DecideArgs {
            scenario,
            out,
            format: format.into(),
            oracle,
        }),
        Command::Sweep {
            scenario,
            capacities,
            out,
            format,
        } => run_sweep(&SweepArgs {
            scenario,
            capacities,
            out,
            format: format.into(),
        }),
        Command::Validate { scenario, schedule } => {
            run_validate(&ValidateArgs { scenario, schedule })
        }
    };

    match result {
        Ok(code) => ExitCode::from(code.clamp(0, 255) as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
