//! Command implementations. Each returns the process exit code:
//! 0 participate (or success), 1 nonparticipate (or violations found),
//! 2 infeasible, anything above 2 is an error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use edr_core::{
    capacity_sweep, decide, dp_profit, validate_schedule, Decision, DecisionReason, DpConfig,
    Scenario,
};
use thiserror::Error;

use crate::config::{load_scenario, ConfigError};
use crate::report::{
    self, parse_schedule_csv, OracleCheck, ScheduleCsvError,
};

pub const EXIT_PARTICIPATE: i32 = 0;
pub const EXIT_NONPARTICIPATE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_ERROR: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Decision(#[from] edr_core::decision::DecisionError),
    #[error(transparent)]
    Oracle(#[from] edr_core::oracle::OracleError),
    #[error(transparent)]
    ScheduleCsv(#[from] ScheduleCsvError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Text,
    Csv,
    Both,
}

impl OutputFormat {
    fn text(self) -> bool {
        matches!(self, OutputFormat::Text | OutputFormat::Both)
    }

    fn csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }
}

pub struct DecideArgs {
    pub scenario: PathBuf,
    pub out: PathBuf,
    pub format: OutputFormat,
    pub oracle: bool,
}

pub struct SweepArgs {
    pub scenario: PathBuf,
    pub capacities: Vec<f64>,
    pub out: PathBuf,
    pub format: OutputFormat,
}

pub struct ValidateArgs {
    pub scenario: PathBuf,
    pub schedule: PathBuf,
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    fs::write(path, content).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Provenance sidecar. Reports themselves stay deterministic; the
/// wall-clock stamp lives here only.
fn write_run_meta(out_dir: &Path, command: &str, scenario: &Path) -> Result<(), CliError> {
    let unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = format!(
        "tool = {} {}\ncommand = {}\nscenario = {}\nunix_time = {}\n",
        env!("CARGO_PKG_NAME"),
        env!("CARGO_PKG_VERSION"),
        command,
        scenario.display(),
        unix
    );
    write_file(&out_dir.join("run_meta.txt"), &meta)
}

fn exit_code_for(decision: &Decision) -> i32 {
    match decision.reason {
        DecisionReason::ProfitHigher => EXIT_PARTICIPATE,
        DecisionReason::ProfitNotHigher => EXIT_NONPARTICIPATE,
        DecisionReason::Infeasible => EXIT_INFEASIBLE,
    }
}

fn prepare_out_dir(out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|source| CliError::Io {
        path: out.to_path_buf(),
        source,
    })
}

pub fn run_decide(args: &DecideArgs) -> Result<i32, CliError> {
    let scenario = load_scenario(&args.scenario)?;
    let decision = decide(&scenario)?;

    let oracle = if args.oracle {
        oracle_check(&scenario, &decision)?
    } else {
        None
    };

    prepare_out_dir(&args.out)?;
    if args.format.text() {
        let text = report::render_decision_report(&scenario, &decision, oracle.as_ref());
        write_file(&args.out.join("report.txt"), &text)?;
    }
    if args.format.csv() {
        write_file(
            &args.out.join("summary.csv"),
            &report::render_summary_csv(&decision),
        )?;
        if let Some(detail) = &decision.with_edr {
            write_file(
                &args.out.join("schedule.csv"),
                &report::render_schedule_csv(&scenario.grid, &detail.schedule),
            )?;
        }
    }
    write_run_meta(&args.out, "decide", &args.scenario)?;

    println!(
        "decision: {} (event {} vs baseline {})",
        report::decision_word(&decision),
        decision
            .c_edr()
            .map_or_else(|| "-".to_string(), |v| format!("${v:.2}")),
        format_args!("${:.2}", decision.c_non_edr),
    );
    Ok(exit_code_for(&decision))
}

fn oracle_check(
    scenario: &Scenario,
    decision: &Decision,
) -> Result<Option<OracleCheck>, CliError> {
    let Some(detail) = &decision.with_edr else {
        return Ok(None);
    };
    let dp = dp_profit(scenario, &DpConfig::default())?;
    Ok(dp.profit().map(|oracle_value| OracleCheck {
        oracle_value,
        solver_value: detail.c_edr,
    }))
}

pub fn run_sweep(args: &SweepArgs) -> Result<i32, CliError> {
    let scenario = load_scenario(&args.scenario)?;
    let rows = capacity_sweep(&scenario, &args.capacities)?;
    let reference = scenario.bes.rated_capacity_kwh;

    prepare_out_dir(&args.out)?;
    if args.format.text() {
        write_file(
            &args.out.join("sweep.txt"),
            &report::render_sweep_text(&rows, reference),
        )?;
    }
    if args.format.csv() {
        write_file(
            &args.out.join("sweep.csv"),
            &report::render_sweep_csv(&rows, reference),
        )?;
    }
    write_run_meta(&args.out, "sweep", &args.scenario)?;

    match report::find_saturation(&rows) {
        Some(k) => println!(
            "swept {} capacities; profit saturates at {} kWh",
            rows.len(),
            rows[k].0
        ),
        None => println!(
            "swept {} capacities; profit still rising at the largest",
            rows.len()
        ),
    }
    Ok(EXIT_PARTICIPATE)
}

pub fn run_validate(args: &ValidateArgs) -> Result<i32, CliError> {
    let scenario = load_scenario(&args.scenario)?;
    let schedule = parse_schedule_csv(&args.schedule, &scenario.grid)?;
    let violations = validate_schedule(&schedule, &scenario);
    if violations.is_empty() {
        println!("schedule satisfies every dispatch rule");
        return Ok(0);
    }
    let mut out = String::new();
    let _ = writeln!(out, "{} violation(s):", violations.len());
    for v in &violations {
        let _ = writeln!(out, "  {v}");
    }
    print!("{out}");
    Ok(1)
}
