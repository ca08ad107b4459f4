//! Deterministic report rendering and the schedule CSV format.
//!
//! Money is rounded to cents only here, at the presentation edge;
//! every comparison upstream uses unrounded values. Report bodies
//! carry no timestamps or machine details, so identical inputs give
//! byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use edr_core::{Decision, DecisionReason, Scenario, Schedule, TimeGrid};
use thiserror::Error;

fn money(v: f64) -> String {
    format!("${:.2}", v)
}

fn reason_line(reason: DecisionReason) -> &'static str {
    match reason {
        DecisionReason::ProfitHigher => "event profit exceeds the baseline",
        DecisionReason::ProfitNotHigher => "event profit does not exceed the baseline",
        DecisionReason::Infeasible => "no dispatch can meet the reduction signal",
    }
}

pub fn decision_word(decision: &Decision) -> &'static str {
    match decision.reason {
        DecisionReason::ProfitHigher => "participation",
        DecisionReason::ProfitNotHigher => "nonparticipation",
        DecisionReason::Infeasible => "infeasible",
    }
}

/// Cross-check of the solver against the SOC-lattice oracle.
#[derive(Debug, Clone, Copy)]
pub struct OracleCheck {
    pub oracle_value: f64,
    pub solver_value: f64,
}

pub fn render_decision_report(
    scenario: &Scenario,
    decision: &Decision,
    oracle: Option<&OracleCheck>,
) -> String {
    let grid = &scenario.grid;
    let mut out = String::new();
    let _ = writeln!(out, "EDR participation decision");
    let _ = writeln!(out, "==========================");
    let _ = writeln!(out);
    let end = grid.end_minutes();
    let _ = writeln!(
        out,
        "Event window : {}-{:02}:{:02} ({} steps of {} min)",
        grid.start(),
        end / 60,
        end % 60,
        grid.steps(),
        grid.step_minutes()
    );
    let _ = writeln!(out, "Decision     : {}", decision_word(decision));
    let _ = writeln!(out, "Reason       : {}", reason_line(decision.reason));
    let _ = writeln!(out);

    let base = &decision.breakdown_without_edr;
    let with = decision.with_edr.as_ref();
    let cell = |v: Option<f64>| v.map_or_else(|| "-".to_string(), money);
    let _ = writeln!(
        out,
        "{:<22} {:>14} {:>14}",
        "Index", "Without EDR", "With EDR"
    );
    let rows: [(&str, f64, Option<f64>); 4] = [
        ("Station profit", base.total(), with.map(|d| d.c_edr)),
        (
            "EV charging income",
            base.ev_income,
            with.map(|d| d.breakdown.ev_income),
        ),
        (
            "EDR incentive income",
            base.edr_income,
            with.map(|d| d.breakdown.edr_income),
        ),
        (
            "Grid energy cost",
            base.grid_cost,
            with.map(|d| d.breakdown.grid_cost),
        ),
    ];
    for (label, without, with_v) in rows {
        let _ = writeln!(out, "{:<22} {:>14} {:>14}", label, money(without), cell(with_v));
    }

    if let Some(detail) = with {
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "Solver: {} nodes explored, proven gap {:.1e} $.",
            detail.nodes_explored, detail.proven_gap
        );
    }

    if decision.reason == DecisionReason::Infeasible {
        let _ = writeln!(out);
        let _ = writeln!(out, "Steps whose reduction signal exceeds the forecast:");
        for (t, (f, m)) in scenario
            .forecast
            .kw()
            .iter()
            .zip(scenario.edr.min_reduction_kw())
            .enumerate()
        {
            if m > f {
                let _ = writeln!(
                    out,
                    "  {}: forecast {:.1} kW < required reduction {:.1} kW",
                    grid.step_start(t),
                    f,
                    m
                );
            }
        }
    }

    if let Some(check) = oracle {
        let gap = check.solver_value - check.oracle_value;
        let rel = if check.solver_value.abs() > 0.0 {
            100.0 * gap / check.solver_value.abs()
        } else {
            0.0
        };
        let _ = writeln!(out);
        let _ = writeln!(out, "Oracle cross-check");
        let _ = writeln!(out, "  SOC-lattice value : {}", money(check.oracle_value));
        let _ = writeln!(out, "  Solver objective  : {}", money(check.solver_value));
        let _ = writeln!(out, "  Gap               : {} ({:.3}%)", money(gap), rel);
    }

    if let Some(detail) = with {
        let _ = writeln!(out);
        let _ = writeln!(out, "Schedule");
        let _ = writeln!(
            out,
            "{:<6} {:>9} {:>9} {:>8} {:>8} {:>4} {:>4} {:>8} {:>10}",
            "time", "grid_kw", "ev_kw", "dis_kw", "ch_kw", "dis", "ch", "soc", "reduct_kw"
        );
        let sch = &detail.schedule;
        for t in 0..sch.steps() {
            let _ = writeln!(
                out,
                "{:<6} {:>9.3} {:>9.3} {:>8.3} {:>8.3} {:>4} {:>4} {:>8.4} {:>10.3}",
                grid.step_start(t).to_string(),
                sch.grid_load_kw[t],
                sch.ev_served_kw[t],
                sch.bes_discharge_kw[t],
                sch.bes_charge_kw[t],
                u8::from(sch.mode_discharge[t]),
                u8::from(sch.mode_charge[t]),
                sch.soc[t],
                sch.reduction_kw[t]
            );
        }
    }
    out
}

/// One row per breakdown index, mirroring the report table.
pub fn render_summary_csv(decision: &Decision) -> String {
    let base = &decision.breakdown_without_edr;
    let with = decision.with_edr.as_ref();
    let cell = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:.2}"));
    let mut out = String::from("index,without_edr,with_edr\n");
    let _ = writeln!(
        out,
        "station_profit,{:.2},{}",
        base.total(),
        cell(with.map(|d| d.c_edr))
    );
    let _ = writeln!(
        out,
        "ev_charging_income,{:.2},{}",
        base.ev_income,
        cell(with.map(|d| d.breakdown.ev_income))
    );
    let _ = writeln!(
        out,
        "edr_incentive_income,{:.2},{}",
        base.edr_income,
        cell(with.map(|d| d.breakdown.edr_income))
    );
    let _ = writeln!(
        out,
        "grid_energy_cost,{:.2},{}",
        base.grid_cost,
        cell(with.map(|d| d.breakdown.grid_cost))
    );
    let _ = writeln!(out, "decision,,{}", decision_word(decision));
    out
}

pub const SCHEDULE_HEADER: &str =
    "time,grid_load_kw,ev_served_kw,bes_discharge_kw,bes_charge_kw,mode_dis,mode_ch,soc,reduction_kw";

/// Full-precision per-step schedule table.
pub fn render_schedule_csv(grid: &TimeGrid, schedule: &Schedule) -> String {
    let mut out = String::from(SCHEDULE_HEADER);
    out.push('\n');
    for t in 0..schedule.steps() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            grid.step_start(t),
            schedule.grid_load_kw[t],
            schedule.ev_served_kw[t],
            schedule.bes_discharge_kw[t],
            schedule.bes_charge_kw[t],
            u8::from(schedule.mode_discharge[t]),
            u8::from(schedule.mode_charge[t]),
            schedule.soc[t],
            schedule.reduction_kw[t]
        );
    }
    out
}

#[derive(Debug, Error)]
pub enum ScheduleCsvError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: expected header `{SCHEDULE_HEADER}`")]
    Header { path: PathBuf },
    #[error("{path}:{line}: {detail}")]
    Row {
        path: PathBuf,
        line: usize,
        detail: String,
    },
    #[error("{path}: {found} rows for a {expected}-step window")]
    RowCount {
        path: PathBuf,
        expected: usize,
        found: usize,
    },
}

/// Parse a schedule CSV back into a [`Schedule`] aligned with `grid`.
/// The battery net column is reconstructed as discharge minus charge.
pub fn parse_schedule_csv(path: &Path, grid: &TimeGrid) -> Result<Schedule, ScheduleCsvError> {
    let text = fs::read_to_string(path).map_err(|source| ScheduleCsvError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == SCHEDULE_HEADER => {}
        _ => {
            return Err(ScheduleCsvError::Header {
                path: path.to_path_buf(),
            })
        }
    }

    let steps = grid.steps();
    let mut sch = Schedule {
        grid_load_kw: Vec::with_capacity(steps),
        ev_served_kw: Vec::with_capacity(steps),
        bes_net_kw: Vec::with_capacity(steps),
        bes_discharge_kw: Vec::with_capacity(steps),
        bes_charge_kw: Vec::with_capacity(steps),
        mode_discharge: Vec::with_capacity(steps),
        mode_charge: Vec::with_capacity(steps),
        soc: Vec::with_capacity(steps),
        reduction_kw: Vec::with_capacity(steps),
    };
    let mut row_index = 0usize;
    for (idx, raw) in lines {
        let line = idx + 1;
        let row = raw.trim();
        if row.is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 9 {
            return Err(ScheduleCsvError::Row {
                path: path.to_path_buf(),
                line,
                detail: format!("expected 9 fields, found {}", fields.len()),
            });
        }
        if row_index >= steps {
            return Err(ScheduleCsvError::RowCount {
                path: path.to_path_buf(),
                expected: steps,
                found: row_index + 1,
            });
        }
        let expected_time = grid.step_start(row_index).to_string();
        if fields[0].trim() != expected_time {
            return Err(ScheduleCsvError::Row {
                path: path.to_path_buf(),
                line,
                detail: format!(
                    "expected step label {expected_time}, found `{}`",
                    fields[0].trim()
                ),
            });
        }
        let f64_at = |i: usize| -> Result<f64, ScheduleCsvError> {
            fields[i].trim().parse().map_err(|_| ScheduleCsvError::Row {
                path: path.to_path_buf(),
                line,
                detail: format!("`{}` is not a number", fields[i].trim()),
            })
        };
        let mode_at = |i: usize| -> Result<bool, ScheduleCsvError> {
            match fields[i].trim() {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(ScheduleCsvError::Row {
                    path: path.to_path_buf(),
                    line,
                    detail: format!("mode `{other}` must be 0 or 1"),
                }),
            }
        };
        let dis = f64_at(3)?;
        let ch = f64_at(4)?;
        sch.grid_load_kw.push(f64_at(1)?);
        sch.ev_served_kw.push(f64_at(2)?);
        sch.bes_discharge_kw.push(dis);
        sch.bes_charge_kw.push(ch);
        sch.bes_net_kw.push(dis - ch);
        sch.mode_discharge.push(mode_at(5)?);
        sch.mode_charge.push(mode_at(6)?);
        sch.soc.push(f64_at(7)?);
        sch.reduction_kw.push(f64_at(8)?);
        row_index += 1;
    }
    if row_index != steps {
        return Err(ScheduleCsvError::RowCount {
            path: path.to_path_buf(),
            expected: steps,
            found: row_index,
        });
    }
    Ok(sch)
}

/// First capacity index beyond which profit stops increasing by more
/// than one cent. `None` when the last entry is still improving, since
/// flatness cannot be certified without a later point.
pub fn find_saturation(rows: &[(f64, f64)]) -> Option<usize> {
    let n = rows.len();
    for k in 0..n.saturating_sub(1) {
        let later_max = rows[k..]
            .iter()
            .map(|r| r.1)
            .fold(f64::NEG_INFINITY, f64::max);
        if later_max - rows[k].1 <= 0.01 {
            return Some(k);
        }
    }
    None
}

pub fn render_sweep_csv(rows: &[(f64, f64)], reference_kwh: f64) -> String {
    let saturation = find_saturation(rows);
    let mut out = String::from("capacity_kwh,percent_of_reference,profit,saturation\n");
    for (k, (cap, profit)) in rows.iter().enumerate() {
        let pct = if reference_kwh > 0.0 {
            100.0 * cap / reference_kwh
        } else {
            0.0
        };
        let _ = writeln!(
            out,
            "{},{:.1},{:.2},{}",
            cap,
            pct,
            profit,
            if saturation == Some(k) { "*" } else { "" }
        );
    }
    out
}

pub fn render_sweep_text(rows: &[(f64, f64)], reference_kwh: f64) -> String {
    let saturation = find_saturation(rows);
    let mut out = String::new();
    let _ = writeln!(out, "Battery capacity sweep");
    let _ = writeln!(out, "======================");
    let _ = writeln!(out);
    let _ = writeln!(out, "Reference capacity: {reference_kwh} kWh (100%)");
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<14} {:>16} {:>14}",
        "capacity_kwh", "% of reference", "event profit"
    );
    for (k, (cap, profit)) in rows.iter().enumerate() {
        let pct = if reference_kwh > 0.0 {
            100.0 * cap / reference_kwh
        } else {
            0.0
        };
        let marker = if saturation == Some(k) {
            "   <- saturation"
        } else {
            ""
        };
        let _ = writeln!(
            out,
            "{:<14} {:>15.1}% {:>14}{}",
            cap,
            pct,
            money(*profit),
            marker
        );
    }
    let _ = writeln!(out);
    match saturation {
        Some(k) => {
            let _ = writeln!(
                out,
                "Profit saturates at {} kWh: larger batteries add no further profit \
                 (within $0.01).",
                rows[k].0
            );
        }
        None => {
            let _ = writeln!(
                out,
                "Profit is still rising at the largest swept capacity; no saturation \
                 within range."
            );
        }
    }
    out
}
