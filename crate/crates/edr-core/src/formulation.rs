//! Translation between a [`Scenario`] and the dispatch MILP, plus the
//! audited [`Schedule`] extracted from a solve.
//!
//! The per-step model: the station draws `grid_load` from the grid,
//! serves `ev_served` to the vehicles, and splits the battery flow into
//! exclusive `discharge`/`charge` legs gated by binary mode variables.
//! `reduction` is the drop of grid draw below the forecast baseline and
//! must meet the operator's minimum. The objective maximizes EV retail
//! income plus reduction incentive minus grid energy cost over the
//! window.
//!
//! `ev_served` is capped by the forecast: the forecast is the demand
//! actually present at the station, and an uncapped retail margin would
//! make the objective unbounded.

use std::fmt;

use thiserror::Error;

use crate::domain::Scenario;
use crate::lp::{LpProblem, Relation, Sense};
use crate::milp::{MilpError, MilpOutcome, MilpProblem};

/// Power-balance tolerance (kW) for schedule audits.
pub const KW_TOL: f64 = 1e-6;
/// State-of-charge tolerance for schedule audits.
pub const SOC_TOL: f64 = 1e-9;
/// Extracted power values below this are clamped to zero.
const CLAMP_KW: f64 = 1e-9;
/// Binary relaxation values must be this close to 0 or 1 to snap.
const SNAP_TOL: f64 = 1e-6;

/// Index arithmetic for the per-step variable block:
/// six continuous variables followed by the two mode binaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarLayout {
    steps: usize,
}

const BLOCK: usize = 8;

impl VarLayout {
    pub fn new(steps: usize) -> Self {
        VarLayout { steps }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn num_vars(&self) -> usize {
        self.steps * BLOCK
    }

    pub fn grid_load(&self, t: usize) -> usize {
        t * BLOCK
    }

    pub fn ev_served(&self, t: usize) -> usize {
        t * BLOCK + 1
    }

    pub fn discharge(&self, t: usize) -> usize {
        t * BLOCK + 2
    }

    pub fn charge(&self, t: usize) -> usize {
        t * BLOCK + 3
    }

    pub fn soc(&self, t: usize) -> usize {
        t * BLOCK + 4
    }

    pub fn reduction(&self, t: usize) -> usize {
        t * BLOCK + 5
    }

    pub fn mode_discharge(&self, t: usize) -> usize {
        t * BLOCK + 6
    }

    pub fn mode_charge(&self, t: usize) -> usize {
        t * BLOCK + 7
    }

    pub fn binaries(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.steps).flat_map(|t| [self.mode_discharge(t), self.mode_charge(t)])
    }
}

#[derive(Debug, Error)]
pub enum FormulationError {
    #[error("dispatch model construction failed: {0}")]
    Milp(#[from] MilpError),
    #[error("schedule extraction requires an optimal solver outcome")]
    NotOptimal,
    #[error("solver output failed internal consistency checks: {0}")]
    Inconsistent(String),
}

/// Build the participation dispatch MILP for a scenario.
///
/// Fails only when the window needs more than 32 steps (two binaries
/// per step against the solver's 64-binary cap).
pub fn build_edr_milp(scenario: &Scenario) -> Result<MilpProblem, FormulationError> {
    let steps = scenario.grid.steps();
    let layout = VarLayout::new(steps);
    let dt = scenario.grid.step_hours();
    let bes = &scenario.bes;
    let forecast = scenario.forecast.kw();
    let grid_price = scenario.prices.per_kwh();
    let ev_price = scenario.ev_prices();
    let incentive = scenario.edr.incentive_per_kwh();
    let min_reduction = scenario.edr.min_reduction_kw();

    let mut p = LpProblem::new(Sense::Maximize, layout.num_vars());

    let zero_capacity = bes.rated_capacity_kwh == 0.0;
    // SOC moved per kW of discharge/charge over one step.
    let (soc_per_dis, soc_per_ch) = if zero_capacity {
        (0.0, 0.0)
    } else {
        (
            bes.discharge_eff * dt / bes.rated_capacity_kwh,
            bes.charge_eff * dt / bes.rated_capacity_kwh,
        )
    };

    for t in 0..steps {
        p.set_objective(layout.ev_served(t), dt * ev_price.per_kwh()[t]);
        p.set_objective(layout.reduction(t), dt * incentive[t]);
        p.set_objective(layout.grid_load(t), -dt * grid_price[t]);

        p.set_bounds(layout.grid_load(t), 0.0, f64::INFINITY);
        p.set_bounds(layout.ev_served(t), 0.0, forecast[t]);
        if zero_capacity {
            // No storage: both battery legs are pinned off.
            p.set_bounds(layout.discharge(t), 0.0, 0.0);
            p.set_bounds(layout.charge(t), 0.0, 0.0);
        } else {
            p.set_bounds(layout.discharge(t), 0.0, bes.max_discharge_kw);
            p.set_bounds(layout.charge(t), 0.0, bes.max_charge_kw);
        }
        let soc_lower = if t + 1 == steps {
            bes.terminal_soc_min.unwrap_or(bes.soc_min).max(bes.soc_min)
        } else {
            bes.soc_min
        };
        p.set_bounds(layout.soc(t), soc_lower, bes.soc_max);
        p.set_bounds(layout.reduction(t), min_reduction[t], f64::INFINITY);
        p.set_bounds(layout.mode_discharge(t), 0.0, 1.0);
        p.set_bounds(layout.mode_charge(t), 0.0, 1.0);

        // reduction + grid_load = forecast
        p.add_constraint(
            &[(layout.reduction(t), 1.0), (layout.grid_load(t), 1.0)],
            Relation::Eq,
            forecast[t],
        );
        // ev_served = grid_load + discharge - charge
        p.add_constraint(
            &[
                (layout.ev_served(t), 1.0),
                (layout.grid_load(t), -1.0),
                (layout.discharge(t), -1.0),
                (layout.charge(t), 1.0),
            ],
            Relation::Eq,
            0.0,
        );
        // battery legs only flow when their mode is on
        p.add_constraint(
            &[
                (layout.discharge(t), 1.0),
                (layout.mode_discharge(t), -bes.max_discharge_kw),
            ],
            Relation::Le,
            0.0,
        );
        p.add_constraint(
            &[
                (layout.charge(t), 1.0),
                (layout.mode_charge(t), -bes.max_charge_kw),
            ],
            Relation::Le,
            0.0,
        );
        // modes are exclusive
        p.add_constraint(
            &[
                (layout.mode_discharge(t), 1.0),
                (layout.mode_charge(t), 1.0),
            ],
            Relation::Le,
            1.0,
        );
        // SOC balance against the previous step (initial SOC before the window)
        if zero_capacity {
            p.add_constraint(&[(layout.soc(t), 1.0)], Relation::Eq, bes.initial_soc);
        } else if t == 0 {
            p.add_constraint(
                &[
                    (layout.soc(0), 1.0),
                    (layout.discharge(0), soc_per_dis),
                    (layout.charge(0), -soc_per_ch),
                ],
                Relation::Eq,
                bes.initial_soc,
            );
        } else {
            p.add_constraint(
                &[
                    (layout.soc(t), 1.0),
                    (layout.soc(t - 1), -1.0),
                    (layout.discharge(t), soc_per_dis),
                    (layout.charge(t), -soc_per_ch),
                ],
                Relation::Eq,
                0.0,
            );
        }
    }

    Ok(MilpProblem::new(p, layout.binaries())?)
}

/// Per-step operating point over the event window.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub grid_load_kw: Vec<f64>,
    pub ev_served_kw: Vec<f64>,
    pub bes_net_kw: Vec<f64>,
    pub bes_discharge_kw: Vec<f64>,
    pub bes_charge_kw: Vec<f64>,
    pub mode_discharge: Vec<bool>,
    pub mode_charge: Vec<bool>,
    pub soc: Vec<f64>,
    pub reduction_kw: Vec<f64>,
}

impl Schedule {
    pub fn steps(&self) -> usize {
        self.grid_load_kw.len()
    }
}

/// Turn an optimal solver outcome back into an audited schedule.
///
/// Mode variables are snapped to exact 0/1, power values below 1e-9 kW
/// are clamped to zero, and the SOC series is rebuilt from the clamped
/// dispatch so the balance holds to machine precision. Any disagreement
/// with the solver values or any audit violation is an internal error:
/// it signals a solver bug and must abort, never be papered over.
pub fn extract_schedule(
    outcome: &MilpOutcome,
    scenario: &Scenario,
) -> Result<Schedule, FormulationError> {
    let sol = outcome.optimal().ok_or(FormulationError::NotOptimal)?;
    let steps = scenario.grid.steps();
    let layout = VarLayout::new(steps);
    if sol.values.len() != layout.num_vars() {
        return Err(FormulationError::Inconsistent(format!(
            "solution carries {} variables, layout expects {}",
            sol.values.len(),
            layout.num_vars()
        )));
    }
    let bes = &scenario.bes;

    let snap = |v: f64, what: &str| -> Result<bool, FormulationError> {
        if v.abs() <= SNAP_TOL {
            Ok(false)
        } else if (v - 1.0).abs() <= SNAP_TOL {
            Ok(true)
        } else {
            Err(FormulationError::Inconsistent(format!(
                "{what} = {v} is not integral"
            )))
        }
    };
    let clamp = |v: f64| if v.abs() < CLAMP_KW { 0.0 } else { v };

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

    let dt = scenario.grid.step_hours();
    let mut soc_prev = bes.initial_soc;
    for t in 0..steps {
        let dis = clamp(sol.values[layout.discharge(t)]);
        let ch = clamp(sol.values[layout.charge(t)]);
        sch.grid_load_kw.push(clamp(sol.values[layout.grid_load(t)]));
        sch.ev_served_kw.push(clamp(sol.values[layout.ev_served(t)]));
        sch.bes_discharge_kw.push(dis);
        sch.bes_charge_kw.push(ch);
        sch.bes_net_kw.push(dis - ch);
        sch.reduction_kw.push(clamp(sol.values[layout.reduction(t)]));
        sch.mode_discharge
            .push(snap(sol.values[layout.mode_discharge(t)], "discharge mode")?);
        sch.mode_charge
            .push(snap(sol.values[layout.mode_charge(t)], "charge mode")?);

        let soc = if bes.rated_capacity_kwh == 0.0 {
            soc_prev
        } else {
            soc_prev - bes.discharge_eff * dis * dt / bes.rated_capacity_kwh
                + bes.charge_eff * ch * dt / bes.rated_capacity_kwh
        };
        let solver_soc = sol.values[layout.soc(t)];
        if (soc - solver_soc).abs() > 1e-7 {
            return Err(FormulationError::Inconsistent(format!(
                "rebuilt SOC {soc} disagrees with solver SOC {solver_soc} at step {t}"
            )));
        }
        sch.soc.push(soc);
        soc_prev = soc;
    }

    let violations = validate_schedule(&sch, scenario);
    if !violations.is_empty() {
        let detail: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(FormulationError::Inconsistent(detail.join("; ")));
    }
    Ok(sch)
}

/// The three objective terms of a solved (or baseline) window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfitBreakdown {
    pub ev_income: f64,
    pub edr_income: f64,
    pub grid_cost: f64,
}

impl ProfitBreakdown {
    pub const ZERO: ProfitBreakdown = ProfitBreakdown {
        ev_income: 0.0,
        edr_income: 0.0,
        grid_cost: 0.0,
    };

    /// Window profit; computed, never stored separately.
    pub fn total(&self) -> f64 {
        self.ev_income + self.edr_income - self.grid_cost
    }
}

/// Account a schedule at the scenario's prices.
pub fn profit_breakdown(schedule: &Schedule, scenario: &Scenario) -> ProfitBreakdown {
    let dt = scenario.grid.step_hours();
    let ev_prices = scenario.ev_prices();
    let mut out = ProfitBreakdown::ZERO;
    for t in 0..schedule.steps() {
        out.ev_income += ev_prices.per_kwh()[t] * schedule.ev_served_kw[t] * dt;
        out.edr_income += scenario.edr.incentive_per_kwh()[t] * schedule.reduction_kw[t] * dt;
        out.grid_cost += scenario.prices.per_kwh()[t] * schedule.grid_load_kw[t] * dt;
    }
    out
}

/// Which dispatch rule a violation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    SeriesAlignment,
    ReductionBalance,
    MinimumReduction,
    GridNonNegative,
    PowerBalance,
    NetSplit,
    DischargeLimit,
    ChargeLimit,
    ModeExclusive,
    SocBalance,
    SocBounds,
    TerminalSoc,
    ServedBounds,
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ConstraintKind::SeriesAlignment => "series alignment",
            ConstraintKind::ReductionBalance => "reduction balance",
            ConstraintKind::MinimumReduction => "minimum reduction",
            ConstraintKind::GridNonNegative => "grid draw non-negativity",
            ConstraintKind::PowerBalance => "power balance",
            ConstraintKind::NetSplit => "battery net split",
            ConstraintKind::DischargeLimit => "discharge limit",
            ConstraintKind::ChargeLimit => "charge limit",
            ConstraintKind::ModeExclusive => "mode exclusivity",
            ConstraintKind::SocBalance => "SOC balance",
            ConstraintKind::SocBounds => "SOC bounds",
            ConstraintKind::TerminalSoc => "terminal SOC floor",
            ConstraintKind::ServedBounds => "served load bounds",
        };
        f.write_str(name)
    }
}

/// One audited constraint failure: which rule, where, and by how much.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub constraint: ConstraintKind,
    pub step: usize,
    pub residual: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} violated at step {} (residual {:.3e})",
            self.constraint, self.step, self.residual
        )
    }
}

/// Independent re-check of every dispatch rule against a schedule.
///
/// Returns an empty list exactly when the schedule is feasible at the
/// stated tolerances; violations are data for reporting, not errors.
pub fn validate_schedule(schedule: &Schedule, scenario: &Scenario) -> Vec<Violation> {
    let steps = scenario.grid.steps();
    let mut out = Vec::new();
    let aligned = schedule.grid_load_kw.len() == steps
        && schedule.ev_served_kw.len() == steps
        && schedule.bes_net_kw.len() == steps
        && schedule.bes_discharge_kw.len() == steps
        && schedule.bes_charge_kw.len() == steps
        && schedule.mode_discharge.len() == steps
        && schedule.mode_charge.len() == steps
        && schedule.soc.len() == steps
        && schedule.reduction_kw.len() == steps;
    if !aligned {
        out.push(Violation {
            constraint: ConstraintKind::SeriesAlignment,
            step: 0,
            residual: schedule.steps() as f64 - steps as f64,
        });
        return out;
    }

    let bes = &scenario.bes;
    let dt = scenario.grid.step_hours();
    let forecast = scenario.forecast.kw();
    let min_reduction = scenario.edr.min_reduction_kw();
    let mut push = |constraint, step, residual: f64| {
        out.push(Violation {
            constraint,
            step,
            residual,
        })
    };

    let mut soc_prev = bes.initial_soc;
    for t in 0..steps {
        let grid = schedule.grid_load_kw[t];
        let ev = schedule.ev_served_kw[t];
        let net = schedule.bes_net_kw[t];
        let dis = schedule.bes_discharge_kw[t];
        let ch = schedule.bes_charge_kw[t];
        let red = schedule.reduction_kw[t];
        let soc = schedule.soc[t];
        let m_dis = schedule.mode_discharge[t];
        let m_ch = schedule.mode_charge[t];

        let r = red - (forecast[t] - grid);
        if r.abs() > KW_TOL {
            push(ConstraintKind::ReductionBalance, t, r);
        }
        if red < min_reduction[t] - KW_TOL {
            push(ConstraintKind::MinimumReduction, t, red - min_reduction[t]);
        }
        if grid < -KW_TOL {
            push(ConstraintKind::GridNonNegative, t, grid);
        }
        let r = ev - (grid + net);
        if r.abs() > KW_TOL {
            push(ConstraintKind::PowerBalance, t, r);
        }
        let r = net - (dis - ch);
        if r.abs() > KW_TOL {
            push(ConstraintKind::NetSplit, t, r);
        }
        let dis_cap = bes.max_discharge_kw * f64::from(u8::from(m_dis));
        if dis < -KW_TOL || dis > dis_cap + KW_TOL {
            push(ConstraintKind::DischargeLimit, t, dis - dis_cap);
        }
        let ch_cap = bes.max_charge_kw * f64::from(u8::from(m_ch));
        if ch < -KW_TOL || ch > ch_cap + KW_TOL {
            push(ConstraintKind::ChargeLimit, t, ch - ch_cap);
        }
        if m_dis && m_ch {
            push(ConstraintKind::ModeExclusive, t, 1.0);
        }
        if bes.rated_capacity_kwh == 0.0 {
            if dis > KW_TOL || ch > KW_TOL {
                push(ConstraintKind::SocBalance, t, dis + ch);
            }
            if (soc - soc_prev).abs() > SOC_TOL {
                push(ConstraintKind::SocBalance, t, soc - soc_prev);
            }
        } else {
            let expected = soc_prev - bes.discharge_eff * dis * dt / bes.rated_capacity_kwh
                + bes.charge_eff * ch * dt / bes.rated_capacity_kwh;
            if (soc - expected).abs() > SOC_TOL {
                push(ConstraintKind::SocBalance, t, soc - expected);
            }
        }
        if soc < bes.soc_min - SOC_TOL || soc > bes.soc_max + SOC_TOL {
            let bound = if soc < bes.soc_min { bes.soc_min } else { bes.soc_max };
            push(ConstraintKind::SocBounds, t, soc - bound);
        }
        if ev < -KW_TOL || ev > forecast[t] + KW_TOL {
            let bound = if ev < 0.0 { 0.0 } else { forecast[t] };
            push(ConstraintKind::ServedBounds, t, ev - bound);
        }
        soc_prev = soc;
    }
    if let Some(floor) = bes.terminal_soc_min {
        if let Some(&last) = schedule.soc.last() {
            if last < floor - SOC_TOL {
                push(ConstraintKind::TerminalSoc, steps - 1, last - floor);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{
        BesSpec, ClockTime, EdrSignal, LoadForecast, PriceSeries, Scenario, StationConfig,
        TimeGrid,
    };
    use crate::milp::{solve_milp, MilpSolution};

    fn t(h: u32, m: u32) -> ClockTime {
        ClockTime::from_hm(h, m).unwrap()
    }

    fn scenario(steps: usize, forecast_kw: f64, min_reduction: f64) -> Scenario {
        let grid = TimeGrid::new(t(12, 0), steps as u32 * 15, 15).unwrap();
        let prices = PriceSeries::new(&grid, vec![0.10; steps]).unwrap();
        let forecast = LoadForecast::new(&grid, vec![forecast_kw; steps]).unwrap();
        let edr = EdrSignal::constant(&grid, 0.075, min_reduction, t(11, 0), 60).unwrap();
        let bes = BesSpec::new(400.0, 55.0, 50.0, 1.15, 0.85, 0.2, 0.85, 0.85).unwrap();
        let station = StationConfig::new(3.0).unwrap();
        Scenario::new(grid, prices, forecast, edr, bes, station).unwrap()
    }

    #[test]
    fn twenty_step_model_has_the_documented_shape() {
        let s = scenario(20, 300.0, 150.0);
        let milp = build_edr_milp(&s).unwrap();
        assert_eq!(milp.base.num_vars(), 160);
        assert_eq!(milp.binary_vars().len(), 40);
        assert_eq!(milp.base.num_vars() - milp.binary_vars().len(), 120);
    }

    #[test]
    fn one_step_model_has_a_single_block() {
        let s = scenario(1, 300.0, 150.0);
        let milp = build_edr_milp(&s).unwrap();
        assert_eq!(milp.base.num_vars(), 8);
        assert_eq!(milp.binary_vars().len(), 2);
    }

    #[test]
    fn impossible_reduction_requirement_is_infeasible() {
        let s = scenario(4, 100.0, 150.0);
        let milp = build_edr_milp(&s).unwrap();
        assert!(matches!(
            solve_milp(&milp).unwrap(),
            crate::milp::MilpOutcome::Infeasible { .. }
        ));
    }

    #[test]
    fn idle_battery_solution_extracts_flat_soc() {
        let mut s = scenario(4, 300.0, 150.0);
        s.bes.max_discharge_kw = 0.0;
        s.bes.max_charge_kw = 0.0;
        let milp = build_edr_milp(&s).unwrap();
        let out = solve_milp(&milp).unwrap();
        let sch = extract_schedule(&out, &s).unwrap();
        assert!(sch.bes_net_kw.iter().all(|&v| v == 0.0));
        assert!(sch.soc.iter().all(|&v| v == s.bes.initial_soc));
    }

    #[test]
    fn near_integral_modes_snap_cleanly() {
        let s = scenario(4, 300.0, 150.0);
        let milp = build_edr_milp(&s).unwrap();
        let out = solve_milp(&milp).unwrap();
        let mut sol: MilpSolution = out.optimal().unwrap().clone();
        let layout = VarLayout::new(4);
        for t in 0..4 {
            let j = layout.mode_discharge(t);
            sol.values[j] = if sol.values[j] > 0.5 { 1.0 - 1e-8 } else { 1e-8 };
        }
        let perturbed = crate::milp::MilpOutcome::Optimal(sol);
        let sch = extract_schedule(&perturbed, &s).unwrap();
        assert!(validate_schedule(&sch, &s).is_empty());
    }

    #[test]
    fn extraction_rejects_clearly_fractional_modes() {
        let s = scenario(2, 300.0, 150.0);
        let milp = build_edr_milp(&s).unwrap();
        let out = solve_milp(&milp).unwrap();
        let mut sol = out.optimal().unwrap().clone();
        sol.values[VarLayout::new(2).mode_discharge(0)] = 0.4;
        let bad = crate::milp::MilpOutcome::Optimal(sol);
        assert!(matches!(
            extract_schedule(&bad, &s),
            Err(FormulationError::Inconsistent(_))
        ));
    }

    fn pinned_minimum_schedule(s: &Scenario) -> Schedule {
        let steps = s.grid.steps();
        let grid: Vec<f64> = s
            .forecast
            .kw()
            .iter()
            .zip(s.edr.min_reduction_kw())
            .map(|(f, m)| f - m)
            .collect();
        Schedule {
            ev_served_kw: grid.clone(),
            grid_load_kw: grid,
            bes_net_kw: vec![0.0; steps],
            bes_discharge_kw: vec![0.0; steps],
            bes_charge_kw: vec![0.0; steps],
            mode_discharge: vec![false; steps],
            mode_charge: vec![false; steps],
            soc: vec![s.bes.initial_soc; steps],
            reduction_kw: s.edr.min_reduction_kw().to_vec(),
        }
    }

    #[test]
    fn pinned_minimum_reduction_earns_the_flat_incentive() {
        // 150 kW held for 5 h at 0.075 $/kWh pays $56.25.
        let s = scenario(20, 300.0, 150.0);
        let sch = pinned_minimum_schedule(&s);
        assert!(validate_schedule(&sch, &s).is_empty());
        let pb = profit_breakdown(&sch, &s);
        assert!((pb.edr_income - 56.25).abs() < 1e-3);
    }

    #[test]
    fn all_zero_schedule_earns_nothing() {
        let s = scenario(4, 300.0, 0.0);
        let sch = Schedule {
            grid_load_kw: vec![0.0; 4],
            ev_served_kw: vec![0.0; 4],
            bes_net_kw: vec![0.0; 4],
            bes_discharge_kw: vec![0.0; 4],
            bes_charge_kw: vec![0.0; 4],
            mode_discharge: vec![false; 4],
            mode_charge: vec![false; 4],
            soc: vec![s.bes.initial_soc; 4],
            reduction_kw: vec![0.0; 4],
        };
        let pb = profit_breakdown(&sch, &s);
        assert_eq!(
            (pb.ev_income, pb.edr_income, pb.grid_cost, pb.total()),
            (0.0, 0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn flat_price_accounting_matches_hand_sums() {
        // 100 kW served from the grid for 4 quarter-hour steps at
        // 0.10 $/kWh grid price and 3x retail.
        let s = scenario(4, 100.0, 0.0);
        let sch = Schedule {
            grid_load_kw: vec![100.0; 4],
            ev_served_kw: vec![100.0; 4],
            bes_net_kw: vec![0.0; 4],
            bes_discharge_kw: vec![0.0; 4],
            bes_charge_kw: vec![0.0; 4],
            mode_discharge: vec![false; 4],
            mode_charge: vec![false; 4],
            soc: vec![s.bes.initial_soc; 4],
            reduction_kw: vec![0.0; 4],
        };
        let pb = profit_breakdown(&sch, &s);
        assert!((pb.ev_income - 30.0).abs() < 1e-9);
        assert!((pb.grid_cost - 10.0).abs() < 1e-9);
        assert!((pb.total() - 20.0).abs() < 1e-9);
    }

    #[test]
    fn injected_soc_excursion_is_flagged_at_its_step() {
        let s = scenario(6, 300.0, 150.0);
        let mut sch = pinned_minimum_schedule(&s);
        sch.soc[3] = s.bes.soc_max + 0.01;
        let violations = validate_schedule(&sch, &s);
        assert!(violations
            .iter()
            .any(|v| v.constraint == ConstraintKind::SocBounds && v.step == 3));
        // The bumped SOC also breaks the balance into and out of step 3.
        assert!(violations
            .iter()
            .any(|v| v.constraint == ConstraintKind::SocBalance));
    }

    #[test]
    fn simultaneous_modes_are_flagged() {
        let s = scenario(4, 300.0, 150.0);
        let mut sch = pinned_minimum_schedule(&s);
        sch.bes_discharge_kw[1] = 10.0;
        sch.bes_charge_kw[1] = 10.0;
        sch.mode_discharge[1] = true;
        sch.mode_charge[1] = true;
        let violations = validate_schedule(&sch, &s);
        assert!(violations
            .iter()
            .any(|v| v.constraint == ConstraintKind::ModeExclusive && v.step == 1));
    }

    #[test]
    fn solver_schedules_pass_the_audit() {
        let s = scenario(6, 250.0, 100.0);
        let milp = build_edr_milp(&s).unwrap();
        let out = solve_milp(&milp).unwrap();
        let sch = extract_schedule(&out, &s).unwrap();
        assert!(validate_schedule(&sch, &s).is_empty());
        // Accounting agrees with the solver objective.
        let pb = profit_breakdown(&sch, &s);
        let obj = out.optimal().unwrap().objective;
        assert!(
            (pb.total() - obj).abs() <= 1e-6,
            "objective {obj} vs accounting {}",
            pb.total()
        );
    }
}
