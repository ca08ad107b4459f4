//! Participation decision: solve the event dispatch, price the
//! no-participation baseline, compare.
//!
//! The baseline serves the full forecast from the grid with the battery
//! idle, so its profit is `(K_EV - 1) * sum(rho_grid * forecast * dt)`.
//! Participation wins only when the optimal event profit beats that
//! baseline by more than [`DECISION_EPS`]; ties stay out.

use thiserror::Error;

use crate::domain::{DomainError, Scenario};
use crate::formulation::{
    build_edr_milp, extract_schedule, profit_breakdown, FormulationError, ProfitBreakdown,
    Schedule,
};
use crate::milp::{solve_milp_with, MilpError, MilpOptions, MilpOutcome};

/// Profit margin required before participation is declared.
pub const DECISION_EPS: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum DecisionError {
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error(transparent)]
    Solver(#[from] MilpError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("capacity sweep needs at least one capacity")]
    EmptyCapacities,
    #[error("the scenario admits no feasible dispatch, so the sweep has no profits to report")]
    InfeasibleScenario,
}

/// Why the decision came out the way it did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecisionReason {
    ProfitHigher,
    ProfitNotHigher,
    Infeasible,
}

/// Solved event dispatch attached to a participating (or merely
/// solvable) decision.
#[derive(Debug, Clone)]
pub struct EdrSolveDetail {
    pub c_edr: f64,
    pub breakdown: ProfitBreakdown,
    pub schedule: Schedule,
    pub nodes_explored: u64,
    pub proven_gap: f64,
}

/// Outcome of the participation comparison.
#[derive(Debug, Clone)]
pub struct Decision {
    pub participate: bool,
    pub reason: DecisionReason,
    pub c_non_edr: f64,
    pub breakdown_without_edr: ProfitBreakdown,
    /// Present whenever the event dispatch was solvable.
    pub with_edr: Option<EdrSolveDetail>,
}

impl Decision {
    pub fn c_edr(&self) -> Option<f64> {
        self.with_edr.as_ref().map(|d| d.c_edr)
    }
}

/// Baseline profit with no event: the full forecast is served from the
/// grid and the battery never moves. Income is exactly `K_EV` times the
/// energy cost, which pins the profit at `(K_EV - 1)` times that cost.
pub fn profit_without_edr(scenario: &Scenario) -> ProfitBreakdown {
    let dt = scenario.grid.step_hours();
    let k = scenario.station.ev_price_multiplier;
    let mut out = ProfitBreakdown::ZERO;
    for (price, fore) in scenario
        .prices
        .per_kwh()
        .iter()
        .zip(scenario.forecast.kw())
    {
        out.ev_income += k * price * fore * dt;
        out.grid_cost += price * fore * dt;
    }
    out
}

/// Solve the event dispatch to optimality; `None` when infeasible.
///
/// The incumbent is seeded with the battery-idle pattern, which is
/// feasible whenever the scenario is and prunes most of the tree.
fn solve_event(scenario: &Scenario) -> Result<Option<EdrSolveDetail>, DecisionError> {
    let milp = build_edr_milp(scenario)?;
    let options = MilpOptions {
        warm_binaries: Some(vec![0; milp.binary_vars().len()]),
        ..MilpOptions::default()
    };
    let outcome = solve_milp_with(&milp, &options)?;
    match &outcome {
        MilpOutcome::Infeasible { .. } => Ok(None),
        MilpOutcome::Optimal(sol) => {
            let schedule = extract_schedule(&outcome, scenario)?;
            let breakdown = profit_breakdown(&schedule, scenario);
            Ok(Some(EdrSolveDetail {
                c_edr: breakdown.total(),
                breakdown,
                schedule,
                nodes_explored: sol.nodes_explored,
                proven_gap: sol.proven_gap,
            }))
        }
    }
}

/// Full participation decision for one scenario.
pub fn decide(scenario: &Scenario) -> Result<Decision, DecisionError> {
    let breakdown_without_edr = profit_without_edr(scenario);
    let c_non_edr = breakdown_without_edr.total();
    match solve_event(scenario)? {
        None => Ok(Decision {
            participate: false,
            reason: DecisionReason::Infeasible,
            c_non_edr,
            breakdown_without_edr,
            with_edr: None,
        }),
        Some(detail) => {
            let participate = detail.c_edr > c_non_edr + DECISION_EPS;
            Ok(Decision {
                participate,
                reason: if participate {
                    DecisionReason::ProfitHigher
                } else {
                    DecisionReason::ProfitNotHigher
                },
                c_non_edr,
                breakdown_without_edr,
                with_edr: Some(detail),
            })
        }
    }
}

fn sweep_point(scenario: &Scenario, capacity_kwh: f64) -> Result<(f64, f64), DecisionError> {
    let varied = scenario.with_rated_capacity(capacity_kwh)?;
    match solve_event(&varied)? {
        Some(detail) => Ok((capacity_kwh, detail.c_edr)),
        None => Err(DecisionError::InfeasibleScenario),
    }
}

/// Event profit per battery capacity, power limits and SOC fractions
/// held fixed. Results come back in input order.
///
/// With the `parallel` feature the capacities are solved across a
/// thread pool; the sequential path produces identical numbers.
pub fn capacity_sweep(
    scenario: &Scenario,
    capacities: &[f64],
) -> Result<Vec<(f64, f64)>, DecisionError> {
    if capacities.is_empty() {
        return Err(DecisionError::EmptyCapacities);
    }
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        capacities
            .par_iter()
            .map(|&cap| sweep_point(scenario, cap))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        capacity_sweep_seq(scenario, capacities)
    }
}

/// Single-threaded sweep; the reference the parallel path is benched
/// against.
pub fn capacity_sweep_seq(
    scenario: &Scenario,
    capacities: &[f64],
) -> Result<Vec<(f64, f64)>, DecisionError> {
    if capacities.is_empty() {
        return Err(DecisionError::EmptyCapacities);
    }
    capacities
        .iter()
        .map(|&cap| sweep_point(scenario, cap))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{
        BesSpec, ClockTime, EdrSignal, LoadForecast, PriceSeries, StationConfig, TimeGrid,
    };
    use crate::oracle::{dp_profit, zero_bes_profit, DpConfig};

    fn t(h: u32, m: u32) -> ClockTime {
        ClockTime::from_hm(h, m).unwrap()
    }

    fn table_bes() -> BesSpec {
        BesSpec::new(400.0, 55.0, 50.0, 1.15, 0.85, 0.2, 0.85, 0.85).unwrap()
    }

    fn flat_scenario(grid_price: f64, incentive: f64, forecast: f64, min_red: f64) -> Scenario {
        let grid = TimeGrid::from_hours(t(12, 0), 5, 15).unwrap();
        let steps = grid.steps();
        Scenario::new(
            grid,
            PriceSeries::new(&grid, vec![grid_price; steps]).unwrap(),
            LoadForecast::new(&grid, vec![forecast; steps]).unwrap(),
            EdrSignal::constant(&grid, incentive, min_red, t(11, 0), 60).unwrap(),
            table_bes(),
            StationConfig::new(3.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn baseline_income_is_exactly_k_times_cost() {
        let s = flat_scenario(0.10, 0.075, 200.0, 150.0);
        let b = profit_without_edr(&s);
        assert!((b.ev_income / b.grid_cost - 3.0).abs() < 1e-12);
        assert_eq!(b.edr_income, 0.0);
    }

    #[test]
    fn flat_baseline_matches_hand_arithmetic() {
        // (3 - 1) * 0.10 $/kWh * 200 kW * 5 h = $200.
        let s = flat_scenario(0.10, 0.075, 200.0, 150.0);
        let b = profit_without_edr(&s);
        assert!((b.total() - 200.0).abs() < 1e-9);
    }

    #[test]
    fn zero_forecast_baseline_is_zero() {
        let s = flat_scenario(0.10, 0.075, 0.0, 0.0);
        assert_eq!(profit_without_edr(&s).total(), 0.0);
    }

    #[test]
    fn baseline_ignores_the_battery_entirely() {
        let mut a = flat_scenario(0.10, 0.075, 200.0, 150.0);
        let b = profit_without_edr(&a);
        a.bes = BesSpec::new(800.0, 200.0, 200.0, 1.3, 0.7, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(profit_without_edr(&a), b);
    }

    #[test]
    fn dominant_incentive_wins_participation() {
        // incentive 0.30 >= (K-1)*0.08 = 0.16 everywhere, strict, and
        // the forecast clears the minimum reduction.
        let s = flat_scenario(0.08, 0.30, 200.0, 150.0);
        let d = decide(&s).unwrap();
        assert!(d.participate);
        assert_eq!(d.reason, DecisionReason::ProfitHigher);
        // The all-curtailed point already beats the baseline, and the
        // optimum can only improve on it.
        let all_curtailed = 0.30 * 200.0 * 5.0;
        assert!(d.c_edr().unwrap() >= all_curtailed - 1e-6);
        assert!(all_curtailed >= d.c_non_edr);
    }

    #[test]
    fn zero_incentive_with_binding_curtailment_declines() {
        let s = flat_scenario(0.10, 0.0, 200.0, 150.0);
        let d = decide(&s).unwrap();
        assert!(!d.participate);
        assert_eq!(d.reason, DecisionReason::ProfitNotHigher);
        // The SOC-lattice oracle agrees the event cannot pay. Its value
        // can sit above the true optimum by at most the worth of half a
        // SOC cell per step (nearest-cell rounding), which bounds the
        // band used here.
        let cfg = DpConfig::default();
        let dp = dp_profit(&s, &cfg).unwrap().profit().unwrap();
        assert!(dp < d.c_non_edr);
        let cell_value = 0.5 * cfg.soc_grid_resolution * s.bes.rated_capacity_kwh * 0.30
            / s.bes.discharge_eff;
        let band = s.grid.steps() as f64 * cell_value + 0.005 * dp.abs();
        assert!((dp - d.c_edr().unwrap()).abs() <= band);
    }

    #[test]
    fn impossible_reduction_reports_infeasible() {
        let s = flat_scenario(0.10, 0.075, 100.0, 150.0);
        let d = decide(&s).unwrap();
        assert!(!d.participate);
        assert_eq!(d.reason, DecisionReason::Infeasible);
        assert!(d.with_edr.is_none());
    }

    #[test]
    fn singleton_sweep_matches_decide() {
        let s = flat_scenario(0.08, 0.30, 200.0, 150.0);
        let sweep = capacity_sweep(&s, &[400.0]).unwrap();
        let d = decide(&s).unwrap();
        assert_eq!(sweep.len(), 1);
        assert_eq!(sweep[0].0, 400.0);
        assert!((sweep[0].1 - d.c_edr().unwrap()).abs() < 1e-9);
    }

    #[test]
    fn zero_capacity_sweep_matches_the_closed_form() {
        let s = flat_scenario(0.08, 0.30, 200.0, 150.0);
        let sweep = capacity_sweep(&s, &[0.0]).unwrap();
        let closed = zero_bes_profit(&s.with_rated_capacity(0.0).unwrap())
            .profit()
            .unwrap();
        assert!((sweep[0].1 - closed).abs() < 1e-6);
    }

    #[test]
    fn sweep_preserves_input_order_without_sorting() {
        let s = flat_scenario(0.08, 0.30, 200.0, 150.0);
        let caps = [400.0, 0.0, 160.0];
        let rows = capacity_sweep(&s, &caps).unwrap();
        let order: Vec<f64> = rows.iter().map(|r| r.0).collect();
        assert_eq!(order, caps);
    }

    #[test]
    fn empty_sweep_is_an_error() {
        let s = flat_scenario(0.08, 0.30, 200.0, 150.0);
        assert!(matches!(
            capacity_sweep(&s, &[]),
            Err(DecisionError::EmptyCapacities)
        ));
    }

    #[test]
    fn parallel_and_sequential_sweeps_agree_bitwise() {
        let s = flat_scenario(0.08, 0.30, 200.0, 150.0);
        let caps = [0.0, 80.0, 400.0];
        let par = capacity_sweep(&s, &caps).unwrap();
        let seq = capacity_sweep_seq(&s, &caps).unwrap();
        for (a, b) in par.iter().zip(&seq) {
            assert_eq!(a.0, b.0);
            assert_eq!(a.1.to_bits(), b.1.to_bits());
        }
    }
}
