//! Decision engine for a battery-assisted EV charging station that must
//! choose whether to participate in an emergency demand response (EDR)
//! event.
//!
//! When the grid operator announces an event it sends the station a
//! minimum load-reduction signal and an incentive price. Participation
//! means curtailing grid draw below the forecast baseline for the whole
//! event window; the station battery can backfill some of the curtailed
//! EV charging. The engine builds the profit-maximizing dispatch as a
//! mixed-integer linear program, solves it exactly with the built-in
//! branch-and-bound solver, and compares the optimal event profit
//! against the no-participation baseline.
//!
//! Module map:
//! - [`domain`] — scenario types, units, and the discrete time grid
//! - [`lp`] — bounded-variable primal simplex solver
//! - [`milp`] — exact 0/1 branch-and-bound on top of [`lp`]
//! - [`formulation`] — scenario → MILP translation, schedule extraction
//!   and auditing
//! - [`decision`] — participation decision and battery capacity sweeps
//! - [`oracle`] — independent brute-force verifiers (SOC-lattice dynamic
//!   programming and the zero-battery closed form)

pub mod decision;
pub mod domain;
pub mod formulation;
pub mod lp;
pub mod milp;
pub mod oracle;

pub use decision::{
    capacity_sweep, capacity_sweep_seq, decide, profit_without_edr, Decision, DecisionError,
    DecisionReason,
};
pub use domain::{
    ev_price, price_per_kwh, BesSpec, ClockTime, DomainError, EdrSignal, LoadForecast,
    PriceSeries, Scenario, StationConfig, TimeGrid,
};
pub use formulation::{
    build_edr_milp, extract_schedule, profit_breakdown, validate_schedule, FormulationError,
    ProfitBreakdown, Schedule, Violation,
};
pub use lp::{solve_lp, LpOutcome, LpProblem, LpSolution, Relation, Sense, SolveError};
pub use milp::{solve_milp, MilpError, MilpOutcome, MilpProblem, MilpSolution};
pub use oracle::{dp_profit, zero_bes_profit, DpConfig, DpOutcome, OracleError};
