//! Independent brute-force verifiers for the dispatch MILP.
//!
//! [`dp_profit`] runs backward value iteration over a discretized SOC
//! lattice with battery actions drawn from a power lattice; for each
//! action the stage-optimal grid draw falls out in closed form because
//! the stage profit is linear in it. [`zero_bes_profit`] is the exact
//! closed form of the model once the battery terms vanish: the steps
//! decouple and each picks an interval endpoint by the sign of one
//! coefficient.
//!
//! These exist for correctness, not speed: cost grows with
//! `steps x soc cells x power levels`, which is fine for the short
//! windows they are meant to check.

use thiserror::Error;

use crate::domain::Scenario;

/// Lattice densities for the value iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpConfig {
    /// SOC fraction per lattice cell.
    pub soc_grid_resolution: f64,
    /// kW per battery action level.
    pub power_grid_resolution: f64,
}

impl DpConfig {
    pub fn new(soc_grid_resolution: f64, power_grid_resolution: f64) -> Result<Self, OracleError> {
        if !(soc_grid_resolution > 0.0 && soc_grid_resolution.is_finite()) {
            return Err(OracleError::BadResolution {
                which: "soc_grid_resolution",
                value: soc_grid_resolution,
            });
        }
        if !(power_grid_resolution > 0.0 && power_grid_resolution.is_finite()) {
            return Err(OracleError::BadResolution {
                which: "power_grid_resolution",
                value: power_grid_resolution,
            });
        }
        Ok(DpConfig {
            soc_grid_resolution,
            power_grid_resolution,
        })
    }
}

impl Default for DpConfig {
    fn default() -> Self {
        DpConfig {
            soc_grid_resolution: 0.005,
            power_grid_resolution: 0.5,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("{which} = {value} must be a positive finite number")]
    BadResolution { which: &'static str, value: f64 },
    #[error(
        "the SOC lattice is too coarse: no feasible transition chain exists although \
         the continuous model is feasible"
    )]
    ResolutionTooCoarse,
}

/// Oracle verdict on a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DpOutcome {
    /// Best total window profit found.
    Profit(f64),
    /// No dispatch satisfies the reduction requirement.
    Infeasible,
}

impl DpOutcome {
    pub fn profit(&self) -> Option<f64> {
        match self {
            DpOutcome::Profit(p) => Some(*p),
            DpOutcome::Infeasible => None,
        }
    }
}

/// Best stage profit at step `t` for a fixed battery net flow, or None
/// when no feasible grid draw exists for that flow.
///
/// With `net` fixed, profit is linear in the grid draw `g` over
/// `[max(0, -net), min(fore - min_reduction, fore - net)]`, so the
/// optimum sits at whichever endpoint the margin coefficient selects.
fn stage_profit_given_net(scenario: &Scenario, t: usize, net: f64) -> Option<f64> {
    let dt = scenario.grid.step_hours();
    let fore = scenario.forecast.kw()[t];
    let min_reduction = scenario.edr.min_reduction_kw()[t];
    let rho_grid = scenario.prices.per_kwh()[t];
    let rho_ev = scenario.station.ev_price_multiplier * rho_grid;
    let rho_edr = scenario.edr.incentive_per_kwh()[t];

    let lo = (-net).max(0.0);
    let hi = (fore - min_reduction).min(fore - net);
    if hi < lo {
        return None;
    }
    let coef = rho_ev - rho_edr - rho_grid;
    let g = if coef > 0.0 { hi } else { lo };
    Some(dt * (coef * g + rho_ev * net + rho_edr * fore))
}

/// Exact optimal profit when the battery contributes nothing.
///
/// Also covers a terminal-SOC floor: with the battery inert the SOC
/// stays at its initial value, so a floor above it is infeasible.
pub fn zero_bes_profit(scenario: &Scenario) -> DpOutcome {
    if let Some(floor) = scenario.bes.terminal_soc_min {
        if floor > scenario.bes.initial_soc + 1e-12 {
            return DpOutcome::Infeasible;
        }
    }
    let steps = scenario.grid.steps();
    let mut stages = Vec::with_capacity(steps);
    for t in 0..steps {
        match stage_profit_given_net(scenario, t, 0.0) {
            Some(p) => stages.push(p),
            None => return DpOutcome::Infeasible,
        }
    }
    // Right fold, matching the backward accumulation of the value
    // iteration bit for bit.
    DpOutcome::Profit(stages.iter().rev().fold(0.0, |acc, &p| p + acc))
}

/// Battery action: signed net output in kW (positive discharges).
#[derive(Debug, Clone, Copy)]
struct Action {
    net_kw: f64,
    soc_delta: f64,
}

fn power_levels(max_kw: f64, resolution: f64) -> Vec<f64> {
    let mut levels = Vec::new();
    if max_kw <= 0.0 {
        return levels;
    }
    let mut k = 1u32;
    loop {
        let p = f64::from(k) * resolution;
        if p >= max_kw {
            break;
        }
        levels.push(p);
        k += 1;
    }
    levels.push(max_kw);
    levels
}

/// Approximate optimal window profit by value iteration over a SOC
/// lattice.
///
/// Transitions are computed exactly from the lattice state, must stay
/// inside the SOC band, and are then rounded to the nearest cell; an
/// action whose rounding error would exceed half a cell is discarded,
/// which keeps every scored policy feasible up to half a cell of SOC.
pub fn dp_profit(scenario: &Scenario, config: &DpConfig) -> Result<DpOutcome, OracleError> {
    DpConfig::new(config.soc_grid_resolution, config.power_grid_resolution)?;
    let steps = scenario.grid.steps();
    let bes = &scenario.bes;
    let dt = scenario.grid.step_hours();

    // SOC lattice spanning [soc_min, soc_max] inclusive.
    let res = config.soc_grid_resolution;
    let span = bes.soc_max - bes.soc_min;
    let cells = (span / res).floor() as usize;
    let mut lattice: Vec<f64> = (0..=cells).map(|i| bes.soc_min + i as f64 * res).collect();
    if *lattice.last().unwrap() < bes.soc_max - 1e-12 {
        lattice.push(bes.soc_max);
    }
    let half_cell = res / 2.0;

    let round_to_lattice = |exact: f64| -> Option<usize> {
        if exact < bes.soc_min - 1e-12 || exact > bes.soc_max + 1e-12 {
            return None;
        }
        let i = ((exact - bes.soc_min) / res).round() as usize;
        let i = i.min(lattice.len() - 1);
        let nearest = if i + 1 < lattice.len()
            && (lattice[i + 1] - exact).abs() < (lattice[i] - exact).abs()
        {
            i + 1
        } else {
            i
        };
        ((lattice[nearest] - exact).abs() <= half_cell + 1e-12).then_some(nearest)
    };

    // Battery actions: idle, then lattice discharge and charge levels.
    let mut actions = vec![Action {
        net_kw: 0.0,
        soc_delta: 0.0,
    }];
    if bes.rated_capacity_kwh > 0.0 {
        for p in power_levels(bes.max_discharge_kw, config.power_grid_resolution) {
            actions.push(Action {
                net_kw: p,
                soc_delta: -bes.discharge_eff * p * dt / bes.rated_capacity_kwh,
            });
        }
        for p in power_levels(bes.max_charge_kw, config.power_grid_resolution) {
            actions.push(Action {
                net_kw: -p,
                soc_delta: bes.charge_eff * p * dt / bes.rated_capacity_kwh,
            });
        }
    }

    let terminal_floor = bes.terminal_soc_min.unwrap_or(bes.soc_min);

    // value[i] = best profit from the start of step t at lattice[i].
    // The backward sweep stops at step 1; step 0 runs forward from the
    // exact initial SOC, which need not sit on the lattice.
    let mut value = vec![0.0_f64; lattice.len()];
    for t in (1..steps).rev() {
        let stage: Vec<Option<f64>> = actions
            .iter()
            .map(|a| stage_profit_given_net(scenario, t, a.net_kw))
            .collect();
        let last_step = t + 1 == steps;
        let mut next = vec![f64::NEG_INFINITY; lattice.len()];
        for (i, &soc) in lattice.iter().enumerate() {
            let mut best = f64::NEG_INFINITY;
            for (a, profit) in actions.iter().zip(&stage) {
                let Some(profit) = profit else { continue };
                let exact = soc + a.soc_delta;
                if last_step && exact < terminal_floor - 1e-12 {
                    continue;
                }
                let Some(cell) = round_to_lattice(exact) else {
                    continue;
                };
                let tail = value[cell];
                if tail == f64::NEG_INFINITY {
                    continue;
                }
                let total = profit + tail;
                if total > best {
                    best = total;
                }
            }
            next[i] = best;
        }
        value = next;
    }

    // One forward evaluation from the exact initial SOC; from step 1 on
    // the state lives on the lattice. `value` holds the start-of-step-1
    // values (all zero when the window has a single step).
    let mut best = f64::NEG_INFINITY;
    let last_step = steps == 1;
    for a in &actions {
        let Some(profit) = stage_profit_given_net(scenario, 0, a.net_kw) else {
            continue;
        };
        let exact = bes.initial_soc + a.soc_delta;
        if last_step && exact < terminal_floor - 1e-12 {
            continue;
        }
        let Some(cell) = round_to_lattice(exact) else {
            continue;
        };
        let tail = value[cell];
        if tail == f64::NEG_INFINITY {
            continue;
        }
        let total = profit + tail;
        if total > best {
            best = total;
        }
    }

    if best > f64::NEG_INFINITY {
        return Ok(DpOutcome::Profit(best));
    }

    // Nothing was reachable: decide whether the model itself is
    // infeasible or the lattice is at fault.
    let reduction_possible = scenario
        .forecast
        .kw()
        .iter()
        .zip(scenario.edr.min_reduction_kw())
        .all(|(f, m)| m <= f);
    if !reduction_possible {
        return Ok(DpOutcome::Infeasible);
    }
    let max_gain = if bes.rated_capacity_kwh > 0.0 {
        bes.charge_eff * bes.max_charge_kw * dt / bes.rated_capacity_kwh * steps as f64
    } else {
        0.0
    };
    let reachable_terminal = (bes.initial_soc + max_gain).min(bes.soc_max);
    if reachable_terminal >= terminal_floor - 1e-12 {
        Err(OracleError::ResolutionTooCoarse)
    } else {
        Ok(DpOutcome::Infeasible)
    }
}
