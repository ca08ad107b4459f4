//! Shared scenario builders and seeded instance generators for the
//! integration suites.

#![allow(dead_code)]

use edr_core::{
    BesSpec, ClockTime, EdrSignal, LoadForecast, PriceSeries, Scenario, StationConfig, TimeGrid,
};
use rand::Rng;

pub fn clock(h: u32, m: u32) -> ClockTime {
    ClockTime::from_hm(h, m).unwrap()
}

/// Battery from the reference parameter block, uniformly scaled.
pub fn scaled_bes(scale: f64, initial_soc: f64) -> BesSpec {
    BesSpec::new(
        400.0 * scale,
        55.0 * scale,
        50.0 * scale,
        1.15,
        0.85,
        0.2,
        0.85,
        initial_soc,
    )
    .unwrap()
}

pub fn zero_bes() -> BesSpec {
    BesSpec::new(0.0, 0.0, 0.0, 1.15, 0.85, 0.2, 0.85, 0.85).unwrap()
}

/// Scenario over `steps` quarter-hour intervals starting at noon.
pub fn scenario_from_series(
    prices_per_kwh: Vec<f64>,
    forecast_kw: Vec<f64>,
    incentive_per_kwh: Vec<f64>,
    min_reduction_kw: Vec<f64>,
    bes: BesSpec,
) -> Scenario {
    let steps = prices_per_kwh.len();
    let grid = TimeGrid::new(clock(12, 0), steps as u32 * 15, 15).unwrap();
    Scenario::new(
        grid,
        PriceSeries::new(&grid, prices_per_kwh).unwrap(),
        LoadForecast::new(&grid, forecast_kw).unwrap(),
        EdrSignal::new(
            &grid,
            incentive_per_kwh,
            min_reduction_kw,
            clock(11, 0),
            60,
        )
        .unwrap(),
        bes,
        StationConfig::new(3.0).unwrap(),
    )
    .unwrap()
}

pub fn flat_scenario(
    steps: usize,
    grid_price: f64,
    incentive: f64,
    forecast: f64,
    min_reduction: f64,
    bes: BesSpec,
) -> Scenario {
    scenario_from_series(
        vec![grid_price; steps],
        vec![forecast; steps],
        vec![incentive; steps],
        vec![min_reduction; steps],
        bes,
    )
}

/// Short window, battery scaled down, high starting charge: the
/// regime where the SOC lattice oracle tracks the exact optimum, since
/// the discharge is power-capped rather than energy-capped and the
/// minimum reduction lands on the power lattice.
pub fn gen_small_bes_instance(rng: &mut impl Rng) -> Scenario {
    let steps = rng.gen_range(3..=6);
    let scale = rng.gen_range(0.1..0.3);
    let initial = rng.gen_range(0.6..0.85);
    let forecast: Vec<f64> = (0..steps)
        .map(|_| (rng.gen_range(100.0..350.0_f64) * 10.0).round() / 10.0)
        .collect();
    let prices: Vec<f64> = (0..steps)
        .map(|_| (rng.gen_range(0.06..0.13_f64) * 1000.0).round() / 1000.0)
        .collect();
    let incentive = (rng.gen_range(0.0..0.25_f64) * 1000.0).round() / 1000.0;
    let min_fore = forecast.iter().cloned().fold(f64::INFINITY, f64::min);
    let min_reduction = (rng.gen_range(0.0..0.6) * min_fore).floor();
    scenario_from_series(
        prices,
        forecast,
        vec![incentive; steps],
        vec![min_reduction; steps],
        scaled_bes(scale, initial),
    )
}

/// Random feasible scenario with no battery at all.
pub fn gen_zero_bes_instance(rng: &mut impl Rng) -> Scenario {
    let steps = rng.gen_range(4..=20);
    let forecast: Vec<f64> = (0..steps).map(|_| rng.gen_range(50.0..400.0)).collect();
    let prices: Vec<f64> = (0..steps).map(|_| rng.gen_range(0.03..0.15)).collect();
    let incentive: Vec<f64> = (0..steps).map(|_| rng.gen_range(0.0..0.3)).collect();
    let min_reduction: Vec<f64> = forecast
        .iter()
        .map(|&f| rng.gen_range(0.0..0.95) * f)
        .collect();
    scenario_from_series(prices, forecast, incentive, min_reduction, zero_bes())
}

/// Mid-sized instance with a usable battery, for the monotonicity and
/// scaling suites.
pub fn gen_moderate_instance(rng: &mut impl Rng) -> Scenario {
    let steps = rng.gen_range(6..=8);
    let scale = rng.gen_range(0.15..0.35);
    let initial = rng.gen_range(0.4..0.85);
    let forecast: Vec<f64> = (0..steps).map(|_| rng.gen_range(120.0..320.0)).collect();
    let prices: Vec<f64> = (0..steps).map(|_| rng.gen_range(0.05..0.13)).collect();
    let incentive: Vec<f64> = (0..steps).map(|_| rng.gen_range(0.0..0.28)).collect();
    let min_fore = forecast.iter().cloned().fold(f64::INFINITY, f64::min);
    let min_reduction = rng.gen_range(0.0..0.7) * min_fore;
    scenario_from_series(
        prices,
        forecast,
        incentive,
        vec![min_reduction; steps],
        scaled_bes(scale, initial),
    )
}
