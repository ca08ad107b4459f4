//! Economic sanity of the decision layer: monotone responses to
//! incentive, capacity, and requirement changes; exact scale
//! invariance; and domination of the pinned-minimum fallback point.

mod common;

use common::gen_moderate_instance;
use edr_core::{
    decide, profit_without_edr, EdrSignal, LoadForecast, PriceSeries, Scenario,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Solves may each sit up to the proven-gap tolerance under the true
/// optimum, so monotone comparisons carry that slack.
const MONO_SLACK: f64 = 1e-6;

fn c_edr(s: &Scenario) -> Option<f64> {
    decide(s).unwrap().c_edr()
}

fn with_incentive(s: &Scenario, incentive: Vec<f64>) -> Scenario {
    let edr = EdrSignal::new(
        &s.grid,
        incentive,
        s.edr.min_reduction_kw().to_vec(),
        s.edr.notification(),
        s.edr.decision_window_min(),
    )
    .unwrap();
    Scenario::new(
        s.grid,
        s.prices.clone(),
        s.forecast.clone(),
        edr,
        s.bes.clone(),
        s.station.clone(),
    )
    .unwrap()
}

fn with_min_reduction(s: &Scenario, min_reduction: Vec<f64>) -> Scenario {
    let edr = EdrSignal::new(
        &s.grid,
        s.edr.incentive_per_kwh().to_vec(),
        min_reduction,
        s.edr.notification(),
        s.edr.decision_window_min(),
    )
    .unwrap();
    Scenario::new(
        s.grid,
        s.prices.clone(),
        s.forecast.clone(),
        edr,
        s.bes.clone(),
        s.station.clone(),
    )
    .unwrap()
}

#[test]
fn raising_the_incentive_never_lowers_event_profit() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for case in 0..10 {
        let s = gen_moderate_instance(&mut rng);
        let Some(base) = c_edr(&s) else { continue };
        let bumped: Vec<f64> = s
            .edr
            .incentive_per_kwh()
            .iter()
            .map(|v| v + rng.gen_range(0.0..0.1))
            .collect();
        let raised = c_edr(&with_incentive(&s, bumped)).unwrap();
        assert!(
            raised >= base - MONO_SLACK,
            "case {case}: {raised} < {base}"
        );
    }
}

#[test]
fn growing_the_battery_never_lowers_event_profit() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for case in 0..10 {
        let s = gen_moderate_instance(&mut rng);
        let Some(base) = c_edr(&s) else { continue };
        let bigger = s
            .with_rated_capacity(s.bes.rated_capacity_kwh * rng.gen_range(1.0..2.5))
            .unwrap();
        let grown = c_edr(&bigger).unwrap();
        assert!(grown >= base - MONO_SLACK, "case {case}: {grown} < {base}");
    }
}

#[test]
fn tightening_the_reduction_requirement_never_raises_profit() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for case in 0..10 {
        let s = gen_moderate_instance(&mut rng);
        let Some(base) = c_edr(&s) else { continue };
        // Push each step's requirement part of the way toward its
        // forecast so the scenario stays feasible.
        let tightened: Vec<f64> = s
            .edr
            .min_reduction_kw()
            .iter()
            .zip(s.forecast.kw())
            .map(|(&m, &f)| m + rng.gen_range(0.0..0.9) * (f - m).max(0.0) * 0.9)
            .collect();
        let tighter = c_edr(&with_min_reduction(&s, tightened)).unwrap();
        assert!(
            tighter <= base + MONO_SLACK,
            "case {case}: {tighter} > {base}"
        );
    }
}

#[test]
fn event_profit_dominates_the_pinned_minimum_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    for case in 0..10 {
        let s = gen_moderate_instance(&mut rng);
        let feasible = s
            .forecast
            .kw()
            .iter()
            .zip(s.edr.min_reduction_kw())
            .all(|(f, m)| m <= f);
        if !feasible {
            continue;
        }
        let Some(best) = c_edr(&s) else { continue };
        // Pinned-minimum fallback: hold the reduction at the signal,
        // battery idle.
        let dt = s.grid.step_hours();
        let k = s.station.ev_price_multiplier;
        let mut pinned = 0.0;
        for t in 0..s.grid.steps() {
            let g = s.forecast.kw()[t] - s.edr.min_reduction_kw()[t];
            pinned += dt
                * (k * s.prices.per_kwh()[t] * g
                    + s.edr.incentive_per_kwh()[t] * s.edr.min_reduction_kw()[t]
                    - s.prices.per_kwh()[t] * g);
        }
        assert!(best >= pinned - MONO_SLACK, "case {case}: {best} < {pinned}");
    }
}

#[test]
fn price_scaling_scales_profits_and_keeps_the_decision() {
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    for case in 0..6 {
        let s = gen_moderate_instance(&mut rng);
        let d = decide(&s).unwrap();
        let Some(c_event) = d.c_edr() else { continue };
        // Skip near-ties: an absolute decision margin cannot survive
        // arbitrary rescaling, and the contract only covers clear calls.
        if (c_event - d.c_non_edr).abs() < 1e-3 {
            continue;
        }
        for lambda in [0.5, 2.0, 10.0] {
            let prices = PriceSeries::new(
                &s.grid,
                s.prices.per_kwh().iter().map(|p| lambda * p).collect(),
            )
            .unwrap();
            let edr = EdrSignal::new(
                &s.grid,
                s.edr
                    .incentive_per_kwh()
                    .iter()
                    .map(|p| lambda * p)
                    .collect(),
                s.edr.min_reduction_kw().to_vec(),
                s.edr.notification(),
                s.edr.decision_window_min(),
            )
            .unwrap();
            let scaled = Scenario::new(
                s.grid,
                prices,
                LoadForecast::new(&s.grid, s.forecast.kw().to_vec()).unwrap(),
                edr,
                s.bes.clone(),
                s.station.clone(),
            )
            .unwrap();
            let ds = decide(&scaled).unwrap();
            let cs = ds.c_edr().unwrap();
            assert!(
                (cs - lambda * c_event).abs() <= 1e-6 * (1.0 + (lambda * c_event).abs()),
                "case {case} lambda {lambda}: {cs} vs {}",
                lambda * c_event
            );
            assert!(
                (ds.c_non_edr - lambda * d.c_non_edr).abs()
                    <= 1e-6 * (1.0 + (lambda * d.c_non_edr).abs())
            );
            assert_eq!(ds.participate, d.participate, "case {case} lambda {lambda}");
        }
    }
}

#[test]
fn baseline_profit_never_sees_the_battery() {
    let mut rng = ChaCha8Rng::seed_from_u64(36);
    for _ in 0..6 {
        let s = gen_moderate_instance(&mut rng);
        let base = profit_without_edr(&s);
        let other = s.with_rated_capacity(s.bes.rated_capacity_kwh * 7.0 + 13.0).unwrap();
        assert_eq!(profit_without_edr(&other), base);
    }
}
