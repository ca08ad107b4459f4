//! Branch-and-bound invariants on generated dispatch instances.

mod common;

use common::gen_small_bes_instance;
use edr_core::{
    build_edr_milp, extract_schedule, solve_lp, solve_milp, LpOutcome, MilpOutcome,
};
use edr_core::{dp_profit, DpConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn root_relaxation_bounds_the_integer_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..15 {
        let s = gen_small_bes_instance(&mut rng);
        let milp = build_edr_milp(&s).unwrap();
        let MilpOutcome::Optimal(sol) = solve_milp(&milp).unwrap() else {
            continue;
        };
        let LpOutcome::Optimal(root) = solve_lp(&milp.base).unwrap() else {
            panic!("case {case}: root LP must be solvable when the MILP is");
        };
        assert!(
            root.objective >= sol.objective - 1e-7,
            "case {case}: root bound {} below integer optimum {}",
            root.objective,
            sol.objective
        );
    }
}

#[test]
fn refixing_the_returned_binaries_reproduces_the_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for case in 0..15 {
        let s = gen_small_bes_instance(&mut rng);
        let milp = build_edr_milp(&s).unwrap();
        let MilpOutcome::Optimal(sol) = solve_milp(&milp).unwrap() else {
            continue;
        };
        let mut refixed = milp.base.clone();
        for &var in milp.binary_vars() {
            let v = sol.values[var].round();
            refixed.set_bounds(var, v, v);
        }
        let LpOutcome::Optimal(lp) = solve_lp(&refixed).unwrap() else {
            panic!("case {case}: refixed LP infeasible");
        };
        assert!(
            (lp.objective - sol.objective).abs() <= 1e-7,
            "case {case}: {} vs {}",
            lp.objective,
            sol.objective
        );
    }
}

#[test]
fn optimal_schedules_never_run_both_modes() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..15 {
        let s = gen_small_bes_instance(&mut rng);
        let milp = build_edr_milp(&s).unwrap();
        let out = solve_milp(&milp).unwrap();
        if out.optimal().is_none() {
            continue;
        }
        let sch = extract_schedule(&out, &s).unwrap();
        for t in 0..sch.steps() {
            assert!(
                !(sch.mode_discharge[t] && sch.mode_charge[t]),
                "both modes active at step {t}"
            );
        }
    }
}

#[test]
fn four_step_instance_matches_the_soc_lattice_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let cfg = DpConfig::new(0.005, 0.25).unwrap();
    let mut checked = 0;
    while checked < 5 {
        let s = gen_small_bes_instance(&mut rng);
        if s.grid.steps() != 4 {
            continue;
        }
        let milp = build_edr_milp(&s).unwrap();
        let MilpOutcome::Optimal(sol) = solve_milp(&milp).unwrap() else {
            continue;
        };
        let dp = dp_profit(&s, &cfg).unwrap().profit().unwrap();
        let tol = (0.005 * sol.objective.abs()).max(0.01);
        assert!(
            (sol.objective - dp).abs() <= tol,
            "milp {} vs dp {dp}, tol {tol}",
            sol.objective
        );
        checked += 1;
    }
}
