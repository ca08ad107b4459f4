//! Continuous linear programming by bounded-variable primal simplex on a
//! dense tableau.
//!
//! Variables carry individual bounds (possibly infinite) so the dispatch
//! model's box constraints never become rows. Phase 1 drives a full set
//! of artificial variables to zero to find a starting basis; phase 2
//! optimizes the real objective. Pricing is largest-reduced-cost with a
//! switch to Bland's smallest-index rule once the objective stalls,
//! which guarantees termination on degenerate instances.
//!
//! Problem sizes here are a few hundred variables at most, so a dense
//! tableau beats any sparse machinery.

use thiserror::Error;

/// Pivot elements smaller than this are treated as zero.
const PIVOT_TOL: f64 = 1e-9;
/// Row residual tolerance: phase-1 infeasibility cutoff and post-solve audit.
const FEAS_TOL: f64 = 1e-7;
/// Reduced-cost threshold for optimality.
const OPT_TOL: f64 = 1e-9;
/// Variable bound tolerance in the post-solve audit.
const BOUND_TOL: f64 = 1e-9;
/// Inputs with coefficients beyond this are rejected outright.
const MAX_COEFF: f64 = 1e12;
/// Basic values are recomputed from the tableau this often to shed
/// accumulated rounding.
const REFRESH_EVERY: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// One sparse constraint row.
#[derive(Debug, Clone)]
pub struct LpConstraint {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// A linear program with per-variable bounds.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub constraints: Vec<LpConstraint>,
    /// `(lower, upper)` per variable; infinities allowed.
    pub bounds: Vec<(f64, f64)>,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("constraint {row} references variable {var}, but the problem declares {num_vars}")]
    UnknownVariable {
        row: usize,
        var: usize,
        num_vars: usize,
    },
    #[error("variable {var} has lower bound {lower} above upper bound {upper}")]
    BoundsCrossed { var: usize, lower: f64, upper: f64 },
    #[error("{place} holds {value}, beyond the accepted magnitude of 1e12")]
    PathologicalCoefficient { place: String, value: f64 },
    #[error("{place} is not a number")]
    NotANumber { place: String },
    #[error("simplex did not converge within {0} iterations")]
    IterationLimit(usize),
    #[error("post-solve audit failed: {0}")]
    PostSolveAudit(String),
}

/// Solution payload for an optimal outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub objective: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(&self) -> Option<&LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

impl LpProblem {
    pub fn new(sense: Sense, num_vars: usize) -> Self {
        LpProblem {
            sense,
            objective: vec![0.0; num_vars],
            constraints: Vec::new(),
            bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn set_objective(&mut self, var: usize, coeff: f64) {
        self.objective[var] = coeff;
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.bounds[var] = (lower, upper);
    }

    pub fn add_constraint(&mut self, coeffs: &[(usize, f64)], relation: Relation, rhs: f64) {
        self.constraints.push(LpConstraint {
            coeffs: coeffs.to_vec(),
            relation,
            rhs,
        });
    }

    /// Structural validation plus the magnitude guard on every number.
    pub fn validate(&self) -> Result<(), SolveError> {
        self.validate_with_bounds(&self.bounds)
    }

    fn validate_with_bounds(&self, bounds: &[(f64, f64)]) -> Result<(), SolveError> {
        let n = self.num_vars();
        let check_mag = |place: &dyn Fn() -> String, value: f64| -> Result<(), SolveError> {
            if value.is_nan() {
                return Err(SolveError::NotANumber { place: place() });
            }
            if value.is_finite() && value.abs() > MAX_COEFF {
                return Err(SolveError::PathologicalCoefficient {
                    place: place(),
                    value,
                });
            }
            Ok(())
        };
        for (j, &c) in self.objective.iter().enumerate() {
            if !c.is_finite() {
                return Err(SolveError::NotANumber {
                    place: format!("objective[{j}]"),
                });
            }
            check_mag(&|| format!("objective[{j}]"), c)?;
        }
        for (i, row) in self.constraints.iter().enumerate() {
            for &(var, coeff) in &row.coeffs {
                if var >= n {
                    return Err(SolveError::UnknownVariable {
                        row: i,
                        var,
                        num_vars: n,
                    });
                }
                if !coeff.is_finite() {
                    return Err(SolveError::NotANumber {
                        place: format!("constraint[{i}] coefficient on x{var}"),
                    });
                }
                check_mag(&|| format!("constraint[{i}] coefficient on x{var}"), coeff)?;
            }
            if !row.rhs.is_finite() {
                return Err(SolveError::NotANumber {
                    place: format!("constraint[{i}] rhs"),
                });
            }
            check_mag(&|| format!("constraint[{i}] rhs"), row.rhs)?;
        }
        for (j, &(l, u)) in bounds.iter().enumerate() {
            if l.is_nan() || u.is_nan() {
                return Err(SolveError::NotANumber {
                    place: format!("bounds[{j}]"),
                });
            }
            check_mag(&|| format!("bounds[{j}].lower"), l)?;
            check_mag(&|| format!("bounds[{j}].upper"), u)?;
            if l > u {
                return Err(SolveError::BoundsCrossed {
                    var: j,
                    lower: l,
                    upper: u,
                });
            }
        }
        Ok(())
    }

    /// Constraint residuals and bound violations of a candidate point,
    /// checked against the original (untransformed) rows. Empty means
    /// feasible at the solver tolerances.
    pub fn feasibility_violations(&self, values: &[f64]) -> Vec<String> {
        self.feasibility_violations_with_bounds(values, &self.bounds)
    }

    fn feasibility_violations_with_bounds(
        &self,
        values: &[f64],
        bounds: &[(f64, f64)],
    ) -> Vec<String> {
        let mut out = Vec::new();
        for (i, row) in self.constraints.iter().enumerate() {
            let lhs: f64 = row.coeffs.iter().map(|&(v, c)| c * values[v]).sum();
            let resid = lhs - row.rhs;
            let bad = match row.relation {
                Relation::Le => resid > FEAS_TOL,
                Relation::Ge => resid < -FEAS_TOL,
                Relation::Eq => resid.abs() > FEAS_TOL,
            };
            if bad {
                out.push(format!("constraint {i} residual {resid:.3e}"));
            }
        }
        for (j, (&x, &(l, u))) in values.iter().zip(bounds).enumerate() {
            if x < l - BOUND_TOL || x > u + BOUND_TOL {
                out.push(format!("x{j} = {x} outside [{l}, {u}]"));
            }
        }
        out
    }
}

/// Solve with the problem's own bounds.
pub fn solve_lp(problem: &LpProblem) -> Result<LpOutcome, SolveError> {
    solve_lp_with_bounds(problem, &problem.bounds)
}

/// Solve with an overriding bound vector; used by the branch-and-bound
/// layer to fix binaries without cloning the problem.
pub(crate) fn solve_lp_with_bounds(
    problem: &LpProblem,
    bounds: &[(f64, f64)],
) -> Result<LpOutcome, SolveError> {
    assert_eq!(bounds.len(), problem.num_vars());
    problem.validate_with_bounds(bounds)?;
    let outcome = Simplex::new(problem, bounds).run()?;
    if let LpOutcome::Optimal(sol) = &outcome {
        let violations = problem.feasibility_violations_with_bounds(&sol.values, bounds);
        if !violations.is_empty() {
            return Err(SolveError::PostSolveAudit(violations.join("; ")));
        }
    }
    Ok(outcome)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum VarStatus {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Nonbasic free variable, parked at zero.
    Free,
}

struct Simplex {
    nrows: usize,
    ncols: usize,
    n_structural: usize,
    first_artificial: usize,
    /// Dense row-major tableau, `nrows x ncols`, kept as B^-1 A.
    tab: Vec<f64>,
    /// B^-1 b, updated alongside the tableau.
    rhs: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    status: Vec<VarStatus>,
    basis: Vec<usize>,
    xval: Vec<f64>,
    /// Reduced costs of the phase objective.
    dj: Vec<f64>,
    /// Internal objective (always maximized).
    cost: Vec<f64>,
    /// +1 when the user sense is Maximize, -1 for Minimize.
    sense_flip: f64,
    bland: bool,
    stalled_iters: usize,
    stall_threshold: usize,
    iter_limit: usize,
}

enum StepOutcome {
    Optimal,
    Unbounded,
    Moved,
}

impl Simplex {
    fn new(problem: &LpProblem, bounds: &[(f64, f64)]) -> Self {
        let n = problem.num_vars();
        let n_slack = problem
            .constraints
            .iter()
            .filter(|c| c.relation != Relation::Eq)
            .count();
        let m = problem.constraints.len();
        let ncols = n + n_slack + m;
        let first_artificial = n + n_slack;

        let mut lower = Vec::with_capacity(ncols);
        let mut upper = Vec::with_capacity(ncols);
        for &(l, u) in bounds {
            lower.push(l);
            upper.push(u);
        }

        let mut tab = vec![0.0; m * ncols];
        let mut rhs = vec![0.0; m];
        let mut slack_at = n;
        for (i, row) in problem.constraints.iter().enumerate() {
            let r = &mut tab[i * ncols..(i + 1) * ncols];
            for &(var, coeff) in &row.coeffs {
                r[var] += coeff;
            }
            match row.relation {
                Relation::Le => {
                    r[slack_at] = 1.0;
                    lower.push(0.0);
                    upper.push(f64::INFINITY);
                    slack_at += 1;
                }
                Relation::Ge => {
                    r[slack_at] = -1.0;
                    lower.push(0.0);
                    upper.push(f64::INFINITY);
                    slack_at += 1;
                }
                Relation::Eq => {}
            }
            rhs[i] = row.rhs;
        }
        for _ in 0..m {
            lower.push(0.0);
            upper.push(f64::INFINITY);
        }

        // Nonbasic start: every non-artificial column parks at a finite
        // bound, free columns at zero.
        let mut status = Vec::with_capacity(ncols);
        let mut xval = Vec::with_capacity(ncols);
        for j in 0..first_artificial {
            if lower[j].is_finite() {
                status.push(VarStatus::AtLower);
                xval.push(lower[j]);
            } else if upper[j].is_finite() {
                status.push(VarStatus::AtUpper);
                xval.push(upper[j]);
            } else {
                status.push(VarStatus::Free);
                xval.push(0.0);
            }
        }

        // One artificial per row, oriented so it starts non-negative;
        // the whole row is flipped when the residual is negative.
        let mut basis = Vec::with_capacity(m);
        for i in 0..m {
            let r = &tab[i * ncols..(i + 1) * ncols];
            let residual = rhs[i]
                - r[..first_artificial]
                    .iter()
                    .zip(&xval)
                    .map(|(a, x)| a * x)
                    .sum::<f64>();
            if residual < 0.0 {
                let r = &mut tab[i * ncols..(i + 1) * ncols];
                for v in r.iter_mut() {
                    *v = -*v;
                }
                rhs[i] = -rhs[i];
            }
            let art = first_artificial + i;
            tab[i * ncols + art] = 1.0;
            status.push(VarStatus::Basic(i));
            xval.push(residual.abs());
            basis.push(art);
        }

        // Internal sense is maximization.
        let flip = match problem.sense {
            Sense::Maximize => 1.0,
            Sense::Minimize => -1.0,
        };
        let mut cost = vec![0.0; ncols];
        for (j, &c) in problem.objective.iter().enumerate() {
            cost[j] = flip * c;
        }

        let stall_threshold = 2 * (m + ncols);
        let iter_limit = 50_000 + 200 * (m + ncols);
        Simplex {
            nrows: m,
            ncols,
            n_structural: n,
            first_artificial,
            tab,
            rhs,
            lower,
            upper,
            status,
            basis,
            xval,
            dj: vec![0.0; ncols],
            cost,
            sense_flip: flip,
            bland: false,
            stalled_iters: 0,
            stall_threshold,
            iter_limit,
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.tab[i * self.ncols..(i + 1) * self.ncols]
    }

    fn run(mut self) -> Result<LpOutcome, SolveError> {
        // Phase 1: maximize minus the artificial sum.
        let mut phase_cost = vec![0.0; self.ncols];
        for j in self.first_artificial..self.ncols {
            phase_cost[j] = -1.0;
        }
        match self.optimize(&phase_cost)? {
            StepOutcome::Unbounded => unreachable!("phase-1 objective is bounded above by zero"),
            StepOutcome::Optimal | StepOutcome::Moved => {}
        }
        let artificial_sum: f64 = (self.first_artificial..self.ncols)
            .map(|j| self.xval[j])
            .sum();
        if artificial_sum > FEAS_TOL {
            return Ok(LpOutcome::Infeasible);
        }
        self.retire_artificials();

        // Phase 2: the real objective from the feasible basis.
        let cost = self.cost.clone();
        match self.optimize(&cost)? {
            StepOutcome::Unbounded => return Ok(LpOutcome::Unbounded),
            StepOutcome::Optimal | StepOutcome::Moved => {}
        }
        self.refresh_basic_values();

        let values: Vec<f64> = self.xval[..self.n_structural].to_vec();
        let internal_obj: f64 = self.cost[..self.n_structural]
            .iter()
            .zip(&values)
            .map(|(c, x)| c * x)
            .sum();
        Ok(LpOutcome::Optimal(LpSolution {
            objective: self.sense_flip * internal_obj,
            values,
        }))
    }

    /// Pivot artificials out of the basis where possible and freeze all
    /// of them at zero so phase 2 cannot touch them.
    fn retire_artificials(&mut self) {
        for r in 0..self.nrows {
            if self.basis[r] < self.first_artificial {
                continue;
            }
            let entering = (0..self.first_artificial).find(|&j| {
                !matches!(self.status[j], VarStatus::Basic(_))
                    && self.row(r)[j].abs() > PIVOT_TOL
            });
            if let Some(q) = entering {
                let leaving = self.basis[r];
                self.pivot(r, q);
                // Degenerate swap: the artificial sits at ~0 and no
                // values move; q stays at its current (bound) value.
                self.status[q] = VarStatus::Basic(r);
                self.status[leaving] = VarStatus::AtLower;
                self.xval[leaving] = 0.0;
                self.basis[r] = q;
            }
        }
        for j in self.first_artificial..self.ncols {
            self.lower[j] = 0.0;
            self.upper[j] = 0.0;
            if !matches!(self.status[j], VarStatus::Basic(_)) {
                self.status[j] = VarStatus::AtLower;
                self.xval[j] = 0.0;
            }
        }
        self.refresh_basic_values();
    }

    fn rebuild_reduced_costs(&mut self, cost: &[f64]) {
        let y: Vec<f64> = self.basis.iter().map(|&j| cost[j]).collect();
        for j in 0..self.ncols {
            let mut d = cost[j];
            for i in 0..self.nrows {
                if y[i] != 0.0 {
                    d -= y[i] * self.tab[i * self.ncols + j];
                }
            }
            self.dj[j] = d;
        }
    }

    fn refresh_basic_values(&mut self) {
        for i in 0..self.nrows {
            let mut v = self.rhs[i];
            let row = &self.tab[i * self.ncols..(i + 1) * self.ncols];
            for j in 0..self.ncols {
                if !matches!(self.status[j], VarStatus::Basic(_)) && self.xval[j] != 0.0 {
                    v -= row[j] * self.xval[j];
                }
            }
            self.xval[self.basis[i]] = v;
        }
    }

    fn optimize(&mut self, cost: &[f64]) -> Result<StepOutcome, SolveError> {
        self.bland = false;
        self.stalled_iters = 0;
        self.rebuild_reduced_costs(cost);
        for iter in 0..self.iter_limit {
            if iter > 0 && iter % REFRESH_EVERY == 0 {
                self.refresh_basic_values();
            }
            match self.step()? {
                StepOutcome::Optimal => return Ok(StepOutcome::Optimal),
                StepOutcome::Unbounded => return Ok(StepOutcome::Unbounded),
                StepOutcome::Moved => {}
            }
        }
        Err(SolveError::IterationLimit(self.iter_limit))
    }

    /// Direction a nonbasic column may profitably move in, if any.
    fn entering_direction(&self, j: usize) -> Option<f64> {
        if self.upper[j] - self.lower[j] <= 0.0 {
            return None; // fixed column, includes retired artificials
        }
        match self.status[j] {
            VarStatus::Basic(_) => None,
            VarStatus::AtLower => (self.dj[j] > OPT_TOL).then_some(1.0),
            VarStatus::AtUpper => (self.dj[j] < -OPT_TOL).then_some(-1.0),
            VarStatus::Free => {
                if self.dj[j] > OPT_TOL {
                    Some(1.0)
                } else if self.dj[j] < -OPT_TOL {
                    Some(-1.0)
                } else {
                    None
                }
            }
        }
    }

    fn choose_entering(&self) -> Option<(usize, f64)> {
        if self.bland {
            (0..self.ncols).find_map(|j| self.entering_direction(j).map(|d| (j, d)))
        } else {
            let mut best: Option<(usize, f64, f64)> = None;
            for j in 0..self.ncols {
                if let Some(d) = self.entering_direction(j) {
                    let score = self.dj[j].abs();
                    if best.map_or(true, |(_, _, s)| score > s) {
                        best = Some((j, d, score));
                    }
                }
            }
            best.map(|(j, d, _)| (j, d))
        }
    }

    fn step(&mut self) -> Result<StepOutcome, SolveError> {
        let Some((q, dir)) = self.choose_entering() else {
            return Ok(StepOutcome::Optimal);
        };

        // Ratio test: how far can x_q move before a basic variable or
        // x_q itself hits a bound.
        let range = self.upper[q] - self.lower[q];
        let mut t_best = if range.is_finite() { range } else { f64::INFINITY };
        let mut leaving: Option<(usize, f64)> = None; // (row, basic rate)
        for i in 0..self.nrows {
            let coef = self.tab[i * self.ncols + q];
            if coef.abs() <= PIVOT_TOL {
                continue;
            }
            let rate = -coef * dir; // change of the basic value per unit step
            let k = self.basis[i];
            let limit = if rate > 0.0 {
                if self.upper[k].is_finite() {
                    ((self.upper[k] - self.xval[k]) / rate).max(0.0)
                } else {
                    continue;
                }
            } else if self.lower[k].is_finite() {
                ((self.xval[k] - self.lower[k]) / -rate).max(0.0)
            } else {
                continue;
            };
            let (better, wins_tie) = if t_best.is_infinite() {
                (limit < t_best, false)
            } else {
                let tie = (limit - t_best).abs() <= 1e-12 * (1.0 + t_best.abs());
                let wins_tie = tie
                    && leaving.map_or(false, |(r, _)| {
                        let cur = self.basis[r];
                        if self.bland {
                            k < cur
                        } else {
                            let cur_coef = self.tab[r * self.ncols + q].abs();
                            coef.abs() > cur_coef || (coef.abs() == cur_coef && k < cur)
                        }
                    });
                (!tie && limit < t_best, wins_tie)
            };
            if better || wins_tie {
                t_best = limit.min(t_best);
                leaving = Some((i, rate));
            }
        }

        if t_best.is_infinite() {
            return Ok(StepOutcome::Unbounded);
        }

        let improvement = self.dj[q].abs() * t_best;
        if improvement > 1e-12 {
            self.stalled_iters = 0;
        } else {
            self.stalled_iters += 1;
            if self.stalled_iters > self.stall_threshold {
                self.bland = true;
            }
        }

        match leaving {
            // A bound-to-bound flip, no basis change.
            None => {
                debug_assert!(range.is_finite());
                for i in 0..self.nrows {
                    let coef = self.tab[i * self.ncols + q];
                    if coef.abs() > PIVOT_TOL {
                        self.xval[self.basis[i]] += -coef * dir * t_best;
                    }
                }
                match self.status[q] {
                    VarStatus::AtLower => {
                        self.status[q] = VarStatus::AtUpper;
                        self.xval[q] = self.upper[q];
                    }
                    VarStatus::AtUpper => {
                        self.status[q] = VarStatus::AtLower;
                        self.xval[q] = self.lower[q];
                    }
                    _ => unreachable!("free variables never flip"),
                }
                Ok(StepOutcome::Moved)
            }
            Some((r, _)) => {
                for i in 0..self.nrows {
                    let coef = self.tab[i * self.ncols + q];
                    if coef.abs() > PIVOT_TOL {
                        self.xval[self.basis[i]] += -coef * dir * t_best;
                    }
                }
                self.xval[q] += dir * t_best;

                let k = self.basis[r];
                let rate = -self.tab[r * self.ncols + q] * dir;
                if rate > 0.0 {
                    self.status[k] = VarStatus::AtUpper;
                    self.xval[k] = self.upper[k];
                } else {
                    self.status[k] = VarStatus::AtLower;
                    self.xval[k] = self.lower[k];
                }
                self.pivot(r, q);
                self.status[q] = VarStatus::Basic(r);
                self.basis[r] = q;
                Ok(StepOutcome::Moved)
            }
        }
    }

    /// Gaussian elimination on column `q` around row `r`, applied to the
    /// tableau, the transformed rhs, and the reduced-cost row.
    fn pivot(&mut self, r: usize, q: usize) {
        let ncols = self.ncols;
        let piv = self.tab[r * ncols + q];
        debug_assert!(piv.abs() > PIVOT_TOL);
        let inv = 1.0 / piv;
        for v in self.tab[r * ncols..(r + 1) * ncols].iter_mut() {
            *v *= inv;
        }
        self.rhs[r] *= inv;
        self.tab[r * ncols + q] = 1.0;

        let (pivot_row, rhs_r) = {
            let row: Vec<f64> = self.tab[r * ncols..(r + 1) * ncols].to_vec();
            (row, self.rhs[r])
        };
        for i in 0..self.nrows {
            if i == r {
                continue;
            }
            let factor = self.tab[i * ncols + q];
            if factor == 0.0 {
                continue;
            }
            let row = &mut self.tab[i * ncols..(i + 1) * ncols];
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                *v -= factor * p;
            }
            row[q] = 0.0;
            self.rhs[i] -= factor * rhs_r;
        }
        let factor = self.dj[q];
        if factor != 0.0 {
            for (d, p) in self.dj.iter_mut().zip(&pivot_row) {
                *d -= factor * p;
            }
            self.dj[q] = 0.0;
        }
    }
}
