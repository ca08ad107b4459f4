//! Exact 0/1 mixed-integer solver: best-bound branch-and-bound over LP
//! relaxations from [`crate::lp`].
//!
//! Branching picks the most fractional binary (ties to the lowest
//! variable index); node selection is best bound first with a
//! depth-first dive on ties, so the search order is fully
//! deterministic. Binary fixations are stored as bit masks, which caps
//! the binary count at 64 — twice what a full-day event window needs.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::lp::{solve_lp_with_bounds, LpOutcome, LpProblem, Sense, SolveError};

/// Relaxation values within this distance of 0 or 1 count as integral.
const INT_TOL: f64 = 1e-6;
/// Nodes whose relaxation bound does not beat the incumbent by more
/// than this are cut; it is therefore also the worst proven gap.
const PRUNE_TOL: f64 = 1e-7;
/// Hard cap on binaries, from the bit-mask node encoding.
pub const MAX_BINARIES: usize = 64;
/// Default node budget before the search gives up with an error.
pub const DEFAULT_NODE_BUDGET: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum MilpError {
    #[error(transparent)]
    Lp(#[from] SolveError),
    #[error("{count} binary variables exceed the supported maximum of {MAX_BINARIES}")]
    TooManyBinaries { count: usize },
    #[error("binary variable {var} must have bounds [0, 1], found [{lower}, {upper}]")]
    NotBinaryBounds { var: usize, lower: f64, upper: f64 },
    #[error("binary variable index {var} out of range for {num_vars} variables")]
    BinaryOutOfRange { var: usize, num_vars: usize },
    #[error("node budget of {budget} exhausted after exploring {explored} nodes")]
    NodeBudgetExceeded { explored: u64, budget: u64 },
    #[error("LP relaxation is unbounded")]
    UnboundedRelaxation,
}

/// A linear program plus the set of variables restricted to {0, 1}.
#[derive(Debug, Clone)]
pub struct MilpProblem {
    pub base: LpProblem,
    binary_vars: Vec<usize>,
}

impl MilpProblem {
    pub fn new(
        base: LpProblem,
        binary_vars: impl IntoIterator<Item = usize>,
    ) -> Result<Self, MilpError> {
        base.validate()?;
        let mut vars: Vec<usize> = binary_vars.into_iter().collect();
        vars.sort_unstable();
        vars.dedup();
        if vars.len() > MAX_BINARIES {
            return Err(MilpError::TooManyBinaries { count: vars.len() });
        }
        for &v in &vars {
            if v >= base.num_vars() {
                return Err(MilpError::BinaryOutOfRange {
                    var: v,
                    num_vars: base.num_vars(),
                });
            }
            let (l, u) = base.bounds[v];
            if l != 0.0 || u != 1.0 {
                return Err(MilpError::NotBinaryBounds {
                    var: v,
                    lower: l,
                    upper: u,
                });
            }
        }
        Ok(MilpProblem {
            base,
            binary_vars: vars,
        })
    }

    pub fn binary_vars(&self) -> &[usize] {
        &self.binary_vars
    }
}

/// Optimal solution with search statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct MilpSolution {
    pub objective: f64,
    pub values: Vec<f64>,
    pub nodes_explored: u64,
    pub proven_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MilpOutcome {
    Optimal(MilpSolution),
    Infeasible { nodes_explored: u64 },
}

impl MilpOutcome {
    pub fn optimal(&self) -> Option<&MilpSolution> {
        match self {
            MilpOutcome::Optimal(s) => Some(s),
            MilpOutcome::Infeasible { .. } => None,
        }
    }
}

/// Search knobs; the defaults match the documented contract.
#[derive(Debug, Clone)]
pub struct MilpOptions {
    pub node_budget: u64,
    /// Known-feasible binary assignment (aligned with
    /// [`MilpProblem::binary_vars`]) used to seed the incumbent: the
    /// binaries are fixed, the LP is solved once, and its solution
    /// becomes the starting incumbent if feasible.
    pub warm_binaries: Option<Vec<u8>>,
}

impl Default for MilpOptions {
    fn default() -> Self {
        MilpOptions {
            node_budget: DEFAULT_NODE_BUDGET,
            warm_binaries: None,
        }
    }
}

/// Bit-mask encoding of which binaries a node has fixed, and to what.
#[derive(Debug, Clone, Copy)]
struct Node {
    id: u64,
    depth: u32,
    /// Best objective score achievable below this node (parent's
    /// relaxation; +inf for the root until solved).
    bound_score: f64,
    fixed_mask: u64,
    fixed_ones: u64,
}

/// Heap ordering: best bound first, then deepest (dive), then oldest.
#[derive(Debug)]
struct HeapEntry(Node);

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .bound_score
            .total_cmp(&other.0.bound_score)
            .then_with(|| self.0.depth.cmp(&other.0.depth))
            .then_with(|| other.0.id.cmp(&self.0.id))
    }
}

pub fn solve_milp(problem: &MilpProblem) -> Result<MilpOutcome, MilpError> {
    solve_milp_with(problem, &MilpOptions::default())
}

pub fn solve_milp_with(
    problem: &MilpProblem,
    options: &MilpOptions,
) -> Result<MilpOutcome, MilpError> {
    let sense_flip = match problem.base.sense {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };
    let binaries = &problem.binary_vars;
    let mut bounds_scratch = problem.base.bounds.clone();
    let apply_node = |bounds: &mut Vec<(f64, f64)>, node: &Node| {
        bounds.copy_from_slice(&problem.base.bounds);
        for (k, &var) in binaries.iter().enumerate() {
            if node.fixed_mask & (1 << k) != 0 {
                let v = if node.fixed_ones & (1 << k) != 0 { 1.0 } else { 0.0 };
                bounds[var] = (v, v);
            }
        }
    };

    let mut nodes_explored: u64 = 0;
    let mut incumbent: Option<(f64, Vec<f64>)> = None; // (score, values)
    let mut best_pruned_score = f64::NEG_INFINITY;

    // Warm incumbent: fix the suggested binary pattern and take the LP
    // optimum over the continuous variables, when feasible.
    if let Some(warm) = &options.warm_binaries {
        assert_eq!(warm.len(), binaries.len(), "warm start length mismatch");
        bounds_scratch.copy_from_slice(&problem.base.bounds);
        for (&var, &v) in binaries.iter().zip(warm) {
            let v = f64::from(v.min(1));
            bounds_scratch[var] = (v, v);
        }
        nodes_explored += 1;
        if let LpOutcome::Optimal(sol) = solve_lp_with_bounds(&problem.base, &bounds_scratch)? {
            incumbent = Some((sense_flip * sol.objective, sol.values));
        }
    }

    let mut heap = BinaryHeap::new();
    heap.push(HeapEntry(Node {
        id: 0,
        depth: 0,
        bound_score: f64::INFINITY,
        fixed_mask: 0,
        fixed_ones: 0,
    }));
    let mut next_id: u64 = 1;

    while let Some(HeapEntry(node)) = heap.pop() {
        // Everything left in the heap is bounded by this node's bound;
        // once it cannot beat the incumbent the search is over.
        if let Some((inc_score, _)) = &incumbent {
            if node.bound_score <= inc_score + PRUNE_TOL {
                best_pruned_score = best_pruned_score.max(node.bound_score);
                break;
            }
        }
        nodes_explored += 1;
        if nodes_explored > options.node_budget {
            return Err(MilpError::NodeBudgetExceeded {
                explored: nodes_explored,
                budget: options.node_budget,
            });
        }

        apply_node(&mut bounds_scratch, &node);
        let sol = match solve_lp_with_bounds(&problem.base, &bounds_scratch)? {
            LpOutcome::Infeasible => continue,
            LpOutcome::Unbounded => return Err(MilpError::UnboundedRelaxation),
            LpOutcome::Optimal(sol) => sol,
        };
        let score = sense_flip * sol.objective;
        if let Some((inc_score, _)) = &incumbent {
            if score <= inc_score + PRUNE_TOL {
                best_pruned_score = best_pruned_score.max(score);
                continue;
            }
        }

        // Most fractional unfixed binary, ties to the lowest index.
        let mut branch: Option<(usize, f64)> = None;
        for (k, &var) in binaries.iter().enumerate() {
            let v = sol.values[var];
            let frac_dist = (v - v.round()).abs();
            if frac_dist <= INT_TOL {
                continue;
            }
            let off_center = (v - 0.5).abs();
            if branch.map_or(true, |(_, best)| off_center < best) {
                branch = Some((k, off_center));
            }
        }

        match branch {
            None => {
                // Integer feasible at tolerance: new incumbent.
                let improves = incumbent
                    .as_ref()
                    .map_or(true, |(inc_score, _)| score > *inc_score);
                if improves {
                    incumbent = Some((score, sol.values));
                }
            }
            Some((k, _)) => {
                for one in [false, true] {
                    let mut child = Node {
                        id: next_id,
                        depth: node.depth + 1,
                        bound_score: score,
                        fixed_mask: node.fixed_mask | (1 << k),
                        fixed_ones: node.fixed_ones,
                    };
                    if one {
                        child.fixed_ones |= 1 << k;
                    }
                    next_id += 1;
                    heap.push(HeapEntry(child));
                }
            }
        }
    }

    match incumbent {
        None => Ok(MilpOutcome::Infeasible { nodes_explored }),
        Some((score, values)) => {
            let proven_gap = (best_pruned_score - score).max(0.0);
            Ok(MilpOutcome::Optimal(MilpSolution {
                objective: sense_flip * score,
                values,
                nodes_explored,
                proven_gap,
            }))
        }
    }
}
