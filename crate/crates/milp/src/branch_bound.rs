//! Depth-first branch-and-bound over the binary variables of a [`Model`].
//!
//! Each node is a set of 0/1 fixings handed to [`lp_solve`] as bound
//! overrides. Nodes whose relaxation is infeasible or cannot beat the
//! incumbent by more than `abs_gap` are pruned; otherwise the most fractional
//! binary is branched on, and of the two children the one fixing that binary
//! to its nearest integer is explored first. The search keeps a sound outer
//! bound on the true optimum at all times, so a run stopped by a node or time
//! limit still reports `best_bound` such that no feasible point can beat it —
//! that is what makes early-stopped range queries safe to report.
//!
//! With no time limit the search is fully deterministic (node limits are
//! counted, not timed).

use crate::model::{Model, ObjSense, VarId};
use crate::simplex::{lp_solve, LpConfig, LpError, LpStatus};
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Clone, Debug)]
pub struct SolveConfig {
    pub lp: LpConfig,
    /// Stop after this many nodes (LP relaxations solved). `None` = no limit.
    pub node_limit: Option<u64>,
    /// Wall-clock limit. `None` = no limit. Note that using this makes run
    /// outcomes timing-dependent.
    pub time_limit: Option<Duration>,
    /// A node is pruned when its relaxation cannot improve on the incumbent
    /// by more than this absolute amount.
    pub abs_gap: f64,
    /// Distance from an integer within which a relaxed binary counts as
    /// integral.
    pub int_tol: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            lp: LpConfig::default(),
            node_limit: None,
            time_limit: None,
            abs_gap: 1e-6,
            int_tol: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    /// Search completed; the incumbent is within `abs_gap` of `best_bound`.
    Optimal,
    /// No 0/1 assignment admits a feasible point.
    Infeasible,
    NodeLimit,
    TimeLimit,
}

impl SolveStatus {
    pub fn is_limit(self) -> bool {
        matches!(self, SolveStatus::NodeLimit | SolveStatus::TimeLimit)
    }
}

#[derive(Clone, Debug)]
pub struct SolveStats {
    /// LP relaxations solved.
    pub nodes: u64,
    /// Simplex iterations summed over all relaxations.
    pub lp_iterations: u64,
    pub wall_secs: f64,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Incumbent objective value, in the model's own sense. `None` when no
    /// integral point was found.
    pub objective: Option<f64>,
    /// Sound outer bound on the true optimum: an upper bound when maximizing,
    /// a lower bound when minimizing. `None` only when nothing was solved.
    pub best_bound: Option<f64>,
    /// Incumbent assignment, one value per model variable in column order.
    pub values: Option<Vec<f64>>,
    pub stats: SolveStats,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("model has no objective to optimize")]
    NoObjective,
    #[error("relaxation is unbounded; add finite bounds before solving")]
    Unbounded,
    #[error(transparent)]
    Lp(#[from] LpError),
}

struct Node {
    /// (binary, value) fixings accumulated along the path from the root.
    fixings: Vec<(VarId, f64)>,
    /// LP bound of the parent, in score space (see below); `INFINITY` at the
    /// root where nothing is known yet.
    parent_score: f64,
}

/// Optimizes the model's objective over all 0/1 assignments of its binaries.
///
/// Internally the search maximizes a *score* = objective for `Maximize`,
/// negated objective for `Minimize`, so all bound comparisons read one way;
/// reported values are translated back.
pub fn solve(model: &Model, cfg: &SolveConfig) -> Result<SolveResult, SolveError> {
    let (sense, _) = model.objective().ok_or(SolveError::NoObjective)?;
    let sgn = match sense {
        ObjSense::Maximize => 1.0,
        ObjSense::Minimize => -1.0,
    };
    let binaries = model.binaries();
    let start = Instant::now();

    let mut stack = vec![Node {
        fixings: Vec::new(),
        parent_score: f64::INFINITY,
    }];
    let mut incumbent: Option<(f64, Vec<f64>)> = None; // (score, values)
    let mut pruned_score = f64::NEG_INFINITY; // max score over bound-pruned nodes
    let mut nodes = 0u64;
    let mut lp_iterations = 0u64;
    let mut limit: Option<SolveStatus> = None;

    while let Some(node) = stack.pop() {
        if cfg.node_limit.is_some_and(|cap| nodes >= cap) {
            stack.push(node);
            limit = Some(SolveStatus::NodeLimit);
            break;
        }
        if cfg.time_limit.is_some_and(|cap| start.elapsed() >= cap) {
            stack.push(node);
            limit = Some(SolveStatus::TimeLimit);
            break;
        }

        // Lazy prune: the parent bound may have been beaten since push time.
        if let Some((best, _)) = &incumbent {
            if node.parent_score <= best + cfg.abs_gap {
                pruned_score = pruned_score.max(node.parent_score);
                continue;
            }
        }

        nodes += 1;
        let sol = lp_solve(model, &node.fixings, &cfg.lp)?;
        lp_iterations += sol.iterations as u64;
        match sol.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => return Err(SolveError::Unbounded),
            LpStatus::Optimal => {}
        }
        let score = sgn * sol.objective;
        if let Some((best, _)) = &incumbent {
            if score <= best + cfg.abs_gap {
                pruned_score = pruned_score.max(score);
                continue;
            }
        }

        // Most fractional free binary, if any.
        let mut branch: Option<(VarId, f64)> = None;
        let mut worst = cfg.int_tol;
        for &q in &binaries {
            if node.fixings.iter().any(|&(v, _)| v == q) {
                continue;
            }
            let v = sol.values[q.index()];
            let frac = (v - v.round()).abs();
            if frac > worst {
                worst = frac;
                branch = Some((q, v));
            }
        }

        match branch {
            None => {
                // Integral point: snap binaries and take it as incumbent.
                let mut vals = sol.values;
                for &q in &binaries {
                    vals[q.index()] = vals[q.index()].round();
                }
                incumbent = Some((score, vals));
            }
            Some((q, v)) => {
                let near = v.round().clamp(0.0, 1.0);
                let far = 1.0 - near;
                let child = |value: f64| {
                    let mut fix = node.fixings.clone();
                    fix.push((q, value));
                    Node {
                        fixings: fix,
                        parent_score: score,
                    }
                };
                // Far child first so the near one is popped first.
                stack.push(child(far));
                stack.push(child(near));
            }
        }
    }

    let wall_secs = start.elapsed().as_secs_f64();
    let stats = SolveStats {
        nodes,
        lp_iterations,
        wall_secs,
    };

    // The outer bound: nothing feasible can score above the max of the
    // incumbent, every bound-pruned node, and every node still open.
    let mut bound_score = pruned_score;
    if let Some((best, _)) = &incumbent {
        bound_score = bound_score.max(*best);
    }
    for n in &stack {
        bound_score = bound_score.max(n.parent_score);
    }

    let status = match limit {
        Some(s) => s,
        None => {
            if incumbent.is_some() {
                SolveStatus::Optimal
            } else {
                // Pruning needs an incumbent, so an empty search without one
                // means every leaf's relaxation was infeasible.
                SolveStatus::Infeasible
            }
        }
    };

    let (objective, values) = match incumbent {
        Some((score, vals)) => (Some(sgn * score), Some(vals)),
        None => (None, None),
    };
    let best_bound = if bound_score.is_finite() {
        Some(sgn * bound_score)
    } else {
        None
    };
    Ok(SolveResult {
        status,
        objective,
        best_bound,
        values,
        stats,
    })
}
