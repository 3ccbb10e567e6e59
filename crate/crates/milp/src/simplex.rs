//! Bounded-variable primal simplex on a dense tableau.
//!
//! The solver works on the standard form `A x + s = b` where one slack column
//! `s_i` is appended per row with bounds chosen by the row sense
//! (`<=` gives `[0, inf)`, `>=` gives `(-inf, 0]`, `=` gives `[0, 0]`), so
//! every constraint becomes an equality and all inequality information lives
//! in variable bounds.
//!
//! Feasibility (phase 1) is established with artificial variables: nonbasic
//! columns start at a finite bound, each slack is set to the residual of its
//! row, and any slack that lands outside its own bounds is clamped there while
//! an artificial column absorbs the remaining residual. Minimizing the sum of
//! artificials either reaches (near) zero — feasible — or proves the model
//! infeasible. Phase 2 then optimizes the real objective with the artificials
//! frozen at zero.
//!
//! Pivoting uses Dantzig pricing (most negative reduced cost) for speed and
//! switches permanently to Bland's smallest-index rule once a run of
//! degenerate steps suggests stalling, which restores the termination
//! guarantee. Two guard rails convert numerical trouble into explicit errors
//! instead of wrong answers: a hard iteration cap, and a from-scratch
//! feasibility check of the final point against the original rows and bounds.

use crate::model::{Model, ObjSense, Sense, VarId};
use thiserror::Error;

/// Numerical knobs. The defaults match the tolerances used by the rest of the
/// workspace and there is rarely a reason to touch anything but
/// `max_iterations`.
#[derive(Clone, Debug)]
pub struct LpConfig {
    /// Absolute tolerance when verifying constraint rows of the final point.
    pub feas_tol: f64,
    /// Absolute tolerance for variable bounds (values this far outside are
    /// clamped; further means numerical failure).
    pub bound_tol: f64,
    /// Reduced costs within this of zero count as optimal.
    pub cost_tol: f64,
    /// Smallest pivot element magnitude accepted during elimination.
    pub pivot_tol: f64,
    /// Hard cap on simplex iterations per phase; 0 picks a size-based cap.
    pub max_iterations: usize,
}

impl Default for LpConfig {
    fn default() -> Self {
        LpConfig {
            feas_tol: 1e-7,
            bound_tol: 1e-9,
            cost_tol: 1e-9,
            pivot_tol: 1e-8,
            max_iterations: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Value of the objective variable at the final point (0 when the model
    /// has no objective). Only meaningful for `Optimal`.
    pub objective: f64,
    /// One value per model variable, in column order. Empty unless `Optimal`.
    pub values: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("simplex hit the iteration cap ({0} iterations) without converging")]
    IterationLimit(usize),
    #[error("numerical breakdown in simplex: {0}")]
    Numerical(String),
}

/// Solves the continuous relaxation of `model` (binaries relaxed to [0, 1]).
///
/// `fixings` pins variables to a point value for the duration of the solve,
/// overriding their bounds; branch-and-bound uses this to fix binaries to 0
/// or 1. A status of `Optimal` is only returned after the final point has been
/// re-checked against every original row (tolerance `feas_tol`) and bound
/// (tolerance `bound_tol`); a point that fails the check surfaces as
/// [`LpError::Numerical`] instead of a silently wrong answer.
pub fn lp_solve(
    model: &Model,
    fixings: &[(VarId, f64)],
    cfg: &LpConfig,
) -> Result<LpSolution, LpError> {
    let mut t = Tableau::build(model, fixings, cfg);

    let mut iterations = 0;
    if t.has_artificials() {
        match t.run_phase(Phase::One, model)? {
            PhaseEnd::Optimal => {}
            PhaseEnd::Unbounded => {
                // Phase 1 minimizes a sum of variables bounded below by zero;
                // an unbounded ray here can only be numerical noise.
                return Err(LpError::Numerical(
                    "phase 1 reported an unbounded ray".into(),
                ));
            }
        }
        iterations += t.iters;
        let infeas: f64 = t.artificial_range().map(|j| t.vals[j]).sum();
        if infeas > cfg.feas_tol {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                objective: 0.0,
                values: Vec::new(),
                iterations,
            });
        }
        t.freeze_artificials();
    }

    match t.run_phase(Phase::Two, model)? {
        PhaseEnd::Unbounded => {
            iterations += t.iters;
            return Ok(LpSolution {
                status: LpStatus::Unbounded,
                objective: 0.0,
                values: Vec::new(),
                iterations,
            });
        }
        PhaseEnd::Optimal => {}
    }
    iterations += t.iters;

    let values = t.checked_values(model, fixings)?;
    let objective = match model.objective() {
        Some((_, v)) => values[v.index()],
        None => 0.0,
    };
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective,
        values,
        iterations,
    })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

/// How far outside its bounds a freshly computed slack value may be and still
/// count as feasible at start-up (avoids spawning artificials for dust).
const INIT_SLACK_TOL: f64 = 1e-10;
/// Column entries smaller than this are treated as zero in the ratio test.
const RATIO_EPS: f64 = 1e-9;
/// Steps shorter than this count as degenerate for stall detection.
const DEGEN_STEP: f64 = 1e-12;
/// Consecutive degenerate steps before switching to Bland's rule.
const STALL_LIMIT: usize = 100;

struct Tableau {
    m: usize,
    /// Structural column count (model variables).
    n_struct: usize,
    /// Total columns: structural + slacks + artificials.
    total: usize,
    /// Row-major dense tableau, `m x total`; always equals `B^-1 A`.
    a: Vec<f64>,
    /// Reduced-cost row for the phase currently running.
    cost: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    /// Current value of every column (basic and nonbasic).
    vals: Vec<f64>,
    /// Basic column of each row.
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    /// For nonbasic columns: parked at the upper bound? (Nonbasic columns
    /// with two infinite bounds sit at zero and this flag stays false.)
    at_upper: Vec<bool>,
    n_artificial: usize,
    bland: bool,
    iters: usize,
    degen_run: usize,
    cfg: LpConfig,
}

impl Tableau {
    fn build(model: &Model, fixings: &[(VarId, f64)], cfg: &LpConfig) -> Tableau {
        let m = model.num_constraints();
        let n_struct = model.num_vars();

        let mut lo: Vec<f64> = model.vars().iter().map(|v| v.lower).collect();
        let mut hi: Vec<f64> = model.vars().iter().map(|v| v.upper).collect();
        for &(v, x) in fixings {
            lo[v.index()] = x;
            hi[v.index()] = x;
        }

        // Slack bounds by sense: the row reads `a.x + s = b`.
        for c in model.constraints() {
            let (l, h) = match c.sense {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
                Sense::Eq => (0.0, 0.0),
            };
            lo.push(l);
            hi.push(h);
        }

        let base_total = n_struct + m;
        let mut vals = vec![0.0; base_total];
        #[allow(clippy::needless_range_loop)]
        for j in 0..n_struct {
            vals[j] = if lo[j].is_finite() {
                lo[j]
            } else if hi[j].is_finite() {
                hi[j]
            } else {
                0.0
            };
        }

        // Row activities of the nonbasic start point decide each slack value.
        let mut activity = vec![0.0; m];
        let mut dense = vec![0.0; m * base_total];
        for (i, c) in model.constraints().iter().enumerate() {
            let row = &mut dense[i * base_total..(i + 1) * base_total];
            for &(v, coeff) in &c.terms {
                row[v.index()] += coeff;
            }
            row[n_struct + i] = 1.0;
            let mut act = 0.0;
            for j in 0..n_struct {
                if row[j] != 0.0 {
                    act += row[j] * vals[j];
                }
            }
            activity[i] = act;
        }

        // Pick the starting basis: the slack where it fits, otherwise clamp
        // the slack to the violated bound and let an artificial carry the
        // residual. `residual[i] != 0` marks rows that need an artificial.
        let mut residual = vec![0.0; m];
        let mut n_artificial = 0usize;
        for i in 0..m {
            let s = model.constraints()[i].rhs - activity[i];
            let (sl, sh) = (lo[n_struct + i], hi[n_struct + i]);
            if s >= sl - INIT_SLACK_TOL && s <= sh + INIT_SLACK_TOL {
                // Trim dust so the starting basic value respects its bounds.
                let mut v = s;
                if sl.is_finite() && v < sl {
                    v = sl;
                }
                if sh.is_finite() && v > sh {
                    v = sh;
                }
                vals[n_struct + i] = v;
            } else {
                let parked = if s < sl { sl } else { sh };
                vals[n_struct + i] = parked;
                residual[i] = s - parked;
                n_artificial += 1;
            }
        }

        let total = base_total + n_artificial;
        let mut a = vec![0.0; m * total];
        for i in 0..m {
            a[i * total..i * total + base_total]
                .copy_from_slice(&dense[i * base_total..(i + 1) * base_total]);
        }
        vals.resize(total, 0.0);
        lo.resize(total, 0.0);
        hi.resize(total, f64::INFINITY);

        let mut basis = vec![0usize; m];
        let mut in_basis = vec![false; total];
        let mut next_art = base_total;
        for i in 0..m {
            if residual[i] == 0.0 {
                basis[i] = n_struct + i;
            } else {
                // Column sign keeps the artificial's basic value positive;
                // negating the whole row afterwards makes the basic column a
                // plain unit vector, so the tableau equals B^-1 A.
                let sigma = residual[i].signum();
                a[i * total + next_art] = sigma;
                if sigma < 0.0 {
                    for x in &mut a[i * total..(i + 1) * total] {
                        *x = -*x;
                    }
                }
                vals[next_art] = residual[i].abs();
                basis[i] = next_art;
                next_art += 1;
            }
            in_basis[basis[i]] = true;
        }

        // A nonbasic column is "at upper" when it was parked on a finite
        // upper bound (including columns whose only finite bound is above).
        let mut at_upper = vec![false; total];
        #[allow(clippy::needless_range_loop)]
        for j in 0..total {
            if !in_basis[j] && lo[j] != hi[j] {
                at_upper[j] = hi[j].is_finite() && vals[j] == hi[j];
            }
        }

        Tableau {
            m,
            n_struct,
            total,
            a,
            cost: vec![0.0; total],
            lo,
            hi,
            vals,
            basis,
            in_basis,
            at_upper,
            n_artificial,
            bland: false,
            iters: 0,
            degen_run: 0,
            cfg: cfg.clone(),
        }
    }

    fn has_artificials(&self) -> bool {
        self.n_artificial > 0
    }

    fn artificial_range(&self) -> std::ops::Range<usize> {
        self.total - self.n_artificial..self.total
    }

    /// After a successful phase 1: pin all artificials to zero so they can
    /// never carry value again.
    fn freeze_artificials(&mut self) {
        for j in self.artificial_range() {
            self.lo[j] = 0.0;
            self.hi[j] = 0.0;
            self.vals[j] = 0.0;
        }
    }

    /// Loads the reduced-cost row for a phase by projecting the phase
    /// objective through the current basis.
    fn load_costs(&mut self, phase: Phase, model: &Model) {
        let mut c = vec![0.0; self.total];
        match phase {
            Phase::One => {
                for j in self.artificial_range() {
                    c[j] = 1.0;
                }
            }
            Phase::Two => {
                if let Some((sense, v)) = model.objective() {
                    // Internally we always minimize.
                    c[v.index()] = match sense {
                        ObjSense::Minimize => 1.0,
                        ObjSense::Maximize => -1.0,
                    };
                }
            }
        }
        let mut cost = c.clone();
        for r in 0..self.m {
            let cb = c[self.basis[r]];
            if cb != 0.0 {
                let row = &self.a[r * self.total..(r + 1) * self.total];
                for (j, x) in cost.iter_mut().enumerate() {
                    *x -= cb * row[j];
                }
            }
        }
        self.cost = cost;
    }

    fn iteration_cap(&self) -> usize {
        if self.cfg.max_iterations > 0 {
            self.cfg.max_iterations
        } else {
            1000 + 50 * (self.m + self.total)
        }
    }

    fn run_phase_inner(&mut self) -> Result<PhaseEnd, LpError> {
        let cap = self.iteration_cap();
        self.iters = 0;
        self.degen_run = 0;
        loop {
            if self.iters >= cap {
                return Err(LpError::IterationLimit(self.iters));
            }
            self.iters += 1;

            let Some((j, dir)) = self.price() else {
                return Ok(PhaseEnd::Optimal);
            };

            // Ratio test: how far can column j move in direction `dir` before
            // the entering column or some basic column hits a bound?
            let span = if self.lo[j].is_finite() && self.hi[j].is_finite() {
                self.hi[j] - self.lo[j]
            } else {
                f64::INFINITY
            };
            let mut t_best = span;
            // (row, leaving var exits at its lower bound?)
            let mut leave: Option<(usize, bool)> = None;
            let mut leave_alpha = 0.0f64;
            for r in 0..self.m {
                let alpha = self.a[r * self.total + j];
                if alpha.abs() <= RATIO_EPS {
                    continue;
                }
                let delta = dir * alpha; // basic value moves by -delta * t
                let b = self.basis[r];
                let (t, hits_lo) = if delta > 0.0 {
                    if !self.lo[b].is_finite() {
                        continue;
                    }
                    (((self.vals[b] - self.lo[b]).max(0.0)) / delta, true)
                } else {
                    if !self.hi[b].is_finite() {
                        continue;
                    }
                    (((self.hi[b] - self.vals[b]).max(0.0)) / -delta, false)
                };
                let take = if t < t_best - 1e-12 {
                    true
                } else if t <= t_best + 1e-12 {
                    match leave {
                        None => t < t_best, // prefer a genuine row limit only if strictly smaller than the bound-flip span
                        Some((prev, _)) => {
                            if self.bland {
                                self.basis[r] < self.basis[prev]
                            } else {
                                alpha.abs() > leave_alpha.abs()
                            }
                        }
                    }
                } else {
                    false
                };
                if take {
                    t_best = t.min(t_best);
                    leave = Some((r, hits_lo));
                    leave_alpha = alpha;
                }
            }

            if t_best.is_infinite() {
                return Ok(PhaseEnd::Unbounded);
            }

            let t = t_best.max(0.0);
            if t <= DEGEN_STEP {
                self.degen_run += 1;
                if self.degen_run >= STALL_LIMIT {
                    self.bland = true;
                }
            } else {
                self.degen_run = 0;
            }

            // Move the point: basic columns shift opposite the entering one.
            if t > 0.0 {
                for r in 0..self.m {
                    let alpha = self.a[r * self.total + j];
                    if alpha != 0.0 {
                        let b = self.basis[r];
                        self.vals[b] -= dir * alpha * t;
                    }
                }
                self.vals[j] += dir * t;
            }

            match leave {
                None => {
                    // Bound flip: the entering column crossed its whole span.
                    self.at_upper[j] = !self.at_upper[j];
                    self.vals[j] = if self.at_upper[j] { self.hi[j] } else { self.lo[j] };
                }
                Some((r, hits_lo)) => {
                    let lv = self.basis[r];
                    // Snap the leaving column exactly onto its bound; this is
                    // the one place rounding drift gets wiped per iteration.
                    self.vals[lv] = if hits_lo { self.lo[lv] } else { self.hi[lv] };
                    self.in_basis[lv] = false;
                    self.at_upper[lv] = !hits_lo;
                    self.pivot(r, j)?;
                    self.basis[r] = j;
                    self.in_basis[j] = true;
                    self.at_upper[j] = false;
                }
            }
        }
    }

    fn run_phase(&mut self, phase: Phase, model: &Model) -> Result<PhaseEnd, LpError> {
        self.load_costs(phase, model);
        self.run_phase_inner()
    }

    /// Picks the entering column and its direction (+1 rising off a lower
    /// bound, -1 falling off an upper bound). `None` means optimal.
    fn price(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = self.cfg.cost_tol;
        for j in 0..self.total {
            if self.in_basis[j] || self.lo[j] == self.hi[j] {
                continue;
            }
            let d = self.cost[j];
            let dir = if self.at_upper[j] {
                if d > self.cfg.cost_tol {
                    -1.0
                } else {
                    continue;
                }
            } else if self.lo[j].is_finite() {
                if d < -self.cfg.cost_tol {
                    1.0
                } else {
                    continue;
                }
            } else {
                // Nonbasic free column parked at zero: either direction pays.
                if d < -self.cfg.cost_tol {
                    1.0
                } else if d > self.cfg.cost_tol {
                    -1.0
                } else {
                    continue;
                }
            };
            if self.bland {
                return Some((j, dir));
            }
            if d.abs() > best_score {
                best_score = d.abs();
                best = Some((j, dir));
            }
        }
        best
    }

    /// Gauss-Jordan elimination making column `j` the unit vector of row `r`.
    fn pivot(&mut self, r: usize, j: usize) -> Result<(), LpError> {
        let total = self.total;
        let piv = self.a[r * total + j];
        if piv.abs() < self.cfg.pivot_tol {
            return Err(LpError::Numerical(format!(
                "pivot magnitude {:.3e} below tolerance in row {} column {}",
                piv.abs(),
                r,
                j
            )));
        }
        let inv = 1.0 / piv;
        for x in &mut self.a[r * total..(r + 1) * total] {
            *x *= inv;
        }
        // Split borrows: copy the pivot row out once; m stays small enough
        // that the copy is cheap next to the elimination itself.
        let prow: Vec<f64> = self.a[r * total..(r + 1) * total].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.a[i * total + j];
            if f != 0.0 {
                let row = &mut self.a[i * total..(i + 1) * total];
                for (x, p) in row.iter_mut().zip(&prow) {
                    *x -= f * p;
                }
                row[j] = 0.0;
            }
        }
        let f = self.cost[j];
        if f != 0.0 {
            for (x, p) in self.cost.iter_mut().zip(&prow) {
                *x -= f * p;
            }
            self.cost[j] = 0.0;
        }
        Ok(())
    }

    /// Final audit: clamp dust, then re-check every bound and every original
    /// row with fresh arithmetic.
    fn checked_values(&mut self, model: &Model, fixings: &[(VarId, f64)]) -> Result<Vec<f64>, LpError> {
        let bt = self.cfg.bound_tol;
        for j in 0..self.total {
            let v = self.vals[j];
            if v < self.lo[j] {
                if self.lo[j] - v > bt {
                    return Err(LpError::Numerical(format!(
                        "column {} finished {:.3e} below its lower bound",
                        j,
                        self.lo[j] - v
                    )));
                }
                self.vals[j] = self.lo[j];
            } else if v > self.hi[j] {
                if v - self.hi[j] > bt {
                    return Err(LpError::Numerical(format!(
                        "column {} finished {:.3e} above its upper bound",
                        j,
                        v - self.hi[j]
                    )));
                }
                self.vals[j] = self.hi[j];
            }
        }
        let values: Vec<f64> = self.vals[..self.n_struct].to_vec();
        for &(v, x) in fixings {
            // Fixings entered as bounds, so after clamping this must hold.
            debug_assert_eq!(values[v.index()], x);
        }
        for c in model.constraints() {
            let act: f64 = c.terms.iter().map(|&(v, coeff)| coeff * values[v.index()]).sum();
            let viol = match c.sense {
                Sense::Le => act - c.rhs,
                Sense::Ge => c.rhs - act,
                Sense::Eq => (act - c.rhs).abs(),
            };
            if viol > self.cfg.feas_tol {
                return Err(LpError::Numerical(format!(
                    "row {:?} violated by {:.3e} at the final point",
                    c.tag, viol
                )));
            }
        }
        Ok(values)
    }
}
