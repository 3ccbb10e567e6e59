//! A small, self-contained mixed-integer linear programming toolkit.
//!
//! The pieces fit together like this:
//!
//! * [`model`] — the problem container: bounded continuous variables, binary
//!   variables, tagged linear constraints, and a single-variable objective.
//! * [`simplex`] — an LP solver for the continuous relaxation: bounded-variable
//!   primal simplex on a dense tableau, with an artificial-variable phase 1.
//! * [`branch_bound`] — depth-first branch-and-bound over the binary
//!   variables, with sound best-bound reporting even when stopped early.
//! * [`lpfile`] — a writer and a matching reader for a CPLEX-style LP file
//!   dialect, so models can be shipped to external solvers and read back.
//! * [`solution`] — a reader for plain `name value` solution files plus a
//!   checker that replays an assignment against a model.
//!
//! Everything is deterministic: no randomness, no threads, and (unless a
//! wall-clock time limit is requested) no dependence on timing.

pub mod branch_bound;
pub mod lpfile;
pub mod model;
pub mod simplex;
pub mod solution;

pub use branch_bound::{solve, SolveConfig, SolveError, SolveResult, SolveStats, SolveStatus};
pub use lpfile::{parse_lp, write_lp, LpParseError};
pub use model::{LinearConstraint, Model, ObjSense, Sense, VarId, Variable};
pub use simplex::{lp_solve, LpConfig, LpError, LpSolution, LpStatus};
pub use solution::{check_solution, parse_solution, SolutionCheck};
