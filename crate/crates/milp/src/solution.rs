//! Solution files and the assignment checker.
//!
//! External solvers commonly dump solutions as plain `name value` pairs, one
//! per line (Gurobi's `.sol`, SCIP's `display solution` output after minor
//! massaging). [`parse_solution`] reads that shape; [`check_solution`] then
//! replays an assignment against a model: bounds, binary integrality and
//! every constraint row, each at a caller-chosen absolute tolerance. That is
//! the cross-validation path for comparing an external solver's answer with
//! the in-repo one.

use crate::model::{Model, Sense};
use thiserror::Error;

#[derive(Debug, Error)]
#[error("solution parse error at line {line}: {message}")]
pub struct SolParseError {
    pub line: usize,
    pub message: String,
}

/// Parses `name value` pairs, one per line. Blank lines and lines starting
/// with `#` or `\` are skipped (Gurobi writes the objective as a `#` comment).
pub fn parse_solution(text: &str) -> Result<Vec<(String, f64)>, SolParseError> {
    let mut out = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('\\') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let name = parts.next().expect("non-empty line");
        let Some(value) = parts.next() else {
            return Err(SolParseError {
                line: ln + 1,
                message: format!("expected 'name value', found only {name:?}"),
            });
        };
        if parts.next().is_some() {
            return Err(SolParseError {
                line: ln + 1,
                message: "trailing tokens after the value".into(),
            });
        }
        let value: f64 = value.parse().map_err(|_| SolParseError {
            line: ln + 1,
            message: format!("cannot parse {value:?} as a number"),
        })?;
        out.push((name.to_string(), value));
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct SolutionCheck {
    /// True when no violations were found.
    pub ok: bool,
    /// Largest violation magnitude encountered (0 when `ok`).
    pub max_violation: f64,
    /// Human-readable violation descriptions.
    pub violations: Vec<String>,
    /// Value of the model's objective variable, when the model has one and
    /// the assignment covers it.
    pub objective: Option<f64>,
}

/// Replays `assignment` (name/value pairs) against `model` at absolute
/// tolerance `tol`.
///
/// Unknown names, missing variables, bound violations, non-integral binaries
/// and violated rows are all reported; nothing panics on malformed input.
pub fn check_solution(model: &Model, assignment: &[(String, f64)], tol: f64) -> SolutionCheck {
    let mut violations = Vec::new();
    let mut max_violation = 0.0f64;
    let mut values: Vec<Option<f64>> = vec![None; model.num_vars()];

    for (name, value) in assignment {
        match model.var_by_name(name) {
            Some(id) => {
                if values[id.index()].is_some() {
                    violations.push(format!("variable {name:?} assigned twice"));
                }
                values[id.index()] = Some(*value);
            }
            None => violations.push(format!("unknown variable {name:?} in solution")),
        }
    }
    for (i, v) in model.vars().iter().enumerate() {
        let Some(x) = values[i] else {
            violations.push(format!("variable {:?} has no value", v.name));
            continue;
        };
        let below = v.lower - x;
        let above = x - v.upper;
        if below > tol {
            max_violation = max_violation.max(below);
            violations.push(format!(
                "variable {:?} = {x} is {below:.3e} below its lower bound {}",
                v.name, v.lower
            ));
        }
        if above > tol {
            max_violation = max_violation.max(above);
            violations.push(format!(
                "variable {:?} = {x} is {above:.3e} above its upper bound {}",
                v.name, v.upper
            ));
        }
        if v.binary {
            let frac = (x - x.round()).abs();
            if frac > tol {
                max_violation = max_violation.max(frac);
                violations.push(format!(
                    "binary {:?} = {x} is {frac:.3e} away from an integer",
                    v.name
                ));
            }
        }
    }
    for c in model.constraints() {
        let mut act = 0.0;
        let mut complete = true;
        for &(v, coeff) in &c.terms {
            match values[v.index()] {
                Some(x) => act += coeff * x,
                None => complete = false,
            }
        }
        if !complete {
            // Already reported as missing variables above.
            continue;
        }
        let viol = match c.sense {
            Sense::Le => act - c.rhs,
            Sense::Ge => c.rhs - act,
            Sense::Eq => (act - c.rhs).abs(),
        };
        if viol > tol {
            max_violation = max_violation.max(viol);
            violations.push(format!(
                "row {:?}: activity {act} violates '{} {}' by {viol:.3e}",
                c.tag,
                c.sense.symbol(),
                c.rhs
            ));
        }
    }

    let objective = model
        .objective()
        .and_then(|(_, v)| values[v.index()]);
    SolutionCheck {
        ok: violations.is_empty(),
        max_violation,
        violations,
        objective,
    }
}
