//! The MILP problem container.
//!
//! A [`Model`] owns a list of variables (continuous with arbitrary finite or
//! infinite bounds, or binary), a list of tagged linear constraints, and an
//! optional objective. The objective is deliberately restricted to a single
//! variable with unit coefficient: every use in this workspace optimizes one
//! network output at a time, and the restriction keeps the LP file dialect and
//! the solution checker honest. Encode a general linear objective by adding a
//! fresh variable `t` together with an equality row defining it, then optimize
//! `t`.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Handle to a variable inside one [`Model`]. Handles are only meaningful for
/// the model that produced them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct VarId(u32);

impl VarId {
    /// Position of the variable in the model's column order.
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Direction of a constraint row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

/// Direction of the objective.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ObjSense {
    Minimize,
    Maximize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Variable {
    pub name: String,
    /// Lower bound; `f64::NEG_INFINITY` means unbounded below.
    pub lower: f64,
    /// Upper bound; `f64::INFINITY` means unbounded above.
    pub upper: f64,
    /// Binary variables are restricted to {0, 1}; their `lower`/`upper` are
    /// kept at 0/1 and the relaxation treats them as continuous on [0, 1].
    pub binary: bool,
}

/// One tagged row `sum(coeff * var) sense rhs`.
///
/// Terms keep their insertion order and may repeat a variable; repeated terms
/// add up. Tags are free-form but must be unique per model so that rows can be
/// named in LP files and diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearConstraint {
    pub tag: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Model {
    pub name: String,
    vars: Vec<Variable>,
    constraints: Vec<LinearConstraint>,
    objective: Option<(ObjSense, VarId)>,
}

impl Model {
    pub fn new(name: impl Into<String>) -> Self {
        Model {
            name: name.into(),
            ..Model::default()
        }
    }

    /// Adds a continuous variable and returns its handle.
    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.vars.push(Variable {
            name: name.into(),
            lower,
            upper,
            binary: false,
        });
        VarId(self.vars.len() as u32 - 1)
    }

    /// Adds a binary variable (bounds fixed to [0, 1]).
    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        self.vars.push(Variable {
            name: name.into(),
            lower: 0.0,
            upper: 1.0,
            binary: true,
        });
        VarId(self.vars.len() as u32 - 1)
    }

    pub fn add_constraint(
        &mut self,
        tag: impl Into<String>,
        terms: Vec<(VarId, f64)>,
        sense: Sense,
        rhs: f64,
    ) {
        self.constraints.push(LinearConstraint {
            tag: tag.into(),
            terms,
            sense,
            rhs,
        });
    }

    /// Sets the objective to optimize a single variable. Calling this again
    /// replaces the previous objective — last write wins.
    pub fn set_objective(&mut self, sense: ObjSense, var: VarId) {
        self.objective = Some((sense, var));
    }

    pub fn objective(&self) -> Option<(ObjSense, VarId)> {
        self.objective
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id.index()]
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn num_binaries(&self) -> usize {
        self.vars.iter().filter(|v| v.binary).count()
    }

    /// Ids of all binary variables in column order.
    pub fn binaries(&self) -> Vec<VarId> {
        (0..self.vars.len())
            .filter(|&i| self.vars[i].binary)
            .map(|i| VarId(i as u32))
            .collect()
    }

    /// Finds a variable by name (linear scan; fine for file loading).
    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.vars
            .iter()
            .position(|v| v.name == name)
            .map(|i| VarId(i as u32))
    }

    pub(crate) fn set_var_bounds(&mut self, id: VarId, lower: f64, upper: f64) {
        let v = &mut self.vars[id.index()];
        v.lower = lower;
        v.upper = upper;
    }

    pub(crate) fn mark_binary(&mut self, id: VarId) {
        let v = &mut self.vars[id.index()];
        v.binary = true;
        v.lower = 0.0;
        v.upper = 1.0;
    }

    /// Structural sanity check. Returns one message per problem found; an
    /// empty vector means the model is well-formed.
    pub fn validate(&self) -> Vec<String> {
        let mut bad = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (i, v) in self.vars.iter().enumerate() {
            if v.name.is_empty() || v.name.chars().any(|c| c.is_whitespace() || c == ':') {
                bad.push(format!("variable {i}: name {:?} is not a valid token", v.name));
            }
            if !seen.insert(v.name.as_str()) {
                bad.push(format!("variable {i}: duplicate name {:?}", v.name));
            }
            if v.lower.is_nan() || v.upper.is_nan() {
                bad.push(format!("variable {:?}: NaN bound", v.name));
            } else if v.lower > v.upper {
                bad.push(format!(
                    "variable {:?}: lower bound {} exceeds upper bound {}",
                    v.name, v.lower, v.upper
                ));
            }
            if v.binary && (v.lower != 0.0 || v.upper != 1.0) {
                bad.push(format!(
                    "variable {:?}: binary with bounds [{}, {}] instead of [0, 1]",
                    v.name, v.lower, v.upper
                ));
            }
        }
        let mut tags = std::collections::HashSet::new();
        for (i, c) in self.constraints.iter().enumerate() {
            if !tags.insert(c.tag.as_str()) {
                bad.push(format!("constraint {i}: duplicate tag {:?}", c.tag));
            }
            if !c.rhs.is_finite() {
                bad.push(format!("constraint {:?}: non-finite rhs {}", c.tag, c.rhs));
            }
            for &(v, coeff) in &c.terms {
                if v.index() >= self.vars.len() {
                    bad.push(format!("constraint {:?}: unknown variable id {:?}", c.tag, v));
                }
                if !coeff.is_finite() {
                    bad.push(format!(
                        "constraint {:?}: non-finite coefficient {} on {:?}",
                        c.tag,
                        coeff,
                        self.vars.get(v.index()).map(|x| x.name.as_str()).unwrap_or("?")
                    ));
                }
            }
        }
        if let Some((_, v)) = self.objective {
            if v.index() >= self.vars.len() {
                bad.push(format!("objective references unknown variable id {:?}", v));
            }
        }
        bad
    }

    /// Pretty JSON dump of the whole model (variables, constraints with their
    /// tags, objective) with variables referenced by name, meant for diffing
    /// two encodings with standard text tools.
    pub fn to_debug_json(&self) -> String {
        use serde_json::{json, Value};
        let vars: Vec<Value> = self
            .vars
            .iter()
            .map(|v| {
                json!({
                    "name": v.name,
                    "lower": bound_json(v.lower),
                    "upper": bound_json(v.upper),
                    "binary": v.binary,
                })
            })
            .collect();
        let cons: Vec<Value> = self
            .constraints
            .iter()
            .map(|c| {
                let terms: Vec<Value> = c
                    .terms
                    .iter()
                    .map(|&(v, coeff)| json!({ "var": self.vars[v.index()].name, "coeff": coeff }))
                    .collect();
                json!({
                    "tag": c.tag,
                    "terms": terms,
                    "sense": c.sense.symbol(),
                    "rhs": c.rhs,
                })
            })
            .collect();
        let objective = self.objective.map(|(sense, v)| {
            json!({
                "sense": match sense { ObjSense::Minimize => "minimize", ObjSense::Maximize => "maximize" },
                "var": self.vars[v.index()].name,
            })
        });
        let doc = json!({
            "name": self.name,
            "variables": vars,
            "constraints": cons,
            "objective": objective,
        });
        serde_json::to_string_pretty(&doc).expect("model json")
    }

    /// Name-keyed structural equality, the notion used for file round trips:
    /// same variables (by name, with bit-identical bounds and the same binary
    /// flag — column order is irrelevant), same constraint sequence (tags,
    /// term order with bit-identical coefficients, senses, right-hand sides),
    /// and the same objective. The model `name` is ignored.
    pub fn structurally_eq(&self, other: &Model) -> bool {
        if self.vars.len() != other.vars.len()
            || self.constraints.len() != other.constraints.len()
        {
            return false;
        }
        for v in &self.vars {
            let Some(o) = other.var_by_name(&v.name).map(|id| other.var(id)) else {
                return false;
            };
            if v.lower.to_bits() != o.lower.to_bits()
                || v.upper.to_bits() != o.upper.to_bits()
                || v.binary != o.binary
            {
                return false;
            }
        }
        for (c, o) in self.constraints.iter().zip(&other.constraints) {
            if c.tag != o.tag
                || c.sense != o.sense
                || c.rhs.to_bits() != o.rhs.to_bits()
                || c.terms.len() != o.terms.len()
            {
                return false;
            }
            for (&(v, coeff), &(ov, ocoeff)) in c.terms.iter().zip(&o.terms) {
                if self.vars[v.index()].name != other.vars[ov.index()].name
                    || coeff.to_bits() != ocoeff.to_bits()
                {
                    return false;
                }
            }
        }
        match (self.objective, other.objective) {
            (None, None) => true,
            (Some((s, v)), Some((os, ov))) => {
                s == os && self.vars[v.index()].name == other.vars[ov.index()].name
            }
            _ => false,
        }
    }
}

fn bound_json(b: f64) -> serde_json::Value {
    if b == f64::INFINITY {
        serde_json::Value::String("inf".into())
    } else if b == f64::NEG_INFINITY {
        serde_json::Value::String("-inf".into())
    } else {
        serde_json::json!(b)
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "model {:?}: {} vars ({} binary), {} constraints",
            self.name,
            self.vars.len(),
            self.num_binaries(),
            self.constraints.len()
        )
    }
}
