//! Linear programs with optional binary variables.
//!
//! [`LpModel`] is a plain container (variables with bounds, linear
//! constraints, a linear objective). [`solve_lp`] runs a dense two-phase
//! bounded-variable primal simplex; [`solve_milp`] wraps it in best-first
//! branch-and-bound. [`export_lp_text`] / [`parse_lp_text`] read and write
//! the CPLEX-style LP interchange format.

mod lp_format;
mod milp;
mod simplex;

pub use lp_format::{export_lp_text, parse_lp_text};
pub use milp::{solve_milp, solve_milp_report, solve_milp_with, MilpOptions, MilpReport};
pub use simplex::{solve_lp, solve_lp_with, SimplexOptions};

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("duplicate variable name '{0}'")]
    DuplicateName(String),
    #[error("invalid name '{0}'")]
    InvalidName(String),
    #[error("unknown variable index {0}")]
    UnknownVariable(usize),
    #[error("unknown variable '{0}'")]
    UnknownVariableName(String),
    #[error("invalid bounds for '{name}': [{lower}, {upper}]")]
    InvalidBounds {
        name: String,
        lower: f64,
        upper: f64,
    },
    #[error("non-finite coefficient in {0}")]
    InvalidCoefficient(String),
    #[error("model has {0} binary variables; use solve_milp")]
    HasBinaries(usize),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("branch-and-bound node limit {0} exceeded")]
    NodeLimitExceeded(usize),
    #[error("LP text line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub kind: VarKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * values[v.0]).sum()
    }

    /// How far `values` are from satisfying the constraint (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.activity(values);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Objective {
    pub sense: Sense,
    pub terms: Vec<(VarId, f64)>,
}

fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpModel {
    name: String,
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
    objective: Objective,
    by_name: HashMap<String, VarId>,
}

impl Default for LpModel {
    fn default() -> Self {
        LpModel::new("model")
    }
}

impl LpModel {
    pub fn new(name: impl Into<String>) -> Self {
        LpModel {
            name: name.into(),
            variables: Vec::new(),
            constraints: Vec::new(),
            objective: Objective {
                sense: Sense::Minimize,
                terms: Vec::new(),
            },
            by_name: HashMap::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        kind: VarKind,
    ) -> Result<VarId, LpError> {
        let name = name.into();
        if !valid_name(&name) {
            return Err(LpError::InvalidName(name));
        }
        if self.by_name.contains_key(&name) {
            return Err(LpError::DuplicateName(name));
        }
        let (lower, upper) = match kind {
            VarKind::Binary => (0.0, 1.0),
            VarKind::Continuous => (lower, upper),
        };
        if lower.is_nan()
            || upper.is_nan()
            || lower > upper
            || lower == f64::INFINITY
            || upper == f64::NEG_INFINITY
        {
            return Err(LpError::InvalidBounds { name, lower, upper });
        }
        let id = VarId(self.variables.len());
        self.by_name.insert(name.clone(), id);
        self.variables.push(Variable {
            name,
            lower,
            upper,
            kind,
        });
        Ok(id)
    }

    pub fn add_continuous(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
    ) -> Result<VarId, LpError> {
        self.add_var(name, lower, upper, VarKind::Continuous)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> Result<VarId, LpError> {
        self.add_var(name, 0.0, 1.0, VarKind::Binary)
    }

    fn check_terms(&self, what: &str, terms: &[(VarId, f64)]) -> Result<(), LpError> {
        for &(v, c) in terms {
            if v.0 >= self.variables.len() {
                return Err(LpError::UnknownVariable(v.0));
            }
            if !c.is_finite() {
                return Err(LpError::InvalidCoefficient(what.to_string()));
            }
        }
        Ok(())
    }

    /// Adds a constraint; an empty `name` gets `c<index>`.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarId, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> Result<usize, LpError> {
        let mut name = name.into();
        if name.is_empty() {
            name = format!("c{}", self.constraints.len());
        }
        if !valid_name(&name) {
            return Err(LpError::InvalidName(name));
        }
        self.check_terms(&name, &terms)?;
        if !rhs.is_finite() {
            return Err(LpError::InvalidCoefficient(name));
        }
        self.constraints.push(Constraint {
            name,
            terms,
            relation,
            rhs,
        });
        Ok(self.constraints.len() - 1)
    }

    pub fn set_objective(&mut self, sense: Sense, terms: Vec<(VarId, f64)>) -> Result<(), LpError> {
        self.check_terms("objective", &terms)?;
        self.objective = Objective { sense, terms };
        Ok(())
    }

    /// Overrides the bounds of an existing variable (binaries may only be fixed within [0, 1]).
    pub fn set_bounds(&mut self, var: VarId, lower: f64, upper: f64) -> Result<(), LpError> {
        let v = self
            .variables
            .get_mut(var.0)
            .ok_or(LpError::UnknownVariable(var.0))?;
        let bad = lower.is_nan()
            || upper.is_nan()
            || lower > upper
            || (v.kind == VarKind::Binary && (lower < 0.0 || upper > 1.0));
        if bad {
            return Err(LpError::InvalidBounds {
                name: v.name.clone(),
                lower,
                upper,
            });
        }
        v.lower = lower;
        v.upper = upper;
        Ok(())
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.variables[id.0]
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_binaries(&self) -> usize {
        self.variables
            .iter()
            .filter(|v| v.kind == VarKind::Binary)
            .count()
    }

    /// Objective value at `values`, summing terms in declaration order.
    pub fn evaluate_objective(&self, values: &[f64]) -> f64 {
        self.objective
            .terms
            .iter()
            .map(|&(v, c)| c * values[v.0])
            .sum()
    }

    /// Largest constraint or bound violation at `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let rows = self
            .constraints
            .iter()
            .map(|c| c.violation(values))
            .fold(0.0, f64::max);
        self.variables
            .iter()
            .zip(values)
            .map(|(v, &x)| (v.lower - x).max(x - v.upper).max(0.0))
            .fold(rows, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// NaN unless `status` is `Optimal`.
    pub objective_value: f64,
    /// Values indexed by [`VarId`]; empty unless `Optimal`.
    pub values: Vec<f64>,
    pub assignment: BTreeMap<String, f64>,
}

impl LpSolution {
    pub(crate) fn optimal(model: &LpModel, values: Vec<f64>) -> Self {
        let assignment = model
            .variables
            .iter()
            .zip(&values)
            .map(|(v, &x)| (v.name.clone(), x))
            .collect();
        LpSolution {
            status: LpStatus::Optimal,
            objective_value: model.evaluate_objective(&values),
            values,
            assignment,
        }
    }

    pub(crate) fn without_point(status: LpStatus) -> Self {
        LpSolution {
            status,
            objective_value: f64::NAN,
            values: Vec::new(),
            assignment: BTreeMap::new(),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.assignment.get(name).copied()
    }
}
