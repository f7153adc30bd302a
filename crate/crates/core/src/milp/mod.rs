//! Canonical linear model, the swapping-station builders and solution checks.

mod build;
mod check;
mod report;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use build::{
    build_operations_model, build_planning_model, AncillaryMode, BssIndex, BssModel, CarbonTerm, ModelContext, ModelKind,
    OperationsOptions, Satisfaction, SoePin, Visit,
};
pub use check::{audit_semantics, validate_solution, AuditFinding, RowViolation, ValidationReport};
pub use report::{write_constraint_audit, BssSolution, ProfitBreakdown, SwapRecord};

pub type VarId = usize;

#[derive(Debug, Error, PartialEq)]
pub enum MilpError {
    #[error("signal `{name}` misaligned with the scenario grid: {message}")]
    Alignment { name: String, message: String },
    #[error("unknown station `{0}` in trip data")]
    UnknownStation(String),
    #[error("solution has {found} values, model has {expected} variables")]
    IncompleteSolution { found: usize, expected: usize },
    #[error("solution value for `{0}` is not finite")]
    NonFinite(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lb: f64,
    pub ub: f64,
    /// Lower values are branched on first.
    pub priority: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
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

/// Which formulation family a row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tag {
    Eq3,
    Eq4,
    Eq5,
    Eq6,
    Eq7,
    Eq8,
    Eq9,
    Eq10,
    Eq10Ext,
    Eq11,
    Eq12,
    Eq13,
    Eq14,
    Eq15,
    Eq16,
    Eq17,
    Eq18,
    Eq19,
    Eq20,
    Eq21,
    Plumbing,
}

impl Tag {
    pub const ALL: [Tag; 21] = [
        Tag::Eq3,
        Tag::Eq4,
        Tag::Eq5,
        Tag::Eq6,
        Tag::Eq7,
        Tag::Eq8,
        Tag::Eq9,
        Tag::Eq10,
        Tag::Eq10Ext,
        Tag::Eq11,
        Tag::Eq12,
        Tag::Eq13,
        Tag::Eq14,
        Tag::Eq15,
        Tag::Eq16,
        Tag::Eq17,
        Tag::Eq18,
        Tag::Eq19,
        Tag::Eq20,
        Tag::Eq21,
        Tag::Plumbing,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Tag::Eq3 => "Eq3",
            Tag::Eq4 => "Eq4",
            Tag::Eq5 => "Eq5",
            Tag::Eq6 => "Eq6",
            Tag::Eq7 => "Eq7",
            Tag::Eq8 => "Eq8",
            Tag::Eq9 => "Eq9",
            Tag::Eq10 => "Eq10",
            Tag::Eq10Ext => "Eq10_ext",
            Tag::Eq11 => "Eq11",
            Tag::Eq12 => "Eq12",
            Tag::Eq13 => "Eq13",
            Tag::Eq14 => "Eq14",
            Tag::Eq15 => "Eq15",
            Tag::Eq16 => "Eq16",
            Tag::Eq17 => "Eq17",
            Tag::Eq18 => "Eq18",
            Tag::Eq19 => "Eq19",
            Tag::Eq20 => "Eq20",
            Tag::Eq21 => "Eq21",
            Tag::Plumbing => "plumbing",
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coefs: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    pub tag: Tag,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.coefs.iter().map(|&(j, a)| a * values[j]).sum()
    }

    /// Amount by which `values` violate the row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.activity(values);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// Variables, rows and a linear objective to minimize.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MilpModel {
    pub name: String,
    pub vars: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: BTreeMap<VarId, f64>,
    pub obj_constant: f64,
    pub warnings: Vec<String>,
    lookup: HashMap<String, VarId>,
}

impl MilpModel {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), ..Default::default() }
    }

    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind, lb: f64, ub: f64, priority: u8) -> VarId {
        let name = name.into();
        assert!(!self.lookup.contains_key(&name), "duplicate variable {name}");
        let id = self.vars.len();
        self.lookup.insert(name.clone(), id);
        self.vars.push(Variable { name, kind, lb, ub, priority });
        id
    }

    pub fn binary(&mut self, name: impl Into<String>, priority: u8) -> VarId {
        self.add_var(name, VarKind::Binary, 0.0, 1.0, priority)
    }

    pub fn continuous(&mut self, name: impl Into<String>, lb: f64, ub: f64) -> VarId {
        self.add_var(name, VarKind::Continuous, lb, ub, u8::MAX)
    }

    /// Adds a row, merging repeated variables and dropping zero terms.
    pub fn add_row(&mut self, terms: &[(VarId, f64)], sense: Sense, rhs: f64, tag: Tag) {
        let mut merged: BTreeMap<VarId, f64> = BTreeMap::new();
        for &(j, a) in terms {
            assert!(j < self.vars.len(), "row references undeclared variable {j}");
            *merged.entry(j).or_insert(0.0) += a;
        }
        let coefs = merged.into_iter().filter(|&(_, a)| a != 0.0).collect();
        self.constraints.push(Constraint { coefs, sense, rhs, tag });
    }

    pub fn add_obj(&mut self, j: VarId, c: f64) {
        if c != 0.0 {
            *self.objective.entry(j).or_insert(0.0) += c;
        }
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.lookup.get(name).copied()
    }

    pub fn num_binaries(&self) -> usize {
        self.vars.iter().filter(|v| v.kind == VarKind::Binary).count()
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.obj_constant + self.objective.iter().map(|(&j, &c)| c * values[j]).sum::<f64>()
    }

    pub fn row_name(&self, k: usize) -> String {
        format!("c{:06}_{}", k, self.constraints[k].tag)
    }

    pub fn count_by_tag(&self) -> BTreeMap<Tag, usize> {
        let mut m = BTreeMap::new();
        for c in &self.constraints {
            *m.entry(c.tag).or_insert(0) += 1;
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// Proven optimal within the requested gap.
    Optimal,
    /// A limit stopped the search; an incumbent exists.
    LimitFeasible,
    /// A limit stopped the search before any incumbent was found.
    LimitNoSolution,
    Infeasible,
    Unbounded,
}

impl SolveStatus {
    pub fn has_solution(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::LimitFeasible)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::LimitFeasible => "limit_feasible",
            SolveStatus::LimitNoSolution => "limit_no_solution",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
        }
    }
}

/// Values of every model variable plus solve statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: SolveStatus,
    pub values: Vec<f64>,
    pub objective: Option<f64>,
    pub bound: Option<f64>,
    pub gap: Option<f64>,
    pub nodes: u64,
}

impl Solution {
    pub fn without_values(status: SolveStatus) -> Self {
        Self { status, values: vec![], objective: None, bound: None, gap: None, nodes: 0 }
    }

    /// Value of a named variable.
    pub fn value(&self, model: &MilpModel, name: &str) -> Option<f64> {
        model.var_id(name).and_then(|j| self.values.get(j).copied())
    }
}

/// Relative gap between an incumbent and a bound.
pub fn relative_gap(incumbent: f64, bound: f64) -> f64 {
    let diff = (incumbent - bound).max(0.0);
    if diff <= 1e-9 {
        0.0
    } else if incumbent.abs() < 1e-12 {
        f64::INFINITY
    } else {
        diff / incumbent.abs()
    }
}
