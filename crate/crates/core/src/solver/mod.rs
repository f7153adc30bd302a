//! MILP backends behind a common trait, selected by name.

pub mod exact;
pub mod external;
pub mod lp_format;
pub mod simplex;

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::milp::{MilpModel, Solution};

pub use exact::{relaxation_bound, solve_exact, ExactSolver};
pub use external::{ExternalSolver, SOLVER_ENV};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("model has {binaries} binaries, the exact solver accepts at most {limit}; use --solver external")]
    TooLarge { binaries: usize, limit: usize },
    #[error("mip gap must lie in [0, 1), got {0}")]
    InvalidGap(f64),
    #[error("solver `{command}` is not available: {hint}")]
    SolverMissing { command: String, hint: String },
    #[error("solver protocol error: {message}")]
    Protocol { message: String, output: String },
    #[error("solver i/o: {0}")]
    Io(String),
    #[error("numerical trouble: {0}")]
    Numerical(String),
    #[error("unknown solver `{name}` (known: {known})")]
    Unknown { name: String, known: String },
}

impl SolveError {
    /// True when the failure comes from the environment rather than the model.
    pub fn is_environment(&self) -> bool {
        matches!(self, SolveError::SolverMissing { .. } | SolveError::Io(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveLimits {
    pub mip_gap: f64,
    pub time_limit: Option<f64>,
    pub node_limit: Option<u64>,
    pub max_binaries: usize,
}

impl Default for SolveLimits {
    fn default() -> Self {
        Self { mip_gap: 0.05, time_limit: None, node_limit: None, max_binaries: 25 }
    }
}

impl SolveLimits {
    pub fn with_gap(mip_gap: f64) -> Self {
        Self { mip_gap, ..Self::default() }
    }

    pub fn check(&self) -> Result<(), SolveError> {
        if !(0.0..1.0).contains(&self.mip_gap) || !self.mip_gap.is_finite() {
            return Err(SolveError::InvalidGap(self.mip_gap));
        }
        Ok(())
    }
}

pub trait MilpSolver: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, model: &MilpModel, limits: &SolveLimits) -> Result<Solution, SolveError>;
}

#[derive(Clone, Default)]
pub struct SolverRegistry {
    solvers: BTreeMap<String, Arc<dyn MilpSolver>>,
}

impl SolverRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// `exact` plus `external` driven by `command` (or the environment default).
    pub fn with_defaults(command: Option<&str>) -> Self {
        let mut r = Self::new();
        r.register(Arc::new(ExactSolver));
        let ext = match command {
            Some(c) => ExternalSolver::new(c),
            None => ExternalSolver::from_env(),
        };
        r.register(Arc::new(ext));
        r
    }

    pub fn register(&mut self, solver: Arc<dyn MilpSolver>) {
        self.solvers.insert(solver.name().to_string(), solver);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn MilpSolver>, SolveError> {
        self.solvers.get(name).cloned().ok_or_else(|| SolveError::Unknown { name: name.to_string(), known: self.names().join(", ") })
    }

    pub fn names(&self) -> Vec<&str> {
        self.solvers.keys().map(String::as_str).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_lookup() {
        let r = SolverRegistry::with_defaults(Some("true"));
        assert_eq!(r.names(), vec!["exact", "external"]);
        assert_eq!(r.get("exact").unwrap().name(), "exact");
        assert!(matches!(r.get("cplex"), Err(SolveError::Unknown { .. })));
    }

    #[test]
    fn gap_domain() {
        assert!(SolveLimits::with_gap(0.0).check().is_ok());
        assert!(SolveLimits::with_gap(1.0).check().is_err());
        assert!(SolveLimits::with_gap(-0.1).check().is_err());
        assert!(SolveLimits::with_gap(f64::NAN).check().is_err());
    }
}
