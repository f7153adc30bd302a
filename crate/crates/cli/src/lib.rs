//! Scenario runner: loads a scenario, builds and solves the models, checks
//! every schedule and writes CSV artifacts into a run directory.

pub mod artifacts;
pub mod error;
pub mod manifest;
pub mod modes;
pub mod summary;

use bss_core::milp::{audit_semantics, validate_solution, BssModel, Solution, SolveStatus};
use bss_core::scenario::{load_scenario, validate_scenario, Scenario};
use bss_core::solver::SolverRegistry;
use serde::Serialize;

pub use artifacts::RunDir;
pub use error::{ErrorKind, RunError};
pub use manifest::{Cli, Mode, RunManifest, SolverSettings};

/// Feasibility tolerance every published schedule is checked against.
pub const CHECK_TOL: f64 = 1e-6;

/// Shared state of one run.
pub struct Run {
    pub manifest: RunManifest,
    pub scenario: Scenario,
    pub registry: SolverRegistry,
    pub dir: RunDir,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveRow {
    pub label: String,
    pub solver: String,
    pub status: &'static str,
    pub objective: Option<f64>,
    pub bound: Option<f64>,
    pub gap: Option<f64>,
    pub binaries: usize,
    pub rows: usize,
}

impl Run {
    /// Solves `bm`, then rejects any schedule that breaks a row, a bound or
    /// the semantic audit.
    pub fn solve(&self, bm: &BssModel, label: &str) -> Result<(Solution, SolveRow), RunError> {
        let stage = format!("solve {label}");
        let s = &self.manifest.solver;
        let solver = self.registry.get(&s.solver).map_err(|e| RunError::solve(&stage, e))?;
        let sol = solver.solve(&bm.model, &s.limits()).map_err(|e| RunError::solve(&stage, e))?;
        let row = SolveRow {
            label: label.to_string(),
            solver: s.solver.clone(),
            status: sol.status.as_str(),
            objective: sol.objective,
            bound: sol.bound,
            gap: sol.gap,
            binaries: bm.model.num_binaries(),
            rows: bm.model.constraints.len(),
        };
        match sol.status {
            SolveStatus::Optimal | SolveStatus::LimitFeasible => {}
            SolveStatus::Infeasible => {
                return Err(RunError::new(ErrorKind::Infeasible, stage, "model is infeasible").with_details(bm.model.warnings.clone()));
            }
            SolveStatus::LimitNoSolution => return Err(RunError::new(ErrorKind::Infeasible, stage, "limit reached before any feasible schedule was found")),
            SolveStatus::Unbounded => return Err(RunError::new(ErrorKind::Failure, stage, "model is unbounded")),
        }
        let report = validate_solution(&bm.model, &sol, CHECK_TOL).map_err(|e| RunError::validation(&stage, e))?;
        if !report.is_empty() {
            let details = report.rows.iter().take(20).map(|r| format!("{} ({}) off by {:.3e}", r.name, r.tag, r.amount)).collect();
            return Err(RunError::validation(&stage, format!("solution violates the model: {}", report.summary())).with_details(details));
        }
        let audit = audit_semantics(bm, &sol.values, CHECK_TOL);
        if !audit.is_empty() {
            let details = audit.iter().map(|f| format!("{}: {}", f.check, f.detail)).collect();
            return Err(RunError::validation(&stage, "schedule fails the semantic audit").with_details(details));
        }
        Ok((sol, row))
    }
}

pub fn load(manifest: &RunManifest) -> Result<Scenario, RunError> {
    let sc = load_scenario(&manifest.scenario).map_err(|e| RunError::validation("load scenario", e))?;
    let violations = validate_scenario(&sc);
    if !violations.is_empty() {
        let details = violations.iter().map(|v| v.to_string()).collect();
        return Err(RunError::validation("validate scenario", format!("{} violation(s)", violations.len())).with_details(details));
    }
    Ok(sc)
}

/// Runs one manifest end to end. The directory keeps its stale marker and
/// gains `error.json` when any stage fails.
pub fn run(manifest: &RunManifest) -> Result<(), RunError> {
    let dir = RunDir::create(&manifest.out)?;
    let result = execute(manifest, dir.clone());
    match &result {
        Ok(()) => dir.finish()?,
        Err(e) => dir.fail(e),
    }
    result
}

fn execute(manifest: &RunManifest, dir: RunDir) -> Result<(), RunError> {
    dir.json(artifacts::MANIFEST_FILE, manifest)?;
    manifest.solver.limits().check().map_err(|e| RunError::solve("settings", e))?;
    let scenario = load(manifest)?;
    let registry = SolverRegistry::with_defaults(manifest.solver.solver_cmd.as_deref());
    registry.get(&manifest.solver.solver).map_err(|e| RunError::solve("settings", e))?;
    let run = Run { manifest: manifest.clone(), scenario, registry, dir };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(manifest.workers)
        .build()
        .map_err(|e| RunError::environment("workers", e))?;
    pool.install(|| match manifest.mode {
        Mode::Plan => modes::plan(&run),
        Mode::Operate => modes::operate(&run),
        Mode::Compare => modes::compare(&run),
        Mode::CarbonSweep => modes::carbon_sweep(&run),
        Mode::AsStudy => modes::as_study(&run),
        Mode::Decompose => modes::decompose(&run),
    })
}
