//! Subprocess adapter: LP file in, `bss-sol 1` solution file out.
//!
//! The command is invoked as `<cmd...> <model.lp> <out.sol> --mip-gap <g> [--time-limit <s>]`.
//! The solution file is line oriented:
//!
//! ```text
//! bss-sol 1
//! status optimal|time_limit|node_limit|infeasible|unbounded
//! objective <f64|none>
//! bound <f64|none>
//! gap <f64|none>
//! var <name> <value>
//! ```

use std::collections::HashMap;
use std::path::Path;
use std::process::Command;

use log::debug;

use crate::milp::{relative_gap, MilpModel, Solution, SolveStatus, VarKind};

use super::lp_format::export_lp;
use super::{MilpSolver, SolveError, SolveLimits};

pub const SOLVER_ENV: &str = "BSS_SOLVER_CMD";

/// Exit status the bundled adapter uses when its solver backend is missing.
const EXIT_ENVIRONMENT: i32 = 4;

#[derive(Debug, Clone)]
pub struct ExternalSolver {
    pub command: Vec<String>,
}

impl ExternalSolver {
    pub fn new(command: &str) -> Self {
        Self { command: command.split_whitespace().map(str::to_string).collect() }
    }

    /// `$BSS_SOLVER_CMD`, else the bundled HiGHS adapter script.
    pub fn from_env() -> Self {
        match std::env::var(SOLVER_ENV) {
            Ok(c) if !c.trim().is_empty() => Self::new(&c),
            _ => Self::new(&default_command()),
        }
    }
}

pub fn default_command() -> String {
    let script = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../tools/highs_solve.py");
    let script = script.canonicalize().unwrap_or(script);
    format!("python3 {}", script.display())
}

impl MilpSolver for ExternalSolver {
    fn name(&self) -> &'static str {
        "external"
    }

    fn solve(&self, model: &MilpModel, limits: &SolveLimits) -> Result<Solution, SolveError> {
        solve_external(model, limits, &self.command)
    }
}

pub fn solve_external(model: &MilpModel, limits: &SolveLimits, command: &[String]) -> Result<Solution, SolveError> {
    limits.check()?;
    let Some((program, args)) = command.split_first() else {
        return Err(SolveError::SolverMissing { command: String::new(), hint: "empty solver command".into() });
    };
    let dir = tempfile::tempdir().map_err(|e| SolveError::Io(e.to_string()))?;
    let lp = dir.path().join("model.lp");
    let sol = dir.path().join("model.sol");
    export_lp(model, &lp).map_err(|e| SolveError::Io(e.to_string()))?;

    let mut cmd = Command::new(program);
    cmd.args(args).arg(&lp).arg(&sol).arg("--mip-gap").arg(limits.mip_gap.to_string());
    if let Some(t) = limits.time_limit {
        cmd.arg("--time-limit").arg(t.to_string());
    }
    debug!("running {:?}", cmd);
    let out = cmd.output().map_err(|e| SolveError::SolverMissing {
        command: command.join(" "),
        hint: format!("{e}; install a solver or pass --solver-cmd / set {SOLVER_ENV}"),
    })?;
    let captured = format!("{}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr));
    if !out.status.success() {
        if out.status.code() == Some(EXIT_ENVIRONMENT) {
            return Err(SolveError::SolverMissing { command: command.join(" "), hint: captured.trim().to_string() });
        }
        return Err(SolveError::Protocol { message: format!("solver exited with {}", out.status), output: captured });
    }
    let text = std::fs::read_to_string(&sol)
        .map_err(|e| SolveError::Protocol { message: format!("no solution file: {e}"), output: captured.clone() })?;
    parse_solution(model, &text).map_err(|message| SolveError::Protocol { message, output: captured })
}

fn parse_opt(tok: Option<&str>, what: &str) -> Result<Option<f64>, String> {
    match tok {
        None => Err(format!("missing value for `{what}`")),
        Some("none") => Ok(None),
        Some(v) => v.parse::<f64>().map(Some).map_err(|_| format!("bad number `{v}` for `{what}`")),
    }
}

/// Parses a `bss-sol 1` file against `model`.
pub fn parse_solution(model: &MilpModel, text: &str) -> Result<Solution, String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    if lines.next().map(str::trim) != Some("bss-sol 1") {
        return Err("missing `bss-sol 1` header".into());
    }
    let mut status = None;
    let mut bound = None;
    let mut gap = None;
    let mut values: HashMap<&str, f64> = HashMap::new();
    for line in lines {
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("status") => status = tok.next().map(str::to_string),
            Some("objective") => {
                parse_opt(tok.next(), "objective")?;
            }
            Some("bound") => bound = parse_opt(tok.next(), "bound")?,
            Some("gap") => gap = parse_opt(tok.next(), "gap")?,
            Some("var") => {
                let name = tok.next().ok_or("var line without a name")?;
                let v = parse_opt(tok.next(), name)?.ok_or_else(|| format!("var `{name}` has no value"))?;
                values.insert(name, v);
            }
            Some(other) => return Err(format!("unknown record `{other}`")),
            None => {}
        }
    }
    let status = status.ok_or("missing status")?;
    let has_values = !values.is_empty() || model.vars.is_empty();
    let status = match status.as_str() {
        "optimal" => SolveStatus::Optimal,
        "time_limit" | "node_limit" | "limit" if has_values => SolveStatus::LimitFeasible,
        "time_limit" | "node_limit" | "limit" => SolveStatus::LimitNoSolution,
        "infeasible" => SolveStatus::Infeasible,
        "unbounded" => SolveStatus::Unbounded,
        other => return Err(format!("unknown status `{other}`")),
    };
    if !status.has_solution() {
        return Ok(Solution { bound, ..Solution::without_values(status) });
    }
    let mut xs = Vec::with_capacity(model.vars.len());
    for v in &model.vars {
        let x = *values.get(v.name.as_str()).ok_or_else(|| format!("no value for variable `{}`", v.name))?;
        xs.push(if v.kind == VarKind::Binary { x.round() } else { x.clamp(v.lb, v.ub) });
    }
    let objective = model.objective_value(&xs);
    let bound = bound.map(|b| b + model.obj_constant);
    let gap = match (gap, bound) {
        (Some(g), _) => Some(g),
        (None, Some(b)) => Some(relative_gap(objective, b)),
        _ => None,
    };
    Ok(Solution { status, values: xs, objective: Some(objective), bound, gap, nodes: 0 })
}
