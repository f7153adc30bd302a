//! Depth-first branch and bound over the binaries with simplex relaxations.

use std::time::Instant;

use crate::milp::{MilpModel, Solution, SolveStatus, VarKind};

use super::simplex::{solve_lp, LpStatus};
use super::{MilpSolver, SolveError, SolveLimits};

const INT_TOL: f64 = 1e-6;

pub struct ExactSolver;

impl MilpSolver for ExactSolver {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn solve(&self, model: &MilpModel, limits: &SolveLimits) -> Result<Solution, SolveError> {
        solve_exact(model, limits)
    }
}

/// Bound on every integer-feasible objective from the LP relaxation.
pub fn relaxation_bound(model: &MilpModel) -> Option<f64> {
    let (cost, lb, ub) = columns(model);
    let r = solve_lp(&cost, &lb, &ub, &model.constraints);
    (r.status == LpStatus::Optimal).then(|| r.objective + model.obj_constant)
}

fn columns(model: &MilpModel) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = model.vars.len();
    let mut cost = vec![0.0; n];
    for (&j, &c) in &model.objective {
        cost[j] = c;
    }
    let lb = model.vars.iter().map(|v| v.lb).collect();
    let ub = model.vars.iter().map(|v| v.ub).collect();
    (cost, lb, ub)
}

pub fn solve_exact(model: &MilpModel, limits: &SolveLimits) -> Result<Solution, SolveError> {
    limits.check()?;
    let binaries: Vec<usize> = {
        let mut b: Vec<usize> = (0..model.vars.len()).filter(|&j| model.vars[j].kind == VarKind::Binary).collect();
        b.sort_by_key(|&j| (model.vars[j].priority, j));
        b
    };
    if binaries.len() > limits.max_binaries {
        return Err(SolveError::TooLarge { binaries: binaries.len(), limit: limits.max_binaries });
    }
    let (cost, base_lb, base_ub) = columns(model);
    let start = Instant::now();

    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut nodes: u64 = 0;
    let mut hit_limit = false;
    // each node is a list of (variable, fixed value)
    let mut stack: Vec<Vec<(usize, f64)>> = vec![vec![]];
    let mut root_unbounded = false;

    while let Some(fixes) = stack.pop() {
        if limits.node_limit.is_some_and(|n| nodes >= n) || limits.time_limit.is_some_and(|t| start.elapsed().as_secs_f64() >= t) {
            hit_limit = true;
            break;
        }
        nodes += 1;
        let mut lb = base_lb.clone();
        let mut ub = base_ub.clone();
        for &(j, v) in &fixes {
            lb[j] = v;
            ub[j] = v;
        }
        let lp = solve_lp(&cost, &lb, &ub, &model.constraints);
        match lp.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                if fixes.is_empty() {
                    root_unbounded = true;
                    break;
                }
                continue;
            }
            LpStatus::IterationLimit => return Err(SolveError::Numerical("simplex iteration limit reached".into())),
        }
        if let Some((best, _)) = &incumbent {
            if lp.objective >= best - prune_tol(*best) {
                continue;
            }
        }
        let free: Vec<usize> = binaries.iter().copied().filter(|&j| lb[j] != ub[j]).collect();
        let branch = free.iter().copied().find(|&j| (lp.x[j] - lp.x[j].round()).abs() > INT_TOL);
        match branch {
            Some(j) => {
                let v = lp.x[j];
                let near = v.round();
                let mut far_fix = fixes.clone();
                far_fix.push((j, 1.0 - near));
                let mut near_fix = fixes;
                near_fix.push((j, near));
                stack.push(far_fix);
                stack.push(near_fix);
            }
            None => {
                // complete with every binary fixed at its rounded value
                let mut lb2 = lb.clone();
                let mut ub2 = ub.clone();
                for &j in &free {
                    let v = lp.x[j].round().clamp(0.0, 1.0);
                    lb2[j] = v;
                    ub2[j] = v;
                }
                let done = if free.is_empty() { lp } else { solve_lp(&cost, &lb2, &ub2, &model.constraints) };
                match done.status {
                    LpStatus::Optimal => {
                        let better = incumbent.as_ref().map_or(true, |(b, _)| done.objective < b - prune_tol(*b));
                        if better {
                            let mut xs = done.x;
                            for &j in &binaries {
                                xs[j] = xs[j].round();
                            }
                            incumbent = Some((done.objective, xs));
                        }
                    }
                    _ => {
                        if let Some(&j) = free.first() {
                            let mut a = fixes.clone();
                            a.push((j, 0.0));
                            let mut b = fixes;
                            b.push((j, 1.0));
                            stack.push(b);
                            stack.push(a);
                        }
                    }
                }
            }
        }
    }

    if root_unbounded {
        return Ok(Solution { nodes, ..Solution::without_values(SolveStatus::Unbounded) });
    }
    Ok(match incumbent {
        Some((obj, values)) => {
            let objective = obj + model.obj_constant;
            let status = if hit_limit { SolveStatus::LimitFeasible } else { SolveStatus::Optimal };
            Solution {
                status,
                values,
                objective: Some(objective),
                bound: if hit_limit { None } else { Some(objective) },
                gap: if hit_limit { None } else { Some(0.0) },
                nodes,
            }
        }
        None if hit_limit => Solution { nodes, ..Solution::without_values(SolveStatus::LimitNoSolution) },
        None => Solution { nodes, ..Solution::without_values(SolveStatus::Infeasible) },
    })
}

fn prune_tol(best: f64) -> f64 {
    1e-7 * best.abs().max(1.0)
}
