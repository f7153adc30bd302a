#![allow(dead_code)]

use bss_core::milp::{MilpModel, VarKind};
use bss_core::solver::simplex::{solve_lp, LpStatus};

/// Best objective over every binary assignment, each completed by an LP; `None` if none is feasible.
pub fn brute_force(model: &MilpModel) -> Option<f64> {
    let bins: Vec<usize> = (0..model.vars.len()).filter(|&j| model.vars[j].kind == VarKind::Binary).collect();
    assert!(bins.len() <= 20, "brute force over {} binaries", bins.len());
    let mut cost = vec![0.0; model.vars.len()];
    for (&j, &c) in &model.objective {
        cost[j] = c;
    }
    let mut best: Option<f64> = None;
    for mask in 0u64..(1u64 << bins.len()) {
        let mut lb: Vec<f64> = model.vars.iter().map(|v| v.lb).collect();
        let mut ub: Vec<f64> = model.vars.iter().map(|v| v.ub).collect();
        let mut skip = false;
        for (k, &j) in bins.iter().enumerate() {
            let v = ((mask >> k) & 1) as f64;
            if v < lb[j] || v > ub[j] {
                skip = true;
                break;
            }
            lb[j] = v;
            ub[j] = v;
        }
        if skip {
            continue;
        }
        let r = solve_lp(&cost, &lb, &ub, &model.constraints);
        if r.status == LpStatus::Optimal {
            let obj = r.objective + model.obj_constant;
            best = Some(best.map_or(obj, |b: f64| b.min(obj)));
        }
    }
    best
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
