use std::collections::{BTreeMap, BTreeSet};

use super::{BssModel, MilpError, MilpModel, Sense, Solution, Tag, VarKind};

#[derive(Debug, Clone, PartialEq)]
pub struct RowViolation {
    pub row: usize,
    pub name: String,
    pub tag: Tag,
    pub sense: Sense,
    pub amount: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub rows: Vec<RowViolation>,
    /// (variable, amount outside its bounds)
    pub bounds: Vec<(String, f64)>,
    /// (variable, distance to the nearest integer)
    pub integrality: Vec<(String, f64)>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty() && self.bounds.is_empty() && self.integrality.is_empty()
    }

    pub fn tags(&self) -> BTreeSet<Tag> {
        self.rows.iter().map(|r| r.tag).collect()
    }

    pub fn cites(&self, tag: Tag) -> bool {
        self.rows.iter().any(|r| r.tag == tag)
    }

    pub fn summary(&self) -> String {
        let mut by_tag: BTreeMap<Tag, usize> = BTreeMap::new();
        for r in &self.rows {
            *by_tag.entry(r.tag).or_insert(0) += 1;
        }
        let mut parts: Vec<String> = by_tag.iter().map(|(t, n)| format!("{t}: {n}")).collect();
        if !self.bounds.is_empty() {
            parts.push(format!("bounds: {}", self.bounds.len()));
        }
        if !self.integrality.is_empty() {
            parts.push(format!("integrality: {}", self.integrality.len()));
        }
        parts.join(", ")
    }
}

/// Lists every row, bound and integrality requirement violated beyond `tol`.
pub fn validate_solution(model: &MilpModel, sol: &Solution, tol: f64) -> Result<ValidationReport, MilpError> {
    let values = &sol.values;
    if values.len() != model.vars.len() {
        return Err(MilpError::IncompleteSolution { found: values.len(), expected: model.vars.len() });
    }
    let mut rep = ValidationReport::default();
    for (v, &x) in model.vars.iter().zip(values) {
        if !x.is_finite() {
            return Err(MilpError::NonFinite(v.name.clone()));
        }
        let out = (v.lb - x).max(x - v.ub).max(0.0);
        if out > tol {
            rep.bounds.push((v.name.clone(), out));
        }
        if v.kind == VarKind::Binary {
            let frac = (x - x.round()).abs();
            if frac > tol {
                rep.integrality.push((v.name.clone(), frac));
            }
        }
    }
    for (k, c) in model.constraints.iter().enumerate() {
        let amount = c.violation(values);
        if amount > tol {
            rep.rows.push(RowViolation { row: k, name: model.row_name(k), tag: c.tag, sense: c.sense, amount });
        }
    }
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditFinding {
    pub check: &'static str,
    pub detail: String,
}

/// Re-derives the physical meaning of a schedule from raw values without
/// using the linearized rows: one customer per battery and step, no swaps in
/// adjacent steps, SOE handoff to the inbound vehicle battery, exclusive
/// charge/discharge and the grid balance and limit.
pub fn audit_semantics(bm: &BssModel, values: &[f64], tol: f64) -> Vec<AuditFinding> {
    let ix = &bm.index;
    let ctx = &bm.ctx;
    let mut out = Vec::new();
    let on = |j: usize| values[j] > 0.5;
    let mut push = |check: &'static str, detail: String| out.push(AuditFinding { check, detail });

    // (s, i, t) -> visits swapped there
    let mut swaps: BTreeMap<(usize, usize, usize), Vec<usize>> = BTreeMap::new();
    for (n, v) in ix.visits.iter().enumerate() {
        let mut used = 0;
        for &i in &ctx.slots[v.station] {
            if on(ix.x[&(v.station, i, v.customer)]) {
                used += 1;
                swaps.entry((v.station, i, v.arrival_step)).or_default().push(n);
            }
        }
        if used > 1 {
            push("single_assignment", format!("customer {} takes {used} batteries at station {}", v.customer, v.station));
        }
    }
    for (&(s, i, t), who) in &swaps {
        if who.len() > 1 {
            push("single_assignment", format!("battery ({s},{i}) serves {} customers at step {t}", who.len()));
        }
    }
    for (&(s, i, t), &z) in &ix.z {
        let n = swaps.get(&(s, i, t)).map_or(0, Vec::len);
        if on(z) != (n == 1) {
            push("single_assignment", format!("swap flag of battery ({s},{i}) at step {t} disagrees with {n} assignments"));
        }
    }
    for &(s, i, t) in swaps.keys() {
        if swaps.contains_key(&(s, i, t + 1)) {
            push("consecutive_swap", format!("battery ({s},{i}) swapped at steps {t} and {}", t + 1));
        }
    }

    // vehicle energy along each route, recomputed from station SOE
    let mut by_trip: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (n, v) in ix.visits.iter().enumerate() {
        by_trip.entry(v.trip).or_default().push(n);
    }
    let mut veh_of = vec![0.0; ix.visits.len()];
    let mut swapped_at: Vec<Option<usize>> = vec![None; ix.visits.len()];
    for list in by_trip.values_mut() {
        list.sort_by_key(|&n| ix.visits[n].position);
        let mut received = 0.0;
        for &n in list.iter() {
            let v = &ix.visits[n];
            let veh = v.q_ini_kwh - v.consumption_kwh + received;
            veh_of[n] = veh;
            let slot = ctx.slots[v.station].iter().copied().find(|&i| on(ix.x[&(v.station, i, v.customer)]));
            let sold = match slot {
                Some(i) => values[ix.q[&(v.station, i, v.arrival_step)]] - veh,
                None => 0.0,
            };
            swapped_at[n] = slot;
            received += sold;
            let model_veh = values[ix.q_veh[&(v.customer, v.station)]];
            if (model_veh - veh).abs() > tol {
                push("soe_handoff", format!("vehicle energy of customer {} at station {}: model {model_veh}, derived {veh}", v.customer, v.station));
            }
            let model_sold = values[ix.q_s2v[&(v.customer, v.station)]];
            if (model_sold - sold).abs() > tol {
                push("soe_handoff", format!("energy sold to customer {} at station {}: model {model_sold}, derived {sold}", v.customer, v.station));
            }
        }
    }
    for (&(s, i, t), &p) in &ix.p_chg {
        let q0 = values[ix.q[&(s, i, t)]];
        let q1 = values[ix.q[&(s, i, t + 1)]];
        match swaps.get(&(s, i, t)).and_then(|w| w.first()) {
            Some(&n) => {
                if (q1 - veh_of[n]).abs() > tol {
                    push("soe_handoff", format!("battery ({s},{i}) after swap at step {t}: {q1}, inbound vehicle had {}", veh_of[n]));
                }
                if values[p] > tol || values[ix.p_dsg[&(s, i, t)]] > tol {
                    push("soe_dynamics", format!("battery ({s},{i}) exchanges power while being swapped at step {t}"));
                }
            }
            None => {
                let pd = values[ix.p_dsg[&(s, i, t)]];
                let expect = q0 + ctx.grid.delta_t * (values[p] * ctx.eta - pd / ctx.eta);
                if (q1 - expect).abs() > tol {
                    push("soe_dynamics", format!("battery ({s},{i}) step {t}: {q1}, charging implies {expect}"));
                }
            }
        }
        let pc = values[p];
        let pd = values[ix.p_dsg[&(s, i, t)]];
        if pc > tol && pd > tol {
            push("charge_exclusivity", format!("battery ({s},{i}) charges {pc} and discharges {pd} at step {t}"));
        }
        if pc > ctx.p_max + tol || pd > ctx.p_max + tol || pc < -tol || pd < -tol {
            push("power_limit", format!("battery ({s},{i}) power outside [0, {}] at step {t}", ctx.p_max));
        }
    }
    for (&t, &g) in &ix.e_grid {
        let mut net = 0.0;
        for (&(_, _, tt), &p) in &ix.p_chg {
            if tt == t {
                net += values[p] * ctx.grid.delta_t;
            }
        }
        for (&(_, _, tt), &p) in &ix.p_dsg {
            if tt == t {
                net -= values[p] * ctx.grid.delta_t;
            }
        }
        if (values[g] - net).abs() > tol {
            push("grid_balance", format!("step {t}: grid {} vs battery net {net}", values[g]));
        }
        if net.abs() > ctx.grid_limit + tol {
            push("grid_limit", format!("step {t}: |{net}| exceeds {}", ctx.grid_limit));
        }
    }
    out
}
