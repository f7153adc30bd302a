mod corridor;
mod operate;
mod plan;

pub use corridor::{compare, corridor_day, decompose, CorridorDay};
pub use operate::{as_study, carbon_sweep, fcs_grid_energy, operate, SCC_SWEEP};
pub use plan::plan;

use bss_core::milp::{BssModel, Solution};
use bss_core::scenario::Scenario;
use bss_core::signals::TimeSeries;
use serde::Serialize;

use crate::{RunDir, RunError, SolveRow};

#[derive(Debug, Serialize)]
struct ScheduleRow {
    customer: usize,
    station: String,
    step: usize,
    timestamp: String,
    battery: Option<usize>,
    served: bool,
    q_veh_kwh: f64,
    q_s2v_kwh: f64,
    q_shrt_kwh: f64,
}

#[derive(Debug, Serialize)]
struct TermRow<'a> {
    term: &'a str,
    value: f64,
}

/// Writes `schedule.csv`, `grid.csv`, `profit.csv` and `solve.csv` for one operations solve.
pub(crate) fn write_operations(dir: &RunDir, sc: &Scenario, bm: &BssModel, sol: &Solution, solve: &SolveRow) -> Result<(), RunError> {
    let ix = &bm.index;
    let v = &sol.values;
    let g = &sc.time;
    let mut schedule = Vec::new();
    for vis in &ix.visits {
        let slot = sc.stations[vis.station].slots.iter().copied().find(|&i| v[ix.x[&(vis.station, i, vis.customer)]] > 0.5);
        let key = (vis.customer, vis.station);
        schedule.push(ScheduleRow {
            customer: vis.customer,
            station: sc.stations[vis.station].id.clone(),
            step: vis.arrival_step,
            timestamp: g.time_of_step(vis.arrival_step).format("%Y-%m-%dT%H:%M:%S").to_string(),
            battery: slot,
            served: slot.is_some(),
            q_veh_kwh: if slot.is_some() { v[ix.q_veh[&key]] } else { 0.0 },
            q_s2v_kwh: v[ix.q_s2v[&key]],
            q_shrt_kwh: v[ix.q_shrt[&key]],
        });
    }
    schedule.sort_by(|a, b| (a.step, &a.station, a.customer).cmp(&(b.step, &b.station, b.customer)));
    dir.rows("schedule.csv", &schedule)?;

    let decoded = bm.decode(v);
    dir.csv("grid.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        let mut header = vec!["step".to_string(), "timestamp".to_string(), "e_grid_kwh".to_string()];
        for &(s, i) in decoded.soe.keys() {
            header.push(format!("soe_{}_{}", sc.stations[s].id, i));
        }
        w.write_record(&header)?;
        for (k, t) in (g.t_begin..=g.t_end + 1).enumerate() {
            let mut rec = vec![t.to_string(), g.time_of_step(t).format("%Y-%m-%dT%H:%M:%S").to_string()];
            rec.push(decoded.grid.get(k).map(|e| e.to_string()).unwrap_or_default());
            for trace in decoded.soe.values() {
                rec.push(trace[k].to_string());
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    })?;

    let p = bm.profit(v);
    let mut terms = vec![
        ("energy_cost", p.energy_cost),
        ("swap_revenue", p.swap_revenue),
        ("energy_revenue", p.energy_revenue),
        ("shortage_penalty", p.shortage_penalty),
        ("as_revenue", p.as_revenue),
        ("carbon_cost", p.carbon_cost),
        ("profit", p.profit),
        ("swaps_served", decoded.swap_count as f64),
        ("shortage_kwh", decoded.shortage_kwh),
        ("regulation_up_kwh", bm.regulation_up(v)),
        ("regulation_down_kwh", bm.regulation_down(v)),
    ];
    for (name, s) in [("emissions_avg_t", &sc.signals.co2_avg), ("emissions_marginal_t", &sc.signals.co2_marginal)] {
        if let Some(s) = s {
            terms.push((name, bm.emissions(v, s)));
        }
    }
    let rows: Vec<TermRow> = terms.into_iter().map(|(term, value)| TermRow { term, value }).collect();
    dir.rows("profit.csv", &rows)?;
    dir.rows("solve.csv", std::slice::from_ref(solve))
}

/// Emission signals present in the scenario, labelled `avg` and `marginal`.
pub(crate) fn emission_signals(sc: &Scenario) -> Vec<(&'static str, TimeSeries)> {
    let mut out = Vec::new();
    if let Some(s) = &sc.signals.co2_avg {
        out.push(("avg", s.clone()));
    }
    if let Some(s) = &sc.signals.co2_marginal {
        out.push(("marginal", s.clone()));
    }
    out
}
