use bss_core::milp::{build_operations_model, AncillaryMode, BssModel, CarbonTerm, OperationsOptions, ProfitBreakdown, Solution, SoePin};
use bss_core::scenario::Scenario;
use bss_core::signals::TimeSeries;
use rayon::prelude::*;
use serde::Serialize;

use super::{emission_signals, write_operations};
use crate::{Run, RunDir, RunError, SolveRow};

/// Social cost of carbon points, $/ton.
pub const SCC_SWEEP: [f64; 4] = [0.0, 37.0, 258.0, 1000.0];

fn base_options(sc: &Scenario) -> OperationsOptions {
    OperationsOptions { pin: SoePin { terminal: true, checkpoints: vec![] }, ..OperationsOptions::from_scenario(sc) }
}

struct Solved {
    bm: BssModel,
    sol: Solution,
    row: SolveRow,
}

fn solve_ops(run: &Run, opts: &OperationsOptions, label: &str, dir: &RunDir) -> Result<Solved, RunError> {
    let sc = &run.scenario;
    let bm = build_operations_model(sc, opts).map_err(|e| RunError::validation(format!("build {label}"), e))?;
    let (sol, row) = run.solve(&bm, label)?;
    write_operations(dir, sc, &bm, &sol, &row)?;
    Ok(Solved { bm, sol, row })
}

pub fn operate(run: &Run) -> Result<(), RunError> {
    solve_ops(run, &base_options(&run.scenario), "operate", &run.dir).map(|_| ())
}

/// Grid energy a fast charger would draw per step when each truck charges
/// on arrival just enough to finish its route.
pub fn fcs_grid_energy(sc: &Scenario) -> Vec<f64> {
    let g = &sc.time;
    let q = sc.battery.capacity_kwh;
    let mut draw = vec![0.0; g.num_steps()];
    for trip in &sc.trips {
        let mut level = trip.q_ini_kwh;
        let mut used = 0.0;
        for v in &trip.visits {
            level = (level - (v.consumption_kwh - used)).max(0.0);
            used = v.consumption_kwh;
            let need = (v.demand_to_go_kwh.min(q) - level).max(0.0);
            level += need;
            draw[g.offset(v.arrival_step)] += need / sc.battery.eta;
        }
    }
    draw
}

#[derive(Debug, Clone, Serialize)]
struct CarbonRow {
    mechanism: &'static str,
    signal: &'static str,
    scc_per_ton: Option<f64>,
    emissions_t: f64,
    profit: Option<f64>,
    carbon_cost: Option<f64>,
    delta_emissions_t: f64,
    delta_emissions_pct: f64,
    delta_profit: Option<f64>,
    delta_profit_pct: Option<f64>,
}

fn pct(delta: f64, base: f64) -> f64 {
    if base.abs() < 1e-12 {
        0.0
    } else {
        100.0 * delta / base.abs()
    }
}

pub fn carbon_sweep(run: &Run) -> Result<(), RunError> {
    let sc = &run.scenario;
    let signals = emission_signals(sc);
    if signals.is_empty() {
        return Err(RunError::validation("carbon-sweep", "scenario has no co2_avg or co2_marginal signal"));
    }
    let points: Vec<(&'static str, &TimeSeries, f64)> = signals.iter().flat_map(|(name, s)| SCC_SWEEP.iter().map(move |&scc| (*name, s, scc))).collect();
    let carbon = run.dir.sub("carbon")?;
    let solved: Vec<Result<(ProfitBreakdown, f64), RunError>> = points
        .par_iter()
        .map(|&(name, series, scc)| {
            let mut opts = base_options(sc);
            opts.carbon = (scc > 0.0).then(|| CarbonTerm { scc_per_ton: scc, emission: series.clone() });
            let label = format!("{name}_scc{scc}");
            let dir = carbon.sub(&label)?;
            let s = solve_ops(run, &opts, &label, &dir)?;
            let mut profit = s.bm.profit(&s.sol.values);
            profit.carbon_cost = scc * s.bm.emissions(&s.sol.values, series);
            Ok((profit, s.bm.emissions(&s.sol.values, series)))
        })
        .collect();
    let solved: Vec<(ProfitBreakdown, f64)> = solved.into_iter().collect::<Result<_, _>>()?;

    let fcs = fcs_grid_energy(sc);
    let mut rows = Vec::new();
    for (name, series) in &signals {
        let at = |scc: f64| points.iter().position(|p| p.0 == *name && p.2 == scc).map(|k| &solved[k]).expect("swept point");
        let (base_profit, base_em) = at(0.0).clone();
        for &scc in &SCC_SWEEP {
            let (p, em) = at(scc);
            rows.push(CarbonRow {
                mechanism: "BSS",
                signal: name,
                scc_per_ton: Some(scc),
                emissions_t: *em,
                profit: Some(p.profit),
                carbon_cost: Some(p.carbon_cost),
                delta_emissions_t: em - base_em,
                delta_emissions_pct: pct(em - base_em, base_em),
                delta_profit: Some(p.profit - base_profit.profit),
                delta_profit_pct: Some(pct(p.profit - base_profit.profit, base_profit.profit)),
            });
        }
        let em: f64 = fcs.iter().zip(&series.values).map(|(e, x)| e * x).sum();
        rows.push(CarbonRow {
            mechanism: "FCS",
            signal: name,
            scc_per_ton: None,
            emissions_t: em,
            profit: None,
            carbon_cost: None,
            delta_emissions_t: em - base_em,
            delta_emissions_pct: pct(em - base_em, base_em),
            delta_profit: None,
            delta_profit_pct: None,
        });
    }
    run.dir.rows("carbon_sweep.csv", &rows)
}

#[derive(Debug, Serialize)]
struct AsRow {
    case: &'static str,
    energy_cost: f64,
    swap_revenue: f64,
    energy_revenue: f64,
    shortage_penalty: f64,
    as_revenue: f64,
    profit: f64,
    regulation_up_kwh: f64,
    regulation_down_kwh: f64,
    delta_profit: f64,
}

pub fn as_study(run: &Run) -> Result<(), RunError> {
    let sc = &run.scenario;
    let (Some(ru), Some(rd)) = (sc.signals.ru_price.clone(), sc.signals.rd_price.clone()) else {
        return Err(RunError::validation("as-study", "scenario needs both ru_price and rd_price signals"));
    };
    let without = base_options(sc);
    let with = OperationsOptions { ancillary: AncillaryMode::Headroom { ru, rd }, ..without.clone() };
    let cases = [("without", without), ("with", with)];
    let out = run.dir.sub("as")?;
    let solved: Vec<Result<Solved, RunError>> = cases
        .par_iter()
        .map(|(name, opts)| {
            let dir = out.sub(name)?;
            solve_ops(run, opts, &format!("as_{name}"), &dir)
        })
        .collect();
    let solved: Vec<Solved> = solved.into_iter().collect::<Result<_, _>>()?;
    let base = solved[0].bm.profit(&solved[0].sol.values).profit;
    let rows: Vec<AsRow> = cases
        .iter()
        .zip(&solved)
        .map(|((name, _), s)| {
            let v = &s.sol.values;
            let p = s.bm.profit(v);
            AsRow {
                case: name,
                energy_cost: p.energy_cost,
                swap_revenue: p.swap_revenue,
                energy_revenue: p.energy_revenue,
                shortage_penalty: p.shortage_penalty,
                as_revenue: p.as_revenue,
                profit: p.profit,
                regulation_up_kwh: s.bm.regulation_up(v),
                regulation_down_kwh: s.bm.regulation_down(v),
                delta_profit: p.profit - base,
            }
        })
        .collect();
    let solves: Vec<&SolveRow> = solved.iter().map(|s| &s.row).collect();
    run.dir.rows("solve.csv", &solves)?;
    run.dir.rows("as_study.csv", &rows)
}
