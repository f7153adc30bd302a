use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::signals::TimeSeries;

use super::{AncillaryMode, BssModel, MilpModel, ModelKind};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwapRecord {
    pub customer: usize,
    pub station: String,
    pub battery: usize,
    pub step: usize,
    pub q_veh_kwh: f64,
    pub q_s2v_kwh: f64,
    pub q_shrt_kwh: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ProfitBreakdown {
    pub energy_cost: f64,
    pub swap_revenue: f64,
    pub energy_revenue: f64,
    pub shortage_penalty: f64,
    pub as_revenue: f64,
    pub carbon_cost: f64,
    pub profit: f64,
}

/// Schedule decoded from raw values, grouped by decision family.
#[derive(Debug, Clone, PartialEq)]
pub struct BssSolution {
    pub swaps: Vec<SwapRecord>,
    /// (customer, station, shortage) for visits without a swap.
    pub unserved: Vec<(usize, String, f64)>,
    pub grid: Vec<f64>,
    pub soe: BTreeMap<(usize, usize), Vec<f64>>,
    pub installed: BTreeMap<String, usize>,
    pub swap_count: usize,
    pub shortage_kwh: f64,
}

impl BssModel {
    pub fn decode(&self, values: &[f64]) -> BssSolution {
        let ix = &self.index;
        let ctx = &self.ctx;
        let mut swaps = Vec::new();
        let mut unserved = Vec::new();
        for v in &ix.visits {
            let sid = ctx.station_ids[v.station].clone();
            let shrt = values[ix.q_shrt[&(v.customer, v.station)]];
            let slot = ctx.slots[v.station].iter().copied().find(|&i| values[ix.x[&(v.station, i, v.customer)]] > 0.5);
            match slot {
                Some(i) => swaps.push(SwapRecord {
                    customer: v.customer,
                    station: sid,
                    battery: i,
                    step: v.arrival_step,
                    q_veh_kwh: values[ix.q_veh[&(v.customer, v.station)]],
                    q_s2v_kwh: values[ix.q_s2v[&(v.customer, v.station)]],
                    q_shrt_kwh: shrt,
                }),
                None => unserved.push((v.customer, sid, shrt)),
            }
        }
        swaps.sort_by(|a, b| (a.step, &a.station, a.battery, a.customer).cmp(&(b.step, &b.station, b.battery, b.customer)));
        let grid = ix.e_grid.values().map(|&j| values[j]).collect();
        let mut soe: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
        for (&(s, i, _), &j) in &ix.q {
            soe.entry((s, i)).or_default().push(values[j]);
        }
        let mut installed = BTreeMap::new();
        if ctx.kind == ModelKind::Planning {
            for (s, id) in ctx.station_ids.iter().enumerate() {
                let n = ix.y.iter().filter(|(&(ss, _), &j)| ss == s && values[j] > 0.5).count();
                installed.insert(id.clone(), n);
            }
        }
        let swap_count = ix.z.values().filter(|&&j| values[j] > 0.5).count();
        let shortage_kwh = ix.q_shrt.values().map(|&j| values[j]).sum();
        BssSolution { swaps, unserved, grid, soe, installed, swap_count, shortage_kwh }
    }

    /// Operating profit split into its terms; carbon cost is reported but not deducted.
    pub fn profit(&self, values: &[f64]) -> ProfitBreakdown {
        let ix = &self.index;
        let ctx = &self.ctx;
        let g = &ctx.grid;
        let mut p = ProfitBreakdown::default();
        for (&t, &j) in &ix.e_grid {
            p.energy_cost += ctx.grid_price[g.offset(t)] * values[j];
        }
        p.swap_revenue = ctx.swap_revenue * ix.z.values().map(|&j| values[j]).sum::<f64>();
        for v in &ix.visits {
            p.energy_revenue += ctx.energy_revenue[g.offset(v.arrival_step)] * values[ix.q_s2v[&(v.customer, v.station)]];
            p.shortage_penalty += ctx.shortage_penalty * values[ix.q_shrt[&(v.customer, v.station)]];
        }
        match &ctx.options.ancillary {
            AncillaryMode::None => {}
            AncillaryMode::Verbatim { ru, rd } => {
                for (&t, &j) in &ix.e_grid {
                    let k = g.offset(t);
                    p.as_revenue -= (ru.values[k] + rd.values[k]) * values[j];
                }
            }
            AncillaryMode::Headroom { ru, rd } => {
                for (&t, &j) in &ix.r_up {
                    let k = g.offset(t);
                    p.as_revenue += (ru.values[k] - ctx.grid_price[k]) * values[j];
                    p.as_revenue += rd.values[k] * values[ix.r_dn[&t]];
                }
            }
        }
        if let Some(c) = &ctx.options.carbon {
            p.carbon_cost = c.scc_per_ton * self.emissions(values, &c.emission);
        }
        p.profit = p.swap_revenue + p.energy_revenue - p.energy_cost - p.shortage_penalty + p.as_revenue;
        p
    }

    /// Net grid emissions `sum_t xi_t e^G_t`, tons.
    pub fn emissions(&self, values: &[f64], factor: &TimeSeries) -> f64 {
        let g = &self.ctx.grid;
        self.index.e_grid.iter().map(|(&t, &j)| factor.values[g.offset(t)] * values[j]).sum()
    }

    pub fn regulation_up(&self, values: &[f64]) -> f64 {
        self.index.r_up.values().map(|&j| values[j]).sum()
    }

    pub fn regulation_down(&self, values: &[f64]) -> f64 {
        self.index.r_dn.values().map(|&j| values[j]).sum()
    }
}

/// Writes one `tag,sense,rhs,nnz` line per row.
pub fn write_constraint_audit<W: Write>(writer: W, model: &MilpModel) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["tag", "sense", "rhs", "nnz"])?;
    for c in &model.constraints {
        w.write_record([c.tag.as_str(), c.sense.symbol(), &format!("{}", c.rhs), &c.coefs.len().to_string()])?;
    }
    w.flush()?;
    Ok(())
}
