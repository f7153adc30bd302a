use std::collections::BTreeMap;

use crate::scenario::{Scenario, TimeGrid};
use crate::signals::TimeSeries;

use super::{MilpError, MilpModel, Sense, Tag, VarId};

const PRIO_Y: u8 = 0;
const PRIO_Z: u8 = 1;
const PRIO_X: u8 = 2;
const PRIO_A: u8 = 3;
const PRIO_B: u8 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Planning,
    Operations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CarbonTerm {
    pub scc_per_ton: f64,
    /// Emission factor, tons CO2 per kWh.
    pub emission: TimeSeries,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum AncillaryMode {
    #[default]
    None,
    /// `(RU + RD) * e^G` added to the objective as written.
    Verbatim { ru: TimeSeries, rd: TimeSeries },
    /// Regulation up paid on discharged energy (instead of the wholesale
    /// price), regulation down paid on charged energy, both within the grid limit.
    Headroom { ru: TimeSeries, rd: TimeSeries },
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Satisfaction {
    #[default]
    None,
    Full,
    Thresholds { alpha_1: f64, alpha_2: f64 },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SoePin {
    /// Require the state after the last step to be at least the initial state.
    pub terminal: bool,
    /// Extra node steps with the same requirement.
    pub checkpoints: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OperationsOptions {
    pub carbon: Option<CarbonTerm>,
    pub ancillary: AncillaryMode,
    pub satisfaction: Satisfaction,
    pub pin: SoePin,
}

impl OperationsOptions {
    /// Options taken from the scenario tariffs: SCC with the average emission
    /// series when present, and the threshold pair when either is positive.
    pub fn from_scenario(sc: &Scenario) -> Self {
        let t = &sc.tariffs;
        let satisfaction = if t.alpha_1 > 0.0 || t.alpha_2 > 0.0 {
            Satisfaction::Thresholds { alpha_1: t.alpha_1, alpha_2: t.alpha_2 }
        } else {
            Satisfaction::None
        };
        let carbon = match (&sc.signals.co2_avg, t.scc_per_ton > 0.0) {
            (Some(e), true) => Some(CarbonTerm { scc_per_ton: t.scc_per_ton, emission: e.clone() }),
            _ => None,
        };
        Self { carbon, satisfaction, ..Default::default() }
    }
}

/// One station visit `(s, m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Visit {
    pub trip: usize,
    pub customer: usize,
    pub station: usize,
    pub position: usize,
    pub arrival_step: usize,
    pub consumption_kwh: f64,
    /// Demand-to-go capped at one battery.
    pub demand_kwh: f64,
    pub q_ini_kwh: f64,
    /// Lowest possible inbound vehicle energy.
    pub veh_lb: f64,
    pub big_m: f64,
}

/// Variable ids of every decision family.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BssIndex {
    pub visits: Vec<Visit>,
    /// Keyed by (station, slot, customer).
    pub x: BTreeMap<(usize, usize, usize), VarId>,
    pub y: BTreeMap<(usize, usize), VarId>,
    pub z: BTreeMap<(usize, usize, usize), VarId>,
    pub a: BTreeMap<(usize, usize, usize), VarId>,
    pub b: BTreeMap<usize, VarId>,
    pub p_chg: BTreeMap<(usize, usize, usize), VarId>,
    pub p_dsg: BTreeMap<(usize, usize, usize), VarId>,
    pub e_grid: BTreeMap<usize, VarId>,
    /// Node states at steps `t_begin..=t_end + 1`.
    pub q: BTreeMap<(usize, usize, usize), VarId>,
    /// Keyed by (customer, station).
    pub q_s2v: BTreeMap<(usize, usize), VarId>,
    pub q_veh: BTreeMap<(usize, usize), VarId>,
    pub q_shrt: BTreeMap<(usize, usize), VarId>,
    pub r_up: BTreeMap<usize, VarId>,
    pub r_dn: BTreeMap<usize, VarId>,
}

/// Scenario data the checks and reports need alongside the model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelContext {
    pub kind: ModelKind,
    pub grid: TimeGrid,
    pub capacity: f64,
    pub eta: f64,
    pub p_max: f64,
    pub grid_limit: f64,
    pub initial_soe: f64,
    pub station_ids: Vec<String>,
    pub slots: Vec<Vec<usize>>,
    pub grid_price: Vec<f64>,
    pub energy_revenue: Vec<f64>,
    pub swap_revenue: f64,
    pub shortage_penalty: f64,
    pub options: OperationsOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BssModel {
    pub model: MilpModel,
    pub index: BssIndex,
    pub ctx: ModelContext,
}

fn check_series(name: &str, s: &TimeSeries, grid: &TimeGrid) -> Result<(), MilpError> {
    s.check_aligned(grid).map_err(|e| MilpError::Alignment { name: name.to_string(), message: e.to_string() })
}

pub fn build_planning_model(sc: &Scenario) -> Result<BssModel, MilpError> {
    let opts = OperationsOptions { satisfaction: Satisfaction::Full, ..Default::default() };
    build(sc, ModelKind::Planning, opts)
}

pub fn build_operations_model(sc: &Scenario, opts: &OperationsOptions) -> Result<BssModel, MilpError> {
    build(sc, ModelKind::Operations, opts.clone())
}

fn build(sc: &Scenario, kind: ModelKind, opts: OperationsOptions) -> Result<BssModel, MilpError> {
    let grid = sc.time.clone();
    check_series("grid_price", &sc.tariffs.grid_price, &grid)?;
    check_series("energy_revenue", &sc.tariffs.energy_revenue, &grid)?;
    if let Some(c) = &opts.carbon {
        check_series("emission", &c.emission, &grid)?;
    }
    match &opts.ancillary {
        AncillaryMode::None => {}
        AncillaryMode::Verbatim { ru, rd } | AncillaryMode::Headroom { ru, rd } => {
            check_series("ru_price", ru, &grid)?;
            check_series("rd_price", rd, &grid)?;
        }
    }

    let q_cap = sc.battery.capacity_kwh;
    let eta = sc.battery.eta;
    let p_max = sc.battery.p_max_kw;
    let dt = grid.delta_t;
    let e_bar = sc.tariffs.grid_limit_kwh;
    let init = sc.battery.initial_soe_fraction * q_cap;
    let (tb, te) = (grid.t_begin, grid.t_end);

    let mut visits = Vec::new();
    for (k, trip) in sc.trips.iter().enumerate() {
        for (j, v) in trip.visits.iter().enumerate() {
            let s = sc.station_index(&v.station_id).ok_or_else(|| MilpError::UnknownStation(v.station_id.clone()))?;
            let veh_lb = trip.q_ini_kwh - v.consumption_kwh;
            visits.push(Visit {
                trip: k,
                customer: trip.customer,
                station: s,
                position: j,
                arrival_step: v.arrival_step,
                consumption_kwh: v.consumption_kwh,
                demand_kwh: v.demand_to_go_kwh.min(q_cap),
                q_ini_kwh: trip.q_ini_kwh,
                veh_lb,
                big_m: q_cap + (-veh_lb).max(0.0),
            });
        }
    }
    let mut arrivals: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (n, v) in visits.iter().enumerate() {
        arrivals.entry((v.station, v.arrival_step)).or_default().push(n);
    }

    let name = match kind {
        ModelKind::Planning => "planning",
        ModelKind::Operations => "operations",
    };
    let mut m = MilpModel::new(name);
    let mut ix = BssIndex::default();

    for (s, st) in sc.stations.iter().enumerate() {
        let peak = arrivals.iter().filter(|((ss, _), _)| *ss == s).map(|(_, v)| v.len()).max().unwrap_or(0);
        if peak > st.slots.len() {
            let t = arrivals.iter().find(|((ss, _), v)| *ss == s && v.len() == peak).map(|((_, t), _)| *t).unwrap_or(tb);
            m.warnings.push(format!(
                "infeasible by construction: station {} has {} candidate batteries but {} simultaneous arrivals at step {}",
                st.id,
                st.slots.len(),
                peak,
                t
            ));
        }
    }

    // binaries, in branching order
    if kind == ModelKind::Planning {
        for (s, st) in sc.stations.iter().enumerate() {
            for &i in &st.slots {
                ix.y.insert((s, i), m.binary(format!("y_{s}_{i}"), PRIO_Y));
            }
        }
    }
    for (s, st) in sc.stations.iter().enumerate() {
        for &i in &st.slots {
            for t in grid.steps() {
                if arrivals.contains_key(&(s, t)) {
                    ix.z.insert((s, i, t), m.binary(format!("z_{s}_{i}_{t}"), PRIO_Z));
                }
            }
        }
    }
    for v in &visits {
        for &i in &sc.stations[v.station].slots {
            let c = v.customer;
            let s = v.station;
            ix.x.insert((s, i, c), m.binary(format!("x_{s}_{i}_{c}"), PRIO_X));
        }
    }
    for (s, st) in sc.stations.iter().enumerate() {
        for &i in &st.slots {
            for t in grid.steps() {
                ix.a.insert((s, i, t), m.binary(format!("a_{s}_{i}_{t}"), PRIO_A));
            }
        }
    }
    let thresholds = match opts.satisfaction {
        Satisfaction::Thresholds { alpha_1, alpha_2 } if kind == ModelKind::Operations => Some((alpha_1, alpha_2)),
        _ => None,
    };
    if thresholds.is_some() {
        for trip in &sc.trips {
            ix.b.insert(trip.customer, m.binary(format!("b_{}", trip.customer), PRIO_B));
        }
    }

    // continuous
    for (s, st) in sc.stations.iter().enumerate() {
        for &i in &st.slots {
            for t in grid.steps() {
                ix.p_chg.insert((s, i, t), m.continuous(format!("pc_{s}_{i}_{t}"), 0.0, p_max));
                ix.p_dsg.insert((s, i, t), m.continuous(format!("pd_{s}_{i}_{t}"), 0.0, p_max));
            }
            for t in tb..=te + 1 {
                let (lb, ub) = if t == tb && kind == ModelKind::Operations { (init, init) } else { (0.0, q_cap) };
                ix.q.insert((s, i, t), m.continuous(format!("q_{s}_{i}_{t}"), lb, ub));
            }
        }
    }
    for t in grid.steps() {
        ix.e_grid.insert(t, m.continuous(format!("grid_{t}"), f64::NEG_INFINITY, f64::INFINITY));
    }
    for v in &visits {
        let (c, s) = (v.customer, v.station);
        ix.q_s2v.insert((c, s), m.continuous(format!("s2v_{c}_{s}"), 0.0, v.big_m));
        ix.q_veh.insert((c, s), m.continuous(format!("veh_{c}_{s}"), v.veh_lb, q_cap.max(v.veh_lb)));
        ix.q_shrt.insert((c, s), m.continuous(format!("shrt_{c}_{s}"), 0.0, v.demand_kwh + (-v.veh_lb).max(0.0)));
    }
    let headroom = matches!(opts.ancillary, AncillaryMode::Headroom { .. }) && kind == ModelKind::Operations;
    if headroom {
        for t in grid.steps() {
            ix.r_up.insert(t, m.continuous(format!("rup_{t}"), 0.0, e_bar));
            ix.r_dn.insert(t, m.continuous(format!("rdn_{t}"), 0.0, e_bar));
        }
    }

    let x_of = |s: usize, i: usize, c: usize| ix.x[&(s, i, c)];

    // a swap flag is set by exactly one arriving customer
    for (s, st) in sc.stations.iter().enumerate() {
        for &i in &st.slots {
            for t in grid.steps() {
                if let Some(arr) = arrivals.get(&(s, t)) {
                    let mut terms: Vec<(VarId, f64)> = arr.iter().map(|&n| (x_of(s, i, visits[n].customer), 1.0)).collect();
                    terms.push((ix.z[&(s, i, t)], -1.0));
                    m.add_row(&terms, Sense::Eq, 0.0, Tag::Eq3);
                }
            }
        }
    }
    // each customer takes at most one battery
    for v in &visits {
        let terms: Vec<_> = sc.stations[v.station].slots.iter().map(|&i| (x_of(v.station, i, v.customer), 1.0)).collect();
        m.add_row(&terms, Sense::Le, 1.0, Tag::Eq4);
    }
    // no swaps in adjacent steps
    for (s, st) in sc.stations.iter().enumerate() {
        for &i in &st.slots {
            for t in tb..te {
                if let (Some(&z0), Some(&z1)) = (ix.z.get(&(s, i, t)), ix.z.get(&(s, i, t + 1))) {
                    m.add_row(&[(z0, 1.0), (z1, 1.0)], Sense::Le, 1.0, Tag::Eq5);
                }
            }
        }
    }
    // SOE recursion with handoff
    for (s, st) in sc.stations.iter().enumerate() {
        for &i in &st.slots {
            for t in grid.steps() {
                let q0 = ix.q[&(s, i, t)];
                let q1 = ix.q[&(s, i, t + 1)];
                let pc = ix.p_chg[&(s, i, t)];
                let pd = ix.p_dsg[&(s, i, t)];
                let flow = [(q1, 1.0), (q0, -1.0), (pc, -dt * eta), (pd, dt / eta)];
                match ix.z.get(&(s, i, t)) {
                    None => m.add_row(&flow, Sense::Eq, 0.0, Tag::Eq6),
                    Some(&z) => {
                        for &n in &arrivals[&(s, t)] {
                            let v = &visits[n];
                            let x = x_of(s, i, v.customer);
                            let veh = ix.q_veh[&(v.customer, s)];
                            m.add_row(&[(q1, 1.0), (veh, -1.0), (x, v.big_m)], Sense::Le, v.big_m, Tag::Eq6);
                            m.add_row(&[(q1, 1.0), (veh, -1.0), (x, -v.big_m)], Sense::Ge, -v.big_m, Tag::Eq6);
                        }
                        let mut up = flow.to_vec();
                        up.push((z, -q_cap));
                        m.add_row(&up, Sense::Le, 0.0, Tag::Eq6);
                        let mut dn = flow.to_vec();
                        dn.push((z, q_cap));
                        m.add_row(&dn, Sense::Ge, 0.0, Tag::Eq6);
                    }
                }
            }
        }
    }
    // energy sold on a swap
    for v in &visits {
        let (c, s) = (v.customer, v.station);
        let s2v = ix.q_s2v[&(c, s)];
        let veh = ix.q_veh[&(c, s)];
        let mut any = vec![(s2v, 1.0)];
        for &i in &sc.stations[s].slots {
            let x = x_of(s, i, c);
            let q = ix.q[&(s, i, v.arrival_step)];
            m.add_row(&[(s2v, 1.0), (q, -1.0), (veh, 1.0), (x, v.big_m)], Sense::Le, v.big_m, Tag::Eq7);
            m.add_row(&[(s2v, 1.0), (q, -1.0), (veh, 1.0), (x, -v.big_m)], Sense::Ge, -v.big_m, Tag::Eq7);
            any.push((x, -v.big_m));
        }
        m.add_row(&any, Sense::Le, 0.0, Tag::Eq7);
    }
    // shortage when served
    for v in &visits {
        let (c, s) = (v.customer, v.station);
        let shrt = ix.q_shrt[&(c, s)];
        for &i in &sc.stations[s].slots {
            let x = x_of(s, i, c);
            let q = ix.q[&(s, i, v.arrival_step)];
            m.add_row(&[(shrt, 1.0), (x, -v.demand_kwh), (q, 1.0)], Sense::Ge, 0.0, Tag::Eq8);
        }
    }
    // shortage when not served
    for v in &visits {
        let (c, s) = (v.customer, v.station);
        let mut terms = vec![(ix.q_shrt[&(c, s)], 1.0), (ix.q_veh[&(c, s)], 1.0)];
        for w in visits.iter().filter(|w| w.trip == v.trip) {
            for &i in &sc.stations[w.station].slots {
                terms.push((x_of(w.station, i, c), v.demand_kwh));
            }
        }
        m.add_row(&terms, Sense::Ge, v.demand_kwh, Tag::Eq9);
    }
    // inbound vehicle energy
    for v in &visits {
        let c = v.customer;
        let mut terms = vec![(ix.q_veh[&(c, v.station)], 1.0)];
        for w in visits.iter().filter(|w| w.trip == v.trip && w.position < v.position) {
            terms.push((ix.q_s2v[&(c, w.station)], -1.0));
        }
        let tag = if v.position < 2 { Tag::Eq10 } else { Tag::Eq10Ext };
        m.add_row(&terms, Sense::Eq, v.q_ini_kwh - v.consumption_kwh, tag);
    }
    // grid balance
    for t in grid.steps() {
        let mut terms = vec![(ix.e_grid[&t], -1.0)];
        for (s, st) in sc.stations.iter().enumerate() {
            for &i in &st.slots {
                terms.push((ix.p_chg[&(s, i, t)], dt));
                terms.push((ix.p_dsg[&(s, i, t)], -dt));
            }
        }
        m.add_row(&terms, Sense::Eq, 0.0, Tag::Eq11);
    }
    // charge/discharge exclusivity
    for (&key, &a) in &ix.a {
        m.add_row(&[(ix.p_chg[&key], 1.0), (a, -p_max)], Sense::Le, 0.0, Tag::Eq12);
        m.add_row(&[(ix.p_dsg[&key], 1.0), (a, p_max)], Sense::Le, p_max, Tag::Eq13);
    }
    // a battery being swapped is off the charger for that step
    for (&key, &z) in &ix.z {
        m.add_row(&[(ix.p_chg[&key], 1.0), (z, p_max)], Sense::Le, p_max, Tag::Plumbing);
        m.add_row(&[(ix.p_dsg[&key], 1.0), (z, p_max)], Sense::Le, p_max, Tag::Plumbing);
    }
    // grid limit
    for t in grid.steps() {
        m.add_row(&[(ix.e_grid[&t], 1.0)], Sense::Le, e_bar, Tag::Eq14);
        m.add_row(&[(ix.e_grid[&t], 1.0)], Sense::Ge, -e_bar, Tag::Eq14);
    }

    if kind == ModelKind::Planning {
        for (s, st) in sc.stations.iter().enumerate() {
            let users: Vec<usize> = visits.iter().filter(|v| v.station == s).map(|v| v.customer).collect();
            let big = users.len().max(1) as f64;
            for (k, &i) in st.slots.iter().enumerate() {
                let y = ix.y[&(s, i)];
                let xs: Vec<(VarId, f64)> = users.iter().map(|&c| (x_of(s, i, c), 1.0)).collect();
                let mut lo = xs.clone();
                lo.push((y, -big));
                m.add_row(&lo, Sense::Le, 0.0, Tag::Eq15);
                let mut hi: Vec<(VarId, f64)> = xs.iter().map(|&(j, _)| (j, -1.0)).collect();
                hi.push((y, 1.0));
                m.add_row(&hi, Sense::Le, 0.0, Tag::Eq15);
                for t in tb..=te + 1 {
                    m.add_row(&[(ix.q[&(s, i, t)], 1.0), (y, -q_cap)], Sense::Le, 0.0, Tag::Eq16);
                }
                m.add_row(&[(ix.q[&(s, i, tb)], 1.0), (y, -init)], Sense::Eq, 0.0, Tag::Plumbing);
                if k + 1 < st.slots.len() {
                    let next = ix.y[&(s, st.slots[k + 1])];
                    m.add_row(&[(next, 1.0), (y, -1.0)], Sense::Le, 0.0, Tag::Plumbing);
                }
                m.add_obj(y, 1.0);
            }
        }
    }

    let satisfaction = if kind == ModelKind::Planning { Satisfaction::Full } else { opts.satisfaction };
    match satisfaction {
        Satisfaction::None => {}
        Satisfaction::Full => {
            for &shrt in ix.q_shrt.values() {
                m.add_row(&[(shrt, 1.0)], Sense::Eq, 0.0, Tag::Eq17);
            }
        }
        Satisfaction::Thresholds { alpha_1, alpha_2 } => {
            for trip in &sc.trips {
                let c = trip.customer;
                let mine: Vec<&Visit> = visits.iter().filter(|v| v.customer == c).collect();
                let big: f64 = mine.iter().map(|v| v.demand_kwh + (-v.veh_lb).max(0.0)).sum();
                let mut terms: Vec<(VarId, f64)> = mine.iter().map(|v| (ix.q_shrt[&(c, v.station)], 1.0)).collect();
                if big > 0.0 {
                    terms.push((ix.b[&c], big));
                    m.add_row(&terms, Sense::Le, big, Tag::Eq18);
                }
            }
            let count: Vec<(VarId, f64)> = ix.b.values().map(|&b| (b, 1.0)).collect();
            m.add_row(&count, Sense::Ge, alpha_2 * sc.trips.len() as f64, Tag::Eq18);
            for v in &visits {
                m.add_row(&[(ix.q_shrt[&(v.customer, v.station)], 1.0)], Sense::Le, (1.0 - alpha_1) * v.demand_kwh, Tag::Eq19);
            }
        }
    }

    let mut pin_nodes: Vec<usize> = opts.pin.checkpoints.iter().copied().filter(|&t| t > tb && t <= te + 1).collect();
    if opts.pin.terminal {
        pin_nodes.push(te + 1);
    }
    pin_nodes.sort_unstable();
    pin_nodes.dedup();
    for &t in &pin_nodes {
        for (s, st) in sc.stations.iter().enumerate() {
            for &i in &st.slots {
                m.add_row(&[(ix.q[&(s, i, t)], 1.0), (ix.q[&(s, i, tb)], -1.0)], Sense::Ge, 0.0, Tag::Plumbing);
            }
        }
    }

    let price = sc.tariffs.grid_price.values.clone();
    let revenue = sc.tariffs.energy_revenue.values.clone();
    if kind == ModelKind::Operations {
        for t in grid.steps() {
            let k = grid.offset(t);
            let mut c = price[k];
            if let Some(ct) = &opts.carbon {
                c += ct.scc_per_ton * ct.emission.values[k];
            }
            if let AncillaryMode::Verbatim { ru, rd } = &opts.ancillary {
                c += ru.values[k] + rd.values[k];
            }
            m.add_obj(ix.e_grid[&t], c);
        }
        for &z in ix.z.values() {
            m.add_obj(z, -sc.tariffs.swap_revenue);
        }
        for v in &visits {
            m.add_obj(ix.q_s2v[&(v.customer, v.station)], -revenue[grid.offset(v.arrival_step)]);
            m.add_obj(ix.q_shrt[&(v.customer, v.station)], sc.tariffs.shortage_penalty);
        }
        if let AncillaryMode::Headroom { ru, rd } = &opts.ancillary {
            for t in grid.steps() {
                let k = grid.offset(t);
                let (up, dn) = (ix.r_up[&t], ix.r_dn[&t]);
                let mut dis = vec![(up, 1.0)];
                let mut chg = vec![(dn, 1.0)];
                for (s, st) in sc.stations.iter().enumerate() {
                    for &i in &st.slots {
                        dis.push((ix.p_dsg[&(s, i, t)], -dt));
                        chg.push((ix.p_chg[&(s, i, t)], -dt));
                    }
                }
                m.add_row(&dis, Sense::Le, 0.0, Tag::Eq21);
                m.add_row(&chg, Sense::Le, 0.0, Tag::Eq21);
                m.add_obj(up, price[k] - ru.values[k]);
                m.add_obj(dn, -rd.values[k]);
            }
        }
    }

    let ctx = ModelContext {
        kind,
        grid,
        capacity: q_cap,
        eta,
        p_max,
        grid_limit: e_bar,
        initial_soe: init,
        station_ids: sc.stations.iter().map(|s| s.id.clone()).collect(),
        slots: sc.stations.iter().map(|s| s.slots.clone()).collect(),
        grid_price: price,
        energy_revenue: revenue,
        swap_revenue: sc.tariffs.swap_revenue,
        shortage_penalty: sc.tariffs.shortage_penalty,
        options: opts,
    };
    ix.visits = visits;
    Ok(BssModel { model: m, index: ix, ctx })
}
