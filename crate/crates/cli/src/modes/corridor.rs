use std::collections::BTreeMap;

use bss_core::energy::payload;
use bss_core::metrics::{cost_frontier, simulate_day, write_efficiency_csv, write_frontier_csv, CbaConfig, DayInputs, EfficiencyReport, MechanismKind, MechanismRegistry};
use bss_core::milp::build_planning_model;
use bss_core::netdecomp::{decompose as split, recombine, rounding_bound, tier_histogram, write_histogram_csv, DemandNetwork, Tier, TierResult, TierResults, DEFAULT_BETA1, DEFAULT_BETA2};
use bss_core::scenario::{validate_scenario, BatterySpec, Scenario, TripRequest};
use bss_core::trips::{
    chain_round_trips, expand_long_trips, insert_stops, load_demand, penetration_rate, write_penetration_csv, ChainedItinerary, CorridorConfig, LongTrip, PenetrationRow, RawDemand,
    RoutedTrip, RoutingOptions, ZoneNetwork,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::{Run, RunError, SolveRow};

/// One battery size on the corridor: routed trips and the station fleet a planning solve installs.
#[derive(Debug, Clone)]
pub struct CorridorDay {
    pub battery: BatterySpec,
    pub chained: Vec<ChainedItinerary>,
    pub long: Vec<LongTrip>,
    pub routed: Vec<RoutedTrip>,
    pub penetration: Option<f64>,
    pub installed: BTreeMap<String, usize>,
    pub station_kwh: f64,
    pub solve: Option<SolveRow>,
}

impl CorridorDay {
    /// Every truck of the day: chained shuttles first (no stops), then routed long trips.
    pub fn trucks(&self) -> Vec<RoutedTrip> {
        let cargo = self.routed.first().map_or(0.0, |r| r.request.cargo_kg);
        let base = self.routed.len();
        let mut out = self.routed.clone();
        for (k, c) in self.chained.iter().enumerate() {
            out.push(RoutedTrip {
                request: TripRequest { customer: base + k, visits: vec![], q_ini_kwh: self.battery.capacity_kwh, cargo_kg: cargo, distance_mi: c.distance_mi },
                stops: vec![],
                leg_distances_mi: vec![c.distance_mi],
                leg_energies_kwh: vec![c.energy_kwh],
                detour_distance_mi: 0.0,
                detour_energy_kwh: 0.0,
                feasible: true,
            });
        }
        out
    }
}

fn corridor_inputs(run: &Run) -> Result<(CorridorConfig, ZoneNetwork, Vec<RawDemand>), RunError> {
    let sc = &run.scenario;
    let cfg = sc.corridor.clone().ok_or_else(|| RunError::validation(run.manifest.mode.as_str(), "scenario has no corridor section"))?;
    let net = ZoneNetwork::load(&sc.base_dir.join(&cfg.network_file)).map_err(|e| RunError::validation("load network", e))?;
    let demand = load_demand(&sc.base_dir.join(&cfg.demand_file), &sc.vehicle).map_err(|e| RunError::validation("load demand", e))?;
    Ok((cfg, net, demand))
}

/// Chains, routes and sizes one day of corridor demand for `battery`.
pub fn corridor_day(run: &Run, demand: &[RawDemand], net: &ZoneNetwork, cfg: &CorridorConfig, battery: &BatterySpec, label: &str) -> Result<CorridorDay, RunError> {
    let sc = &run.scenario;
    let chain = chain_round_trips(demand, battery);
    let cargo = payload(battery, &sc.truck).map_err(|e| RunError::validation(label, e))?;
    let long = expand_long_trips(&chain.residual, cfg, cargo);
    let opts = RoutingOptions { vehicle: sc.vehicle.clone(), reserve_fraction: cfg.reserve_fraction, q_ini_kwh: None, grid: Some(sc.time.clone()) };
    let routed: Vec<RoutedTrip> = long.par_iter().map(|t| insert_stops(t, net, &sc.stations, battery, sc.max_stops, &opts)).collect();
    let penetration = if long.is_empty() { None } else { penetration_rate(&long, net, &sc.stations, battery, sc.max_stops, &opts).ok() };

    let trips: Vec<TripRequest> = routed.iter().filter(|r| r.feasible && !r.stops.is_empty()).map(|r| r.request.clone()).collect();
    let mut installed: BTreeMap<String, usize> = sc.stations.iter().map(|s| (s.id.clone(), 0)).collect();
    let mut solve = None;
    if !trips.is_empty() {
        let psc = Scenario { battery: battery.clone(), trips, ..sc.clone() };
        let violations = validate_scenario(&psc);
        if !violations.is_empty() {
            let details = violations.iter().map(|v| v.to_string()).collect();
            return Err(RunError::validation(label, "routed trips do not form a valid scenario").with_details(details));
        }
        let bm = build_planning_model(&psc).map_err(|e| RunError::validation(label, e))?;
        let (sol, row) = run.solve(&bm, label)?;
        installed = bm.decode(&sol.values).installed;
        solve = Some(row);
    }
    let station_kwh = installed.values().sum::<usize>() as f64 * battery.capacity_kwh;
    Ok(CorridorDay { battery: battery.clone(), chained: chain.itineraries, long, routed, penetration, installed, station_kwh, solve })
}

fn day_reports(run: &Run, day: &CorridorDay) -> Result<Vec<EfficiencyReport>, RunError> {
    let sc = &run.scenario;
    let inputs = DayInputs { truck: sc.truck.clone(), speed_kmh: sc.vehicle.v_max_kmh, planned_station_kwh: day.station_kwh };
    let trucks = day.trucks();
    MechanismRegistry::with_preset(run.manifest.preset)
        .iter()
        .map(|m| simulate_day(m.as_ref(), &trucks, &day.battery, &inputs).map_err(|e| RunError::validation("simulate day", e)))
        .collect()
}

#[derive(Debug, Serialize)]
struct StationRow<'a> {
    battery_kwh: f64,
    station: &'a str,
    batteries: usize,
    capacity_kwh: f64,
}

#[derive(Debug, Serialize)]
struct RouteRow {
    battery_kwh: f64,
    customer: usize,
    origin: String,
    destination: String,
    feasible: bool,
    stops: String,
    distance_mi: f64,
    detour_mi: f64,
    energy_kwh: f64,
}

#[derive(Debug, Serialize)]
struct ArgminRow {
    mechanism: MechanismKind,
    battery_kwh: f64,
    daily_cost: f64,
    cost_per_ton_mile: f64,
}

pub fn compare(run: &Run) -> Result<(), RunError> {
    let (cfg, net, demand) = corridor_inputs(run)?;
    let sizes = cfg.sweep_kwh.clone();
    let days: Vec<Result<CorridorDay, RunError>> = sizes
        .par_iter()
        .map(|&q| {
            let battery = BatterySpec { capacity_kwh: q, ..run.scenario.battery.clone() };
            corridor_day(run, &demand, &net, &cfg, &battery, &format!("plan_{q}"))
        })
        .collect();
    let days: Vec<CorridorDay> = days.into_iter().collect::<Result<_, _>>()?;

    let mut reports = Vec::new();
    let mut served = Vec::new();
    let mut served_sizes = 0;
    for day in &days {
        let r = day_reports(run, day)?;
        if day.penetration.map_or(true, |p| p >= 1.0 - 1e-9) {
            served.extend(r.iter().cloned());
            served_sizes += 1;
        }
        reports.extend(r);
    }
    let cba = CbaConfig::default();
    let frontier = cost_frontier(&reports, &cba).map_err(|e| RunError::validation("cost frontier", e))?;
    // argmin only over sizes that route every long trip
    let best = if served_sizes < days.len() && served_sizes >= 2 {
        cost_frontier(&served, &cba).map_err(|e| RunError::validation("cost frontier", e))?.argmin
    } else {
        frontier.argmin.clone()
    };

    run.dir.csv("efficiency.csv", |buf| write_efficiency_csv(buf, &reports))?;
    run.dir.csv("frontier.csv", |buf| write_frontier_csv(buf, &frontier))?;
    run.dir.rows("tradeoffs.csv", &frontier.trade_offs)?;
    let argmin: Vec<ArgminRow> = best
        .iter()
        .map(|(&mechanism, &q)| {
            let p = frontier.points.iter().find(|p| p.mechanism == mechanism && p.battery_kwh == q).expect("argmin is a frontier point");
            ArgminRow { mechanism, battery_kwh: q, daily_cost: p.daily_cost, cost_per_ton_mile: p.cost_per_ton_mile }
        })
        .collect();
    run.dir.rows("argmin.csv", &argmin)?;

    let pen: Vec<PenetrationRow> =
        days.iter().filter_map(|d| d.penetration.map(|rate| PenetrationRow { battery_kwh: d.battery.capacity_kwh, max_stops: run.scenario.max_stops, rate })).collect();
    run.dir.csv("penetration.csv", |buf| write_penetration_csv(buf, &pen))?;

    let mut stations = Vec::new();
    let mut routes = Vec::new();
    for d in &days {
        let q = d.battery.capacity_kwh;
        for (id, &n) in &d.installed {
            stations.push(StationRow { battery_kwh: q, station: id, batteries: n, capacity_kwh: n as f64 * q });
        }
        for (r, t) in d.routed.iter().zip(&d.long) {
            routes.push(RouteRow {
                battery_kwh: q,
                customer: r.request.customer,
                origin: t.origin.clone(),
                destination: t.destination.clone(),
                feasible: r.feasible,
                stops: r.stops.join(";"),
                distance_mi: r.total_distance_mi(),
                detour_mi: r.detour_distance_mi,
                energy_kwh: r.total_energy_kwh(),
            });
        }
    }
    run.dir.rows("stations.csv", &stations)?;
    run.dir.rows("routes.csv", &routes)?;
    let solves: Vec<&SolveRow> = days.iter().filter_map(|d| d.solve.as_ref()).collect();
    run.dir.rows("solve.csv", &solves)
}

#[derive(Debug, Serialize)]
struct TierRow {
    tier: Tier,
    scale: f64,
    edges: usize,
    trips: f64,
    long_trips: usize,
    batteries: f64,
    daily_cost: f64,
}

#[derive(Debug, Serialize)]
struct RecombinedRow {
    batteries: f64,
    daily_cost: f64,
    trips: f64,
    original_trips: f64,
    rounding_bound: f64,
    dropped_mass: f64,
}

pub fn decompose(run: &Run) -> Result<(), RunError> {
    let (cfg, net, demand) = corridor_inputs(run)?;
    let sc = &run.scenario;
    let mut network = DemandNetwork::new();
    for d in &demand {
        network.insert(&d.origin, &d.destination, d.frequency).map_err(|e| RunError::validation("demand network", e))?;
    }
    let (b1, b2) = (DEFAULT_BETA1, DEFAULT_BETA2);
    let parts = split(&network, b1, b2).map_err(|e| RunError::validation("decompose", e))?;

    let sub = run.dir.sub("tiers")?;
    for t in Tier::ALL {
        sub.csv(&format!("{}.csv", t.as_str()), |buf| parts.tier(t).write_csv(buf))?;
    }
    sub.csv("dropped.csv", |buf| parts.dropped.write_csv(buf))?;

    let template: BTreeMap<(String, String), &RawDemand> = demand.iter().map(|d| ((d.origin.clone(), d.destination.clone()), d)).collect();
    let solved: Vec<Result<(TierRow, TierResult), RunError>> = Tier::ALL
        .par_iter()
        .map(|&t| {
            let tier_demand: Vec<RawDemand> = parts.tier(t).edges.iter().map(|(k, &n)| RawDemand { frequency: n, ..template[k].clone() }).collect();
            let day = corridor_day(run, &tier_demand, &net, &cfg, &sc.battery, &format!("plan_{}", t.as_str()))?;
            let bss = day_reports(run, &day)?.into_iter().find(|r| r.mechanism == MechanismKind::Bss).expect("bss is registered");
            let cost = CbaConfig::default().daily_cost(&bss);
            let batteries = day.installed.values().sum::<usize>() as f64;
            let trips = parts.tier(t).total();
            let row = TierRow { tier: t, scale: t.scale(b1, b2), edges: parts.tier(t).len(), trips, long_trips: day.routed.len(), batteries, daily_cost: cost };
            Ok((row, TierResult { batteries, cost, trips }))
        })
        .collect();
    let solved: Vec<(TierRow, TierResult)> = solved.into_iter().collect::<Result<_, _>>()?;

    let mut results = TierResults::default();
    for (row, r) in &solved {
        results.set(row.tier, *r);
    }
    let total = recombine(&results, b1, b2).map_err(|e| RunError::validation("recombine", e))?;
    let rows: Vec<&TierRow> = solved.iter().map(|(r, _)| r).collect();
    run.dir.rows("tiers.csv", &rows)?;
    run.dir.csv("histogram.csv", |buf| write_histogram_csv(buf, &tier_histogram(&network, b1, b2, 5.0)))?;
    run.dir.rows(
        "recombined.csv",
        &[RecombinedRow {
            batteries: total.batteries,
            daily_cost: total.cost,
            trips: total.trips,
            original_trips: network.total(),
            rounding_bound: rounding_bound(&network, b1, b2),
            dropped_mass: parts.dropped_mass(),
        }],
    )
}
