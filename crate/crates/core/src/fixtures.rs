//! Small synthetic scenarios for tests, oracles and demos.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::energy::VehicleParams;
use crate::netdecomp::DemandNetwork;
use crate::scenario::{BatterySpec, Scenario, Signals, Station, StationVisit, Tariffs, TimeGrid, TripRequest, TruckSpec, DEFAULT_MAX_STOPS};
use crate::signals::{SignalKind, TimeSeries};

/// Bare scenario on `steps` half-hour steps with flat tariffs and no trips.
pub fn empty_scenario(steps: usize, battery: BatterySpec, stations: Vec<Station>) -> Scenario {
    let grid = TimeGrid::new(0, steps - 1, 0.5);
    Scenario {
        tariffs: Tariffs {
            grid_price: TimeSeries::flat(SignalKind::Lmp, &grid, 0.1),
            swap_revenue: 20.0,
            energy_revenue: TimeSeries::flat(SignalKind::EnergyRevenue, &grid, 0.3),
            shortage_penalty: 1.0,
            grid_limit_kwh: 1000.0,
            scc_per_ton: 0.0,
            alpha_1: 0.0,
            alpha_2: 0.0,
        },
        time: grid,
        battery,
        truck: TruckSpec::default(),
        stations,
        trips: vec![],
        signals: Signals::default(),
        max_stops: DEFAULT_MAX_STOPS,
        vehicle: VehicleParams::default(),
        corridor: None,
        base_dir: PathBuf::from("."),
    }
}

pub fn visit(station: &str, consumption_kwh: f64, demand_to_go_kwh: f64, arrival_step: usize) -> StationVisit {
    StationVisit { station_id: station.to_string(), consumption_kwh, demand_to_go_kwh, arrival_step }
}

pub fn trip(customer: usize, q_ini_kwh: f64, visits: Vec<StationVisit>) -> TripRequest {
    TripRequest { customer, visits, q_ini_kwh, cargo_kg: 30000.0, distance_mi: 500.0 }
}

/// One customer swapping once at a station with two candidate batteries.
pub fn one_customer() -> Scenario {
    let mut sc = empty_scenario(8, BatterySpec::new(500.0, 0.95, 250.0), vec![Station::with_slots("S1", "Z1", 2)]);
    sc.trips = vec![trip(0, 450.0, vec![visit("S1", 300.0, 250.0, 3)])];
    sc
}

/// Knobs of the randomized instance family.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomFamily {
    pub stations: (usize, usize),
    pub batteries: (usize, usize),
    pub customers: (usize, usize),
    pub steps: (usize, usize),
    /// In-station starting energy fraction; drawn from {0.5, 1.0} when `None`.
    pub initial_soe: Option<f64>,
}

impl Default for RandomFamily {
    fn default() -> Self {
        Self { stations: (1, 2), batteries: (1, 3), customers: (1, 3), steps: (4, 8), initial_soe: None }
    }
}

/// Deterministic random scenario for `seed`. Energies keep E non-increasing
/// and C non-decreasing along each route, so the result validates.
pub fn random_scenario(seed: u64, fam: &RandomFamily) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let steps = rng.gen_range(fam.steps.0..=fam.steps.1);
    let n_st = rng.gen_range(fam.stations.0..=fam.stations.1);
    let q = 400.0;
    let mut battery = BatterySpec::new(q, rng.gen_range(0.85..=1.0), rng.gen_range(100.0..=400.0));
    battery.initial_soe_fraction = fam.initial_soe.unwrap_or(if rng.gen_bool(0.5) { 1.0 } else { 0.5 });
    let stations: Vec<Station> =
        (0..n_st).map(|k| Station::with_slots(format!("S{}", k + 1), format!("Z{}", k + 1), rng.gen_range(fam.batteries.0..=fam.batteries.1))).collect();
    let mut sc = empty_scenario(steps, battery, stations);

    let n_cust = rng.gen_range(fam.customers.0..=fam.customers.1);
    for m in 0..n_cust {
        let q_ini = rng.gen_range(0.3..=1.0) * q;
        let n_vis = if n_st > 1 && rng.gen_bool(0.4) { 2 } else { 1 };
        let first = rng.gen_range(0..n_st);
        let mut t = rng.gen_range(0..steps);
        let mut c = rng.gen_range(0.2..=1.0) * q_ini;
        let mut e = rng.gen_range(50.0..=500.0);
        let mut visits = vec![visit(&sc.stations[first].id, c, e, t)];
        if n_vis == 2 && t + 1 < steps {
            let second = (first + 1) % n_st;
            t = rng.gen_range(t + 1..steps);
            c += rng.gen_range(50.0..=300.0);
            e = (e - rng.gen_range(0.0..=200.0)).max(0.0);
            visits.push(visit(&sc.stations[second].id, c, e, t));
        }
        sc.trips.push(trip(m, q_ini, visits));
    }

    let grid = sc.time.clone();
    let lmp: Vec<f64> = (0..steps).map(|_| rng.gen_range(0.02..=0.25)).collect();
    let ren: Vec<f64> = (0..steps).map(|_| rng.gen_range(0.2..=0.6)).collect();
    sc.tariffs.grid_price = TimeSeries::on_grid(SignalKind::Lmp, &grid, lmp);
    sc.tariffs.energy_revenue = TimeSeries::on_grid(SignalKind::EnergyRevenue, &grid, ren);
    sc.tariffs.swap_revenue = rng.gen_range(5.0..=40.0);
    sc.tariffs.shortage_penalty = 1.0;
    sc.tariffs.grid_limit_kwh = rng.gen_range(100.0..=800.0);
    sc
}

/// One battery, two customers, flat prices and an emission peak at step 2.
pub fn carbon_fixture() -> Scenario {
    let mut sc = empty_scenario(10, BatterySpec::new(400.0, 0.95, 400.0), vec![Station::with_slots("S1", "Z1", 1)]);
    sc.trips = vec![trip(0, 300.0, vec![visit("S1", 200.0, 300.0, 1)]), trip(1, 300.0, vec![visit("S1", 250.0, 250.0, 5)])];
    let grid = sc.time.clone();
    sc.tariffs.grid_price = TimeSeries::flat(SignalKind::Lmp, &grid, 0.1);
    sc.tariffs.energy_revenue = TimeSeries::flat(SignalKind::EnergyRevenue, &grid, 0.4);
    sc.tariffs.swap_revenue = 50.0;
    sc.tariffs.grid_limit_kwh = 400.0;
    let mut xi = vec![0.0002; 10];
    xi[2] = 0.001;
    sc.signals.co2_avg = Some(TimeSeries::on_grid(SignalKind::Co2Avg, &grid, xi.clone()));
    sc.signals.co2_marginal = Some(TimeSeries::on_grid(SignalKind::Co2Marginal, &grid, xi));
    sc
}

/// Regulation-up prices below the wholesale price everywhere; regulation-down paid at two steps.
pub fn ancillary_fixture() -> Scenario {
    let mut sc = carbon_fixture();
    let grid = sc.time.clone();
    let lmp = vec![0.08, 0.12, 0.1, 0.06, 0.05, 0.11, 0.09, 0.1, 0.07, 0.1];
    let ru: Vec<f64> = lmp.iter().map(|f| 0.5 * f).collect();
    let mut rd = vec![0.0; 10];
    rd[3] = 0.03;
    rd[4] = 0.02;
    sc.tariffs.grid_price = TimeSeries::on_grid(SignalKind::Lmp, &grid, lmp);
    sc.signals.ru_price = Some(TimeSeries::on_grid(SignalKind::RuPrice, &grid, ru));
    sc.signals.rd_price = Some(TimeSeries::on_grid(SignalKind::RdPrice, &grid, rd));
    sc
}

/// Random demand network with frequencies spread over all three tiers.
pub fn random_network(seed: u64) -> DemandNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zones = rng.gen_range(3..=12);
    let mut net = DemandNetwork::new();
    for o in 0..zones {
        for d in 0..zones {
            if o == d || !rng.gen_bool(0.4) {
                continue;
            }
            let f = match rng.gen_range(0..3) {
                0 => rng.gen_range(0.01..5.0),
                1 => rng.gen_range(5.0..=30.0),
                _ => rng.gen_range(30.0..400.0),
            };
            net.insert(&format!("Z{o}"), &format!("Z{d}"), f).expect("positive frequency");
        }
    }
    net
}
