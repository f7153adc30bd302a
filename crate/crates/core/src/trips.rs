//! Demand chaining, swap-stop routing and penetration statistics.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::{self, EnergyError, VehicleParams, METERS_PER_MILE};
use crate::scenario::{BatterySpec, Station, StationVisit, TimeGrid, TripRequest};

pub const DEFAULT_RESERVE: f64 = 0.05;

#[derive(Debug, Error)]
pub enum TripError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}: {source}")]
    Csv {
        origin: String,
        #[source]
        source: csv::Error,
    },
    #[error("demand {origin}->{destination}: {source}")]
    Energy {
        origin: String,
        destination: String,
        #[source]
        source: EnergyError,
    },
    #[error("frequency must be >= 0 (got {0})")]
    NegativeFrequency(f64),
    #[error("penetration rate is undefined for an empty trip set")]
    EmptyTripSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub distance_mi: f64,
    pub elevation_m: f64,
}

/// Inter-zone distances. Links are symmetric; the reverse direction sees
/// the opposite net elevation unless given explicitly.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ZoneNetwork {
    links: BTreeMap<(String, String), Link>,
}

#[derive(Debug, Deserialize, Serialize)]
struct LinkRow {
    from: String,
    to: String,
    distance_mi: f64,
    elevation_m: f64,
}

impl ZoneNetwork {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, from: &str, to: &str, distance_mi: f64, elevation_m: f64) {
        self.links.insert((from.to_string(), to.to_string()), Link { distance_mi, elevation_m });
        self.links
            .entry((to.to_string(), from.to_string()))
            .or_insert(Link { distance_mi, elevation_m: -elevation_m });
    }

    pub fn link(&self, from: &str, to: &str) -> Option<Link> {
        if from == to {
            return Some(Link { distance_mi: 0.0, elevation_m: 0.0 });
        }
        self.links.get(&(from.to_string(), to.to_string())).copied()
    }

    pub fn read_csv<R: Read>(reader: R, origin: &str) -> Result<Self, TripError> {
        let mut net = Self::new();
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        for row in rdr.deserialize::<LinkRow>() {
            let row = row.map_err(|source| TripError::Csv { origin: origin.to_string(), source })?;
            net.add(&row.from, &row.to, row.distance_mi, row.elevation_m);
        }
        Ok(net)
    }

    pub fn load(path: &Path) -> Result<Self, TripError> {
        let f = std::fs::File::open(path).map_err(|source| TripError::Io { path: path.display().to_string(), source })?;
        Self::read_csv(f, &path.display().to_string())
    }
}

/// Daily demand on one origin-destination pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDemand {
    pub origin: String,
    pub destination: String,
    pub frequency: f64,
    pub distance_mi: f64,
    pub elevation_m: f64,
    pub energy_per_trip_kwh: f64,
}

#[derive(Debug, Deserialize, Serialize)]
struct DemandRow {
    origin: String,
    destination: String,
    frequency: f64,
    distance_mi: f64,
    elevation_m: f64,
}

impl RawDemand {
    pub fn new(origin: &str, destination: &str, frequency: f64, distance_mi: f64, elevation_m: f64, params: &VehicleParams) -> Result<Self, TripError> {
        if frequency < 0.0 {
            return Err(TripError::NegativeFrequency(frequency));
        }
        let energy = energy::trip_energy(distance_mi * METERS_PER_MILE, elevation_m, params).map_err(|source| TripError::Energy {
            origin: origin.to_string(),
            destination: destination.to_string(),
            source,
        })?;
        Ok(Self {
            origin: origin.to_string(),
            destination: destination.to_string(),
            frequency,
            distance_mi,
            elevation_m,
            energy_per_trip_kwh: energy,
        })
    }

    /// Whole number of requests per day.
    pub fn requests(&self) -> usize {
        self.frequency.round().max(0.0) as usize
    }
}

pub fn read_demand_csv<R: Read>(reader: R, origin: &str, params: &VehicleParams) -> Result<Vec<RawDemand>, TripError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize::<DemandRow>() {
        let r = row.map_err(|source| TripError::Csv { origin: origin.to_string(), source })?;
        out.push(RawDemand::new(&r.origin, &r.destination, r.frequency, r.distance_mi, r.elevation_m, params)?);
    }
    Ok(out)
}

pub fn load_demand(path: &Path, params: &VehicleParams) -> Result<Vec<RawDemand>, TripError> {
    let f = std::fs::File::open(path).map_err(|source| TripError::Io { path: path.display().to_string(), source })?;
    read_demand_csv(f, &path.display().to_string(), params)
}

/// One truck shuttling A-B-A-B... within a single battery charge.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainedItinerary {
    pub origin: String,
    pub destination: String,
    pub legs: usize,
    pub energy_kwh: f64,
    pub distance_mi: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChainResult {
    pub itineraries: Vec<ChainedItinerary>,
    /// Single trips that need en-route charging, one entry per request.
    pub residual: Vec<RawDemand>,
}

/// Greedily packs each pair's requests into trucks until the next leg would exceed capacity.
pub fn chain_round_trips(demands: &[RawDemand], battery: &BatterySpec) -> ChainResult {
    let mut out = ChainResult::default();
    for d in demands {
        let n = d.requests();
        if n == 0 {
            continue;
        }
        if d.energy_per_trip_kwh > battery.capacity_kwh {
            for _ in 0..n {
                out.residual.push(RawDemand { frequency: 1.0, ..d.clone() });
            }
            continue;
        }
        let per_truck = ((battery.capacity_kwh / d.energy_per_trip_kwh) + 1e-12).floor().max(1.0) as usize;
        let mut left = n;
        while left > 0 {
            let k = left.min(per_truck);
            out.itineraries.push(ChainedItinerary {
                origin: d.origin.clone(),
                destination: d.destination.clone(),
                legs: k,
                energy_kwh: k as f64 * d.energy_per_trip_kwh,
                distance_mi: k as f64 * d.distance_mi,
            });
            left -= k;
        }
    }
    out
}

/// A single long trip to be routed through swap stations.
#[derive(Debug, Clone, PartialEq)]
pub struct LongTrip {
    pub customer: usize,
    pub origin: String,
    pub destination: String,
    pub distance_mi: f64,
    pub elevation_m: f64,
    pub departure_hour: f64,
    pub cargo_kg: f64,
}

#[derive(Debug, Clone)]
pub struct RoutingOptions {
    pub vehicle: VehicleParams,
    /// State-of-charge floor kept before every stop, fraction of capacity.
    pub reserve_fraction: f64,
    /// Energy on board at departure; `None` means a full battery.
    pub q_ini_kwh: Option<f64>,
    /// When set, arrival steps are computed and must fall on the grid.
    pub grid: Option<TimeGrid>,
}

impl Default for RoutingOptions {
    fn default() -> Self {
        Self { vehicle: VehicleParams::default(), reserve_fraction: DEFAULT_RESERVE, q_ini_kwh: None, grid: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoutedTrip {
    pub request: TripRequest,
    pub stops: Vec<String>,
    pub leg_distances_mi: Vec<f64>,
    pub leg_energies_kwh: Vec<f64>,
    pub detour_distance_mi: f64,
    pub detour_energy_kwh: f64,
    pub feasible: bool,
}

impl RoutedTrip {
    pub fn total_distance_mi(&self) -> f64 {
        self.leg_distances_mi.iter().sum()
    }

    pub fn total_energy_kwh(&self) -> f64 {
        self.leg_energies_kwh.iter().sum()
    }
}

fn leg(net: &ZoneNetwork, from: &str, to: &str, vehicle: &VehicleParams) -> Option<(f64, f64)> {
    let l = net.link(from, to)?;
    if l.distance_mi == 0.0 {
        return Some((0.0, 0.0));
    }
    let e = energy::trip_energy(l.distance_mi * METERS_PER_MILE, l.elevation_m, vehicle).ok()?;
    Some((l.distance_mi, e))
}

#[derive(Clone)]
struct Candidate {
    stops: Vec<usize>,
    legs: Vec<(f64, f64)>,
    distance: f64,
    hours: f64,
}

struct Search<'a> {
    trip: &'a LongTrip,
    net: &'a ZoneNetwork,
    stations: &'a [Station],
    capacity: f64,
    reserve: f64,
    max_stops: usize,
    vehicle: &'a VehicleParams,
    swap_hours: f64,
    best: Option<Candidate>,
}

impl Search<'_> {
    fn better(&self, c: &Candidate) -> bool {
        let Some(b) = &self.best else { return true };
        let eps = 1e-9;
        if c.distance < b.distance - eps {
            return true;
        }
        if c.distance > b.distance + eps {
            return false;
        }
        if c.hours < b.hours - eps {
            return true;
        }
        if c.hours > b.hours + eps {
            return false;
        }
        let ids = |v: &[usize]| v.iter().map(|&k| self.stations[k].id.clone()).collect::<Vec<_>>();
        ids(&c.stops) < ids(&b.stops)
    }

    fn dfs(&mut self, at: &str, energy: f64, path: &mut Candidate) {
        let floor = self.reserve * self.capacity;
        if let Some(l) = leg(self.net, at, &self.trip.destination, self.vehicle) {
            if l.1 <= energy - floor + 1e-9 {
                let mut done = path.clone();
                done.legs.push(l);
                done.distance += l.0;
                done.hours += l.0 * METERS_PER_MILE / 1000.0 / self.vehicle.v_max_kmh;
                if self.better(&done) {
                    self.best = Some(done);
                }
            }
        }
        if path.stops.len() >= self.max_stops {
            return;
        }
        for k in 0..self.stations.len() {
            if path.stops.contains(&k) {
                continue;
            }
            let Some(l) = leg(self.net, at, &self.stations[k].zone, self.vehicle) else { continue };
            if l.1 > energy - floor + 1e-9 {
                continue;
            }
            if let Some(b) = &self.best {
                if path.distance + l.0 > b.distance + 1e-9 {
                    continue;
                }
            }
            path.stops.push(k);
            path.legs.push(l);
            path.distance += l.0;
            let dt = l.0 * METERS_PER_MILE / 1000.0 / self.vehicle.v_max_kmh + self.swap_hours;
            path.hours += dt;
            let zone = self.stations[k].zone.clone();
            self.dfs(&zone, self.capacity, path);
            path.hours -= dt;
            path.distance -= l.0;
            path.legs.pop();
            path.stops.pop();
        }
    }
}

/// Routes `trip` with at most `max_stops` swap stops. The chosen route
/// minimizes added distance, then arrival time, then the station id sequence.
pub fn insert_stops(
    trip: &LongTrip,
    net: &ZoneNetwork,
    stations: &[Station],
    battery: &BatterySpec,
    max_stops: usize,
    opts: &RoutingOptions,
) -> RoutedTrip {
    let q_ini = opts.q_ini_kwh.unwrap_or(battery.capacity_kwh);
    let direct_energy = energy::trip_energy(trip.distance_mi * METERS_PER_MILE, trip.elevation_m, &opts.vehicle).unwrap_or(f64::INFINITY);
    let floor = opts.reserve_fraction * battery.capacity_kwh;
    let swap_hours = opts.grid.as_ref().map_or(0.5, |g| g.delta_t);

    let best = if direct_energy <= q_ini - floor + 1e-9 {
        Some(Candidate {
            stops: vec![],
            legs: vec![(trip.distance_mi, direct_energy)],
            distance: trip.distance_mi,
            hours: trip.distance_mi * METERS_PER_MILE / 1000.0 / opts.vehicle.v_max_kmh,
        })
    } else {
        let mut s = Search {
            trip,
            net,
            stations,
            capacity: battery.capacity_kwh,
            reserve: opts.reserve_fraction,
            max_stops,
            vehicle: &opts.vehicle,
            swap_hours,
            best: None,
        };
        let mut path = Candidate { stops: vec![], legs: vec![], distance: 0.0, hours: 0.0 };
        s.dfs(&trip.origin, q_ini, &mut path);
        s.best
    };

    let mut request = TripRequest { customer: trip.customer, visits: vec![], q_ini_kwh: q_ini, cargo_kg: trip.cargo_kg, distance_mi: trip.distance_mi };
    let Some(best) = best else {
        return RoutedTrip {
            request,
            stops: vec![],
            leg_distances_mi: vec![],
            leg_energies_kwh: vec![],
            detour_distance_mi: 0.0,
            detour_energy_kwh: 0.0,
            feasible: false,
        };
    };

    let total_energy: f64 = best.legs.iter().map(|l| l.1).sum();
    let mut feasible = true;
    let mut consumed = 0.0;
    let mut hours = trip.departure_hour;
    for (j, &k) in best.stops.iter().enumerate() {
        consumed += best.legs[j].1;
        hours += best.legs[j].0 * METERS_PER_MILE / 1000.0 / opts.vehicle.v_max_kmh;
        let arrival_step = match &opts.grid {
            Some(g) => {
                let t = g.step_at_hour(hours);
                if !g.contains(t) {
                    feasible = false;
                }
                t
            }
            None => 0,
        };
        request.visits.push(StationVisit {
            station_id: stations[k].id.clone(),
            consumption_kwh: consumed,
            demand_to_go_kwh: total_energy - consumed,
            arrival_step,
        });
        hours += swap_hours;
    }
    request.distance_mi = best.distance;
    RoutedTrip {
        request,
        stops: best.stops.iter().map(|&k| stations[k].id.clone()).collect(),
        leg_distances_mi: best.legs.iter().map(|l| l.0).collect(),
        leg_energies_kwh: best.legs.iter().map(|l| l.1).collect(),
        detour_distance_mi: (best.distance - trip.distance_mi).max(0.0),
        detour_energy_kwh: (total_energy - direct_energy).max(0.0),
        feasible,
    }
}

/// Share of trips needing en-route charging that can be routed with at most `max_stops` stops.
pub fn penetration_rate(
    trips: &[LongTrip],
    net: &ZoneNetwork,
    stations: &[Station],
    battery: &BatterySpec,
    max_stops: usize,
    opts: &RoutingOptions,
) -> Result<f64, TripError> {
    if trips.is_empty() {
        return Err(TripError::EmptyTripSet);
    }
    let opts = RoutingOptions { grid: None, ..opts.clone() };
    let routed: Vec<RoutedTrip> = trips.par_iter().map(|t| insert_stops(t, net, stations, battery, max_stops, &opts)).collect();
    let needing: Vec<&RoutedTrip> = routed.iter().filter(|r| !r.feasible || !r.stops.is_empty()).collect();
    if needing.is_empty() {
        return Ok(1.0);
    }
    Ok(needing.iter().filter(|r| r.feasible).count() as f64 / needing.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PenetrationRow {
    pub battery_kwh: f64,
    pub max_stops: usize,
    pub rate: f64,
}

pub fn write_penetration_csv<W: Write>(writer: W, rows: &[PenetrationRow]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Corridor study inputs referenced from a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorridorConfig {
    pub network_file: String,
    pub demand_file: String,
    #[serde(default = "default_sweep")]
    pub sweep_kwh: Vec<f64>,
    #[serde(default = "default_reserve")]
    pub reserve_fraction: f64,
    #[serde(default = "default_first_departure")]
    pub first_departure_hour: f64,
    #[serde(default = "default_spacing")]
    pub departure_spacing_hours: f64,
    #[serde(default = "default_slots")]
    pub departure_slots: usize,
}

fn default_sweep() -> Vec<f64> {
    (0..10).map(|k| 350.0 + 50.0 * k as f64).collect()
}
fn default_reserve() -> f64 {
    DEFAULT_RESERVE
}
fn default_first_departure() -> f64 {
    1.0
}
fn default_spacing() -> f64 {
    1.0
}
fn default_slots() -> usize {
    4
}

/// Expands residual demand into individual long trips with staggered departures.
pub fn expand_long_trips(residual: &[RawDemand], cfg: &CorridorConfig, cargo_kg: f64) -> Vec<LongTrip> {
    residual
        .iter()
        .enumerate()
        .map(|(k, d)| LongTrip {
            customer: k,
            origin: d.origin.clone(),
            destination: d.destination.clone(),
            distance_mi: d.distance_mi,
            elevation_m: d.elevation_m,
            departure_hour: cfg.first_departure_hour + (k % cfg.departure_slots.max(1)) as f64 * cfg.departure_spacing_hours,
            cargo_kg,
        })
        .collect()
}
