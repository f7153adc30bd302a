//! Shared domain types, the discrete time grid and scenario files.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::VehicleParams;
use crate::signals::{self, SignalError, SignalKind, TimeSeries};
use crate::trips::CorridorConfig;

pub const DEFAULT_MAX_STOPS: usize = 4;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}, column {column}: field `{field}`: {message}")]
    Parse { path: String, line: usize, column: usize, field: String, message: String },
    #[error("{path}: {message}")]
    TripsCsv { path: String, message: String },
    #[error("signal `{kind}`: {source}")]
    Signal {
        kind: SignalKind,
        #[source]
        source: SignalError,
    },
    #[error("tariff references signal `{0}` but no file is configured for it")]
    MissingSignal(SignalKind),
    #[error("series `{name}` has {found} values, grid has {expected} steps")]
    SeriesLength { name: String, found: usize, expected: usize },
}

/// Discrete time grid. Steps `t_begin..=t_end` each last `delta_t` hours;
/// step `t` starts at `origin + t * delta_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_begin: usize,
    pub t_end: usize,
    #[serde(default = "default_delta_t")]
    pub delta_t: f64,
    #[serde(default = "default_origin")]
    pub origin: NaiveDateTime,
}

fn default_delta_t() -> f64 {
    0.5
}

fn default_origin() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2023, 3, 1).and_then(|d| d.and_hms_opt(0, 0, 0)).expect("valid date")
}

impl TimeGrid {
    pub fn new(t_begin: usize, t_end: usize, delta_t: f64) -> Self {
        Self { t_begin, t_end, delta_t, origin: default_origin() }
    }

    pub fn with_origin(mut self, origin: NaiveDateTime) -> Self {
        self.origin = origin;
        self
    }

    pub fn num_steps(&self) -> usize {
        self.t_end + 1 - self.t_begin
    }

    pub fn steps(&self) -> std::ops::RangeInclusive<usize> {
        self.t_begin..=self.t_end
    }

    pub fn contains(&self, t: usize) -> bool {
        (self.t_begin..=self.t_end).contains(&t)
    }

    /// Position of step `t` in per-step arrays.
    pub fn offset(&self, t: usize) -> usize {
        t - self.t_begin
    }

    pub fn step_minutes(&self) -> i64 {
        (self.delta_t * 60.0).round() as i64
    }

    pub fn time_of_step(&self, t: usize) -> NaiveDateTime {
        self.origin + Duration::minutes(self.step_minutes() * t as i64)
    }

    /// Step containing clock time `hours` (measured from the origin),
    /// rounded down so the truck is present at the start of the step.
    pub fn step_at_hour(&self, hours: f64) -> usize {
        ((hours / self.delta_t) + 1e-9).floor().max(0.0) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatterySpec {
    pub capacity_kwh: f64,
    pub eta: f64,
    pub p_max_kw: f64,
    #[serde(default = "default_specific_mass")]
    pub specific_mass_kg_per_kwh: f64,
    /// In-station state of energy at `t_begin`, as a fraction of capacity.
    #[serde(default = "default_initial_soe")]
    pub initial_soe_fraction: f64,
}

fn default_specific_mass() -> f64 {
    6.8
}

fn default_initial_soe() -> f64 {
    1.0
}

impl BatterySpec {
    pub fn new(capacity_kwh: f64, eta: f64, p_max_kw: f64) -> Self {
        Self {
            capacity_kwh,
            eta,
            p_max_kw,
            specific_mass_kg_per_kwh: default_specific_mass(),
            initial_soe_fraction: default_initial_soe(),
        }
    }

    /// Pack mass in kg.
    pub fn mass(&self) -> f64 {
        self.specific_mass_kg_per_kwh * self.capacity_kwh
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruckSpec {
    pub gvwr_kg: f64,
    pub curb_mass_no_battery_kg: f64,
    pub max_duty_hours: f64,
    pub min_rest_hours: f64,
}

impl Default for TruckSpec {
    fn default() -> Self {
        // 82,000 lb GVWR, 5,000 lb curb mass without the pack
        Self { gvwr_kg: 37194.6, curb_mass_no_battery_kg: 2268.0, max_duty_hours: 12.0, min_rest_hours: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Station {
    pub id: String,
    #[serde(default)]
    pub zone: String,
    /// Candidate battery indices `I_s`.
    pub slots: Vec<usize>,
}

impl Station {
    pub fn with_slots(id: impl Into<String>, zone: impl Into<String>, n: usize) -> Self {
        Self { id: id.into(), zone: zone.into(), slots: (0..n).collect() }
    }
}

/// One station visit of a customer route.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationVisit {
    pub station_id: String,
    /// Energy consumed from the origin to this station (`C_{m,s}`), kWh.
    pub consumption_kwh: f64,
    /// Energy still needed to finish the route from this station (`E_{m,s}`), kWh.
    pub demand_to_go_kwh: f64,
    /// Arrival step `T_{m,s}`.
    pub arrival_step: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripRequest {
    pub customer: usize,
    pub visits: Vec<StationVisit>,
    pub q_ini_kwh: f64,
    pub cargo_kg: f64,
    pub distance_mi: f64,
}

/// Where a per-step tariff comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeriesSource {
    Flat(f64),
    Values(Vec<f64>),
    Signal { signal: SignalKind },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TariffsConfig {
    pub grid_price: SeriesSource,
    pub swap_revenue: f64,
    pub energy_revenue: SeriesSource,
    pub shortage_penalty: f64,
    pub grid_limit_kwh: f64,
    #[serde(default)]
    pub scc_per_ton: f64,
    #[serde(default)]
    pub alpha_1: f64,
    #[serde(default)]
    pub alpha_2: f64,
}

/// Resolved tariffs, aligned to the scenario grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Tariffs {
    /// `F^G_t`, $/kWh.
    pub grid_price: TimeSeries,
    /// `R^sw`, $/swap.
    pub swap_revenue: f64,
    /// `R^en_t`, $/kWh.
    pub energy_revenue: TimeSeries,
    /// `P^en`, $/kWh.
    pub shortage_penalty: f64,
    /// `Ē`, kWh per step.
    pub grid_limit_kwh: f64,
    /// Social cost of carbon, $/ton.
    pub scc_per_ton: f64,
    /// Energy-satisfaction threshold (used by the per-visit shortage cap).
    pub alpha_1: f64,
    /// Customer-count threshold (used by the served-customer floor).
    pub alpha_2: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SignalsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lmp: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub co2_avg: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub co2_marginal: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ru_price: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rd_price: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_revenue: Option<String>,
}

impl SignalsConfig {
    fn entries(&self) -> Vec<(SignalKind, &String)> {
        [
            (SignalKind::Lmp, &self.lmp),
            (SignalKind::Co2Avg, &self.co2_avg),
            (SignalKind::Co2Marginal, &self.co2_marginal),
            (SignalKind::RuPrice, &self.ru_price),
            (SignalKind::RdPrice, &self.rd_price),
            (SignalKind::EnergyRevenue, &self.energy_revenue),
        ]
        .into_iter()
        .filter_map(|(k, p)| p.as_ref().map(|p| (k, p)))
        .collect()
    }
}

/// The scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub time: TimeGrid,
    pub batteries: BatterySpec,
    #[serde(default)]
    pub trucks: TruckSpec,
    #[serde(default)]
    pub stations: Vec<Station>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trips_file: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trips: Vec<TripRequest>,
    pub tariffs: TariffsConfig,
    #[serde(default)]
    pub signals: SignalsConfig,
    #[serde(default = "default_max_stops")]
    pub max_stops: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vehicle: Option<VehicleParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corridor: Option<CorridorConfig>,
}

fn default_max_stops() -> usize {
    DEFAULT_MAX_STOPS
}

impl ScenarioConfig {
    pub fn from_json_str(text: &str, origin: &str) -> Result<Self, ScenarioError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|err| {
            let field = err.path().to_string();
            let inner = err.into_inner();
            ScenarioError::Parse {
                path: origin.to_string(),
                line: inner.line(),
                column: inner.column(),
                field,
                message: inner.to_string(),
            }
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario config serializes")
    }
}

/// Optional signals that are not tariffs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Signals {
    pub co2_avg: Option<TimeSeries>,
    pub co2_marginal: Option<TimeSeries>,
    pub ru_price: Option<TimeSeries>,
    pub rd_price: Option<TimeSeries>,
}

/// A fully resolved scenario: trips loaded and every series on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub time: TimeGrid,
    pub battery: BatterySpec,
    pub truck: TruckSpec,
    pub stations: Vec<Station>,
    pub trips: Vec<TripRequest>,
    pub tariffs: Tariffs,
    pub signals: Signals,
    pub max_stops: usize,
    pub vehicle: VehicleParams,
    pub corridor: Option<CorridorConfig>,
    /// Directory relative paths are resolved against.
    pub base_dir: PathBuf,
}

impl Scenario {
    pub fn station_index(&self, id: &str) -> Option<usize> {
        self.stations.iter().position(|s| s.id == id)
    }

    /// Customers visiting station `s` (by index) at step `t`, as trip indices.
    pub fn visitors(&self, s: usize, t: usize) -> Vec<usize> {
        let id = &self.stations[s].id;
        self.trips
            .iter()
            .enumerate()
            .filter(|(_, trip)| trip.visits.iter().any(|v| &v.station_id == id && v.arrival_step == t))
            .map(|(k, _)| k)
            .collect()
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
    let config = ScenarioConfig::from_json_str(&text, &path.display().to_string())?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    resolve(config, &base)
}

fn resolve_source(
    name: &str,
    source: &SeriesSource,
    kind: SignalKind,
    grid: &TimeGrid,
    loaded: &BTreeMap<SignalKind, TimeSeries>,
) -> Result<TimeSeries, ScenarioError> {
    match source {
        SeriesSource::Flat(v) => Ok(TimeSeries::flat(kind, grid, *v)),
        SeriesSource::Values(values) => {
            if values.len() != grid.num_steps() {
                return Err(ScenarioError::SeriesLength { name: name.to_string(), found: values.len(), expected: grid.num_steps() });
            }
            Ok(TimeSeries::on_grid(kind, grid, values.clone()))
        }
        SeriesSource::Signal { signal } => {
            let mut series = loaded.get(signal).cloned().ok_or(ScenarioError::MissingSignal(*signal))?;
            series.kind = kind;
            Ok(series)
        }
    }
}

/// Loads trips and signals referenced by `config`, relative to `base_dir`.
pub fn resolve(config: ScenarioConfig, base_dir: &Path) -> Result<Scenario, ScenarioError> {
    let grid = config.time.clone();
    let mut trips = config.trips.clone();
    if let Some(file) = &config.trips_file {
        let p = base_dir.join(file);
        let f = std::fs::File::open(&p).map_err(|source| ScenarioError::Io { path: p.display().to_string(), source })?;
        trips.extend(read_trips_csv(f, &p.display().to_string())?);
    }

    let mut loaded = BTreeMap::new();
    for (kind, file) in config.signals.entries() {
        let p = base_dir.join(file);
        let raw = signals::load_series(&p, kind).map_err(|source| ScenarioError::Signal { kind, source })?;
        let aligned = signals::resample(&raw, &grid).map_err(|source| ScenarioError::Signal { kind, source })?;
        loaded.insert(kind, aligned);
    }

    let t = &config.tariffs;
    let tariffs = Tariffs {
        grid_price: resolve_source("grid_price", &t.grid_price, SignalKind::Lmp, &grid, &loaded)?,
        swap_revenue: t.swap_revenue,
        energy_revenue: resolve_source("energy_revenue", &t.energy_revenue, SignalKind::EnergyRevenue, &grid, &loaded)?,
        shortage_penalty: t.shortage_penalty,
        grid_limit_kwh: t.grid_limit_kwh,
        scc_per_ton: t.scc_per_ton,
        alpha_1: t.alpha_1,
        alpha_2: t.alpha_2,
    };
    let signals = Signals {
        co2_avg: loaded.get(&SignalKind::Co2Avg).cloned(),
        co2_marginal: loaded.get(&SignalKind::Co2Marginal).cloned(),
        ru_price: loaded.get(&SignalKind::RuPrice).cloned(),
        rd_price: loaded.get(&SignalKind::RdPrice).cloned(),
    };
    Ok(Scenario {
        time: grid,
        battery: config.batteries,
        truck: config.trucks,
        stations: config.stations,
        trips,
        tariffs,
        signals,
        max_stops: config.max_stops,
        vehicle: config.vehicle.unwrap_or_default(),
        corridor: config.corridor,
        base_dir: base_dir.to_path_buf(),
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct TripRow {
    m: usize,
    leg_index: usize,
    station_id: String,
    consumption_kwh: f64,
    demand_to_go_kwh: f64,
    arrival_step: usize,
    q_ini_kwh: f64,
    cargo_kg: f64,
    distance_mi: f64,
}

/// Reads the per-visit trips CSV and groups rows into requests (sorted by customer).
pub fn read_trips_csv<R: Read>(reader: R, origin: &str) -> Result<Vec<TripRequest>, ScenarioError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut rows: BTreeMap<usize, Vec<TripRow>> = BTreeMap::new();
    for (idx, rec) in rdr.deserialize::<TripRow>().enumerate() {
        let row = rec.map_err(|e| ScenarioError::TripsCsv { path: origin.to_string(), message: format!("row {}: {e}", idx + 2) })?;
        rows.entry(row.m).or_default().push(row);
    }
    let mut trips = Vec::with_capacity(rows.len());
    for (m, mut legs) in rows {
        legs.sort_by_key(|r| r.leg_index);
        let first = &legs[0];
        let (q_ini, cargo, dist) = (first.q_ini_kwh, first.cargo_kg, first.distance_mi);
        if legs.iter().any(|r| r.q_ini_kwh != q_ini || r.cargo_kg != cargo || r.distance_mi != dist) {
            return Err(ScenarioError::TripsCsv {
                path: origin.to_string(),
                message: format!("customer {m}: q_ini_kwh/cargo_kg/distance_mi differ between rows"),
            });
        }
        let visits = legs
            .into_iter()
            .map(|r| StationVisit {
                station_id: r.station_id,
                consumption_kwh: r.consumption_kwh,
                demand_to_go_kwh: r.demand_to_go_kwh,
                arrival_step: r.arrival_step,
            })
            .collect();
        trips.push(TripRequest { customer: m, visits, q_ini_kwh: q_ini, cargo_kg: cargo, distance_mi: dist });
    }
    Ok(trips)
}

pub fn write_trips_csv<W: Write>(writer: W, trips: &[TripRequest]) -> Result<(), csv::Error> {
    let mut wtr = csv::Writer::from_writer(writer);
    for trip in trips {
        for (k, v) in trip.visits.iter().enumerate() {
            wtr.serialize(TripRow {
                m: trip.customer,
                leg_index: k,
                station_id: v.station_id.clone(),
                consumption_kwh: v.consumption_kwh,
                demand_to_go_kwh: v.demand_to_go_kwh,
                arrival_step: v.arrival_step,
                q_ini_kwh: trip.q_ini_kwh,
                cargo_kg: trip.cargo_kg,
                distance_mi: trip.distance_mi,
            })?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// One violated invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Checks every type invariant of a resolved scenario. Empty means valid.
pub fn validate_scenario(sc: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();
    let g = &sc.time;
    if g.t_begin >= g.t_end {
        out.push(Violation::new("time", format!("t_begin ({}) must be < t_end ({})", g.t_begin, g.t_end)));
    }
    if !(g.delta_t > 0.0) {
        out.push(Violation::new("time.delta_t", "must be > 0"));
    }

    let b = &sc.battery;
    if !(b.eta > 0.0 && b.eta <= 1.0) {
        out.push(Violation::new("batteries.eta", format!("{} not in (0, 1]", b.eta)));
    }
    if !(b.p_max_kw > 0.0) {
        out.push(Violation::new("batteries.p_max_kw", "must be > 0"));
    }
    if !(b.capacity_kwh > 0.0) {
        out.push(Violation::new("batteries.capacity_kwh", "must be > 0"));
    }
    if !(b.specific_mass_kg_per_kwh > 0.0) {
        out.push(Violation::new("batteries.specific_mass_kg_per_kwh", "must be > 0"));
    }
    if !(0.0..=1.0).contains(&b.initial_soe_fraction) {
        out.push(Violation::new("batteries.initial_soe_fraction", "must be in [0, 1]"));
    }
    let payload = sc.truck.gvwr_kg - sc.truck.curb_mass_no_battery_kg - b.mass();
    if payload < 0.0 {
        out.push(Violation::new("batteries.capacity_kwh", format!("pack mass leaves negative payload ({payload:.1} kg)")));
    }

    let mut ids = BTreeSet::new();
    for (k, st) in sc.stations.iter().enumerate() {
        if !ids.insert(st.id.as_str()) {
            out.push(Violation::new(format!("stations[{k}].id"), format!("duplicate station id `{}`", st.id)));
        }
        let unique: BTreeSet<_> = st.slots.iter().collect();
        if unique.len() != st.slots.len() {
            out.push(Violation::new(format!("stations[{k}].slots"), "slot indices must be unique within a station"));
        }
    }

    let mut customers = BTreeSet::new();
    for (k, trip) in sc.trips.iter().enumerate() {
        let f = |name: &str| format!("trips[{k}].{name}");
        if !customers.insert(trip.customer) {
            out.push(Violation::new(f("customer"), format!("duplicate customer id {}", trip.customer)));
        }
        if trip.q_ini_kwh < 0.0 || trip.q_ini_kwh > b.capacity_kwh {
            out.push(Violation::new(f("q_ini_kwh"), format!("Q_ini = {} outside [0, {}]", trip.q_ini_kwh, b.capacity_kwh)));
        }
        if trip.visits.len() > sc.max_stops {
            out.push(Violation::new(f("visits"), format!("{} stops exceed max_stops = {}", trip.visits.len(), sc.max_stops)));
        }
        let mut seen = BTreeSet::new();
        for (j, v) in trip.visits.iter().enumerate() {
            let vf = |name: &str| format!("trips[{k}].visits[{j}].{name}");
            if sc.station_index(&v.station_id).is_none() {
                out.push(Violation::new(vf("station_id"), format!("unknown station `{}`", v.station_id)));
            }
            if !seen.insert(v.station_id.as_str()) {
                out.push(Violation::new(vf("station_id"), "a customer may visit a station only once"));
            }
            if !g.contains(v.arrival_step) {
                out.push(Violation::new(vf("arrival_step"), format!("T = {} outside [{}, {}]", v.arrival_step, g.t_begin, g.t_end)));
            }
            if v.demand_to_go_kwh < 0.0 || v.consumption_kwh < 0.0 {
                out.push(Violation::new(vf("demand_to_go_kwh"), "energies must be non-negative"));
            }
            if j > 0 {
                let prev = &trip.visits[j - 1];
                if v.demand_to_go_kwh > prev.demand_to_go_kwh + 1e-9 {
                    out.push(Violation::new(vf("demand_to_go_kwh"), "E must be non-increasing along the visit order"));
                }
                if v.consumption_kwh + 1e-9 < prev.consumption_kwh {
                    out.push(Violation::new(vf("consumption_kwh"), "cumulative consumption must be non-decreasing"));
                }
                if v.arrival_step < prev.arrival_step {
                    out.push(Violation::new(vf("arrival_step"), "arrivals must follow the visit order"));
                }
            } else if v.consumption_kwh > trip.q_ini_kwh + 1e-9 {
                out.push(Violation::new(vf("consumption_kwh"), "first station is beyond the initial vehicle energy"));
            }
        }
    }

    let t = &sc.tariffs;
    for (name, series) in [("tariffs.grid_price", &t.grid_price), ("tariffs.energy_revenue", &t.energy_revenue)] {
        if let Err(e) = series.check_aligned(g) {
            out.push(Violation::new(name, e.to_string()));
        }
    }
    let max_ren = t.energy_revenue.max();
    if !(t.shortage_penalty > max_ren) {
        out.push(Violation::new(
            "tariffs.shortage_penalty",
            format!("shortage cheaper than service: P^en = {} <= max R^en = {}", t.shortage_penalty, max_ren),
        ));
    }
    for (name, a) in [("tariffs.alpha_1", t.alpha_1), ("tariffs.alpha_2", t.alpha_2)] {
        if !(0.0..=1.0).contains(&a) {
            out.push(Violation::new(name, format!("{a} not in [0, 1]")));
        }
    }
    if !(t.grid_limit_kwh >= 0.0) {
        out.push(Violation::new("tariffs.grid_limit_kwh", "must be >= 0"));
    }
    if !(0.0..=1000.0).contains(&t.scc_per_ton) {
        out.push(Violation::new("tariffs.scc_per_ton", "must be within 0..=1000 $/ton"));
    }
    for (name, s) in [
        ("signals.co2_avg", &sc.signals.co2_avg),
        ("signals.co2_marginal", &sc.signals.co2_marginal),
        ("signals.ru_price", &sc.signals.ru_price),
        ("signals.rd_price", &sc.signals.rd_price),
    ] {
        if let Some(s) = s {
            if let Err(e) = s.check_aligned(g) {
                out.push(Violation::new(name, e.to_string()));
            }
        }
    }
    out
}

/// Where each Nomenclature symbol lives in this crate.
pub const NOMENCLATURE: &[(&str, &str)] = &[
    ("I", "Scenario::stations[s].slots"),
    ("M", "Scenario::trips"),
    ("M_{s,t}", "Scenario::visitors"),
    ("O", "TripRequest::customer"),
    ("S", "Scenario::stations"),
    ("S_m", "TripRequest::visits"),
    ("T", "TimeGrid::steps"),
    ("W", "milp::BssIndex::visits"),
    ("x", "milp::BssIndex::x"),
    ("y", "milp::BssIndex::y"),
    ("z", "milp::BssIndex::z"),
    ("a", "milp::BssIndex::a"),
    ("b", "milp::BssIndex::b"),
    ("p^chg", "milp::BssIndex::p_chg"),
    ("p^dsg", "milp::BssIndex::p_dsg"),
    ("e^G", "milp::BssIndex::e_grid"),
    ("q", "milp::BssIndex::q"),
    ("q^s2v", "milp::BssIndex::q_s2v"),
    ("q^veh", "milp::BssIndex::q_veh"),
    ("q^shrt", "milp::BssIndex::q_shrt"),
    ("alpha_1", "Tariffs::alpha_1"),
    ("alpha_2", "Tariffs::alpha_2"),
    ("B^cap", "metrics::CbaConfig::daily_battery_cost"),
    ("t_b", "TimeGrid::t_begin"),
    ("t_e", "TimeGrid::t_end"),
    ("F^G", "Tariffs::grid_price"),
    ("R^sw", "Tariffs::swap_revenue"),
    ("R^en", "Tariffs::energy_revenue"),
    ("P^en", "Tariffs::shortage_penalty"),
    ("eta", "BatterySpec::eta"),
    ("P_bar", "BatterySpec::p_max_kw"),
    ("E_bar", "Tariffs::grid_limit_kwh"),
    ("Q", "BatterySpec::capacity_kwh"),
    ("Q^ini", "TripRequest::q_ini_kwh"),
    ("C", "StationVisit::consumption_kwh"),
    ("E", "StationVisit::demand_to_go_kwh"),
    ("T_{m,s}", "StationVisit::arrival_step"),
    ("N", "Scenario::trips.len"),
    ("xi^CO2", "Signals::co2_avg|co2_marginal"),
];

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn base_scenario() -> Scenario {
        let grid = TimeGrid::new(0, 7, 0.5);
        Scenario {
            time: grid.clone(),
            battery: BatterySpec::new(500.0, 1.0, 200.0),
            truck: TruckSpec::default(),
            stations: vec![Station::with_slots("S1", "Z1", 2)],
            trips: vec![TripRequest {
                customer: 0,
                visits: vec![StationVisit { station_id: "S1".into(), consumption_kwh: 200.0, demand_to_go_kwh: 300.0, arrival_step: 3 }],
                q_ini_kwh: 450.0,
                cargo_kg: 30000.0,
                distance_mi: 400.0,
            }],
            tariffs: Tariffs {
                grid_price: TimeSeries::flat(SignalKind::Lmp, &grid, 0.1),
                swap_revenue: 10.0,
                energy_revenue: TimeSeries::flat(SignalKind::EnergyRevenue, &grid, 0.5),
                shortage_penalty: 1.0,
                grid_limit_kwh: 500.0,
                scc_per_ton: 0.0,
                alpha_1: 0.0,
                alpha_2: 0.0,
            },
            signals: Signals::default(),
            max_stops: DEFAULT_MAX_STOPS,
            vehicle: VehicleParams::default(),
            corridor: None,
            base_dir: PathBuf::new(),
        }
    }

    #[test]
    fn identity_case_is_valid() {
        assert_eq!(validate_scenario(&base_scenario()), vec![]);
    }

    #[test]
    fn q_ini_above_capacity() {
        let mut sc = base_scenario();
        sc.trips[0].q_ini_kwh = 900.0;
        let v = validate_scenario(&sc);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].field.ends_with("q_ini_kwh"));
    }

    #[test]
    fn shortage_cheaper_than_service() {
        let mut sc = base_scenario();
        sc.tariffs.shortage_penalty = 0.1;
        let v = validate_scenario(&sc);
        assert_eq!(v.len(), 1);
        assert!(v[0].message.contains("shortage cheaper than service"));
    }

    #[test]
    fn arrival_outside_grid() {
        let mut sc = base_scenario();
        sc.trips[0].visits[0].arrival_step = 8;
        assert!(validate_scenario(&sc).iter().any(|v| v.field.ends_with("arrival_step")));
    }

    #[test]
    fn increasing_demand_to_go_rejected() {
        let mut sc = base_scenario();
        sc.stations.push(Station::with_slots("S2", "Z2", 1));
        sc.trips[0].visits.push(StationVisit { station_id: "S2".into(), consumption_kwh: 300.0, demand_to_go_kwh: 350.0, arrival_step: 5 });
        assert!(validate_scenario(&sc).iter().any(|v| v.message.contains("non-increasing")));
    }

    #[test]
    fn parse_error_names_field() {
        let text = r#"{"time": {"t_begin": 0, "t_end": "x"}}"#;
        match ScenarioConfig::from_json_str(text, "s.json") {
            Err(ScenarioError::Parse { field, line, .. }) => {
                assert_eq!(field, "time.t_end");
                assert_eq!(line, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn arrival_hours_round_down() {
        let g = TimeGrid::new(0, 47, 0.5);
        assert_eq!(g.step_at_hour(3.49), 6);
        assert_eq!(g.step_at_hour(3.5), 7);
        assert_eq!(g.step_at_hour(0.0), 0);
    }

    #[test]
    fn nomenclature_symbols_map_once() {
        let mut symbols = BTreeSet::new();
        let mut fields = BTreeSet::new();
        for (sym, field) in NOMENCLATURE {
            assert!(symbols.insert(*sym), "symbol {sym} mapped twice");
            assert!(fields.insert(*field), "field {field} used twice");
        }
        for sym in ["x", "y", "z", "a", "b", "q", "Q", "E", "C", "P^en", "R^sw", "B^cap", "alpha_1", "alpha_2", "xi^CO2"] {
            assert!(symbols.contains(sym), "{sym} missing");
        }
    }

    #[test]
    fn trips_csv_round_trip() {
        let sc = base_scenario();
        let mut buf = Vec::new();
        write_trips_csv(&mut buf, &sc.trips).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("m,leg_index,station_id,consumption_kwh,demand_to_go_kwh,arrival_step,q_ini_kwh,cargo_kg,distance_mi"));
        assert_eq!(read_trips_csv(buf.as_slice(), "mem").unwrap(), sc.trips);
    }
}
