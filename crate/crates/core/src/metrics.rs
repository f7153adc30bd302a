//! Transportation efficiency, battery utilization and cost-benefit reports.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::{self, EnergyError, METERS_PER_MILE};
use crate::scenario::{BatterySpec, TruckSpec};
use crate::trips::RoutedTrip;

pub const KG_PER_SHORT_TON: f64 = 907.18474;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error("total capacity must be positive (got {0})")]
    ZeroCapacity(f64),
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("cost frontier needs at least two reports for {0}")]
    TooFewReports(String),
    #[error("unknown mechanism `{0}`")]
    UnknownMechanism(String),
    #[error("unknown preset `{0}` (expected baseline, appC-1, appC-2 or appC-3)")]
    UnknownPreset(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MechanismKind {
    #[serde(rename = "BSS")]
    Bss,
    #[serde(rename = "FCS")]
    Fcs,
}

impl MechanismKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MechanismKind::Bss => "BSS",
            MechanismKind::Fcs => "FCS",
        }
    }
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How a truck refuels en route.
pub trait Mechanism: Send + Sync {
    fn name(&self) -> &'static str;
    fn kind(&self) -> MechanismKind;
    /// Downtime per en-route stop, hours.
    fn stay_hours(&self) -> f64;
    /// Battery capacity held at stations, given what a planning solve installed.
    fn station_capacity_kwh(&self, planned_kwh: f64) -> f64;
}

#[derive(Debug, Clone, Copy)]
pub struct Swapping {
    pub stay_hours: f64,
}

impl Mechanism for Swapping {
    fn name(&self) -> &'static str {
        "bss"
    }
    fn kind(&self) -> MechanismKind {
        MechanismKind::Bss
    }
    fn stay_hours(&self) -> f64 {
        self.stay_hours
    }
    fn station_capacity_kwh(&self, planned_kwh: f64) -> f64 {
        planned_kwh
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FastCharging {
    pub stay_hours: f64,
}

impl Mechanism for FastCharging {
    fn name(&self) -> &'static str {
        "fcs"
    }
    fn kind(&self) -> MechanismKind {
        MechanismKind::Fcs
    }
    fn stay_hours(&self) -> f64 {
        self.stay_hours
    }
    fn station_capacity_kwh(&self, _planned_kwh: f64) -> f64 {
        0.0
    }
}

#[derive(Clone, Default)]
pub struct MechanismRegistry {
    entries: BTreeMap<String, Arc<dyn Mechanism>>,
}

impl MechanismRegistry {
    pub fn with_preset(preset: StayPreset) -> Self {
        let mut r = Self::default();
        r.register(Arc::new(Swapping { stay_hours: preset.bss_stay_hours() }));
        r.register(Arc::new(FastCharging { stay_hours: preset.fcs_stay_hours() }));
        r
    }

    pub fn register(&mut self, m: Arc<dyn Mechanism>) {
        self.entries.insert(m.name().to_string(), m);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Mechanism>, MetricsError> {
        self.entries.get(name).cloned().ok_or_else(|| MetricsError::UnknownMechanism(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<dyn Mechanism>> {
        self.entries.values()
    }
}

/// Stay-time profiles for the charging-rate sensitivity runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum StayPreset {
    #[default]
    #[serde(rename = "baseline")]
    Baseline,
    #[serde(rename = "appC-1")]
    AppC1,
    #[serde(rename = "appC-2")]
    AppC2,
    #[serde(rename = "appC-3")]
    AppC3,
}

impl StayPreset {
    pub const ALL: [StayPreset; 4] = [StayPreset::Baseline, StayPreset::AppC1, StayPreset::AppC2, StayPreset::AppC3];

    pub fn fcs_stay_hours(self) -> f64 {
        match self {
            StayPreset::Baseline => 1.0,
            StayPreset::AppC1 => 0.5,
            StayPreset::AppC2 => 1.0 / 3.0,
            StayPreset::AppC3 => 0.25,
        }
    }

    pub fn bss_stay_hours(self) -> f64 {
        match self {
            StayPreset::Baseline => 0.5,
            StayPreset::AppC1 => 0.25,
            StayPreset::AppC2 => 1.0 / 6.0,
            StayPreset::AppC3 => 0.25,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StayPreset::Baseline => "baseline",
            StayPreset::AppC1 => "appC-1",
            StayPreset::AppC2 => "appC-2",
            StayPreset::AppC3 => "appC-3",
        }
    }
}

impl FromStr for StayPreset {
    type Err = MetricsError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StayPreset::ALL.into_iter().find(|p| p.as_str() == s).ok_or_else(|| MetricsError::UnknownPreset(s.to_string()))
    }
}

impl fmt::Display for StayPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfficiencyReport {
    pub battery_kwh: f64,
    pub mechanism: MechanismKind,
    pub ton_miles: f64,
    pub drive_hours: f64,
    pub stop_hours: f64,
    pub rest_hours: f64,
    pub active_hours: f64,
    pub truck_capacity_kwh: f64,
    pub station_capacity_kwh: f64,
    pub total_capacity_kwh: f64,
    pub tmph: f64,
    pub tmpkwh: f64,
    /// Customers whose trip could not be routed.
    pub excluded: Vec<usize>,
}

/// Duty-cycle inputs shared by both mechanisms.
#[derive(Debug, Clone, PartialEq)]
pub struct DayInputs {
    pub truck: TruckSpec,
    pub speed_kmh: f64,
    /// Battery capacity installed at stations by the planning solve, kWh.
    pub planned_station_kwh: f64,
}

/// Mandated rests for a duty period under the hours-of-service rule.
pub fn rest_count(duty_hours: f64, max_duty_hours: f64) -> usize {
    if duty_hours <= max_duty_hours + 1e-9 {
        0
    } else {
        ((duty_hours / max_duty_hours) - 1e-9).ceil() as usize - 1
    }
}

/// One operating day of `trips`, each driven by its own fully loaded truck.
pub fn simulate_day(mechanism: &dyn Mechanism, trips: &[RoutedTrip], battery: &BatterySpec, day: &DayInputs) -> Result<EfficiencyReport, MetricsError> {
    if !(day.speed_kmh > 0.0) {
        return Err(MetricsError::NonPositive("speed_kmh"));
    }
    let payload_tons = energy::payload(battery, &day.truck)? / KG_PER_SHORT_TON;
    let mph = day.speed_kmh * 1000.0 / METERS_PER_MILE;
    let mut r = EfficiencyReport {
        battery_kwh: battery.capacity_kwh,
        mechanism: mechanism.kind(),
        ton_miles: 0.0,
        drive_hours: 0.0,
        stop_hours: 0.0,
        rest_hours: 0.0,
        active_hours: 0.0,
        truck_capacity_kwh: 0.0,
        station_capacity_kwh: mechanism.station_capacity_kwh(day.planned_station_kwh),
        total_capacity_kwh: 0.0,
        tmph: 0.0,
        tmpkwh: 0.0,
        excluded: vec![],
    };
    for t in trips {
        if !t.feasible {
            r.excluded.push(t.request.customer);
            continue;
        }
        let routed = t.total_distance_mi();
        let direct = routed - t.detour_distance_mi;
        let drive = routed / mph;
        let stops = t.stops.len() as f64 * mechanism.stay_hours();
        let rests = rest_count(drive + stops, day.truck.max_duty_hours) as f64 * day.truck.min_rest_hours;
        r.ton_miles += payload_tons * direct;
        r.drive_hours += drive;
        r.stop_hours += stops;
        r.rest_hours += rests;
        r.truck_capacity_kwh += battery.capacity_kwh;
    }
    r.active_hours = r.drive_hours + r.stop_hours + r.rest_hours;
    r.total_capacity_kwh = r.truck_capacity_kwh + r.station_capacity_kwh;
    if r.active_hours > 0.0 {
        r.tmph = r.ton_miles / r.active_hours;
    }
    if r.total_capacity_kwh > 0.0 {
        r.tmpkwh = r.ton_miles / r.total_capacity_kwh;
    }
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CbaConfig {
    pub battery_price: f64,
    pub wage: f64,
    pub battery_lifetime_years: f64,
    pub workdays_per_year: f64,
    pub cycle_life: f64,
}

impl Default for CbaConfig {
    fn default() -> Self {
        Self { battery_price: 151.0, wage: 28.02, battery_lifetime_years: 8.0, workdays_per_year: 260.0, cycle_life: 2000.0 }
    }
}

impl CbaConfig {
    pub fn validate(&self) -> Result<(), MetricsError> {
        for (name, v) in [
            ("battery_price", self.battery_price),
            ("wage", self.wage),
            ("battery_lifetime_years", self.battery_lifetime_years),
            ("workdays_per_year", self.workdays_per_year),
            ("cycle_life", self.cycle_life),
        ] {
            if !(v > 0.0) {
                return Err(MetricsError::NonPositive(name));
            }
        }
        Ok(())
    }

    /// Amortized battery cost, $/kWh per workday.
    pub fn daily_battery_cost(&self) -> f64 {
        self.battery_price / (self.battery_lifetime_years * self.workdays_per_year)
    }

    pub fn daily_cost(&self, r: &EfficiencyReport) -> f64 {
        self.wage * r.active_hours + self.daily_battery_cost() * r.total_capacity_kwh
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleLife {
    pub cycles_per_day: f64,
    pub lifespan_years: f64,
}

pub fn equivalent_cycles(daily_energy_kwh: f64, total_capacity_kwh: f64, cba: &CbaConfig) -> Result<CycleLife, MetricsError> {
    if !(total_capacity_kwh > 0.0) {
        return Err(MetricsError::ZeroCapacity(total_capacity_kwh));
    }
    let cycles_per_day = daily_energy_kwh / total_capacity_kwh;
    Ok(CycleLife { cycles_per_day, lifespan_years: lifespan_years(cycles_per_day, cba) })
}

pub fn lifespan_years(cycles_per_day: f64, cba: &CbaConfig) -> f64 {
    cba.cycle_life / (cycles_per_day * cba.workdays_per_year)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontierPoint {
    pub battery_kwh: f64,
    pub mechanism: MechanismKind,
    pub daily_cost: f64,
    pub cost_per_ton_mile: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeOff {
    pub mechanism: MechanismKind,
    pub from_kwh: f64,
    pub to_kwh: f64,
    pub delta_capacity_kwh: f64,
    pub delta_hours: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frontier {
    pub points: Vec<FrontierPoint>,
    /// Battery size with the lowest cost per ton-mile, per mechanism.
    pub argmin: BTreeMap<MechanismKind, f64>,
    pub trade_offs: Vec<TradeOff>,
    /// Slope of an equal-cost line in the (capacity, hours) plane, h per kWh.
    pub isoline_slope: f64,
}

/// Ranks battery sizes per mechanism by daily cost per ton-mile delivered.
pub fn cost_frontier(reports: &[EfficiencyReport], cba: &CbaConfig) -> Result<Frontier, MetricsError> {
    let mut by_mech: BTreeMap<MechanismKind, Vec<&EfficiencyReport>> = BTreeMap::new();
    for r in reports {
        by_mech.entry(r.mechanism).or_default().push(r);
    }
    let mut points = Vec::new();
    let mut argmin = BTreeMap::new();
    let mut trade_offs = Vec::new();
    for (mech, mut rs) in by_mech {
        if rs.len() < 2 {
            return Err(MetricsError::TooFewReports(mech.to_string()));
        }
        rs.sort_by(|a, b| a.battery_kwh.total_cmp(&b.battery_kwh));
        let mut best: Option<(f64, f64)> = None;
        for r in &rs {
            let daily_cost = cba.daily_cost(r);
            let cost_per_ton_mile = if r.ton_miles > 0.0 { daily_cost / r.ton_miles } else { f64::INFINITY };
            if best.map_or(true, |(c, _)| cost_per_ton_mile < c * (1.0 - 1e-12)) {
                best = Some((cost_per_ton_mile, r.battery_kwh));
            }
            points.push(FrontierPoint { battery_kwh: r.battery_kwh, mechanism: mech, daily_cost, cost_per_ton_mile });
        }
        argmin.insert(mech, best.map(|b| b.1).unwrap_or(f64::NAN));
        for w in rs.windows(2) {
            trade_offs.push(TradeOff {
                mechanism: mech,
                from_kwh: w[0].battery_kwh,
                to_kwh: w[1].battery_kwh,
                delta_capacity_kwh: w[1].total_capacity_kwh - w[0].total_capacity_kwh,
                delta_hours: w[1].active_hours - w[0].active_hours,
            });
        }
    }
    Ok(Frontier { points, argmin, trade_offs, isoline_slope: -cba.daily_battery_cost() / cba.wage })
}

#[derive(Serialize)]
struct EfficiencyRow {
    battery_kwh: f64,
    mechanism: MechanismKind,
    tmph: f64,
    tmpkwh: f64,
    ton_miles: f64,
    active_hours: f64,
    total_capacity_kwh: f64,
}

pub fn write_efficiency_csv<W: Write>(writer: W, reports: &[EfficiencyReport]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    for r in reports {
        w.serialize(EfficiencyRow {
            battery_kwh: r.battery_kwh,
            mechanism: r.mechanism,
            tmph: r.tmph,
            tmpkwh: r.tmpkwh,
            ton_miles: r.ton_miles,
            active_hours: r.active_hours,
            total_capacity_kwh: r.total_capacity_kwh,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_frontier_csv<W: Write>(writer: W, frontier: &Frontier) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    for p in &frontier.points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::TripRequest;

    fn trip(customer: usize, distance: f64, stops: usize) -> RoutedTrip {
        RoutedTrip {
            request: TripRequest { customer, visits: vec![], q_ini_kwh: 500.0, cargo_kg: 0.0, distance_mi: distance },
            stops: (0..stops).map(|k| format!("S{k}")).collect(),
            leg_distances_mi: vec![distance],
            leg_energies_kwh: vec![100.0],
            detour_distance_mi: 0.0,
            detour_energy_kwh: 0.0,
            feasible: true,
        }
    }

    fn day(speed_kmh: f64) -> DayInputs {
        DayInputs { truck: TruckSpec::default(), speed_kmh, planned_station_kwh: 1000.0 }
    }

    fn mph_kmh(mph: f64) -> f64 {
        mph * METERS_PER_MILE / 1000.0
    }

    #[test]
    fn short_trip_same_for_both() {
        let b = BatterySpec::new(500.0, 0.95, 250.0);
        let t = [trip(0, 100.0, 0)];
        let bss = simulate_day(&Swapping { stay_hours: 0.5 }, &t, &b, &day(80.0)).unwrap();
        let fcs = simulate_day(&FastCharging { stay_hours: 1.0 }, &t, &b, &day(80.0)).unwrap();
        assert_eq!(bss.tmph, fcs.tmph);
        assert_eq!(fcs.station_capacity_kwh, 0.0);
        assert_eq!(bss.total_capacity_kwh, 1500.0);
    }

    #[test]
    fn shorter_stay_higher_tmph() {
        let b = BatterySpec::new(500.0, 0.95, 250.0);
        let t = [trip(0, 400.0, 2)];
        let bss = simulate_day(&Swapping { stay_hours: 0.5 }, &t, &b, &day(80.0)).unwrap();
        let fcs = simulate_day(&FastCharging { stay_hours: 1.0 }, &t, &b, &day(80.0)).unwrap();
        assert!(bss.tmph > fcs.tmph);
        assert!((fcs.active_hours - bss.active_hours - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rest_inserted_after_overrun() {
        // 11.5 h at 50 mph plus one 1 h stop
        let b = BatterySpec::new(500.0, 0.95, 250.0);
        let t = [trip(0, 575.0, 1)];
        let r = simulate_day(&FastCharging { stay_hours: 1.0 }, &t, &b, &day(mph_kmh(50.0))).unwrap();
        assert!((r.drive_hours - 11.5).abs() < 1e-9);
        assert_eq!(r.rest_hours, 10.0);
        assert!((r.active_hours - 22.5).abs() < 1e-9);
        let no_stop = simulate_day(&FastCharging { stay_hours: 1.0 }, &[trip(0, 575.0, 0)], &b, &day(mph_kmh(50.0))).unwrap();
        assert_eq!(no_stop.rest_hours, 0.0);
    }

    #[test]
    fn rest_counts() {
        assert_eq!(rest_count(12.0, 12.0), 0);
        assert_eq!(rest_count(12.5, 12.0), 1);
        assert_eq!(rest_count(24.0, 12.0), 1);
        assert_eq!(rest_count(24.5, 12.0), 2);
    }

    #[test]
    fn infeasible_trip_excluded() {
        let b = BatterySpec::new(500.0, 0.95, 250.0);
        let mut bad = trip(7, 300.0, 0);
        bad.feasible = false;
        let r = simulate_day(&Swapping { stay_hours: 0.5 }, &[trip(0, 100.0, 0), bad], &b, &day(80.0)).unwrap();
        assert_eq!(r.excluded, vec![7]);
        assert_eq!(r.truck_capacity_kwh, 500.0);
    }

    #[test]
    fn cycle_life_footnote() {
        let cba = CbaConfig::default();
        let bss = lifespan_years(1.04, &cba);
        let fcs = lifespan_years(1.52, &cba);
        assert!((bss - 7.396).abs() < 1e-3, "{bss}");
        assert!((fcs - 5.0607).abs() < 1e-3, "{fcs}");
        assert_eq!(equivalent_cycles(800.0, 800.0, &cba).unwrap().cycles_per_day, 1.0);
        assert!(equivalent_cycles(1.0, 0.0, &cba).is_err());
    }

    fn report(mech: MechanismKind, kwh: f64, hours: f64, cap: f64, tm: f64) -> EfficiencyReport {
        EfficiencyReport {
            battery_kwh: kwh,
            mechanism: mech,
            ton_miles: tm,
            drive_hours: hours,
            stop_hours: 0.0,
            rest_hours: 0.0,
            active_hours: hours,
            truck_capacity_kwh: cap,
            station_capacity_kwh: 0.0,
            total_capacity_kwh: cap,
            tmph: tm / hours,
            tmpkwh: tm / cap,
            excluded: vec![],
        }
    }

    #[test]
    fn frontier_hand_arithmetic() {
        let cba = CbaConfig { battery_price: 2080.0, wage: 10.0, battery_lifetime_years: 1.0, workdays_per_year: 260.0, cycle_life: 2000.0 };
        // daily battery cost 8 $/kWh
        let a = report(MechanismKind::Fcs, 350.0, 12.0, 350.0, 1000.0); // 120 + 2800 = 2920
        let b = report(MechanismKind::Fcs, 400.0, 10.0, 300.0, 1000.0); // 100 + 2400 = 2500
        let f = cost_frontier(&[a, b], &cba).unwrap();
        assert_eq!(f.points[0].daily_cost, 2920.0);
        assert_eq!(f.points[1].daily_cost, 2500.0);
        assert_eq!(f.argmin[&MechanismKind::Fcs], 400.0);
        assert_eq!(f.trade_offs[0].delta_hours, -2.0);
        assert!((f.isoline_slope + 0.8).abs() < 1e-12);
    }

    #[test]
    fn frontier_limits() {
        let rs = vec![
            report(MechanismKind::Bss, 350.0, 14.0, 700.0, 9000.0),
            report(MechanismKind::Bss, 500.0, 12.0, 900.0, 8800.0),
            report(MechanismKind::Bss, 800.0, 11.0, 1600.0, 8000.0),
        ];
        let no_wage = CbaConfig { wage: 1e-12, ..CbaConfig::default() };
        let best_kwh = rs.iter().max_by(|a, b| a.tmpkwh.total_cmp(&b.tmpkwh)).unwrap().battery_kwh;
        assert_eq!(cost_frontier(&rs, &no_wage).unwrap().argmin[&MechanismKind::Bss], best_kwh);
        let free_batteries = CbaConfig { battery_price: 1e-12, ..CbaConfig::default() };
        let best_h = rs.iter().max_by(|a, b| a.tmph.total_cmp(&b.tmph)).unwrap().battery_kwh;
        assert_eq!(cost_frontier(&rs, &free_batteries).unwrap().argmin[&MechanismKind::Bss], best_h);
        let doubled = CbaConfig { wage: 2.0 * 28.02, battery_price: 2.0 * 151.0, ..CbaConfig::default() };
        assert_eq!(cost_frontier(&rs, &doubled).unwrap().argmin, cost_frontier(&rs, &CbaConfig::default()).unwrap().argmin);
    }

    #[test]
    fn frontier_needs_two_reports() {
        let r = report(MechanismKind::Fcs, 350.0, 12.0, 350.0, 1000.0);
        assert!(matches!(cost_frontier(&[r], &CbaConfig::default()), Err(MetricsError::TooFewReports(_))));
    }

    #[test]
    fn presets_parse() {
        for p in StayPreset::ALL {
            assert_eq!(p.as_str().parse::<StayPreset>().unwrap(), p);
            assert!(p.bss_stay_hours() <= p.fcs_stay_hours());
        }
        assert!("appC-9".parse::<StayPreset>().is_err());
        let reg = MechanismRegistry::with_preset(StayPreset::AppC2);
        assert_eq!(reg.get("bss").unwrap().stay_hours(), 1.0 / 6.0);
        assert!(reg.get("hydrogen").is_err());
    }
}
