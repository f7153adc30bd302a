//! Longitudinal-dynamics trip energy and payload arithmetic.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::{BatterySpec, TruckSpec};

const J_PER_KWH: f64 = 3.6e6;

#[derive(Debug, Error, PartialEq)]
pub enum EnergyError {
    #[error("distance must be > 0 (got {0} m)")]
    NonPositiveDistance(f64),
    #[error("net elevation {elevation} m exceeds distance {distance} m")]
    ElevationExceedsDistance { elevation: f64, distance: f64 },
    #[error("vehicle parameter `{0}` must be strictly positive")]
    NonPositive(&'static str),
    #[error("efficiency `{0}` must be in (0, 1]")]
    Efficiency(&'static str),
    #[error("battery of {capacity_kwh} kWh leaves a negative payload ({payload_kg:.1} kg)")]
    BatteryTooLarge { capacity_kwh: f64, payload_kg: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleParams {
    pub mass_kg: f64,
    pub g: f64,
    pub a_acc: f64,
    pub a_dec: f64,
    pub v_max_kmh: f64,
    pub c_r: f64,
    pub c_d: f64,
    pub frontal_area_m2: f64,
    pub rho: f64,
    pub eta_a: f64,
    pub eta_c: f64,
    pub eta_d: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            mass_kg: 37194.6,
            g: 9.81,
            a_acc: 1.0,
            a_dec: 1.0,
            v_max_kmh: 80.0,
            c_r: 0.0061,
            c_d: 0.581,
            frontal_area_m2: 10.0684,
            rho: 1.225,
            eta_a: 0.9,
            eta_c: 0.9,
            eta_d: 0.9,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<(), EnergyError> {
        let positive = [
            ("mass_kg", self.mass_kg),
            ("g", self.g),
            ("a_acc", self.a_acc),
            ("a_dec", self.a_dec),
            ("v_max_kmh", self.v_max_kmh),
            ("c_r", self.c_r),
            ("c_d", self.c_d),
            ("frontal_area_m2", self.frontal_area_m2),
            ("rho", self.rho),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(EnergyError::NonPositive(name));
            }
        }
        for (name, v) in [("eta_a", self.eta_a), ("eta_c", self.eta_c), ("eta_d", self.eta_d)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(EnergyError::Efficiency(name));
            }
        }
        Ok(())
    }

    pub fn v_max_ms(&self) -> f64 {
        self.v_max_kmh / 3.6
    }

    fn aero(&self, v2: f64) -> f64 {
        0.5 * self.c_d * self.frontal_area_m2 * self.rho * v2
    }
}

/// Trapezoidal speed profile of one trip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedProfile {
    pub d: f64,
    pub d_a: f64,
    pub d_d: f64,
    pub theta_bar: f64,
    /// Peak speed actually reached, m/s.
    pub v_bar: f64,
}

impl SpeedProfile {
    pub fn new(distance: f64, net_elevation: f64, params: &VehicleParams) -> Result<Self, EnergyError> {
        if !(distance > 0.0) {
            return Err(EnergyError::NonPositiveDistance(distance));
        }
        if net_elevation.abs() > distance {
            return Err(EnergyError::ElevationExceedsDistance { elevation: net_elevation, distance });
        }
        let mut v = params.v_max_ms();
        let mut d_a = v * v / (2.0 * params.a_acc);
        let mut d_d = v * v / (2.0 * params.a_dec);
        if d_a + d_d > distance {
            // triangle profile that fits exactly
            let v2 = 2.0 * distance * params.a_acc * params.a_dec / (params.a_acc + params.a_dec);
            v = v2.sqrt();
            d_a = v2 / (2.0 * params.a_acc);
            d_d = distance - d_a;
        }
        Ok(Self { d: distance, d_a, d_d, theta_bar: (net_elevation / distance).asin(), v_bar: v })
    }

    pub fn cruise_length(&self) -> f64 {
        (self.d - self.d_a - self.d_d).max(0.0)
    }
}

/// Energy of each phase, kWh at the battery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseEnergies {
    pub accel: f64,
    pub cruise: f64,
    pub decel: f64,
}

impl PhaseEnergies {
    pub fn total(&self) -> f64 {
        self.accel + self.cruise + self.decel
    }
}

fn at_battery(wheel_j: f64, eta: f64) -> f64 {
    let j = if wheel_j >= 0.0 { wheel_j / eta } else { wheel_j * eta };
    j / J_PER_KWH
}

fn grade_force(theta: f64, p: &VehicleParams) -> f64 {
    p.mass_kg * p.g * theta.sin() + p.mass_kg * p.g * p.c_r * theta.cos()
}

/// Cruise energy of a constant-speed segment, kWh.
pub fn cruise_energy(length: f64, theta: f64, v: f64, p: &VehicleParams) -> f64 {
    at_battery(length * (grade_force(theta, p) + p.aero(v * v)), p.eta_c)
}

pub fn phase_energies(distance: f64, net_elevation: f64, p: &VehicleParams) -> Result<PhaseEnergies, EnergyError> {
    p.validate()?;
    let prof = SpeedProfile::new(distance, net_elevation, p)?;
    let v2 = prof.v_bar * prof.v_bar;
    let resist = grade_force(prof.theta_bar, p);
    let accel = at_battery(prof.d_a * (p.mass_kg * p.a_acc + resist + p.aero(v2) / 2.0), p.eta_a);
    let decel = at_battery(prof.d_d * (-p.mass_kg * p.a_dec + resist + p.aero(v2) / 2.0), p.eta_d);
    let cruise = cruise_energy(prof.cruise_length(), prof.theta_bar, prof.v_bar, p);
    Ok(PhaseEnergies { accel, cruise, decel })
}

/// Battery energy for a trip of `distance` metres with `net_elevation` metres of climb, kWh.
pub fn trip_energy(distance: f64, net_elevation: f64, params: &VehicleParams) -> Result<f64, EnergyError> {
    phase_energies(distance, net_elevation, params).map(|e| e.total())
}

/// Cargo mass a fully loaded truck can carry with this battery, kg.
pub fn payload(battery: &BatterySpec, truck: &TruckSpec) -> Result<f64, EnergyError> {
    let kg = truck.gvwr_kg - truck.curb_mass_no_battery_kg - battery.mass();
    if kg < 0.0 {
        return Err(EnergyError::BatteryTooLarge { capacity_kwh: battery.capacity_kwh, payload_kg: kg });
    }
    Ok(kg)
}

pub const METERS_PER_MILE: f64 = 1609.344;
