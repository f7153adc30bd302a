//! Exogenous market and emission signals on the scenario time grid.
//!
//! Series are loaded from `timestamp,value` CSV files, unit-normalized to
//! `$/kWh` (prices) or `t/kWh` (emission factors), and resampled onto the
//! half-hour grid with piecewise-constant hold semantics.

use std::fmt;
use std::io::Read;
use std::path::Path;

use chrono::{Duration, NaiveDateTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::TimeGrid;

const TIMESTAMP_FORMATS: &[&str] = &["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"];

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("expected header `timestamp,value[unit]`, found `{0}`")]
    Header(String),
    #[error("unit `{unit}` is not valid for {kind} signals")]
    UnitMismatch { kind: SignalKind, unit: String },
    #[error("row {row}: cannot parse timestamp `{value}`")]
    Timestamp { row: usize, value: String },
    #[error("row {row}: cannot parse value `{value}`")]
    Value { row: usize, value: String },
    #[error("row {row}: duplicated timestamp {timestamp}")]
    Duplicate { row: usize, timestamp: NaiveDateTime },
    #[error("row {row}: timestamp {timestamp} is earlier than the previous row")]
    NonMonotone { row: usize, timestamp: NaiveDateTime },
    #[error("row {row}: irregular spacing ({found} min, expected {expected} min)")]
    Irregular { row: usize, found: i64, expected: i64 },
    #[error("row {row}: negative emission factor {value}")]
    NegativeEmission { row: usize, value: f64 },
    #[error("series is empty")]
    Empty,
    #[error("series step {series_min} min does not align with the grid step {grid_min} min")]
    Misaligned { series_min: i64, grid_min: i64 },
    #[error("series does not cover the grid: missing {from} .. {to}")]
    Coverage { from: NaiveDateTime, to: NaiveDateTime },
    #[error("{kind} signal has {found} steps, grid has {expected}")]
    Length { kind: SignalKind, found: usize, expected: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    Lmp,
    Co2Avg,
    Co2Marginal,
    RuPrice,
    RdPrice,
    /// Per-kWh revenue charged to swapping customers.
    EnergyRevenue,
}

impl SignalKind {
    pub fn is_emission(self) -> bool {
        matches!(self, SignalKind::Co2Avg | SignalKind::Co2Marginal)
    }

    pub fn canonical_unit(self) -> &'static str {
        if self.is_emission() {
            "t/kWh"
        } else {
            "$/kWh"
        }
    }

    /// Multiplier that converts a value expressed in `unit` to the canonical unit.
    fn unit_factor(self, unit: &str) -> Option<f64> {
        let unit = unit.trim();
        if self.is_emission() {
            match unit {
                "t/kWh" => Some(1.0),
                "t/MWh" | "kg/kWh" => Some(1e-3),
                "kg/MWh" => Some(1e-6),
                "lb/MWh" => Some(0.453_592_37e-6),
                _ => None,
            }
        } else {
            match unit {
                "$/kWh" => Some(1.0),
                "$/MWh" => Some(1e-3),
                _ => None,
            }
        }
    }
}

impl fmt::Display for SignalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SignalKind::Lmp => "lmp",
            SignalKind::Co2Avg => "co2_avg",
            SignalKind::Co2Marginal => "co2_marginal",
            SignalKind::RuPrice => "ru_price",
            SignalKind::RdPrice => "rd_price",
            SignalKind::EnergyRevenue => "energy_revenue",
        };
        f.write_str(s)
    }
}

/// A uniformly spaced signal. `start` is the timestamp of `values[0]`; each
/// value holds over `[start + k * step, start + (k + 1) * step)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub kind: SignalKind,
    pub start: NaiveDateTime,
    pub step_minutes: i64,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(kind: SignalKind, start: NaiveDateTime, step_minutes: i64, values: Vec<f64>) -> Self {
        Self { kind, start, step_minutes, values }
    }

    /// A series already aligned to `grid`, starting at the grid's first step.
    pub fn on_grid(kind: SignalKind, grid: &TimeGrid, values: Vec<f64>) -> Self {
        Self { kind, start: grid.time_of_step(grid.t_begin), step_minutes: grid.step_minutes(), values }
    }

    pub fn flat(kind: SignalKind, grid: &TimeGrid, value: f64) -> Self {
        Self::on_grid(kind, grid, vec![value; grid.num_steps()])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn end(&self) -> NaiveDateTime {
        self.start + Duration::minutes(self.step_minutes * self.values.len() as i64)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Value at grid position `k` (0-based from the first grid step).
    pub fn at(&self, k: usize) -> f64 {
        self.values[k]
    }

    /// Checks that the series is aligned to `grid` (same start, step and length).
    pub fn check_aligned(&self, grid: &TimeGrid) -> Result<(), SignalError> {
        if self.step_minutes != grid.step_minutes() {
            return Err(SignalError::Misaligned { series_min: self.step_minutes, grid_min: grid.step_minutes() });
        }
        if self.values.len() != grid.num_steps() {
            return Err(SignalError::Length { kind: self.kind, found: self.values.len(), expected: grid.num_steps() });
        }
        let expected = grid.time_of_step(grid.t_begin);
        if self.start != expected {
            return Err(SignalError::Coverage { from: expected.min(self.start), to: expected.max(self.start) });
        }
        Ok(())
    }
}

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    TIMESTAMP_FORMATS.iter().find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

/// Parses `value`, `value[$/MWh]` or `value_$/MWh` style headers into a unit string.
fn header_unit(header: &str) -> Option<Option<String>> {
    let h = header.trim();
    if h == "value" {
        return Some(None);
    }
    if let Some(rest) = h.strip_prefix("value[") {
        return rest.strip_suffix(']').map(|u| Some(u.trim().to_string()));
    }
    None
}

pub fn load_series(path: impl AsRef<Path>, kind: SignalKind) -> Result<TimeSeries, SignalError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| SignalError::Io { path: path.display().to_string(), source })?;
    read_series(file, kind)
}

/// Reads a `timestamp,value` CSV. The value header may carry a unit in
/// brackets (`value[$/MWh]`); values are converted to the canonical unit.
pub fn read_series<R: Read>(reader: R, kind: SignalKind) -> Result<TimeSeries, SignalError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || headers.get(0) != Some("timestamp") {
        return Err(SignalError::Header(headers.iter().collect::<Vec<_>>().join(",")));
    }
    let value_header = headers.get(1).unwrap_or_default();
    let unit = header_unit(value_header).ok_or_else(|| SignalError::Header(value_header.to_string()))?;
    let factor = match unit {
        None => 1.0,
        Some(u) => kind.unit_factor(&u).ok_or(SignalError::UnitMismatch { kind, unit: u })?,
    };

    let mut stamps: Vec<NaiveDateTime> = Vec::new();
    let mut values = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        // header is row 1
        let row = idx + 2;
        let record = record?;
        let ts_raw = record.get(0).unwrap_or_default();
        let ts = parse_timestamp(ts_raw).ok_or_else(|| SignalError::Timestamp { row, value: ts_raw.to_string() })?;
        let v_raw = record.get(1).unwrap_or_default();
        let v: f64 = v_raw.trim().parse().map_err(|_| SignalError::Value { row, value: v_raw.to_string() })?;
        if let Some(&prev) = stamps.last() {
            if ts == prev {
                return Err(SignalError::Duplicate { row, timestamp: ts });
            }
            if ts < prev {
                return Err(SignalError::NonMonotone { row, timestamp: ts });
            }
        }
        let v = v * factor;
        if kind.is_emission() && v < 0.0 {
            return Err(SignalError::NegativeEmission { row, value: v });
        }
        stamps.push(ts);
        values.push(v);
    }
    if stamps.is_empty() {
        return Err(SignalError::Empty);
    }
    // a single row is taken to be hourly
    let step = if stamps.len() > 1 { (stamps[1] - stamps[0]).num_minutes() } else { 60 };
    for (k, pair) in stamps.windows(2).enumerate() {
        let found = (pair[1] - pair[0]).num_minutes();
        if found != step {
            return Err(SignalError::Irregular { row: k + 3, found, expected: step });
        }
    }
    Ok(TimeSeries { kind, start: stamps[0], step_minutes: step, values })
}

/// Resamples `series` onto `grid`. Coarser sources are held constant over
/// each source interval; finer sources are averaged over the grid step.
pub fn resample(series: &TimeSeries, grid: &TimeGrid) -> Result<TimeSeries, SignalError> {
    let grid_step = grid.step_minutes();
    let src_step = series.step_minutes;
    if src_step <= 0 || grid_step <= 0 {
        return Err(SignalError::Misaligned { series_min: src_step, grid_min: grid_step });
    }
    let grid_start = grid.time_of_step(grid.t_begin);
    let grid_end = grid.time_of_step(grid.t_end + 1);
    if grid_start < series.start {
        return Err(SignalError::Coverage { from: grid_start, to: series.start.min(grid_end) });
    }
    if grid_end > series.end() {
        return Err(SignalError::Coverage { from: series.end().max(grid_start), to: grid_end });
    }
    let coarse = src_step >= grid_step;
    if (coarse && src_step % grid_step != 0) || (!coarse && grid_step % src_step != 0) {
        return Err(SignalError::Misaligned { series_min: src_step, grid_min: grid_step });
    }

    let mut values = Vec::with_capacity(grid.num_steps());
    for t in grid.steps() {
        let from = (grid.time_of_step(t) - series.start).num_minutes();
        if from % src_step.min(grid_step) != 0 {
            return Err(SignalError::Misaligned { series_min: src_step, grid_min: grid_step });
        }
        if coarse {
            let k = (from / src_step) as usize;
            values.push(series.values[k]);
        } else {
            let k0 = (from / src_step) as usize;
            let n = (grid_step / src_step) as usize;
            let sum: f64 = series.values[k0..k0 + n].iter().sum();
            values.push(sum / n as f64);
        }
    }
    Ok(TimeSeries { kind: series.kind, start: grid_start, step_minutes: grid_step, values })
}
