use std::path::PathBuf;

use bss_core::metrics::StayPreset;
use bss_core::solver::SolveLimits;
use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Plan,
    Operate,
    Compare,
    CarbonSweep,
    AsStudy,
    Decompose,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Plan => "plan",
            Mode::Operate => "operate",
            Mode::Compare => "compare",
            Mode::CarbonSweep => "carbon-sweep",
            Mode::AsStudy => "as-study",
            Mode::Decompose => "decompose",
        }
    }

    /// Artifacts a completed run of this mode leaves behind.
    pub fn artifacts(self) -> &'static [&'static str] {
        match self {
            Mode::Plan => &["sizing.csv", "solve.csv"],
            Mode::Operate => &["schedule.csv", "grid.csv", "profit.csv", "solve.csv"],
            Mode::Compare => &["efficiency.csv", "frontier.csv", "argmin.csv", "penetration.csv", "stations.csv"],
            Mode::CarbonSweep => &["carbon_sweep.csv"],
            Mode::AsStudy => &["as_study.csv"],
            Mode::Decompose => &["tiers.csv", "histogram.csv", "recombined.csv"],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub solver: String,
    pub mip_gap: f64,
    pub time_limit: Option<f64>,
    pub solver_cmd: Option<String>,
}

impl SolverSettings {
    pub fn limits(&self) -> SolveLimits {
        SolveLimits { time_limit: self.time_limit, ..SolveLimits::with_gap(self.mip_gap) }
    }
}

/// Everything that determines a run; echoed to `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenario: PathBuf,
    pub mode: Mode,
    pub preset: StayPreset,
    pub solver: SolverSettings,
    pub workers: usize,
    pub out: PathBuf,
}

#[derive(Debug, Parser)]
#[command(name = "bss", version, about = "Battery-swapping station planning, operations and comparison studies")]
pub struct Cli {
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Charging stay profile: baseline, appC-1, appC-2 or appC-3.
    #[arg(long, default_value = "baseline")]
    pub preset: String,
    /// Relative optimality gap at which a solve may stop.
    #[arg(long, default_value_t = 0.05)]
    pub gap: f64,
    /// Wall-clock limit per solve, seconds. Results may then depend on machine speed.
    #[arg(long)]
    pub time_limit: Option<f64>,
    /// Command used by the external solver backend.
    #[arg(long)]
    pub solver_cmd: Option<String>,
    /// Backend name: exact or external.
    #[arg(long, default_value = "external")]
    pub solver: String,
    /// Concurrent sweep points; 0 uses every core.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Print the digest of an existing run directory instead of running.
    #[arg(long, value_name = "RUN_DIR", conflicts_with = "scenario")]
    pub summary: Option<PathBuf>,
}

impl Cli {
    pub fn manifest(&self) -> Result<RunManifest, String> {
        let mode = self.mode.ok_or("--mode is required")?;
        let scenario = self.scenario.clone().ok_or("--scenario is required")?;
        let preset: StayPreset = self.preset.parse().map_err(|e: bss_core::metrics::MetricsError| e.to_string())?;
        Ok(RunManifest {
            scenario,
            mode,
            preset,
            solver: SolverSettings { solver: self.solver.clone(), mip_gap: self.gap, time_limit: self.time_limit, solver_cmd: self.solver_cmd.clone() },
            workers: self.workers,
            out: self.out.clone(),
        })
    }
}
