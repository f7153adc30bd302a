use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::artifacts::{ERROR_FILE, MANIFEST_FILE, STALE_MARKER};
use crate::{Mode, RunError, RunManifest};

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn read(path: &Path) -> Result<Self, RunError> {
        let mut rdr = csv::Reader::from_path(path).map_err(|e| RunError::validation("summary", format!("{}: {e}", path.display())))?;
        let header = rdr.headers().map_err(|e| RunError::validation("summary", e))?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            rows.push(rec.map_err(|e| RunError::validation("summary", e))?.iter().map(String::from).collect());
        }
        Ok(Self { header, rows })
    }

    fn col(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Value of `column` in the row whose first field equals `key`.
    fn lookup(&self, key: &str, column: &str) -> Option<&str> {
        let c = self.col(column)?;
        self.rows.iter().find(|r| r[0] == key).map(|r| r[c].as_str())
    }

    fn select(&self, columns: &[&str]) -> Vec<Vec<String>> {
        let idx: Vec<Option<usize>> = columns.iter().map(|c| self.col(c)).collect();
        self.rows.iter().map(|r| idx.iter().map(|k| k.map(|k| short(&r[k])).unwrap_or_default()).collect()).collect()
    }
}

fn short(v: &str) -> String {
    match v.parse::<f64>() {
        Ok(x) if v.contains('.') || v.contains('e') => {
            let x = if x == 0.0 { 0.0 } else { x };
            if x != 0.0 && x.abs() < 1e-3 {
                format!("{x:.4e}")
            } else {
                format!("{x:.4}")
            }
        }
        _ => v.to_string(),
    }
}

fn aligned(out: &mut String, header: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, v) in widths.iter_mut().zip(r) {
            *w = (*w).max(v.len());
        }
    }
    let line = |cells: Vec<&str>| cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect::<Vec<_>>().join("  ").trim_end().to_string();
    let _ = writeln!(out, "{}", line(header.to_vec()));
    for r in rows {
        let _ = writeln!(out, "{}", line(r.iter().map(String::as_str).collect()));
    }
}

fn solve_lines(out: &mut String, solve: &Table) {
    aligned(out, &["solve", "status", "objective", "gap"], &solve.select(&["label", "status", "objective", "gap"]));
}

/// Human-readable digest of a finished run directory.
pub fn report_summary(dir: &Path, mode: Option<Mode>) -> Result<String, RunError> {
    let manifest: Option<RunManifest> = std::fs::read_to_string(dir.join(MANIFEST_FILE)).ok().and_then(|t| serde_json::from_str(&t).ok());
    let mode = mode.or(manifest.as_ref().map(|m| m.mode));
    let mut needed: BTreeSet<&str> = BTreeSet::from([MANIFEST_FILE]);
    match mode {
        Some(m) => needed.extend(m.artifacts()),
        None => {
            for m in [Mode::Plan, Mode::Operate, Mode::Compare, Mode::CarbonSweep, Mode::AsStudy, Mode::Decompose] {
                needed.extend(m.artifacts());
            }
        }
    }
    let missing: Vec<String> = needed.iter().filter(|f| !dir.join(f).is_file()).map(|f| f.to_string()).collect();
    if !missing.is_empty() {
        return Err(RunError::validation("summary", format!("{} is missing {} artifact(s)", dir.display(), missing.len())).with_details(missing));
    }
    if dir.join(STALE_MARKER).exists() {
        let reason = std::fs::read_to_string(dir.join(ERROR_FILE)).unwrap_or_default();
        return Err(RunError::validation("summary", format!("{} holds a stale run", dir.display())).with_details(vec![reason]));
    }
    let (Some(m), Some(mode)) = (manifest, mode) else { unreachable!("manifest present") };
    let t = |name: &str| Table::read(&dir.join(name));

    let mut out = String::new();
    let _ = writeln!(out, "run       {}", mode.as_str());
    let _ = writeln!(out, "scenario  {}", m.scenario.display());
    let _ = writeln!(out, "solver    {} (gap {})", m.solver.solver, m.solver.mip_gap);
    let _ = writeln!(out, "preset    {}", m.preset);
    out.push('\n');
    match mode {
        Mode::Plan => {
            solve_lines(&mut out, &t("solve.csv")?);
            out.push('\n');
            let sizing = t("sizing.csv")?;
            aligned(&mut out, &["station", "batteries", "capacity_kwh"], &sizing.select(&["station", "batteries", "capacity_kwh"]));
            let c = sizing.col("batteries").expect("batteries column");
            let total: u64 = sizing.rows.iter().filter_map(|r| r[c].parse::<u64>().ok()).sum();
            let _ = writeln!(out, "total batteries  {total}");
        }
        Mode::Operate => {
            solve_lines(&mut out, &t("solve.csv")?);
            out.push('\n');
            let p = t("profit.csv")?;
            for key in ["swaps_served", "shortage_kwh", "profit", "emissions_avg_t", "emissions_marginal_t"] {
                if let Some(v) = p.lookup(key, "value") {
                    let _ = writeln!(out, "{key:<22}{}", short(v));
                }
            }
        }
        Mode::Compare => {
            let a = t("argmin.csv")?;
            let _ = writeln!(out, "lowest cost per ton-mile");
            aligned(&mut out, &["mechanism", "battery_kwh", "daily_cost", "cost_per_ton_mile"], &a.select(&["mechanism", "battery_kwh", "daily_cost", "cost_per_ton_mile"]));
            out.push('\n');
            let p = t("penetration.csv")?;
            aligned(&mut out, &["battery_kwh", "penetration"], &p.select(&["battery_kwh", "rate"]));
        }
        Mode::CarbonSweep => {
            let c = t("carbon_sweep.csv")?;
            let cols = ["mechanism", "signal", "scc_per_ton", "emissions_t", "profit", "delta_emissions_pct", "delta_profit_pct"];
            aligned(&mut out, &cols, &c.select(&cols));
        }
        Mode::AsStudy => {
            let a = t("as_study.csv")?;
            let cols = ["case", "profit", "as_revenue", "regulation_up_kwh", "regulation_down_kwh", "delta_profit"];
            aligned(&mut out, &cols, &a.select(&cols));
        }
        Mode::Decompose => {
            let tiers = t("tiers.csv")?;
            let cols = ["tier", "scale", "edges", "trips", "batteries", "daily_cost"];
            aligned(&mut out, &cols, &tiers.select(&cols));
            out.push('\n');
            let r = t("recombined.csv")?;
            let cols = ["batteries", "daily_cost", "trips", "original_trips", "rounding_bound", "dropped_mass"];
            aligned(&mut out, &cols, &r.select(&cols));
        }
    }
    Ok(out)
}
