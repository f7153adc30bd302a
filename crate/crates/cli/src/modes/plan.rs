use bss_core::milp::build_planning_model;
use serde::Serialize;

use crate::{Run, RunError};

#[derive(Debug, Serialize)]
struct SizingRow {
    station: String,
    zone: String,
    candidates: usize,
    batteries: usize,
    capacity_kwh: f64,
}

pub fn plan(run: &Run) -> Result<(), RunError> {
    let sc = &run.scenario;
    let bm = build_planning_model(sc).map_err(|e| RunError::validation("build planning model", e))?;
    let (sol, solve) = run.solve(&bm, "plan")?;
    let installed = bm.decode(&sol.values).installed;
    let rows: Vec<SizingRow> = sc
        .stations
        .iter()
        .map(|st| {
            let n = installed.get(&st.id).copied().unwrap_or(0);
            SizingRow { station: st.id.clone(), zone: st.zone.clone(), candidates: st.slots.len(), batteries: n, capacity_kwh: n as f64 * sc.battery.capacity_kwh }
        })
        .collect();
    run.dir.rows("sizing.csv", &rows)?;
    run.dir.rows("solve.csv", &[solve])
}
