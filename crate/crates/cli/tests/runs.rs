use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel).canonicalize().unwrap()
}

fn bss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bss")).args(args).output().unwrap()
}

fn run_mode(mode: &str, scenario: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["--mode", mode, "--scenario", scenario.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    bss(&args)
}

fn ok(o: &Output) {
    assert!(o.status.success(), "exit {:?}\n{}", o.status.code(), String::from_utf8_lossy(&o.stderr));
}

fn table(path: &Path) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap()).collect()
}

fn header(path: &Path) -> Vec<String> {
    csv::Reader::from_path(path).unwrap().headers().unwrap().iter().map(String::from).collect()
}

fn column(path: &Path, name: &str) -> Vec<String> {
    let k = header(path).iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    table(path).iter().map(|r| r[k].to_string()).collect()
}

fn write_scenario(dir: &Path, base: &str, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let src = fixture(base);
    let mut v: Value = serde_json::from_str(&fs::read_to_string(&src).unwrap()).unwrap();
    let root = src.parent().unwrap();
    if let Some(sig) = v.get_mut("signals").and_then(Value::as_object_mut) {
        for p in sig.values_mut() {
            *p = json!(root.join(p.as_str().unwrap()));
        }
    }
    if let Some(c) = v.get_mut("corridor").and_then(Value::as_object_mut) {
        for key in ["network_file", "demand_file"] {
            let p = root.join(c[key].as_str().unwrap());
            c.insert(key.into(), json!(p));
        }
    }
    edit(&mut v);
    let path = dir.join("scenario.json");
    fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    path
}

#[test]
fn plan_on_one_customer_installs_one_battery() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    ok(&run_mode("plan", &fixture("one_customer/scenario.json"), &out, &[]));
    assert_eq!(column(&out.join("sizing.csv"), "batteries"), vec!["1"]);
    assert!(!out.join("STALE").exists());

    let o = bss(&["--summary", out.to_str().unwrap()]);
    ok(&o);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("total batteries  1"), "{text}");
}

#[test]
fn exact_and_external_agree_on_plan() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = fixture("one_customer/scenario.json");
    let a = tmp.path().join("exact");
    let b = tmp.path().join("external");
    ok(&run_mode("plan", &sc, &a, &["--solver", "exact"]));
    ok(&run_mode("plan", &sc, &b, &["--solver", "external"]));
    assert_eq!(fs::read(a.join("sizing.csv")).unwrap(), fs::read(b.join("sizing.csv")).unwrap());
}

#[test]
fn operate_writes_schedule_grid_and_profit() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    ok(&run_mode("operate", &fixture("seasonal/jun.json"), &out, &[]));
    let served = column(&out.join("schedule.csv"), "served");
    assert_eq!(served.len(), 4);
    let grid = header(&out.join("grid.csv"));
    assert_eq!(&grid[..3], ["step", "timestamp", "e_grid_kwh"]);
    assert_eq!(grid.len(), 3 + 4);
    assert_eq!(table(&out.join("grid.csv")).len(), 49);
    let terms = column(&out.join("profit.csv"), "term");
    for t in ["profit", "swaps_served", "shortage_kwh", "emissions_avg_t", "emissions_marginal_t"] {
        assert!(terms.iter().any(|x| x == t), "missing {t}");
    }
    let o = bss(&["--summary", out.to_str().unwrap()]);
    ok(&o);
    assert!(String::from_utf8(o.stdout).unwrap().contains("swaps_served"));
}

#[test]
fn flat_emission_factor_leaves_emissions_unchanged() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    ok(&run_mode("carbon-sweep", &fixture("carbon_flat/scenario.json"), &out, &["--workers", "0"]));
    let path = out.join("carbon_sweep.csv");
    let mech = column(&path, "mechanism");
    let em: Vec<f64> = column(&path, "emissions_t").iter().map(|x| x.parse().unwrap()).collect();
    let bss: Vec<f64> = mech.iter().zip(&em).filter(|(m, _)| *m == "BSS").map(|(_, e)| *e).collect();
    assert_eq!(bss.len(), 8);
    for e in &bss {
        assert!((e - bss[0]).abs() < 1e-9, "{bss:?}");
    }
    for d in column(&path, "scc_per_ton").iter().zip(&mech).filter(|(_, m)| *m == "BSS").map(|(s, _)| s) {
        assert!(["0.0", "37.0", "258.0", "1000.0"].contains(&d.as_str()));
    }
    assert!(out.join("carbon/avg_scc1000/schedule.csv").is_file());
}

#[test]
fn regulation_down_only_never_lowers_profit() {
    let tmp = tempfile::tempdir().unwrap();
    let zero: String = (0..10).map(|s| format!("2023-03-01T{:02}:{:02}:00,0.0\n", s / 2, 30 * (s % 2))).collect();
    let ru = tmp.path().join("ru_zero.csv");
    fs::write(&ru, format!("timestamp,value[$/kWh]\n{zero}")).unwrap();
    let sc = write_scenario(tmp.path(), "ancillary/scenario.json", |v| v["signals"]["ru_price"] = json!(ru));
    let out = tmp.path().join("run");
    ok(&run_mode("as-study", &sc, &out, &[]));
    let path = out.join("as_study.csv");
    assert_eq!(column(&path, "case"), vec!["without", "with"]);
    let profit: Vec<f64> = column(&path, "profit").iter().map(|x| x.parse().unwrap()).collect();
    assert!(profit[1] >= profit[0] - 1e-6, "{profit:?}");
    let up: Vec<f64> = column(&path, "regulation_up_kwh").iter().map(|x| x.parse().unwrap()).collect();
    assert!(up.iter().all(|u| u.abs() < 1e-6));
}

#[test]
fn compare_digest_names_argmin_per_mechanism() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = write_scenario(tmp.path(), "corridor/scenario.json", |v| v["corridor"]["sweep_kwh"] = json!([500.0, 650.0]));
    let out = tmp.path().join("run");
    ok(&run_mode("compare", &sc, &out, &["--workers", "2"]));
    let argmin = out.join("argmin.csv");
    assert_eq!(column(&argmin, "mechanism"), vec!["BSS", "FCS"]);

    let frontier = out.join("frontier.csv");
    let mech = column(&frontier, "mechanism");
    let size = column(&frontier, "battery_kwh");
    let cost: Vec<f64> = column(&frontier, "cost_per_ton_mile").iter().map(|x| x.parse().unwrap()).collect();
    for (m, q) in column(&argmin, "mechanism").iter().zip(column(&argmin, "battery_kwh")) {
        let best = (0..mech.len()).filter(|&k| &mech[k] == m).min_by(|&a, &b| cost[a].total_cmp(&cost[b])).unwrap();
        assert_eq!(size[best], q);
    }

    let o = bss(&["--summary", out.to_str().unwrap()]);
    ok(&o);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("lowest cost per ton-mile"), "{text}");
    assert!(text.lines().any(|l| l.starts_with("BSS")) && text.lines().any(|l| l.starts_with("FCS")));
}

#[test]
fn decompose_recombines_tiers() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    ok(&run_mode("decompose", &fixture("network/scenario.json"), &out, &["--workers", "0"]));
    assert_eq!(column(&out.join("tiers.csv"), "tier"), vec!["high", "mid", "low"]);
    let rec = out.join("recombined.csv");
    let get = |c: &str| column(&rec, c)[0].parse::<f64>().unwrap();
    assert!((get("trips") - get("original_trips")).abs() <= get("rounding_bound") + get("dropped_mass"));
    for t in ["high", "mid", "low", "dropped"] {
        assert!(out.join("tiers").join(format!("{t}.csv")).is_file());
    }
}

#[test]
fn summary_of_empty_dir_lists_missing_files() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bss(&["--summary", tmp.path().to_str().unwrap(), "--mode", "operate"]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8(o.stderr).unwrap();
    for f in ["manifest.json", "schedule.csv", "grid.csv", "profit.csv", "solve.csv"] {
        assert!(err.contains(f), "{err}");
    }

    let o = bss(&["--summary", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8(o.stderr).unwrap();
    for f in ["manifest.json", "sizing.csv", "carbon_sweep.csv", "recombined.csv"] {
        assert!(err.contains(f), "{err}");
    }
}

#[test]
fn invalid_arguments_exit_with_validation_code() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = fixture("one_customer/scenario.json");
    let out = tmp.path().join("run");
    assert_eq!(run_mode("plan", &sc, &out, &["--gap", "1.5"]).status.code(), Some(3));
    assert_eq!(run_mode("plan", &sc, &out, &["--solver", "quantum"]).status.code(), Some(3));
    assert_eq!(run_mode("plan", &sc, &out, &["--preset", "appC-9"]).status.code(), Some(3));
    assert_eq!(run_mode("plan", &tmp.path().join("nope.json"), &out, &[]).status.code(), Some(3));
    assert_eq!(bss(&["--mode", "plan"]).status.code(), Some(3));
    assert_eq!(bss(&["--mode", "fly", "--scenario", "x"]).status.code(), Some(3));
}

#[test]
fn missing_solver_command_is_environment_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = run_mode("plan", &fixture("one_customer/scenario.json"), &out, &["--solver-cmd", "/nonexistent/solver"]);
    assert_eq!(o.status.code(), Some(4));
    let err: Value = serde_json::from_str(&fs::read_to_string(out.join("error.json")).unwrap()).unwrap();
    assert_eq!(err["kind"], "environment");
}

#[test]
fn infeasible_plan_exits_two_and_marks_stale() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = write_scenario(tmp.path(), "one_customer/scenario.json", |v| {
        v["stations"][0]["slots"] = json!([0]);
        let mut second = v["trips"][0].clone();
        second["customer"] = json!(1);
        v["trips"].as_array_mut().unwrap().push(second);
    });
    let out = tmp.path().join("run");
    let o = run_mode("plan", &sc, &out, &[]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("STALE").exists());
    let err: Value = serde_json::from_str(&fs::read_to_string(out.join("error.json")).unwrap()).unwrap();
    assert_eq!(err["kind"], "infeasible");
    assert!(err["details"][0].as_str().unwrap().contains("simultaneous arrivals"));
    assert!(!out.join("sizing.csv").exists());

    let o = bss(&["--summary", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));

    ok(&run_mode("plan", &fixture("one_customer/scenario.json"), &out, &[]));
    assert!(!out.join("STALE").exists());
    assert!(!out.join("error.json").exists());
}

#[test]
fn invalid_scenario_reports_every_violation() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = write_scenario(tmp.path(), "one_customer/scenario.json", |v| {
        v["trips"][0]["visits"][0]["consumption_kwh"] = json!(900.0);
        v["trips"][0]["visits"][0]["arrival_step"] = json!(40);
    });
    let out = tmp.path().join("run");
    let o = run_mode("operate", &sc, &out, &[]);
    assert_eq!(o.status.code(), Some(3));
    let err: Value = serde_json::from_str(&fs::read_to_string(out.join("error.json")).unwrap()).unwrap();
    assert_eq!(err["kind"], "validation");
    assert!(err["details"].as_array().unwrap().len() >= 2, "{err}");
}

#[test]
fn mode_without_its_signals_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = fixture("one_customer/scenario.json");
    assert_eq!(run_mode("carbon-sweep", &sc, &tmp.path().join("a"), &[]).status.code(), Some(3));
    assert_eq!(run_mode("as-study", &sc, &tmp.path().join("b"), &[]).status.code(), Some(3));
    assert_eq!(run_mode("compare", &sc, &tmp.path().join("c"), &[]).status.code(), Some(3));
}
