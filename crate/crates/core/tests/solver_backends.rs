mod common;

use std::path::PathBuf;

use bss_core::fixtures::{self, one_customer, RandomFamily};
use bss_core::milp::*;
use bss_core::solver::external::{solve_external, ExternalSolver};
use bss_core::solver::lp_format::{export_lp, to_lp_string};
use bss_core::solver::{solve_exact, MilpSolver, SolveError, SolveLimits, SolverRegistry};
use common::{brute_force, close};

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn small_model() -> MilpModel {
    let mut m = MilpModel::new("small");
    let y = m.binary("y_0_0", 0);
    let z = m.binary("z_0_0_1", 1);
    let q = m.continuous("q_0_0_1", 0.0, 400.0);
    let g = m.continuous("grid_0", f64::NEG_INFINITY, f64::INFINITY);
    let f = m.continuous("fixed", 2.5, 2.5);
    m.add_row(&[(q, 1.0), (y, -400.0)], Sense::Le, 0.0, Tag::Eq16);
    m.add_row(&[(z, 1.0), (y, -1.0)], Sense::Le, 0.0, Tag::Eq15);
    m.add_row(&[(g, 1.0), (q, -0.5), (f, 1.0)], Sense::Eq, 0.0, Tag::Eq11);
    m.add_row(&[(q, 1.0)], Sense::Ge, 120.5, Tag::Plumbing);
    m.add_obj(y, 1.0);
    m.add_obj(g, 0.01);
    m.add_obj(z, -0.25);
    m.obj_constant = 3.0;
    m
}

#[test]
fn lp_file_matches_golden() {
    let text = to_lp_string(&small_model());
    let path = golden("small.lp");
    if std::env::var_os("BSS_BLESS").is_some() {
        std::fs::write(&path, &text).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text, expected);
    assert_eq!(to_lp_string(&small_model()), text);
}

#[test]
fn lp_export_writes_file_and_reports_bad_path() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.lp");
    export_lp(&small_model(), &p).unwrap();
    assert_eq!(std::fs::read_to_string(&p).unwrap(), to_lp_string(&small_model()));
    assert!(export_lp(&small_model(), &dir.path().join("missing/m.lp")).is_err());
}

#[test]
fn lp_output_sorted_by_name() {
    let bm = build_planning_model(&one_customer()).unwrap();
    let text = to_lp_string(&bm.model);
    let bins: Vec<&str> = text.split("Binaries\n").nth(1).unwrap().split_whitespace().take_while(|w| *w != "End").collect();
    let mut sorted = bins.clone();
    sorted.sort();
    assert_eq!(bins, sorted);
}

#[test]
fn external_reimport_matches_exact() {
    let ext = ExternalSolver::from_env();
    for m in [small_model(), build_planning_model(&one_customer()).unwrap().model] {
        let a = solve_exact(&m, &SolveLimits::with_gap(0.0)).unwrap();
        let b = ext.solve(&m, &SolveLimits::with_gap(0.0)).unwrap();
        assert_eq!(b.status, SolveStatus::Optimal);
        assert!((a.objective.unwrap() - b.objective.unwrap()).abs() < 1e-6, "{:?} vs {:?}", a.objective, b.objective);
        assert!(validate_solution(&m, &b, 1e-6).unwrap().is_empty());
    }
}

#[test]
fn external_propagates_infeasible() {
    let mut sc = fixtures::one_customer();
    sc.stations[0].slots = vec![0];
    let mut second = sc.trips[0].clone();
    second.customer = 1;
    sc.trips.push(second);
    let m = build_planning_model(&sc).unwrap().model;
    assert_eq!(solve_exact(&m, &SolveLimits::default()).unwrap().status, SolveStatus::Infeasible);
    assert_eq!(ExternalSolver::from_env().solve(&m, &SolveLimits::default()).unwrap().status, SolveStatus::Infeasible);
}

#[test]
fn external_time_limit_zero() {
    let sc = fixtures::random_scenario(25, &RandomFamily { customers: (3, 3), stations: (2, 2), batteries: (3, 3), steps: (8, 8), initial_soe: None });
    let m = build_planning_model(&sc).unwrap().model;
    let limits = SolveLimits { time_limit: Some(0.0), ..SolveLimits::default() };
    let s = ExternalSolver::from_env().solve(&m, &limits).unwrap();
    assert!(matches!(s.status, SolveStatus::LimitFeasible | SolveStatus::LimitNoSolution | SolveStatus::Infeasible), "{:?}", s.status);
    if s.status == SolveStatus::LimitFeasible {
        assert!(validate_solution(&m, &s, 1e-6).unwrap().is_empty());
    }
}

#[test]
fn missing_solver_is_environment_error() {
    let e = solve_external(&small_model(), &SolveLimits::default(), &["/definitely/not/a/solver".to_string()]).unwrap_err();
    assert!(e.is_environment(), "{e}");
    assert!(e.to_string().contains("--solver-cmd"));
}

#[test]
fn unparsable_output_is_protocol_error() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("bad.sh");
    std::fs::write(&script, "#!/bin/sh\necho crunching\necho 'nonsense' > \"$2\"\n").unwrap();
    let cmd = vec!["sh".to_string(), script.display().to_string()];
    match solve_external(&small_model(), &SolveLimits::default(), &cmd) {
        Err(SolveError::Protocol { output, .. }) => assert!(output.contains("crunching")),
        other => panic!("expected protocol error, got {other:?}"),
    }
}

#[test]
fn registry_selects_by_name() {
    let r = SolverRegistry::with_defaults(None);
    let m = small_model();
    let a = r.get("exact").unwrap().solve(&m, &SolveLimits::with_gap(0.0)).unwrap();
    let b = r.get("external").unwrap().solve(&m, &SolveLimits::with_gap(0.0)).unwrap();
    assert!(close(a.objective.unwrap(), b.objective.unwrap(), 1e-9));
    assert!(r.get("gurobi").is_err());
}

#[test]
fn exact_is_never_beaten_by_enumeration() {
    let fam = RandomFamily { steps: (2, 4), ..RandomFamily::default() };
    let mut checked = 0;
    for seed in 0..80 {
        let sc = fixtures::random_scenario(seed, &fam);
        let bm = build_operations_model(&sc, &OperationsOptions::from_scenario(&sc)).unwrap();
        if bm.model.num_binaries() > 12 {
            continue;
        }
        let s = solve_exact(&bm.model, &SolveLimits::with_gap(0.0)).unwrap();
        let oracle = brute_force(&bm.model);
        match (s.objective, oracle) {
            (Some(a), Some(b)) => assert!(close(a, b, 1e-7), "seed {seed}: {a} vs {b}"),
            (None, None) => {}
            other => panic!("seed {seed}: {other:?}"),
        }
        assert!(validate_solution(&bm.model, &s, 1e-6).map(|r| r.is_empty()).unwrap_or(true));
        checked += 1;
    }
    assert!(checked >= 15, "{checked}");
}

#[test]
fn invalid_gap_rejected() {
    let m = small_model();
    assert!(matches!(solve_exact(&m, &SolveLimits::with_gap(1.5)), Err(SolveError::InvalidGap(_))));
    assert!(matches!(ExternalSolver::from_env().solve(&m, &SolveLimits::with_gap(-0.5)), Err(SolveError::InvalidGap(_))));
}
