mod common;

use bss_core::fixtures::{self, one_customer, trip, visit, RandomFamily};
use bss_core::milp::*;
use bss_core::scenario::{BatterySpec, Station};
use bss_core::signals::{SignalKind, TimeSeries};
use bss_core::solver::{relaxation_bound, solve_exact, SolveLimits};
use common::{brute_force, close};

fn exact(model: &MilpModel) -> Solution {
    solve_exact(model, &SolveLimits::with_gap(0.0)).unwrap()
}

#[test]
fn planning_one_customer_installs_one_battery() {
    let bm = build_planning_model(&one_customer()).unwrap();
    let s = exact(&bm.model);
    assert_eq!(s.status, SolveStatus::Optimal);
    assert!(close(s.objective.unwrap(), 1.0, 1e-9));
    assert_eq!(bm.decode(&s.values).installed["S1"], 1);
    assert!(validate_solution(&bm.model, &s, 1e-6).unwrap().is_empty());
}

#[test]
fn planning_without_customers_installs_nothing() {
    let mut sc = one_customer();
    sc.trips.clear();
    let bm = build_planning_model(&sc).unwrap();
    let s = exact(&bm.model);
    assert_eq!(s.objective, Some(0.0));
}

#[test]
fn simultaneous_arrivals_need_distinct_batteries() {
    let mut sc = fixtures::empty_scenario(6, BatterySpec::new(500.0, 0.95, 250.0), vec![Station::with_slots("S1", "Z1", 1)]);
    sc.trips = vec![trip(0, 400.0, vec![visit("S1", 300.0, 200.0, 2)]), trip(1, 400.0, vec![visit("S1", 300.0, 200.0, 2)])];
    let bm = build_planning_model(&sc).unwrap();
    assert!(bm.model.warnings.iter().any(|w| w.contains("infeasible by construction")));
    assert_eq!(exact(&bm.model).status, SolveStatus::Infeasible);
    assert_eq!(brute_force(&bm.model), None);
}

#[test]
fn planning_matches_brute_force() {
    let bm = build_planning_model(&one_customer()).unwrap();
    let mut tiny = one_customer();
    tiny.time = bss_core::scenario::TimeGrid::new(0, 4, 0.5);
    let g = tiny.time.clone();
    tiny.tariffs.grid_price = TimeSeries::flat(SignalKind::Lmp, &g, 0.1);
    tiny.tariffs.energy_revenue = TimeSeries::flat(SignalKind::EnergyRevenue, &g, 0.3);
    let small = build_planning_model(&tiny).unwrap();
    assert!(small.model.num_binaries() <= 20);
    assert!(close(exact(&small.model).objective.unwrap(), brute_force(&small.model).unwrap(), 1e-9));
    assert!(bm.model.num_binaries() > small.model.num_binaries());
}

#[test]
fn operations_two_step_matches_enumeration() {
    let mut sc = fixtures::empty_scenario(2, BatterySpec::new(300.0, 0.9, 200.0), vec![Station::with_slots("S1", "Z1", 1)]);
    sc.battery.initial_soe_fraction = 0.5;
    sc.trips = vec![trip(0, 250.0, vec![visit("S1", 200.0, 120.0, 1)])];
    let g = sc.time.clone();
    sc.tariffs.grid_price = TimeSeries::on_grid(SignalKind::Lmp, &g, vec![0.05, 0.2]);
    sc.tariffs.energy_revenue = TimeSeries::on_grid(SignalKind::EnergyRevenue, &g, vec![0.3, 0.35]);
    let bm = build_operations_model(&sc, &OperationsOptions::default()).unwrap();
    let s = exact(&bm.model);
    let oracle = brute_force(&bm.model).unwrap();
    assert!(close(s.objective.unwrap(), oracle, 1e-9), "{:?} vs {oracle}", s.objective);
    // 150 kWh + 90 kWh charged in step 0, minus the 50 kWh the truck brings back
    let sold = bm.decode(&s.values).swaps[0].q_s2v_kwh;
    assert!(close(sold, 190.0, 1e-9), "{sold}");
}

#[test]
fn zero_revenue_serves_nobody() {
    let mut sc = fixtures::empty_scenario(4, BatterySpec::new(300.0, 0.9, 200.0), vec![Station::with_slots("S1", "Z1", 1)]);
    sc.battery.initial_soe_fraction = 0.0;
    sc.trips = vec![trip(0, 200.0, vec![visit("S1", 200.0, 100.0, 1)])];
    let g = sc.time.clone();
    sc.tariffs.swap_revenue = 0.0;
    sc.tariffs.energy_revenue = TimeSeries::flat(SignalKind::EnergyRevenue, &g, 0.0);
    sc.tariffs.shortage_penalty = 0.0;
    let bm = build_operations_model(&sc, &OperationsOptions::default()).unwrap();
    let s = exact(&bm.model);
    assert!(s.objective.unwrap().abs() < 1e-9);
    let d = bm.decode(&s.values);
    assert!(d.grid.iter().all(|e| e.abs() < 1e-9));
    assert!(d.swaps.iter().all(|w| w.q_s2v_kwh.abs() < 1e-9));
}

#[test]
fn carbon_price_moves_charging_off_the_peak() {
    let sc = fixtures::carbon_fixture();
    let xi = sc.signals.co2_avg.clone().unwrap();
    let pin = SoePin { terminal: true, checkpoints: vec![] };
    let base = OperationsOptions { pin: pin.clone(), ..Default::default() };
    let with = OperationsOptions { carbon: Some(CarbonTerm { scc_per_ton: 1000.0, emission: xi.clone() }), pin, ..Default::default() };
    let b0 = build_operations_model(&sc, &base).unwrap();
    let b1 = build_operations_model(&sc, &with).unwrap();
    let s0 = exact(&b0.model);
    let s1 = exact(&b1.model);
    let peak = 2;
    let e0 = b0.decode(&s0.values).grid[peak];
    let e1 = b1.decode(&s1.values).grid[peak];
    assert!(e1 < e0 - 1e-6, "{e1} vs {e0}");
    assert!(b1.emissions(&s1.values, &xi) < b0.emissions(&s0.values, &xi));
}

#[test]
fn alignment_error_for_short_signal() {
    let mut sc = fixtures::carbon_fixture();
    let short = TimeSeries::on_grid(SignalKind::Co2Avg, &bss_core::scenario::TimeGrid::new(0, 3, 0.5), vec![0.0; 4]);
    sc.signals.co2_avg = Some(short.clone());
    let opts = OperationsOptions { carbon: Some(CarbonTerm { scc_per_ton: 37.0, emission: short }), ..Default::default() };
    assert!(matches!(build_operations_model(&sc, &opts), Err(MilpError::Alignment { .. })));
}

fn consecutive_fixture() -> BssModel {
    let mut sc = fixtures::empty_scenario(6, BatterySpec::new(400.0, 0.95, 400.0), vec![Station::with_slots("S1", "Z1", 1)]);
    sc.trips = vec![trip(0, 300.0, vec![visit("S1", 200.0, 200.0, 2)]), trip(1, 300.0, vec![visit("S1", 200.0, 200.0, 3)])];
    build_operations_model(&sc, &OperationsOptions::default()).unwrap()
}

#[test]
fn report_cites_consecutive_swaps() {
    let bm = consecutive_fixture();
    let mut s = exact(&bm.model);
    assert!(validate_solution(&bm.model, &s, 1e-6).unwrap().is_empty());
    for t in [2, 3] {
        s.values[bm.index.z[&(0, 0, t)]] = 1.0;
    }
    let rep = validate_solution(&bm.model, &s, 1e-6).unwrap();
    assert!(rep.cites(Tag::Eq5), "{}", rep.summary());
}

#[test]
fn report_cites_oversold_energy() {
    let bm = build_operations_model(&one_customer(), &OperationsOptions::default()).unwrap();
    let mut s = exact(&bm.model);
    let sw = &bm.decode(&s.values).swaps[0];
    s.values[bm.index.q_s2v[&(sw.customer, 0)]] += 1e-3;
    let rep = validate_solution(&bm.model, &s, 1e-6).unwrap();
    assert!(rep.cites(Tag::Eq7), "{}", rep.summary());
}

#[test]
fn report_rejects_incomplete_solution() {
    let bm = consecutive_fixture();
    let s = Solution { values: vec![0.0; 3], ..Solution::without_values(SolveStatus::Optimal) };
    assert!(matches!(validate_solution(&bm.model, &s, 1e-6), Err(MilpError::IncompleteSolution { .. })));
}

#[test]
fn every_row_is_tagged_and_references_declared_variables() {
    let sc = fixtures::random_scenario(3, &RandomFamily::default());
    for bm in [build_planning_model(&sc).unwrap(), build_operations_model(&sc, &OperationsOptions::from_scenario(&sc)).unwrap()] {
        for c in &bm.model.constraints {
            assert!(Tag::ALL.contains(&c.tag));
            assert!(c.coefs.iter().all(|&(j, _)| j < bm.model.vars.len()));
        }
    }
}

#[test]
fn planning_rows_cover_every_family() {
    let bm = build_planning_model(&fixtures::carbon_fixture()).unwrap();
    let counts = bm.model.count_by_tag();
    for tag in [Tag::Eq3, Tag::Eq4, Tag::Eq6, Tag::Eq7, Tag::Eq8, Tag::Eq9, Tag::Eq10, Tag::Eq11, Tag::Eq12, Tag::Eq13, Tag::Eq14, Tag::Eq15, Tag::Eq16, Tag::Eq17] {
        assert!(counts.get(&tag).copied().unwrap_or(0) > 0, "no {tag} rows");
    }
    let ops = build_operations_model(&fixtures::carbon_fixture(), &OperationsOptions::default()).unwrap();
    let counts = ops.model.count_by_tag();
    assert!(!counts.contains_key(&Tag::Eq15) && !counts.contains_key(&Tag::Eq16) && !counts.contains_key(&Tag::Eq17));
}

#[test]
fn thresholds_add_served_indicators() {
    let sc = fixtures::carbon_fixture();
    let opts = OperationsOptions { satisfaction: Satisfaction::Thresholds { alpha_1: 0.8, alpha_2: 0.5 }, ..Default::default() };
    let bm = build_operations_model(&sc, &opts).unwrap();
    let counts = bm.model.count_by_tag();
    assert!(counts[&Tag::Eq18] > 0 && counts[&Tag::Eq19] > 0);
    assert_eq!(bm.index.b.len(), 2);
    let s = exact(&bm.model);
    assert!(validate_solution(&bm.model, &s, 1e-6).unwrap().is_empty());
    let served = bm.index.b.values().filter(|&&j| s.values[j] > 0.5).count();
    assert!(served >= 1);
}

#[test]
fn third_stop_uses_extended_recursion() {
    let stations = vec![Station::with_slots("A", "ZA", 1), Station::with_slots("B", "ZB", 1), Station::with_slots("C", "ZC", 1)];
    let mut sc = fixtures::empty_scenario(6, BatterySpec::new(400.0, 0.95, 300.0), stations);
    sc.trips = vec![trip(0, 400.0, vec![visit("A", 300.0, 900.0, 1), visit("B", 650.0, 550.0, 3), visit("C", 1000.0, 200.0, 5)])];
    let bm = build_operations_model(&sc, &OperationsOptions::default()).unwrap();
    assert!(bm.model.count_by_tag()[&Tag::Eq10Ext] > 0);
    let s = exact(&bm.model);
    assert!(validate_solution(&bm.model, &s, 1e-6).unwrap().is_empty());
    assert!(audit_semantics(&bm, &s.values, 1e-6).is_empty());
}

#[test]
fn relaxation_bounds_integer_optimum() {
    let fam = RandomFamily::default();
    let mut checked = 0;
    for seed in 0..60 {
        let sc = fixtures::random_scenario(seed, &fam);
        let bm = build_operations_model(&sc, &OperationsOptions::from_scenario(&sc)).unwrap();
        if bm.model.num_binaries() > 25 {
            continue;
        }
        let s = exact(&bm.model);
        if let (Some(obj), Some(lb)) = (s.objective, relaxation_bound(&bm.model)) {
            assert!(lb <= obj + 1e-7 * obj.abs().max(1.0), "seed {seed}: {lb} > {obj}");
            checked += 1;
        }
    }
    assert!(checked >= 20);
}

/// Two copies of one day back to back, with every battery back to full at the day boundary.
#[test]
fn two_identical_days_cost_twice_one_day() {
    let one = fixtures::carbon_fixture();
    let n = one.time.num_steps();
    let mut two = one.clone();
    two.time = bss_core::scenario::TimeGrid::new(0, 2 * n - 1, one.time.delta_t);
    let g = two.time.clone();
    let rep = |s: &TimeSeries| [s.values.clone(), s.values.clone()].concat();
    two.tariffs.grid_price = TimeSeries::on_grid(SignalKind::Lmp, &g, rep(&one.tariffs.grid_price));
    two.tariffs.energy_revenue = TimeSeries::on_grid(SignalKind::EnergyRevenue, &g, rep(&one.tariffs.energy_revenue));
    let mut trips = one.trips.clone();
    for t in &one.trips {
        let mut t2 = t.clone();
        t2.customer += 100;
        for v in &mut t2.visits {
            v.arrival_step += n;
        }
        trips.push(t2);
    }
    two.trips = trips;

    let pin_one = OperationsOptions { pin: SoePin { terminal: true, checkpoints: vec![] }, ..Default::default() };
    let pin_two = OperationsOptions { pin: SoePin { terminal: true, checkpoints: vec![n] }, ..Default::default() };
    let b1 = build_operations_model(&one, &pin_one).unwrap();
    let b2 = build_operations_model(&two, &pin_two).unwrap();
    let s1 = exact(&b1.model);
    let s2 = solve_exact(&b2.model, &SolveLimits { max_binaries: 40, ..SolveLimits::with_gap(0.0) }).unwrap();
    assert!(close(s2.objective.unwrap(), 2.0 * s1.objective.unwrap(), 1e-7), "{:?} vs 2 x {:?}", s2.objective, s1.objective);
}

#[test]
fn constraint_audit_csv() {
    let bm = build_planning_model(&one_customer()).unwrap();
    let mut buf = Vec::new();
    write_constraint_audit(&mut buf, &bm.model).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("tag,sense,rhs,nnz"));
    assert_eq!(lines.count(), bm.model.constraints.len());
}
