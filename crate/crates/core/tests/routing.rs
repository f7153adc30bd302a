use bss_core::energy::{trip_energy, VehicleParams, METERS_PER_MILE};
use bss_core::scenario::{BatterySpec, Station, TimeGrid};
use bss_core::trips::*;
use proptest::prelude::*;

fn energy(miles: f64) -> f64 {
    trip_energy(miles * METERS_PER_MILE, 0.0, &VehicleParams::default()).unwrap()
}

/// Distance whose flat-road trip energy is `kwh`.
fn miles_for(kwh: f64) -> f64 {
    let (mut lo, mut hi) = (1.0, 5000.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if energy(mid) < kwh {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Zones on a straight road at the given mile posts; every pair is linked.
fn line(posts: &[(&str, f64)]) -> ZoneNetwork {
    let mut net = ZoneNetwork::new();
    for (i, &(a, pa)) in posts.iter().enumerate() {
        for &(b, pb) in &posts[i + 1..] {
            net.add(a, b, (pa - pb).abs(), 0.0);
        }
    }
    net
}

fn long_trip(customer: usize, dest: &str, miles: f64) -> LongTrip {
    LongTrip { customer, origin: "O".into(), destination: dest.into(), distance_mi: miles, elevation_m: 0.0, departure_hour: 1.0, cargo_kg: 30000.0 }
}

fn battery(q: f64) -> BatterySpec {
    BatterySpec::new(q, 0.95, q / 2.0)
}

/// Every ordered sequence of at most `max_stops` distinct stations; shortest feasible route.
fn exhaustive(trip: &LongTrip, net: &ZoneNetwork, stations: &[Station], q: f64, max_stops: usize, reserve: f64) -> Option<(f64, usize)> {
    let usable = q - reserve * q;
    if energy(trip.distance_mi) <= usable + 1e-9 {
        return Some((trip.distance_mi, 0));
    }
    let mut best: Option<(f64, usize)> = None;
    fn rec(
        at: &str,
        used: &mut Vec<usize>,
        dist: f64,
        trip: &LongTrip,
        net: &ZoneNetwork,
        stations: &[Station],
        usable: f64,
        max_stops: usize,
        best: &mut Option<(f64, usize)>,
    ) {
        let leg_ok = |from: &str, to: &str| net.link(from, to).filter(|l| l.distance_mi == 0.0 || energy(l.distance_mi) <= usable + 1e-9);
        if !used.is_empty() {
            if let Some(l) = leg_ok(at, &trip.destination) {
                let d = dist + l.distance_mi;
                if best.map_or(true, |(b, _)| d < b - 1e-9) {
                    *best = Some((d, used.len()));
                }
            }
        }
        if used.len() == max_stops {
            return;
        }
        for k in 0..stations.len() {
            if used.contains(&k) {
                continue;
            }
            if let Some(l) = leg_ok(at, &stations[k].zone) {
                used.push(k);
                rec(&stations[k].zone, used, dist + l.distance_mi, trip, net, stations, usable, max_stops, best);
                used.pop();
            }
        }
    }
    rec(&trip.origin, &mut vec![], 0.0, trip, net, stations, usable, max_stops, &mut best);
    best
}

#[test]
fn thousand_kwh_trip_with_midpoint_stations() {
    let d = miles_for(1000.0);
    let posts = [("O", 0.0), ("Z1", d / 4.0), ("Z2", d / 3.0), ("Z3", d / 2.0), ("Z4", 2.0 * d / 3.0), ("Z5", 3.0 * d / 4.0), ("D", d)];
    let net = line(&posts);
    let stations: Vec<Station> = (1..=5).map(|k| Station::with_slots(format!("S{k}"), format!("Z{k}"), 2)).collect();
    let trip = long_trip(0, "D", d);
    let r = insert_stops(&trip, &net, &stations, &battery(500.0), 4, &RoutingOptions::default());
    assert!(r.feasible);
    assert!((2..=3).contains(&r.stops.len()), "{:?}", r.stops);
    assert!(r.leg_energies_kwh.iter().all(|&e| e <= 500.0));
    let (best, _) = exhaustive(&trip, &net, &stations, 500.0, 4, DEFAULT_RESERVE).unwrap();
    assert!((r.total_distance_mi() - best).abs() < 1e-6);
    // visits carry cumulative consumption and the remaining demand
    let v = &r.request.visits;
    assert_eq!(v.len(), r.stops.len());
    assert!((v[0].consumption_kwh - r.leg_energies_kwh[0]).abs() < 1e-9);
    assert!((v.last().unwrap().demand_to_go_kwh - r.leg_energies_kwh.last().unwrap()).abs() < 1e-9);
}

#[test]
fn trip_needing_five_stops_is_infeasible() {
    // leg energy 300 kWh at Q = 350 leaves room for one leg per battery only
    let leg = miles_for(300.0);
    let posts: Vec<(String, f64)> = (0..=6).map(|k| (if k == 0 { "O".to_string() } else if k == 6 { "D".to_string() } else { format!("Z{k}") }, k as f64 * leg)).collect();
    let refs: Vec<(&str, f64)> = posts.iter().map(|(n, p)| (n.as_str(), *p)).collect();
    let net = line(&refs);
    let stations: Vec<Station> = (1..=5).map(|k| Station::with_slots(format!("S{k}"), format!("Z{k}"), 1)).collect();
    let trip = long_trip(0, "D", 6.0 * leg);
    let r = insert_stops(&trip, &net, &stations, &battery(350.0), 4, &RoutingOptions::default());
    assert!(!r.feasible);
    assert_eq!(exhaustive(&trip, &net, &stations, 350.0, 4, DEFAULT_RESERVE), None);
    let five = insert_stops(&trip, &net, &stations, &battery(350.0), 5, &RoutingOptions::default());
    assert!(five.feasible);
    assert_eq!(five.stops.len(), 5);
}

fn corridor() -> (ZoneNetwork, Vec<Station>, Vec<LongTrip>) {
    let leg = miles_for(300.0);
    let mut posts: Vec<(String, f64)> = vec![("O".into(), 0.0)];
    for k in 1..=6 {
        posts.push((format!("Z{k}"), k as f64 * leg));
    }
    posts.push(("D2".into(), 2.0 * leg + 0.5 * leg));
    posts.push(("D3".into(), 3.0 * leg + 0.5 * leg));
    posts.push(("D4".into(), 4.0 * leg + 0.5 * leg));
    posts.push(("D6".into(), 5.0 * leg + 0.5 * leg));
    let refs: Vec<(&str, f64)> = posts.iter().map(|(n, p)| (n.as_str(), *p)).collect();
    let net = line(&refs);
    let stations: Vec<Station> = (1..=6).map(|k| Station::with_slots(format!("S{k}"), format!("Z{k}"), 1)).collect();
    let trips = vec![
        long_trip(0, "D2", 2.0 * leg + 0.5 * leg),
        long_trip(1, "D3", 3.0 * leg + 0.5 * leg),
        long_trip(2, "D4", 4.0 * leg + 0.5 * leg),
        long_trip(3, "D6", 5.0 * leg + 0.5 * leg),
    ];
    (net, stations, trips)
}

#[test]
fn one_of_four_needs_five_stops() {
    let (net, stations, trips) = corridor();
    let b = battery(350.0);
    let oracle: Vec<bool> = trips.iter().map(|t| exhaustive(t, &net, &stations, 350.0, 4, DEFAULT_RESERVE).is_some()).collect();
    assert_eq!(oracle, vec![true, true, true, false]);
    let rate = penetration_rate(&trips, &net, &stations, &b, 4, &RoutingOptions::default()).unwrap();
    assert!((rate - 0.75).abs() < 1e-12);
}

#[test]
fn all_within_range_is_full_penetration() {
    let trips = vec![long_trip(0, "D", 50.0), long_trip(1, "D", 80.0)];
    let rate = penetration_rate(&trips, &ZoneNetwork::new(), &[], &battery(500.0), 4, &RoutingOptions::default()).unwrap();
    assert_eq!(rate, 1.0);
}

#[test]
fn penetration_monotone_in_capacity_and_stops() {
    let (net, stations, trips) = corridor();
    let opts = RoutingOptions::default();
    let mut prev = 0.0;
    for q in [350.0, 400.0, 450.0, 500.0, 600.0, 800.0] {
        let r = penetration_rate(&trips, &net, &stations, &battery(q), 4, &opts).unwrap();
        assert!(r >= prev - 1e-12, "Q = {q}: {r} < {prev}");
        prev = r;
    }
    let mut prev = 0.0;
    for k in 0..=6 {
        let r = penetration_rate(&trips, &net, &stations, &battery(350.0), k, &opts).unwrap();
        assert!(r >= prev - 1e-12);
        prev = r;
    }
}

#[test]
fn arrival_steps_round_down_on_the_grid() {
    let d = miles_for(1000.0);
    let posts = [("O", 0.0), ("Z1", d / 3.0), ("Z2", 2.0 * d / 3.0), ("D", d)];
    let net = line(&posts);
    let stations = vec![Station::with_slots("S1", "Z1", 1), Station::with_slots("S2", "Z2", 1)];
    let opts = RoutingOptions { grid: Some(TimeGrid::new(0, 47, 0.5)), ..RoutingOptions::default() };
    let r = insert_stops(&long_trip(0, "D", d), &net, &stations, &battery(500.0), 4, &opts);
    let mph = VehicleParams::default().v_max_kmh * 1000.0 / METERS_PER_MILE;
    let first = 1.0 + (d / 3.0) / mph;
    assert_eq!(r.request.visits[0].arrival_step, (first / 0.5).floor() as usize);
    let second = first + 0.5 + (d / 3.0) / mph;
    assert_eq!(r.request.visits[1].arrival_step, (second / 0.5).floor() as usize);
}

#[test]
fn csv_inputs_parse() {
    let net = ZoneNetwork::read_csv("from,to,distance_mi,elevation_m\nA,B,120,40\n".as_bytes(), "mem").unwrap();
    assert_eq!(net.link("B", "A").unwrap().elevation_m, -40.0);
    let d = read_demand_csv("origin,destination,frequency,distance_mi,elevation_m\nA,B,2.0,120,40\n".as_bytes(), "mem", &VehicleParams::default()).unwrap();
    assert_eq!(d[0].requests(), 2);
    assert!(d[0].energy_per_trip_kwh > 0.0);
    assert!(read_demand_csv("origin,destination,frequency,distance_mi,elevation_m\nA,B,-1,120,0\n".as_bytes(), "mem", &VehicleParams::default()).is_err());
    let mut buf = Vec::new();
    write_penetration_csv(&mut buf, &[PenetrationRow { battery_kwh: 350.0, max_stops: 4, rate: 0.75 }]).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), "battery_kwh,max_stops,rate\n350.0,4,0.75\n");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn routes_never_exceed_usable_energy(frac in 1.2f64..3.5, q in 350.0f64..800.0) {
        let d = miles_for(frac * q);
        let posts: Vec<(String, f64)> = std::iter::once(("O".to_string(), 0.0))
            .chain((1..=7).map(|k| (format!("Z{k}"), d * k as f64 / 8.0)))
            .chain(std::iter::once(("D".to_string(), d)))
            .collect();
        let refs: Vec<(&str, f64)> = posts.iter().map(|(n, p)| (n.as_str(), *p)).collect();
        let net = line(&refs);
        let stations: Vec<Station> = (1..=7).map(|k| Station::with_slots(format!("S{k}"), format!("Z{k}"), 1)).collect();
        let trip = long_trip(0, "D", d);
        let r = insert_stops(&trip, &net, &stations, &battery(q), 4, &RoutingOptions::default());
        let oracle = exhaustive(&trip, &net, &stations, q, 4, DEFAULT_RESERVE);
        prop_assert_eq!(r.feasible, oracle.is_some());
        if let Some((best, _)) = oracle {
            prop_assert!((r.total_distance_mi() - best).abs() < 1e-6);
            for &e in &r.leg_energies_kwh {
                prop_assert!(e <= q * (1.0 - DEFAULT_RESERVE) + 1e-9);
            }
        }
    }
}

proptest! {
    #[test]
    fn chaining_keeps_trip_count_and_capacity(
        pairs in prop::collection::vec((10.0f64..900.0, 0u32..6), 0..6),
        q in 300.0f64..800.0,
    ) {
        let demands: Vec<RawDemand> = pairs
            .iter()
            .enumerate()
            .map(|(k, &(e, n))| RawDemand { origin: format!("A{k}"), destination: format!("B{k}"), frequency: n as f64, distance_mi: e / 2.0, elevation_m: 0.0, energy_per_trip_kwh: e })
            .collect();
        let requests: usize = demands.iter().map(|d| d.requests()).sum();
        let r = chain_round_trips(&demands, &battery(q));
        let legs: usize = r.itineraries.iter().map(|i| i.legs).sum();
        prop_assert_eq!(legs + r.residual.len(), requests);
        prop_assert!(r.itineraries.len() + r.residual.len() <= requests);
        for i in &r.itineraries {
            prop_assert!(i.energy_kwh <= q + 1e-9);
        }
        for d in &r.residual {
            prop_assert!(d.energy_per_trip_kwh > q);
        }
    }
}
