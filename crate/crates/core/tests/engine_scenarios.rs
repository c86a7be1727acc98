use std::path::Path;

use proptest::prelude::*;
use savsim_core::engine::{best_plan, pooling_feasible, PlanRequest, Rider};
use savsim_core::scenario::{OdEntry, OdMatrix};
use savsim_core::{
    build_trips, compute_performance, load_scenario, run_with_trips, EventKind, Scenario, SimConfig,
    SimulationResult, SkimSet, TripRequest, TripState,
};

/// Zones with symmetric travel times given per pair (others `far`), the same
/// in every period, driven at 30 mph.
fn matrix_city(ids: &[&str], pairs: &[(&str, &str, f64)], far: f64) -> (Scenario, SkimSet) {
    let mut s = load_scenario(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/grid4")).unwrap();
    s.name = "matrix".into();
    for m in s.od.iter_mut() {
        m.entries.clear();
    }
    let n = ids.len();
    let at = |z: &str| ids.iter().position(|x| *x == z).unwrap();
    let mut time = vec![vec![far; n]; n];
    for (i, row) in time.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for &(a, b, t) in pairs {
        time[at(a)][at(b)] = t;
        time[at(b)][at(a)] = t;
    }
    let dist: Vec<Vec<f64>> = time.iter().map(|r| r.iter().map(|t| t / 2.0).collect()).collect();
    let periods = s.periods.period_ids().len();
    let sk = SkimSet::from_matrices(
        ids.iter().map(|z| z.to_string()).collect(),
        &s.periods,
        vec![time; periods],
        dist,
    );
    (s, sk)
}

fn quiet() -> SimConfig {
    SimConfig {
        relocation: false,
        ..SimConfig::default()
    }
}

fn run(
    s: &Scenario,
    sk: &SkimSet,
    cfg: &SimConfig,
    day1: &[(&str, &str, u32, bool)],
    day2: &[(&str, &str, u32, bool)],
) -> SimulationResult {
    let p = cfg.demand_params();
    let t1 = build_trips(s, sk, &p, day1).unwrap();
    let t2 = build_trips(s, sk, &p, day2).unwrap();
    run_with_trips(s, sk, cfg, 1, t1, t2).unwrap()
}

fn trip(r: &SimulationResult, id: u32) -> &TripRequest {
    &r.trips[id as usize]
}

#[test]
fn single_trip_needs_one_vehicle_and_no_empty_miles() {
    let (s, sk) = matrix_city(&["A", "B"], &[("A", "B", 8.0)], 8.0);
    let r = run(&s, &sk, &quiet(), &[("A", "B", 100, false)], &[("B", "A", 100, false)]);
    assert_eq!(r.fleet_size, 1);
    let spawn: Vec<_> = r.events.day(1).filter(|e| e.kind == EventKind::Spawn).collect();
    assert_eq!(spawn.len(), 1);
    assert_eq!((spawn[0].minute, spawn[0].zone.as_str()), (110.0, "A"));
    let t = trip(&r, 0);
    assert_eq!(t.state, TripState::Served);
    assert_eq!(t.wait_minutes, Some(0.0));
    assert_eq!(t.dropoff_minute, Some(108.0));
    let m = compute_performance(&r).unwrap();
    assert_eq!(m.empty_vmt, 0.0);
    assert_eq!(m.occupied_vmt, 4.0);
    assert_eq!(m.served_trips_per_sav, Some(1.0));
    assert_eq!(m.pct_extra_vmt, Some(0.0));
}

#[test]
fn simultaneous_distant_trips_need_two_vehicles() {
    let (s, sk) = matrix_city(&["A", "B", "C", "D"], &[("A", "B", 5.0), ("C", "D", 5.0)], 30.0);
    let r = run(&s, &sk, &quiet(), &[("A", "B", 100, false), ("C", "D", 100, false)], &[]);
    assert_eq!(r.fleet_size, 2);
}

#[test]
fn idle_vehicle_is_reused_before_spawning() {
    let (s, sk) = matrix_city(&["A", "B"], &[("A", "B", 5.0)], 5.0);
    let r = run(&s, &sk, &quiet(), &[("A", "B", 100, false), ("B", "A", 200, false)], &[]);
    assert_eq!(r.fleet_size, 1);
}

#[test]
fn unreachable_non_sharer_abandons_and_sharer_keeps_waiting() {
    let (s, sk) = matrix_city(&["A", "B", "Z"], &[("A", "B", 5.0), ("B", "Z", 12.0)], 12.0);
    let r = run(
        &s,
        &sk,
        &quiet(),
        &[("A", "B", 100, false)],
        &[("Z", "A", 300, false), ("Z", "A", 300, true)],
    );
    assert_eq!(r.fleet_size, 1);
    assert_eq!(trip(&r, 0).state, TripState::Abandoned);
    assert_eq!(trip(&r, 0).wait_minutes, Some(10.0));
    assert_eq!(trip(&r, 1).state, TripState::Waiting);
    assert_eq!((r.abandoned, r.still_waiting, r.served), (1, 1, 0));
}

#[test]
fn pickup_exactly_at_max_wait_is_allowed() {
    let (s, sk) = matrix_city(&["A", "B", "Z"], &[("A", "B", 5.0), ("B", "Z", 10.0)], 10.0);
    let r = run(&s, &sk, &quiet(), &[("A", "B", 100, false)], &[("Z", "A", 300, false)]);
    assert_eq!(trip(&r, 0).state, TripState::Served);
    assert_eq!(trip(&r, 0).wait_minutes, Some(10.0));
}

#[test]
fn vehicle_parks_after_its_last_dropoff() {
    let (s, sk) = matrix_city(&["A", "B"], &[("A", "B", 8.0)], 8.0);
    let r = run(&s, &sk, &quiet(), &[("A", "B", 100, false)], &[("B", "A", 100, false)]);
    let kinds: Vec<(EventKind, &str)> = r.events.day(2).map(|e| (e.kind, e.zone.as_str())).collect();
    assert_eq!(
        kinds,
        vec![
            (EventKind::Pickup, "B"),
            (EventKind::Depart, "B"),
            (EventKind::Arrive, "A"),
            (EventKind::Dropoff, "A"),
            (EventKind::Park, "A"),
        ]
    );
    assert_eq!(r.vehicles[0].end_zone, "A");
}

#[test]
fn nearest_idle_vehicle_is_dispatched() {
    // vehicle 0 ends day 1 at P (7 min from O), vehicle 1 at Q (3 min)
    let (s, sk) = matrix_city(
        &["O", "P", "Q", "X"],
        &[("O", "P", 7.0), ("O", "Q", 3.0), ("X", "P", 20.0), ("X", "Q", 20.0), ("O", "X", 20.0)],
        20.0,
    );
    let r = run(
        &s,
        &sk,
        &quiet(),
        &[("X", "P", 100, false), ("X", "Q", 100, false)],
        &[("O", "X", 300, false)],
    );
    assert_eq!(r.fleet_size, 2);
    assert_eq!(r.vehicles[1].spawn_zone, "X");
    assert_eq!(trip(&r, 0).vehicle, Some(1));
    assert_eq!(trip(&r, 0).wait_minutes, Some(3.0));
}

/// Two vehicles parked at O after day 1.
fn two_at_origin(s: &Scenario, sk: &SkimSet, day2: &[(&str, &str, u32, bool)]) -> SimulationResult {
    run(s, sk, &quiet(), &[("B", "O", 100, false), ("C", "O", 100, false)], day2)
}

#[test]
fn identical_sharers_ride_together() {
    let (s, sk) = matrix_city(&["O", "B", "C"], &[("O", "B", 10.0), ("O", "C", 10.0)], 10.0);
    let r = two_at_origin(&s, &sk, &[("O", "B", 300, true), ("O", "B", 300, true)]);
    assert_eq!(r.fleet_size, 2);
    assert!(trip(&r, 0).pooled && trip(&r, 1).pooled);
    assert_eq!(trip(&r, 0).vehicle, trip(&r, 1).vehicle);
    let m = compute_performance(&r).unwrap();
    assert_eq!(m.pct_pooled_trips, Some(100.0));
    assert_eq!(m.empty_vmt, 0.0);
    assert_eq!(m.occupied_vmt, 5.0);
    assert_eq!(m.pct_extra_vmt, Some(-50.0));
}

#[test]
fn non_sharers_are_never_pooled() {
    let (s, sk) = matrix_city(&["O", "B", "C"], &[("O", "B", 10.0), ("O", "C", 10.0)], 10.0);
    let r = two_at_origin(&s, &sk, &[("O", "B", 300, true), ("O", "B", 300, false)]);
    assert!(!trip(&r, 0).pooled && !trip(&r, 1).pooled);
    assert_ne!(trip(&r, 0).vehicle, trip(&r, 1).vehicle);
}

fn fork(b_to_c: f64) -> SimulationResult {
    let (s, sk) = matrix_city(
        &["O", "B", "C"],
        &[("O", "B", 10.0), ("O", "C", 10.0), ("B", "C", b_to_c)],
        10.0,
    );
    two_at_origin(&s, &sk, &[("O", "B", 300, true), ("O", "C", 300, true)])
}

#[test]
fn thirty_percent_detour_is_rejected() {
    let r = fork(3.0);
    assert!(!trip(&r, 0).pooled && !trip(&r, 1).pooled);
    assert_ne!(trip(&r, 0).vehicle, trip(&r, 1).vehicle);
    assert_eq!(trip(&r, 0).dropoff_minute, Some(310.0));
    assert_eq!(trip(&r, 1).dropoff_minute, Some(310.0));
}

#[test]
fn detour_at_or_below_the_cap_is_pooled() {
    for (b_to_c, late) in [(2.0, 312.0), (1.0, 311.0)] {
        let r = fork(b_to_c);
        assert!(trip(&r, 0).pooled && trip(&r, 1).pooled, "B-C {b_to_c}");
        assert_eq!(trip(&r, 0).vehicle, trip(&r, 1).vehicle);
        let drops = [trip(&r, 0).dropoff_minute.unwrap(), trip(&r, 1).dropoff_minute.unwrap()];
        assert_eq!(drops.iter().copied().fold(f64::NEG_INFINITY, f64::max), late);
        assert_eq!(drops.iter().copied().fold(f64::INFINITY, f64::min), 310.0);
        // realized detour matches planned detour
        for id in 0..2 {
            let t = trip(&r, id);
            let ride = t.dropoff_minute.unwrap() - t.pickup_minute.unwrap();
            assert!(ride - t.direct_time <= 0.2 * t.direct_time);
        }
    }
}

#[test]
fn relocation_moves_idle_vehicles_toward_demand() {
    let (mut s, sk) = matrix_city(&["A", "B"], &[("A", "B", 5.0)], 5.0);
    s.od = s
        .periods
        .period_ids()
        .into_iter()
        .map(|p| OdMatrix {
            period: p,
            entries: vec![OdEntry { origin: "B".into(), destination: "A".into(), mean: 10.0 }],
        })
        .collect();
    let day1 = [("B", "A", 100, false)];
    let moved = run(&s, &sk, &SimConfig::default(), &day1, &[]);
    assert_eq!(moved.vehicles[0].end_zone, "B");
    let starts: Vec<_> = moved.events.records.iter().filter(|e| e.kind == EventKind::RelocateStart).collect();
    assert!(!starts.is_empty());
    assert!(starts.iter().all(|e| e.zone == "A"));
    let stayed = run(&s, &sk, &quiet(), &day1, &[]);
    assert_eq!(stayed.vehicles[0].end_zone, "A");
}

#[test]
fn unsorted_trip_lists_are_rejected() {
    let (s, sk) = matrix_city(&["A", "B"], &[("A", "B", 5.0)], 5.0);
    let p = SimConfig::default().demand_params();
    let mut t = build_trips(&s, &sk, &p, &[("A", "B", 100, false), ("B", "A", 50, false)]).unwrap();
    t.swap(0, 1);
    assert!(run_with_trips(&s, &sk, &SimConfig::default(), 1, t, Vec::new()).is_err());
}

/// Exhaustive check of the two waiting riders' six valid stop orders.
fn oracle_end(skims: &SkimSet, start: usize, riders: &[Rider; 2], cap: f64) -> Option<f64> {
    // (rider, is_pickup)
    let orders: [[(usize, bool); 4]; 6] = [
        [(0, true), (0, false), (1, true), (1, false)],
        [(0, true), (1, true), (0, false), (1, false)],
        [(0, true), (1, true), (1, false), (0, false)],
        [(1, true), (1, false), (0, true), (0, false)],
        [(1, true), (0, true), (1, false), (0, false)],
        [(1, true), (0, true), (0, false), (1, false)],
    ];
    let mut best: Option<f64> = None;
    for order in orders {
        let (mut cur, mut t) = (start, 0.0);
        let mut pick = [0.0; 2];
        let mut drop = [0.0; 2];
        let mut aboard = [false; 2];
        let mut shared = false;
        for (r, is_pick) in order {
            let z = if is_pick { riders[r].origin } else { riders[r].destination };
            let dt = skims.time(0, cur, z);
            if dt > 0.0 && aboard[0] && aboard[1] {
                shared = true;
            }
            t += dt;
            cur = z;
            if is_pick {
                pick[r] = t;
            } else {
                drop[r] = t;
            }
            aboard[r] = is_pick;
        }
        let ok = shared
            && (0..2).all(|r| (drop[r] - pick[r]) - riders[r].direct_time <= cap * riders[r].direct_time);
        if ok && best.is_none_or(|b| t < b) {
            best = Some(t);
        }
    }
    best
}

fn arb_skims() -> impl Strategy<Value = Vec<Vec<f64>>> {
    proptest::collection::vec(proptest::collection::vec(1u32..15, 4), 4).prop_map(|m| {
        m.into_iter()
            .enumerate()
            .map(|(i, row)| {
                row.into_iter()
                    .enumerate()
                    .map(|(j, v)| if i == j { 0.0 } else { v as f64 })
                    .collect()
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn best_plan_matches_exhaustive_orders(
        time in arb_skims(),
        ods in proptest::collection::vec((0usize..4, 0usize..4), 2),
        start in 0usize..4,
        cap in prop_oneof![Just(0.0), Just(0.2), Just(0.5)],
    ) {
        prop_assume!(ods.iter().all(|(o, d)| o != d));
        let s = load_scenario(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/grid4")).unwrap();
        let periods = s.periods.period_ids().len();
        let ids: Vec<String> = (0..4).map(|i| format!("z{i}")).collect();
        let dist = time.clone();
        let skims = SkimSet::from_matrices(ids, &s.periods, vec![time.clone(); periods], dist);
        let riders: [Rider; 2] = std::array::from_fn(|k| Rider {
            trip: k as u32,
            origin: ods[k].0,
            destination: ods[k].1,
            direct_time: time[ods[k].0][ods[k].1],
            direct_dist: time[ods[k].0][ods[k].1],
            picked_at: None,
        });
        let plan = best_plan(&PlanRequest {
            skims: &skims,
            period: 0,
            start_zone: start,
            start: 0.0,
            riders: &riders,
            detour_cap: cap,
            pickup_deadline: f64::INFINITY,
        });
        let expected = oracle_end(&skims, start, &riders, cap);
        prop_assert_eq!(plan.as_ref().map(|p| p.end), expected);
        if let Some(p) = plan {
            for &(_, in_vehicle, detour) in &p.riders {
                prop_assert!(detour <= cap + 1e-12);
                prop_assert!(in_vehicle >= 0.0);
            }
            let miles: f64 = p.stops.iter().map(|s| s.leg_miles).sum();
            prop_assert_eq!(miles, p.total_miles);
        }
    }

    #[test]
    fn pooling_check_is_symmetric(
        time in arb_skims(),
        ods in proptest::collection::vec((0usize..4, 0usize..4), 2),
    ) {
        prop_assume!(ods.iter().all(|(o, d)| o != d));
        let (s, _) = matrix_city(&["A", "B"], &[], 1.0);
        let periods = s.periods.period_ids().len();
        let ids: Vec<String> = (0..4).map(|i| format!("z{i}")).collect();
        let skims = SkimSet::from_matrices(ids.clone(), &s.periods, vec![time.clone(); periods], time.clone());
        let p = SimConfig::default().demand_params();
        let specs: Vec<(&str, &str, u32, bool)> =
            ods.iter().map(|&(o, d)| (ids[o].as_str(), ids[d].as_str(), 0, true)).collect();
        let trips = build_trips(&s, &skims, &p, &specs).unwrap();
        let a = pooling_feasible(&trips[0], &trips[1], &skims, 0.0, 0.2).map(|p| p.end);
        let b = pooling_feasible(&trips[1], &trips[0], &skims, 0.0, 0.2).map(|p| p.end);
        prop_assert_eq!(a, b);
    }
}
