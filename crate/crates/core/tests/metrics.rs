use proptest::prelude::*;
use savsim_core::engine::VehicleSummary;
use savsim_core::metrics::{check_odometers, performance_from_parts};
use savsim_core::{vmt_accounting, EventKind, EventLog, EventRecord, MetricsError, TripRequest, TripState};

fn arrive(vehicle: u32, minute: f64, miles: f64, occupied: bool) -> EventRecord {
    EventRecord {
        day: 2,
        minute,
        vehicle,
        kind: EventKind::Arrive,
        zone: "A".into(),
        miles,
        occupied,
        trips: Vec::new(),
    }
}

fn trip(id: u32, state: TripState, ws: bool, pooled: bool, dist: f64) -> TripRequest {
    TripRequest {
        id,
        origin: "A".into(),
        destination: "B".into(),
        o: 0,
        d: 1,
        request_minute: 0,
        willing_to_share: ws,
        state,
        wait_minutes: None,
        direct_time: 2.0 * dist,
        direct_dist: dist,
        pooled,
        vehicle: None,
        pickup_minute: None,
        dropoff_minute: None,
    }
}

fn summary(id: u32, empty: f64, occupied: f64) -> VehicleSummary {
    VehicleSummary {
        id,
        spawn_minute: 0.0,
        spawn_zone: "A".into(),
        end_zone: "A".into(),
        day1_empty_miles: 0.0,
        day1_occupied_miles: 0.0,
        empty_miles: empty,
        occupied_miles: occupied,
    }
}

#[test]
fn trips_per_vehicle_and_pooled_share() {
    let mut trips: Vec<TripRequest> = (0..10).map(|i| trip(i, TripState::Served, false, false, 1.0)).collect();
    for (i, t) in trips.iter_mut().take(4).enumerate() {
        t.willing_to_share = true;
        t.pooled = i < 2;
    }
    let m = performance_from_parts("c", 2, &EventLog::default(), &trips).unwrap();
    assert_eq!(m.served_trips_per_sav, Some(5.0));
    assert_eq!(m.pct_pooled_trips, Some(50.0));
    assert_eq!((m.sharers_generated, m.sharers_pooled), (4, 2));
    assert!(m.flags.is_empty());
}

#[test]
fn pooled_pair_on_a_shared_mile_saves_half() {
    let trips = vec![
        trip(0, TripState::Served, true, true, 1.0),
        trip(1, TripState::Served, true, true, 1.0),
    ];
    let log = EventLog { records: vec![arrive(0, 10.0, 1.0, true)] };
    let m = performance_from_parts("c", 1, &log, &trips).unwrap();
    assert_eq!(m.pct_extra_vmt, Some(-50.0));
    assert_eq!(m.demanded_vmt, 2.0);
}

#[test]
fn extra_vmt_counts_empty_and_detour_miles() {
    let trips = vec![trip(0, TripState::Served, false, false, 4.0), trip(1, TripState::Abandoned, false, false, 3.0)];
    let log = EventLog { records: vec![arrive(0, 3.0, 1.0, false), arrive(0, 9.0, 4.0, true)] };
    let m = performance_from_parts("c", 1, &log, &trips).unwrap();
    assert_eq!(m.pct_extra_vmt, Some(25.0));
    assert_eq!((m.demanded_vmt, m.demanded_vmt_all), (4.0, 7.0));
    assert_eq!((m.served_count, m.abandoned_count, m.still_waiting_count), (1, 1, 0));
}

#[test]
fn accounting_splits_empty_and_occupied() {
    let log = EventLog {
        records: vec![
            arrive(0, 1.0, 0.5, false),
            arrive(1, 2.0, 1.5, false),
            arrive(0, 3.0, 3.0, true),
            arrive(1, 4.0, 2.0, true),
        ],
    };
    assert_eq!(vmt_accounting(&log).unwrap(), (2.0, 5.0));
    assert_eq!(vmt_accounting(&EventLog::default()).unwrap(), (0.0, 0.0));
    check_odometers(&log, &[summary(0, 0.5, 3.0), summary(1, 1.5, 2.0)]).unwrap();
}

#[test]
fn odometer_disagreement_is_an_error() {
    let log = EventLog { records: vec![arrive(0, 1.0, 2.0, true)] };
    assert!(matches!(
        check_odometers(&log, &[summary(0, 0.0, 2.5)]),
        Err(MetricsError::OdometerMismatch { vehicle: 0, which: "occupied", .. })
    ));
    assert!(matches!(
        check_odometers(&log, &[summary(0, 0.1, 2.0)]),
        Err(MetricsError::OdometerMismatch { which: "empty", .. })
    ));
}

#[test]
fn negative_miles_and_time_travel_are_errors() {
    let log = EventLog { records: vec![arrive(0, 1.0, -0.5, false)] };
    assert!(matches!(vmt_accounting(&log), Err(MetricsError::NegativeMiles { index: 0, .. })));
    let log = EventLog { records: vec![arrive(0, 5.0, 1.0, false), arrive(0, 4.0, 1.0, false)] };
    assert!(matches!(
        check_odometers(&log, &[summary(0, 2.0, 0.0)]),
        Err(MetricsError::OutOfOrder { vehicle: 0, index: 1 })
    ));
}

#[test]
fn zero_denominators_are_flagged() {
    let trips = vec![trip(0, TripState::Abandoned, false, false, 1.0)];
    let m = performance_from_parts("c", 0, &EventLog::default(), &trips).unwrap();
    assert_eq!((m.served_trips_per_sav, m.pct_pooled_trips, m.pct_extra_vmt), (None, None, None));
    assert_eq!(m.flags, vec!["fleet_size_zero", "no_sharers", "demanded_vmt_zero"]);
}

proptest! {
    #[test]
    fn accounting_matches_a_direct_sum(legs in proptest::collection::vec((0u32..4, 0.0f64..10.0, any::<bool>()), 0..40)) {
        let log = EventLog {
            records: legs.iter().enumerate().map(|(i, &(v, m, occ))| arrive(v, i as f64, m, occ)).collect(),
        };
        let (e, o) = vmt_accounting(&log).unwrap();
        let want_e: f64 = legs.iter().filter(|l| !l.2).map(|l| l.1).sum();
        let want_o: f64 = legs.iter().filter(|l| l.2).map(|l| l.1).sum();
        prop_assert!((e - want_e).abs() <= 1e-9 && (o - want_o).abs() <= 1e-9);
    }
}
