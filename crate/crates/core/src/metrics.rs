//! Fleet performance from the measured day.
//!
//! - served trips per vehicle = served trips ÷ fleet size;
//! - pooled share (%) = pooled person trips ÷ trips that accepted sharing;
//! - extra VMT (%) = (empty VMT + occupied VMT − demanded VMT) ÷ demanded VMT,
//!   where demanded VMT is the direct distance of every served trip.
//!
//! Ratios with a zero denominator are reported as `None` and named in
//! `flags`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::demand::{TripRequest, TripState};
use crate::engine::{EventKind, EventLog, SimulationResult, VehicleSummary};
use crate::error::MetricsError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceReport {
    pub city: String,
    pub fleet_size: u32,
    pub generated_count: usize,
    pub served_count: usize,
    pub abandoned_count: usize,
    pub still_waiting_count: usize,
    pub sharers_generated: usize,
    pub sharers_pooled: usize,
    pub served_trips_per_sav: Option<f64>,
    pub pct_pooled_trips: Option<f64>,
    pub pct_extra_vmt: Option<f64>,
    pub empty_vmt: f64,
    pub occupied_vmt: f64,
    /// Direct miles of served trips.
    pub demanded_vmt: f64,
    /// Direct miles of every generated trip, served or not.
    pub demanded_vmt_all: f64,
    pub flags: Vec<String>,
}

/// `(empty, occupied)` miles: per-vehicle sums (in log order) added up in
/// vehicle-id order.
pub fn vmt_accounting(log: &EventLog) -> Result<(f64, f64), MetricsError> {
    let per = per_vehicle_miles(log)?;
    Ok(per
        .values()
        .fold((0.0, 0.0), |(e, o), (ve, vo)| (e + ve, o + vo)))
}

fn per_vehicle_miles(log: &EventLog) -> Result<BTreeMap<u32, (f64, f64)>, MetricsError> {
    let mut per: BTreeMap<u32, (f64, f64)> = BTreeMap::new();
    for (index, r) in log.records.iter().enumerate() {
        if !(r.miles >= 0.0) {
            return Err(MetricsError::NegativeMiles { index, miles: r.miles });
        }
        if r.kind != EventKind::Arrive {
            continue;
        }
        let entry = per.entry(r.vehicle).or_default();
        if r.occupied {
            entry.1 += r.miles;
        } else {
            entry.0 += r.miles;
        }
    }
    Ok(per)
}

/// Checks that per-vehicle log miles equal the odometers exactly and that
/// each vehicle's events are time-ordered.
pub fn check_odometers(log: &EventLog, vehicles: &[VehicleSummary]) -> Result<(), MetricsError> {
    let mut last: BTreeMap<u32, f64> = BTreeMap::new();
    for (index, r) in log.records.iter().enumerate() {
        let prev = last.entry(r.vehicle).or_insert(f64::NEG_INFINITY);
        if r.minute < *prev {
            return Err(MetricsError::OutOfOrder {
                vehicle: r.vehicle,
                index,
            });
        }
        *prev = r.minute;
    }
    let per = per_vehicle_miles(log)?;
    for v in vehicles {
        let (e, o) = per.get(&v.id).copied().unwrap_or((0.0, 0.0));
        if e != v.empty_miles {
            return Err(MetricsError::OdometerMismatch {
                vehicle: v.id,
                which: "empty",
                log: e,
                odometer: v.empty_miles,
            });
        }
        if o != v.occupied_miles {
            return Err(MetricsError::OdometerMismatch {
                vehicle: v.id,
                which: "occupied",
                log: o,
                odometer: v.occupied_miles,
            });
        }
    }
    Ok(())
}

/// Metrics from the measured day's log and trip outcomes.
pub fn performance_from_parts(
    city: &str,
    fleet_size: u32,
    day2_log: &EventLog,
    trips: &[TripRequest],
) -> Result<PerformanceReport, MetricsError> {
    let (empty_vmt, occupied_vmt) = vmt_accounting(day2_log)?;
    let served: Vec<&TripRequest> = trips.iter().filter(|t| t.state == TripState::Served).collect();
    let served_count = served.len();
    let demanded_vmt: f64 = served.iter().map(|t| t.direct_dist).sum();
    let demanded_vmt_all: f64 = trips.iter().map(|t| t.direct_dist).sum();
    let sharers_generated = trips.iter().filter(|t| t.willing_to_share).count();
    let sharers_pooled = trips.iter().filter(|t| t.pooled).count();
    let mut flags = Vec::new();

    let served_trips_per_sav = if fleet_size > 0 {
        Some(served_count as f64 / fleet_size as f64)
    } else {
        flags.push("fleet_size_zero".to_string());
        None
    };
    let pct_pooled_trips = if sharers_generated > 0 {
        Some(sharers_pooled as f64 / sharers_generated as f64 * 100.0)
    } else {
        flags.push("no_sharers".to_string());
        None
    };
    let pct_extra_vmt = if demanded_vmt > 0.0 {
        Some((empty_vmt + occupied_vmt - demanded_vmt) / demanded_vmt * 100.0)
    } else {
        flags.push("demanded_vmt_zero".to_string());
        None
    };
    Ok(PerformanceReport {
        city: city.to_string(),
        fleet_size,
        generated_count: trips.len(),
        served_count,
        abandoned_count: trips.iter().filter(|t| t.state == TripState::Abandoned).count(),
        still_waiting_count: trips.iter().filter(|t| t.state == TripState::Waiting).count(),
        sharers_generated,
        sharers_pooled,
        served_trips_per_sav,
        pct_pooled_trips,
        pct_extra_vmt,
        empty_vmt,
        occupied_vmt,
        demanded_vmt,
        demanded_vmt_all,
        flags,
    })
}

pub fn compute_performance(result: &SimulationResult) -> Result<PerformanceReport, MetricsError> {
    let day2 = result.events.filter_day(2);
    check_odometers(&day2, &result.vehicles)?;
    performance_from_parts(&result.city, result.fleet_size, &day2, &result.trips)
}
