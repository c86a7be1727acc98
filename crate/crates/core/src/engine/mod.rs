//! Two-day discrete-time fleet simulation.
//!
//! Day 1 starts with no vehicles. Whenever a request has waited
//! `max_wait` minutes unassigned, a vehicle spawns at its origin and picks it
//! up; the day runs until every request is served. Day 2 redraws demand and
//! serves it with the day-1 fleet, parked where day 1 left it. All metrics
//! come from day 2.
//!
//! Every tick at minute `t`:
//!
//! 1. legs ending at or before `t` complete, in time order; due stops in the
//!    arrival zone are executed and the vehicle departs for its next stop or
//!    parks;
//! 2. requests with a request minute `≤ t` join the queue;
//! 3. queued requests are dispatched longest-wait first (request minute,
//!    then id);
//! 4. requests unassigned for `max_wait` minutes spawn a vehicle (day 1) or,
//!    for non-sharers, are abandoned (day 2); sharers keep waiting;
//! 5. every `relocation_interval` minutes before midnight, idle vehicles are
//!    rebalanced.
//!
//! Dispatch of a sharer whose trip leaves its zone first tries pooling,
//! either with another queued sharer (served by the idle vehicle nearest one
//! of the two origins) or with a vehicle whose only committed rider is a
//! sharer. The pool adding the least vehicle time wins, ties broken by
//! vehicle id then partner id. Otherwise the nearest idle vehicle is sent.
//! A non-sharer may only be assigned a pickup within `max_wait` of its
//! request; any pickup must happen within `max_wait` of the dispatch minute.
//!
//! Vehicles follow the minute-exact stop times of their plans, so realized
//! in-vehicle times equal the planned ones. A moving vehicle that receives a
//! new plan keeps driving to the next zone on its route and replans from
//! there.

pub mod log;
pub mod pooling;
pub mod relocation;
mod vehicle;

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use log::{EventKind, EventLog, EventRecord};
pub use pooling::{best_plan, pooling_feasible, within_detour, PlanRequest, PlanStop, PooledPlan, Rider, StopAction};
pub use vehicle::VehicleState;

use crate::demand::{
    default_departure_histogram, synthesize_trips, DemandParams, DepartureHistogram, TripRequest, TripState,
    DEFAULT_INTRAZONAL_FACTOR, DEFAULT_INTRAZONAL_SPEED_MPH,
};
use crate::error::{ConfigError, ScenarioError};
use crate::router::SkimSet;
use crate::scenario::{write_json, Scenario, MINUTES_PER_DAY};
use crate::seed::derive_seed;
use vehicle::{Leg, Vehicle};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Market penetration: share of OD demand served by the fleet.
    pub mp: f64,
    /// Willingness to share: probability a trip accepts pooling.
    pub ws: f64,
    pub max_wait: f64,
    pub detour_cap: f64,
    pub tick: f64,
    pub relocation_interval: f64,
    pub relocation: bool,
    pub intrazonal_factor: f64,
    pub intrazonal_speed_mph: f64,
    pub histogram: DepartureHistogram,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            mp: 1.0,
            ws: 0.275,
            max_wait: 10.0,
            detour_cap: 0.2,
            tick: 1.0,
            relocation_interval: 5.0,
            relocation: true,
            intrazonal_factor: DEFAULT_INTRAZONAL_FACTOR,
            intrazonal_speed_mph: DEFAULT_INTRAZONAL_SPEED_MPH,
            histogram: default_departure_histogram(),
        }
    }
}

impl SimConfig {
    pub fn with_rates(mp: f64, ws: f64) -> Self {
        Self {
            mp,
            ws,
            ..Self::default()
        }
    }

    pub fn demand_params(&self) -> DemandParams {
        DemandParams {
            mp: self.mp,
            ws: self.ws,
            histogram: self.histogram.clone(),
            intrazonal_factor: self.intrazonal_factor,
            intrazonal_speed_mph: self.intrazonal_speed_mph,
        }
    }

    fn ticks_in(&self, minutes: f64) -> Option<u64> {
        let k = minutes / self.tick;
        (k.fract() == 0.0 && k >= 1.0).then_some(k as u64)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        self.demand_params().check()?;
        if !(self.max_wait > 0.0 && self.max_wait.is_finite()) {
            return bad(format!("max_wait = {} must be > 0", self.max_wait));
        }
        if !(self.detour_cap >= 0.0 && self.detour_cap.is_finite()) {
            return bad(format!("detour_cap = {} must be >= 0", self.detour_cap));
        }
        if !(self.tick > 0.0) || self.ticks_in(MINUTES_PER_DAY as f64).is_none() {
            return bad(format!("tick = {} must divide 1440", self.tick));
        }
        if !(self.relocation_interval > 0.0) || self.ticks_in(self.relocation_interval).is_none() {
            return bad(format!(
                "relocation_interval = {} must be a positive multiple of the tick",
                self.relocation_interval
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleSummary {
    pub id: u32,
    pub spawn_minute: f64,
    pub spawn_zone: String,
    pub end_zone: String,
    pub day1_empty_miles: f64,
    pub day1_occupied_miles: f64,
    /// Day-2 odometers.
    pub empty_miles: f64,
    pub occupied_miles: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub city: String,
    pub seed: u64,
    pub config: SimConfig,
    /// Vehicles spawned on day 1.
    pub fleet_size: u32,
    pub day1_trip_count: usize,
    pub served: usize,
    pub abandoned: usize,
    /// Day-2 sharers never assigned by the end of the day.
    pub still_waiting: usize,
    pub vehicles: Vec<VehicleSummary>,
    /// Day-2 trips with their outcomes.
    pub trips: Vec<TripRequest>,
    /// Events of both days (see [`EventRecord::day`]).
    pub events: EventLog,
}

/// `simresult.json`: everything except the per-trip and per-event tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub city: String,
    pub seed: u64,
    pub config: SimConfig,
    pub fleet_size: u32,
    pub day1_trip_count: usize,
    pub day2_trip_count: usize,
    pub served: usize,
    pub abandoned: usize,
    pub still_waiting: usize,
    pub vehicles: Vec<VehicleSummary>,
}

impl SimulationResult {
    pub fn summary(&self) -> SimulationSummary {
        SimulationSummary {
            city: self.city.clone(),
            seed: self.seed,
            config: self.config.clone(),
            fleet_size: self.fleet_size,
            day1_trip_count: self.day1_trip_count,
            day2_trip_count: self.trips.len(),
            served: self.served,
            abandoned: self.abandoned,
            still_waiting: self.still_waiting,
            vehicles: self.vehicles.clone(),
        }
    }

    /// Writes `eventlog.jsonl`, `trips_out.csv` and `simresult.json`.
    pub fn write_outputs(&self, dir: &Path) -> Result<(), ScenarioError> {
        std::fs::create_dir_all(dir).map_err(|source| ScenarioError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        self.events.write_jsonl(&dir.join("eventlog.jsonl"))?;
        write_trip_outcomes(&self.trips, &dir.join("trips_out.csv"))?;
        write_json(&dir.join("simresult.json"), &self.summary())
    }
}

pub fn write_trip_outcomes(trips: &[TripRequest], path: &Path) -> Result<(), ScenarioError> {
    let err = |e: csv::Error| ScenarioError::Schema {
        file: path.display().to_string(),
        row: 0,
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    for t in trips {
        w.serialize(t).map_err(err)?;
    }
    w.flush().map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_trip_outcomes(path: &Path) -> Result<Vec<TripRequest>, ScenarioError> {
    let err = |e: csv::Error| ScenarioError::Schema {
        file: path.display().to_string(),
        row: e.position().map_or(0, |p| p.line() as usize),
        message: e.to_string(),
    };
    let mut rdr = csv::Reader::from_path(path).map_err(err)?;
    rdr.deserialize().collect::<Result<Vec<TripRequest>, _>>().map_err(err)
}

/// Totally ordered minute for the arrival agenda.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Minute(f64);

impl Eq for Minute {}

impl Ord for Minute {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl PartialOrd for Minute {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Candidate {
    added: f64,
    vehicle: u32,
    partner: u32,
    plan: PooledPlan,
}

struct Day<'a> {
    skims: &'a SkimSet,
    cfg: &'a SimConfig,
    day: u8,
    spawn: bool,
    zone_ids: &'a [String],
    vehicles: Vec<Vehicle>,
    trips: Vec<TripRequest>,
    next_request: usize,
    queue: BTreeSet<(u32, u32)>,
    agenda: BTreeSet<(Minute, u32)>,
    log: EventLog,
    /// Per period, expected demand per zone over one relocation window.
    window_demand: Vec<Vec<f64>>,
}

impl<'a> Day<'a> {
    fn event(&mut self, minute: f64, vid: u32, kind: EventKind, zone: usize, miles: f64, occupied: bool, trips: Vec<u32>) {
        self.log.push(EventRecord {
            day: self.day,
            minute,
            vehicle: vid,
            kind,
            zone: self.zone_ids[zone].clone(),
            miles,
            occupied,
            trips,
        });
    }

    fn run(&mut self) {
        let ticks_per_day = self.cfg.ticks_in(MINUTES_PER_DAY as f64).unwrap_or(1440);
        let reloc_every = self.cfg.ticks_in(self.cfg.relocation_interval).unwrap_or(5);
        let mut k: u64 = 0;
        loop {
            let t = k as f64 * self.cfg.tick;
            self.process_arrivals(t);
            while self.next_request < self.trips.len()
                && (self.trips[self.next_request].request_minute as f64) <= t
            {
                let tr = &self.trips[self.next_request];
                self.queue.insert((tr.request_minute, tr.id));
                self.next_request += 1;
            }
            self.dispatch(t);
            self.expire(t);
            if self.cfg.relocation && k < ticks_per_day && k % reloc_every == 0 {
                self.relocate(t);
            }
            if k >= ticks_per_day && self.next_request == self.trips.len() && self.agenda.is_empty() {
                let pending_non_sharer = self
                    .queue
                    .iter()
                    .any(|&(_, id)| self.spawn || !self.trips[id as usize].willing_to_share);
                if !pending_non_sharer {
                    break;
                }
            }
            k += 1;
        }
    }

    fn process_arrivals(&mut self, t: f64) {
        while let Some(&(Minute(at), vid)) = self.agenda.first() {
            if at > t {
                break;
            }
            self.agenda.pop_first();
            self.arrive(vid, at);
        }
    }

    fn arrive(&mut self, vid: u32, at: f64) {
        let v = &mut self.vehicles[vid as usize];
        let Some(leg) = v.leg.take() else {
            return;
        };
        v.zone = leg.to;
        if leg.occupied {
            v.odo_occupied += leg.miles;
        } else {
            v.odo_empty += leg.miles;
        }
        if v.relocating_to == Some(leg.to) && v.plan.is_empty() {
            v.relocating_to = None;
        }
        let pooled = leg.miles > 0.0 && v.onboard.len() == 2;
        let aboard = v.onboard.clone();
        if pooled {
            for &tid in &aboard {
                self.trips[tid as usize].pooled = true;
            }
        }
        self.event(at, vid, EventKind::Arrive, leg.to, leg.miles, leg.occupied, aboard);
        self.continue_at(vid, at);
    }

    /// Executes due stops in the current zone, then departs or parks.
    fn continue_at(&mut self, vid: u32, at: f64) {
        loop {
            let v = &self.vehicles[vid as usize];
            let Some(stop) = v.plan.front() else {
                break;
            };
            if stop.zone != v.zone || stop.eta > at {
                break;
            }
            let stop = self.vehicles[vid as usize].plan.pop_front().expect("front exists");
            let trip = &mut self.trips[stop.trip as usize];
            match stop.action {
                StopAction::Pickup => {
                    trip.state = TripState::Onboard;
                    trip.pickup_minute = Some(stop.eta);
                    trip.wait_minutes = Some(stop.eta - trip.request_minute as f64);
                    self.vehicles[vid as usize].onboard.push(stop.trip);
                    self.event(stop.eta, vid, EventKind::Pickup, stop.zone, 0.0, true, vec![stop.trip]);
                }
                StopAction::Dropoff => {
                    trip.state = TripState::Served;
                    trip.dropoff_minute = Some(stop.eta);
                    let v = &mut self.vehicles[vid as usize];
                    v.onboard.retain(|&t| t != stop.trip);
                    let occ = !v.onboard.is_empty();
                    self.event(stop.eta, vid, EventKind::Dropoff, stop.zone, 0.0, occ, vec![stop.trip]);
                }
            }
        }
        let v = &mut self.vehicles[vid as usize];
        if let Some(next) = v.plan.front() {
            let leg = Leg {
                from: v.zone,
                to: next.zone,
                depart: at,
                arrive: next.eta,
                miles: next.leg_miles,
                occupied: !v.onboard.is_empty(),
                period: v.plan_period,
            };
            let (zone, occupied, aboard) = (v.zone, leg.occupied, v.onboard.clone());
            self.agenda.insert((Minute(leg.arrive), vid));
            v.leg = Some(leg);
            self.event(at, vid, EventKind::Depart, zone, 0.0, occupied, aboard);
        } else if v.leg.is_none() {
            let zone = v.zone;
            self.event(at, vid, EventKind::Park, zone, 0.0, false, Vec::new());
        }
    }

    fn rider(&self, tid: u32) -> Rider {
        let t = &self.trips[tid as usize];
        Rider {
            picked_at: if t.state == TripState::Onboard { t.pickup_minute } else { None },
            ..Rider::waiting(t)
        }
    }

    fn plan_from(&self, vid: u32, riders: &[Rider], period: usize, now: f64, deadline: f64) -> Option<PooledPlan> {
        let (start_zone, start) = self.vehicles[vid as usize].position(now, self.skims);
        best_plan(&PlanRequest {
            skims: self.skims,
            period,
            start_zone,
            start,
            riders,
            detour_cap: self.cfg.detour_cap,
            pickup_deadline: deadline,
        })
    }

    /// Idle vehicle reaching `zone` first from its current position.
    fn nearest_idle(&self, zone: usize, period: usize, now: f64) -> Option<(u32, f64)> {
        let mut best: Option<(u32, f64)> = None;
        for v in self.vehicles.iter().filter(|v| v.is_idle()) {
            let (z, tz) = v.position(now, self.skims);
            let eta = tz + if z == zone { 0.0 } else { self.skims.time(period, z, zone) };
            if best.is_none_or(|(_, b)| eta < b) {
                best = Some((v.id, eta));
            }
        }
        best
    }

    fn dispatch(&mut self, now: f64) {
        let order: Vec<u32> = self.queue.iter().map(|&(_, id)| id).collect();
        for tid in order {
            let t = &self.trips[tid as usize];
            if self.queue.contains(&(t.request_minute, tid)) {
                self.try_assign(tid, now);
            }
        }
    }

    fn try_assign(&mut self, tid: u32, now: f64) {
        let trip = self.trips[tid as usize].clone();
        let period = self.skims.period_index(trip.request_minute);
        let deadline = now + self.cfg.max_wait;
        if trip.willing_to_share && trip.o != trip.d {
            if let Some(c) = self.best_pool(&trip, period, now, deadline) {
                self.apply(c.vehicle, c.plan, period, now);
                return;
            }
        }
        let solo_deadline = if trip.willing_to_share {
            deadline
        } else {
            deadline.min(trip.request_minute as f64 + self.cfg.max_wait)
        };
        let Some((vid, eta)) = self.nearest_idle(trip.o, period, now) else {
            return;
        };
        if eta > solo_deadline {
            return;
        }
        if let Some(plan) = self.plan_from(vid, &[Rider::waiting(&trip)], period, now, solo_deadline) {
            self.apply(vid, plan, period, now);
        }
    }

    fn best_pool(&self, trip: &TripRequest, period: usize, now: f64, deadline: f64) -> Option<Candidate> {
        let mut best: Option<Candidate> = None;
        let mut consider = |c: Candidate| {
            let better = match &best {
                None => true,
                Some(b) => (c.added, c.vehicle, c.partner) < (b.added, b.vehicle, b.partner),
            };
            if better {
                best = Some(c);
            }
        };

        // (i) another queued sharer, served by an idle vehicle
        let mut nearest: HashMap<usize, Option<(u32, f64)>> = HashMap::new();
        for &(_, pid) in &self.queue {
            if pid == trip.id {
                continue;
            }
            let partner = &self.trips[pid as usize];
            if !partner.willing_to_share || partner.o == partner.d {
                continue;
            }
            let riders = [Rider::waiting(trip), Rider::waiting(partner)];
            for first in [trip.o, partner.o] {
                let found = *nearest
                    .entry(first)
                    .or_insert_with(|| self.nearest_idle(first, period, now));
                let Some((vid, _)) = found else {
                    continue;
                };
                if let Some(plan) = self.plan_from(vid, &riders, period, now, deadline) {
                    consider(Candidate {
                        added: plan.end - now,
                        vehicle: vid,
                        partner: pid,
                        plan,
                    });
                }
            }
        }

        // (ii) a vehicle whose only committed rider is a sharer
        for v in &self.vehicles {
            let committed = v.committed();
            if committed.len() != 1 {
                continue;
            }
            let other = &self.trips[committed[0] as usize];
            if !other.willing_to_share || other.o == other.d {
                continue;
            }
            let riders = [self.rider(other.id), Rider::waiting(trip)];
            if let Some(plan) = self.plan_from(v.id, &riders, period, now, deadline) {
                consider(Candidate {
                    added: plan.end - v.plan_end(now),
                    vehicle: v.id,
                    partner: other.id,
                    plan,
                });
            }
        }
        best
    }

    /// Hands `plan` to a vehicle, diverting it at the next zone if moving.
    fn apply(&mut self, vid: u32, plan: PooledPlan, period: usize, now: f64) {
        for s in &plan.stops {
            if s.action == StopAction::Pickup {
                let t = &mut self.trips[s.trip as usize];
                t.vehicle = Some(vid);
                self.queue.remove(&(t.request_minute, t.id));
            }
        }
        let v = &mut self.vehicles[vid as usize];
        v.relocating_to = None;
        v.plan = plan.stops.into();
        v.plan_period = period;
        if let Some(leg) = v.leg.as_mut() {
            let old = leg.arrive;
            leg.truncate(plan.start_zone, plan.start);
            if leg.arrive != old {
                self.agenda.remove(&(Minute(old), vid));
                self.agenda.insert((Minute(leg.arrive), vid));
            }
        } else {
            self.continue_at(vid, now);
        }
    }

    fn expire(&mut self, now: f64) {
        let due: Vec<(u32, u32)> = self
            .queue
            .iter()
            .copied()
            .filter(|&(m, _)| now - m as f64 >= self.cfg.max_wait)
            .collect();
        for (m, tid) in due {
            if self.spawn {
                let trip = self.trips[tid as usize].clone();
                let vid = self.vehicles.len() as u32;
                self.vehicles.push(Vehicle::new(vid, trip.o, now));
                self.event(now, vid, EventKind::Spawn, trip.o, 0.0, false, Vec::new());
                let period = self.skims.period_index(trip.request_minute);
                let plan = self
                    .plan_from(vid, &[Rider::waiting(&trip)], period, now, f64::INFINITY)
                    .expect("a solo plan from the origin always exists");
                self.apply(vid, plan, period, now);
            } else if !self.trips[tid as usize].willing_to_share {
                self.queue.remove(&(m, tid));
                let t = &mut self.trips[tid as usize];
                t.state = TripState::Abandoned;
                t.wait_minutes = Some(self.cfg.max_wait);
            }
        }
    }

    fn relocate(&mut self, now: f64) {
        let p = self.skims.period_index_f(now);
        let nz = self.zone_ids.len();
        let mut supply = vec![0.0; nz];
        let mut parked: Vec<Vec<u32>> = vec![Vec::new(); nz];
        for v in &self.vehicles {
            match (v.state(), v.relocating_to) {
                (VehicleState::IdleParked, _) => {
                    supply[v.zone] += 1.0;
                    parked[v.zone].push(v.id);
                }
                (VehicleState::Relocating, Some(to)) => supply[to] += 1.0,
                _ => {}
            }
        }
        let skims = self.skims;
        let moves = relocation::plan_relocations(&supply, &self.window_demand[p], &parked, |a, b| skims.time(p, a, b));
        for m in moves {
            let leg = Leg {
                from: m.from,
                to: m.to,
                depart: now,
                arrive: now + skims.time(p, m.from, m.to),
                miles: skims.dist(m.from, m.to),
                occupied: false,
                period: p,
            };
            self.agenda.insert((Minute(leg.arrive), m.vehicle));
            let v = &mut self.vehicles[m.vehicle as usize];
            v.relocating_to = Some(m.to);
            v.leg = Some(leg);
            self.event(now, m.vehicle, EventKind::RelocateStart, m.from, 0.0, false, Vec::new());
        }
    }
}

fn window_demand(scenario: &Scenario, skims: &SkimSet, cfg: &SimConfig) -> Vec<Vec<f64>> {
    let nz = skims.n_zones();
    skims
        .period_ids()
        .iter()
        .map(|pid| {
            let mut rows = vec![0.0; nz];
            let minutes = scenario.periods.minutes_in(pid) as f64;
            if let Some(m) = scenario.od_for(pid) {
                for e in &m.entries {
                    if let Ok(o) = skims.zone(&e.origin) {
                        rows[o] += e.mean;
                    }
                }
            }
            if minutes > 0.0 {
                for r in rows.iter_mut() {
                    *r *= cfg.mp * cfg.relocation_interval / minutes;
                }
            }
            rows
        })
        .collect()
}

/// Runs the warm-up day and the measured day. Deterministic in
/// `(scenario, skims, config, seed)`.
pub fn run_simulation(
    scenario: &Scenario,
    skims: &SkimSet,
    config: &SimConfig,
    seed: u64,
) -> Result<SimulationResult, ConfigError> {
    config.validate()?;
    let demand = config.demand_params();
    let day1_trips = synthesize_trips(scenario, skims, &demand, derive_seed(seed, "day1"))?;
    let day2_trips = synthesize_trips(scenario, skims, &demand, derive_seed(seed, "day2"))?;
    run_with_trips(scenario, skims, config, seed, day1_trips, day2_trips)
}

/// Runs both days on given request lists. Each list must be sorted by
/// request minute with ids equal to positions.
pub fn run_with_trips(
    scenario: &Scenario,
    skims: &SkimSet,
    config: &SimConfig,
    seed: u64,
    day1_trips: Vec<TripRequest>,
    day2_trips: Vec<TripRequest>,
) -> Result<SimulationResult, ConfigError> {
    config.validate()?;
    for trips in [&day1_trips, &day2_trips] {
        let ordered = trips.iter().enumerate().all(|(i, t)| t.id as usize == i)
            && trips.windows(2).all(|w| w[0].request_minute <= w[1].request_minute);
        if !ordered {
            return Err(ConfigError::Invalid(
                "trip lists must be sorted by minute with ids equal to positions".into(),
            ));
        }
        if let Some(t) = trips.iter().find(|t| t.o >= skims.n_zones() || t.d >= skims.n_zones()) {
            return Err(ConfigError::Invalid(format!("trip {} references an unknown zone", t.id)));
        }
    }
    let window_demand = window_demand(scenario, skims, config);
    let zone_ids = skims.zone_ids();

    let day1_count = day1_trips.len();
    let mut day = Day {
        skims,
        cfg: config,
        day: 1,
        spawn: true,
        zone_ids,
        vehicles: Vec::new(),
        trips: day1_trips,
        next_request: 0,
        queue: BTreeSet::new(),
        agenda: BTreeSet::new(),
        log: EventLog::default(),
        window_demand,
    };
    day.run();
    let day1_odometers: Vec<(f64, f64)> = day.vehicles.iter().map(|v| (v.odo_empty, v.odo_occupied)).collect();
    let fleet_size = day.vehicles.len() as u32;

    for v in day.vehicles.iter_mut() {
        v.odo_empty = 0.0;
        v.odo_occupied = 0.0;
    }
    day.day = 2;
    day.spawn = false;
    day.trips = day2_trips;
    day.next_request = 0;
    day.run();

    let trips = day.trips;
    let served = trips.iter().filter(|t| t.state == TripState::Served).count();
    let abandoned = trips.iter().filter(|t| t.state == TripState::Abandoned).count();
    let still_waiting = trips.iter().filter(|t| t.state == TripState::Waiting).count();
    let vehicles = day
        .vehicles
        .iter()
        .zip(&day1_odometers)
        .map(|(v, &(e1, o1))| VehicleSummary {
            id: v.id,
            spawn_minute: v.spawn_minute,
            spawn_zone: zone_ids[v.spawn_zone].clone(),
            end_zone: zone_ids[v.zone].clone(),
            day1_empty_miles: e1,
            day1_occupied_miles: o1,
            empty_miles: v.odo_empty,
            occupied_miles: v.odo_occupied,
        })
        .collect();
    Ok(SimulationResult {
        city: scenario.name.clone(),
        seed,
        config: config.clone(),
        fleet_size,
        day1_trip_count: day1_count,
        served,
        abandoned,
        still_waiting,
        vehicles,
        trips,
        events: day.log,
    })
}
