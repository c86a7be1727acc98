//! Stop-order search for one- and two-rider plans.
//!
//! A plan starts at a zone and minute (an idle vehicle's position, the next
//! zone a moving vehicle reaches, or the first pickup) and visits every
//! outstanding stop. Orders are enumerated exhaustively; each rider's pickup
//! precedes its own dropoff, and a rider already aboard contributes only a
//! dropoff. All legs are priced in one period.
//!
//! A two-rider plan is feasible when every pickup meets the deadline, both
//! riders share at least one leg of positive duration, and for each rider
//! `(dropoff − pickup) − direct ≤ cap · direct`. The cheapest feasible order
//! (earliest finish, then enumeration order) wins.

use serde::{Deserialize, Serialize};

use crate::demand::TripRequest;
use crate::router::SkimSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopAction {
    Pickup,
    Dropoff,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanStop {
    pub zone: usize,
    pub action: StopAction,
    pub trip: u32,
    pub eta: f64,
    /// Miles of the leg that ends at this stop (0 when already in the zone).
    pub leg_miles: f64,
}

/// A rider to be routed. `picked_at` is set when the rider is already aboard.
#[derive(Debug, Clone, PartialEq)]
pub struct Rider {
    pub trip: u32,
    pub origin: usize,
    pub destination: usize,
    pub direct_time: f64,
    pub direct_dist: f64,
    pub picked_at: Option<f64>,
}

impl Rider {
    pub fn waiting(t: &TripRequest) -> Self {
        Self {
            trip: t.id,
            origin: t.o,
            destination: t.d,
            direct_time: t.direct_time,
            direct_dist: t.direct_dist,
            picked_at: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledPlan {
    pub stops: Vec<PlanStop>,
    pub start_zone: usize,
    pub start: f64,
    pub end: f64,
    /// Per rider `(trip, in-vehicle minutes, detour fraction)`.
    pub riders: Vec<(u32, f64, f64)>,
    pub total_miles: f64,
}

/// Whether a realized or planned in-vehicle time respects the detour cap.
/// Shared by planning and by log audits so both apply the identical rule.
#[inline]
pub fn within_detour(in_vehicle: f64, direct: f64, cap: f64) -> bool {
    in_vehicle - direct <= cap * direct
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    rider: usize,
    action: StopAction,
}

fn permutations(items: &[Slot]) -> Vec<Vec<Slot>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

fn order_valid(order: &[Slot]) -> bool {
    order.iter().enumerate().all(|(i, s)| {
        s.action == StopAction::Pickup
            || order[..i]
                .iter()
                .any(|p| p.rider == s.rider && p.action == StopAction::Pickup)
            || !order
                .iter()
                .any(|p| p.rider == s.rider && p.action == StopAction::Pickup)
    })
}

pub struct PlanRequest<'a> {
    pub skims: &'a SkimSet,
    pub period: usize,
    pub start_zone: usize,
    pub start: f64,
    pub riders: &'a [Rider],
    pub detour_cap: f64,
    /// Latest allowed pickup minute for riders not yet aboard.
    pub pickup_deadline: f64,
}

/// Cheapest feasible stop order, or `None`.
pub fn best_plan(req: &PlanRequest) -> Option<PooledPlan> {
    let mut slots = Vec::new();
    for (i, r) in req.riders.iter().enumerate() {
        if r.picked_at.is_none() {
            slots.push(Slot {
                rider: i,
                action: StopAction::Pickup,
            });
        }
        slots.push(Slot {
            rider: i,
            action: StopAction::Dropoff,
        });
    }
    let mut best: Option<PooledPlan> = None;
    for order in permutations(&slots) {
        if !order_valid(&order) {
            continue;
        }
        if let Some(plan) = evaluate(req, &order) {
            if best.as_ref().is_none_or(|b| plan.end < b.end) {
                best = Some(plan);
            }
        }
    }
    best
}

fn evaluate(req: &PlanRequest, order: &[Slot]) -> Option<PooledPlan> {
    let n = req.riders.len();
    let mut pick: Vec<Option<f64>> = req.riders.iter().map(|r| r.picked_at).collect();
    let mut drop: Vec<Option<f64>> = vec![None; n];
    let mut aboard: Vec<bool> = req.riders.iter().map(|r| r.picked_at.is_some()).collect();
    let mut cur = req.start_zone;
    let mut t = req.start;
    let mut miles_total = 0.0;
    let mut shared = false;
    let mut stops = Vec::with_capacity(order.len());
    for s in order {
        let r = &req.riders[s.rider];
        let zone = match s.action {
            StopAction::Pickup => r.origin,
            StopAction::Dropoff => r.destination,
        };
        let (dt, miles) = if s.action == StopAction::Dropoff && r.origin == r.destination && cur == zone {
            // intrazonal ride: the whole trip happens inside the zone
            (r.direct_time, r.direct_dist)
        } else if cur == zone {
            (0.0, 0.0)
        } else {
            (req.skims.time(req.period, cur, zone), req.skims.dist(cur, zone))
        };
        if dt > 0.0 && aboard.iter().filter(|a| **a).count() >= 2 {
            shared = true;
        }
        t += dt;
        miles_total += miles;
        cur = zone;
        match s.action {
            StopAction::Pickup => {
                if t > req.pickup_deadline {
                    return None;
                }
                pick[s.rider] = Some(t);
                aboard[s.rider] = true;
            }
            StopAction::Dropoff => {
                drop[s.rider] = Some(t);
                aboard[s.rider] = false;
            }
        }
        stops.push(PlanStop {
            zone,
            action: s.action,
            trip: r.trip,
            eta: t,
            leg_miles: miles,
        });
    }
    let mut riders = Vec::with_capacity(n);
    for (i, r) in req.riders.iter().enumerate() {
        let in_vehicle = drop[i]? - pick[i]?;
        if n > 1 && !within_detour(in_vehicle, r.direct_time, req.detour_cap) {
            return None;
        }
        let detour = if r.direct_time > 0.0 {
            (in_vehicle - r.direct_time) / r.direct_time
        } else {
            0.0
        };
        riders.push((r.trip, in_vehicle, detour));
    }
    if n > 1 && !shared {
        return None;
    }
    Some(PooledPlan {
        stops,
        start_zone: req.start_zone,
        start: req.start,
        end: t,
        riders,
        total_miles: miles_total,
    })
}

/// Best two-rider plan for two waiting sharers, starting at either origin at
/// `minute` and priced in the period containing `minute`.
pub fn pooling_feasible(
    t1: &TripRequest,
    t2: &TripRequest,
    skims: &SkimSet,
    minute: f64,
    detour_cap: f64,
) -> Option<PooledPlan> {
    let riders = [Rider::waiting(t1), Rider::waiting(t2)];
    let period = skims.period_index_f(minute);
    let mut best: Option<PooledPlan> = None;
    for start_zone in [t1.o, t2.o] {
        let plan = best_plan(&PlanRequest {
            skims,
            period,
            start_zone,
            start: minute,
            riders: &riders,
            detour_cap,
            pickup_deadline: f64::INFINITY,
        });
        if let Some(p) = plan {
            if best.as_ref().is_none_or(|b| p.end < b.end) {
                best = Some(p);
            }
        }
    }
    best
}
