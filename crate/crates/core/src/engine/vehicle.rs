//! Vehicle state and movement along zone-to-zone legs.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::pooling::{PlanStop, StopAction};
use crate::router::SkimSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VehicleState {
    IdleParked,
    Relocating,
    EnroutePickup,
    Occupied,
}

/// A movement between two zones. Times are minutes of the simulated day;
/// `period` is the skim period the leg was priced in.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Leg {
    pub from: usize,
    pub to: usize,
    pub depart: f64,
    pub arrive: f64,
    pub miles: f64,
    pub occupied: bool,
    pub period: usize,
}

impl Leg {
    /// First zone on the leg reached at or after `now`, with its arrival
    /// minute. Intrazonal legs and legs whose remaining route has no
    /// intermediate zone resolve to the leg's end.
    pub fn hop_point(&self, now: f64, skims: &SkimSet) -> (usize, f64) {
        if self.from == self.to {
            return (self.to, self.arrive);
        }
        let mut cur = self.from;
        let mut at = self.depart;
        loop {
            let z = skims.next_hop(self.period, cur, self.to);
            if z == self.to || z == cur {
                return (self.to, self.arrive);
            }
            let tz = at + skims.time(self.period, cur, z);
            if tz >= self.arrive {
                return (self.to, self.arrive);
            }
            if tz >= now {
                return (z, tz);
            }
            cur = z;
            at = tz;
        }
    }

    /// Shortens the leg to end at `zone` at minute `at`, prorating miles by time.
    pub fn truncate(&mut self, zone: usize, at: f64) {
        if zone == self.to && at == self.arrive {
            return;
        }
        let span = self.arrive - self.depart;
        if span > 0.0 {
            self.miles *= (at - self.depart) / span;
        }
        self.to = zone;
        self.arrive = at;
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Vehicle {
    pub id: u32,
    /// Current zone, or the zone last departed while moving.
    pub zone: usize,
    pub leg: Option<Leg>,
    pub plan: VecDeque<PlanStop>,
    pub plan_period: usize,
    pub onboard: Vec<u32>,
    pub relocating_to: Option<usize>,
    pub odo_empty: f64,
    pub odo_occupied: f64,
    pub spawn_minute: f64,
    pub spawn_zone: usize,
}

impl Vehicle {
    pub fn new(id: u32, zone: usize, minute: f64) -> Self {
        Self {
            id,
            zone,
            leg: None,
            plan: VecDeque::new(),
            plan_period: 0,
            onboard: Vec::new(),
            relocating_to: None,
            odo_empty: 0.0,
            odo_occupied: 0.0,
            spawn_minute: minute,
            spawn_zone: zone,
        }
    }

    pub fn state(&self) -> VehicleState {
        if !self.onboard.is_empty() {
            VehicleState::Occupied
        } else if !self.plan.is_empty() {
            VehicleState::EnroutePickup
        } else if self.relocating_to.is_some() {
            VehicleState::Relocating
        } else {
            VehicleState::IdleParked
        }
    }

    /// Parked or relocating with no riders assigned.
    pub fn is_idle(&self) -> bool {
        self.plan.is_empty() && self.onboard.is_empty()
    }

    /// Riders aboard plus riders awaiting pickup.
    pub fn committed(&self) -> Vec<u32> {
        let mut out = self.onboard.clone();
        out.extend(
            self.plan
                .iter()
                .filter(|s| s.action == StopAction::Pickup)
                .map(|s| s.trip),
        );
        out
    }

    /// Zone and minute from which a new plan can start.
    pub fn position(&self, now: f64, skims: &SkimSet) -> (usize, f64) {
        match &self.leg {
            Some(leg) => leg.hop_point(now, skims),
            None => (self.zone, now),
        }
    }

    pub fn plan_end(&self, now: f64) -> f64 {
        self.plan
            .back()
            .map(|s| s.eta)
            .or(self.leg.as_ref().map(|l| l.arrive))
            .unwrap_or(now)
    }
}
