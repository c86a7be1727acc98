//! Daily trip requests drawn from OD means.
//!
//! Each OD cell with mean `λ` in period `p` yields `Poisson(mp·λ)` trips.
//! A trip's request minute is drawn from the departure histogram restricted
//! to the minutes of `p`; its willingness to share is an independent
//! `Bernoulli(ws)` draw. Trips are sorted by request minute (generation order
//! breaks ties) and numbered from zero.
//!
//! Intrazonal trips have no skim distance, so they get a floor of
//! `intrazonal_factor · sqrt(zone area)` miles driven at
//! `intrazonal_speed_mph`.

use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, ScenarioError};
use crate::router::SkimSet;
use crate::scenario::{Scenario, MINUTES_PER_DAY};

pub const DEFAULT_INTRAZONAL_FACTOR: f64 = 0.5;
pub const DEFAULT_INTRAZONAL_SPEED_MPH: f64 = 15.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistBin {
    pub start: u32,
    pub probability: f64,
}

/// Probability mass over the day; bin `i` covers `[start_i, start_{i+1})`,
/// the last bin runs to midnight and mass is uniform inside a bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepartureHistogram {
    bins: Vec<HistBin>,
}

/// Hourly weights for the shipped default: an overnight trough, an AM peak
/// at 7-9h and a slightly higher PM peak at 16-18h.
const DEFAULT_HOURLY_WEIGHTS: [f64; 24] = [
    0.5, 0.3, 0.2, 0.2, 0.4, 1.2, 3.5, 7.0, 7.5, 5.0, 4.5, 5.0, 5.5, 5.0, 5.5, 6.5, 7.8, 8.0, 6.0,
    4.5, 3.5, 2.8, 2.0, 1.2,
];

pub fn default_departure_histogram() -> DepartureHistogram {
    let total: f64 = DEFAULT_HOURLY_WEIGHTS.iter().sum();
    DepartureHistogram {
        bins: DEFAULT_HOURLY_WEIGHTS
            .iter()
            .enumerate()
            .map(|(h, w)| HistBin {
                start: 60 * h as u32,
                probability: w / total,
            })
            .collect(),
    }
}

impl DepartureHistogram {
    pub fn new(bins: Vec<HistBin>) -> Result<Self, ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if bins.is_empty() || bins[0].start != 0 {
            return bad("histogram must start at minute 0".into());
        }
        for w in bins.windows(2) {
            if w[1].start <= w[0].start {
                return bad("histogram bin starts must increase".into());
            }
        }
        if bins.last().is_some_and(|b| b.start >= MINUTES_PER_DAY) {
            return bad("histogram bins must start before minute 1440".into());
        }
        if bins.iter().any(|b| !(b.probability >= 0.0) || !b.probability.is_finite()) {
            return bad("histogram probabilities must be >= 0".into());
        }
        let total: f64 = bins.iter().map(|b| b.probability).sum();
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("histogram probabilities sum to {total}, not 1"));
        }
        Ok(Self { bins })
    }

    pub fn bins(&self) -> &[HistBin] {
        &self.bins
    }

    fn bin_end(&self, i: usize) -> u32 {
        self.bins.get(i + 1).map_or(MINUTES_PER_DAY, |b| b.start)
    }

    /// Probability of each minute of the day.
    pub fn minute_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; MINUTES_PER_DAY as usize];
        for (i, b) in self.bins.iter().enumerate() {
            let end = self.bin_end(i);
            let per = b.probability / (end - b.start) as f64;
            for m in b.start..end {
                w[m as usize] = per;
            }
        }
        w
    }

    /// Mass on the half-open minute range `[start, end)`.
    pub fn mass_between(&self, start: u32, end: u32) -> f64 {
        let mut total = 0.0;
        for (i, b) in self.bins.iter().enumerate() {
            let (lo, hi) = (b.start.max(start), self.bin_end(i).min(end));
            if hi > lo {
                total += b.probability * (hi - lo) as f64 / (self.bin_end(i) - b.start) as f64;
            }
        }
        total
    }

    /// Reads `bin_start_minute,probability` rows.
    pub fn load_csv(path: &Path) -> Result<Self, ScenarioError> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| ScenarioError::Schema {
                file: path.display().to_string(),
                row: 0,
                message: e.to_string(),
            })?;
        let mut bins = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let schema = |message: String| ScenarioError::Schema {
                file: path.display().to_string(),
                row: i + 2,
                message,
            };
            let rec = rec.map_err(|e| schema(e.to_string()))?;
            let start = rec
                .get(0)
                .and_then(|s| s.parse::<u32>().ok())
                .ok_or_else(|| schema("bad bin_start_minute".into()))?;
            let probability = rec
                .get(1)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| schema("bad probability".into()))?;
            bins.push(HistBin { start, probability });
        }
        Self::new(bins).map_err(|e| ScenarioError::Schema {
            file: path.display().to_string(),
            row: 0,
            message: e.to_string(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TripState {
    Waiting,
    Onboard,
    Served,
    Abandoned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripRequest {
    pub id: u32,
    pub origin: String,
    pub destination: String,
    /// Zone indices in skim order.
    pub o: usize,
    pub d: usize,
    pub request_minute: u32,
    pub willing_to_share: bool,
    pub state: TripState,
    pub wait_minutes: Option<f64>,
    pub direct_time: f64,
    pub direct_dist: f64,
    pub pooled: bool,
    pub vehicle: Option<u32>,
    pub pickup_minute: Option<f64>,
    pub dropoff_minute: Option<f64>,
}

impl TripRequest {
    pub fn is_intrazonal(&self) -> bool {
        self.o == self.d
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandParams {
    pub mp: f64,
    pub ws: f64,
    pub histogram: DepartureHistogram,
    pub intrazonal_factor: f64,
    pub intrazonal_speed_mph: f64,
}

impl DemandParams {
    pub fn new(mp: f64, ws: f64) -> Self {
        Self {
            mp,
            ws,
            histogram: default_departure_histogram(),
            intrazonal_factor: DEFAULT_INTRAZONAL_FACTOR,
            intrazonal_speed_mph: DEFAULT_INTRAZONAL_SPEED_MPH,
        }
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        if !(self.mp > 0.0 && self.mp <= 1.0) {
            return Err(ConfigError::Invalid(format!("mp = {} must lie in (0, 1]", self.mp)));
        }
        if !(0.0..=1.0).contains(&self.ws) {
            return Err(ConfigError::Invalid(format!("ws = {} must lie in [0, 1]", self.ws)));
        }
        if !(self.intrazonal_factor >= 0.0) || !(self.intrazonal_speed_mph > 0.0) {
            return Err(ConfigError::Invalid(
                "intrazonal factor must be >= 0 and speed > 0".into(),
            ));
        }
        DepartureHistogram::new(self.histogram.bins.clone()).map(|_| ())
    }
}

/// Draws one day of trip requests. Deterministic for a fixed seed.
pub fn synthesize_trips(
    scenario: &Scenario,
    skims: &SkimSet,
    params: &DemandParams,
    seed: u64,
) -> Result<Vec<TripRequest>, ConfigError> {
    params.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let minute_w = params.histogram.minute_weights();
    let areas: Vec<f64> = skims
        .zone_ids()
        .iter()
        .map(|id| {
            scenario
                .zones
                .iter()
                .find(|z| &z.id == id)
                .map_or(0.0, |z| z.area)
        })
        .collect();

    let mut drafts: Vec<(u32, usize, usize, bool)> = Vec::new();
    for matrix in &scenario.od {
        let minutes: Vec<u32> = scenario
            .periods
            .windows
            .iter()
            .filter(|w| w.id == matrix.period)
            .flat_map(|w| w.start..w.end)
            .collect();
        if minutes.is_empty() {
            return Err(ConfigError::Invalid(format!(
                "period {} has no minutes",
                matrix.period
            )));
        }
        let weights: Vec<f64> = minutes.iter().map(|&m| minute_w[m as usize]).collect();
        let picker = WeightedIndex::new(&weights).ok();
        for e in &matrix.entries {
            let lambda = params.mp * e.mean;
            if lambda <= 0.0 {
                continue;
            }
            let o = skims.zone(&e.origin).map_err(|err| ConfigError::Invalid(err.to_string()))?;
            let d = skims
                .zone(&e.destination)
                .map_err(|err| ConfigError::Invalid(err.to_string()))?;
            let poisson = Poisson::new(lambda).map_err(|err| ConfigError::Invalid(err.to_string()))?;
            let count = poisson.sample(&mut rng) as u64;
            for _ in 0..count {
                let k = match &picker {
                    Some(p) => p.sample(&mut rng),
                    None => rng.random_range(0..minutes.len()),
                };
                let ws = rng.random_bool(params.ws);
                drafts.push((minutes[k], o, d, ws));
            }
        }
    }
    drafts.sort_by_key(|t| t.0);
    Ok(drafts
        .into_iter()
        .enumerate()
        .map(|(i, (minute, o, d, ws))| new_request(skims, params, areas[o], i as u32, o, d, minute, ws))
        .collect())
}

#[allow(clippy::too_many_arguments)]
fn new_request(
    skims: &SkimSet,
    params: &DemandParams,
    origin_area: f64,
    id: u32,
    o: usize,
    d: usize,
    minute: u32,
    ws: bool,
) -> TripRequest {
    let (direct_time, direct_dist) = if o == d {
        let dist = params.intrazonal_factor * origin_area.sqrt();
        (dist / params.intrazonal_speed_mph * 60.0, dist)
    } else {
        (skims.time(skims.period_index(minute), o, d), skims.dist(o, d))
    };
    let zone_ids = skims.zone_ids();
    TripRequest {
        id,
        origin: zone_ids[o].clone(),
        destination: zone_ids[d].clone(),
        o,
        d,
        request_minute: minute,
        willing_to_share: ws,
        state: TripState::Waiting,
        wait_minutes: None,
        direct_time,
        direct_dist,
        pooled: false,
        vehicle: None,
        pickup_minute: None,
        dropoff_minute: None,
    }
}

/// Explicit request list from `(origin, destination, minute, willing_to_share)`
/// tuples, sorted and numbered like [`synthesize_trips`] output.
pub fn build_trips(
    scenario: &Scenario,
    skims: &SkimSet,
    params: &DemandParams,
    specs: &[(&str, &str, u32, bool)],
) -> Result<Vec<TripRequest>, ConfigError> {
    let mut drafts = Vec::with_capacity(specs.len());
    for &(o, d, minute, ws) in specs {
        let oi = skims.zone(o).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let di = skims.zone(d).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if minute >= MINUTES_PER_DAY {
            return Err(ConfigError::Invalid(format!("minute {minute} outside the day")));
        }
        let area = scenario.zones.iter().find(|z| z.id == o).map_or(0.0, |z| z.area);
        drafts.push((minute, oi, di, ws, area));
    }
    drafts.sort_by_key(|t| t.0);
    Ok(drafts
        .into_iter()
        .enumerate()
        .map(|(i, (m, o, d, ws, area))| new_request(skims, params, area, i as u32, o, d, m, ws))
        .collect())
}

/// Writes the audit table `id,o,d,minute,ws_flag`.
pub fn write_trips_csv(trips: &[TripRequest], path: &Path) -> Result<(), ScenarioError> {
    let err = |e: csv::Error| ScenarioError::Schema {
        file: path.display().to_string(),
        row: 0,
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(["id", "o", "d", "minute", "ws_flag"]).map_err(err)?;
    for t in trips {
        w.write_record([
            t.id.to_string(),
            t.origin.clone(),
            t.destination.clone(),
            t.request_minute.to_string(),
            (t.willing_to_share as u8).to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })
}
