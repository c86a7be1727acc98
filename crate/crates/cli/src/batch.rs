//! Per-city work: validate, align to the city boundary, simulate on the
//! aligned zones, then measure performance and urban form.
//!
//! A failing city becomes a row with its `error` set; the rest of the batch
//! carries on. Results keep input order whichever worker ran them.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use savsim_analytics::geoalign::{align_boundary, intra_city_trip_share, select_cities, CityCandidate};
use savsim_analytics::urbanform::{build_urbanform_vector, UrbanFormVector};
use savsim_core::scenario::{scenario_dirs, Point};
use savsim_core::seed::derive_path;
use savsim_core::{
    build_skims, compute_performance, load_scenario, run_simulation, validate_scenario, PerformanceReport, Scenario,
    SimConfig, SimulationResult, SkimSet,
};

use crate::config::AnalysisConfig;

/// Violations quoted in a validation error message before truncating.
const MAX_QUOTED_VIOLATIONS: usize = 5;

/// A scenario as loaded from disk, or the reason it could not be.
#[derive(Debug, Clone)]
pub struct CityInput {
    pub name: String,
    pub scenario: Result<Scenario, String>,
}

impl CityInput {
    pub fn from_scenario(s: Scenario) -> Self {
        Self {
            name: s.name.clone(),
            scenario: Ok(s),
        }
    }
}

/// Loads every scenario under the given paths. Each path is either a
/// scenario directory or a directory of scenario directories.
pub fn load_inputs(paths: &[PathBuf]) -> Result<Vec<CityInput>> {
    let mut out = Vec::new();
    for root in paths {
        let dirs = scenario_dirs(root)?;
        if dirs.is_empty() {
            bail!("no scenario directories under {}", root.display());
        }
        for dir in dirs {
            out.push(load_input(&dir));
        }
    }
    Ok(out)
}

fn load_input(dir: &Path) -> CityInput {
    let fallback = dir.file_name().map_or_else(|| dir.display().to_string(), |n| n.to_string_lossy().into_owned());
    match load_scenario(dir) {
        Ok(s) => CityInput::from_scenario(s),
        Err(e) => CityInput {
            name: fallback,
            scenario: Err(e.to_string()),
        },
    }
}

/// One row of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CityRecord {
    pub city: String,
    pub region: String,
    pub location: Option<Point>,
    /// Zones kept by boundary alignment.
    pub n_zones: Option<usize>,
    pub coverage: Option<f64>,
    pub spill: Option<f64>,
    /// Share of OD trips touching the kept zones that stay within them.
    pub intra_share: Option<f64>,
    /// Whether the city passes the selection criteria.
    pub accepted: bool,
    pub ws: f64,
    pub mp: f64,
    pub replicate: u64,
    /// Simulation seed, once a simulation was attempted.
    pub seed: Option<u64>,
    pub performance: Option<PerformanceReport>,
    pub urbanform: Option<UrbanFormVector>,
    pub error: Option<String>,
}

impl CityRecord {
    /// A row holding only the city name.
    pub fn new(city: &str) -> Self {
        Self {
            city: city.to_string(),
            region: String::new(),
            location: None,
            n_zones: None,
            coverage: None,
            spill: None,
            intra_share: None,
            accepted: false,
            ws: f64::NAN,
            mp: f64::NAN,
            replicate: 0,
            seed: None,
            performance: None,
            urbanform: None,
            error: None,
        }
    }

    fn failed(city: &str, error: String) -> Self {
        Self {
            error: Some(error),
            ..Self::new(city)
        }
    }

    /// Usable as a regression observation.
    pub fn is_complete(&self) -> bool {
        self.error.is_none() && self.performance.is_some() && self.urbanform.is_some()
    }
}

/// Seed label of a sweep cell, e.g. `cell:ws=0.275,mp=1`.
pub fn cell_label(ws: f64, mp: f64) -> String {
    format!("cell:ws={ws},mp={mp}")
}

/// Simulation seed of one city in one cell and replicate.
pub fn run_seed(master: u64, city: &str, ws: f64, mp: f64, replicate: u64) -> u64 {
    derive_path(
        master,
        &[&format!("city:{city}"), &cell_label(ws, mp), &format!("replicate:{replicate}")],
    )
}

/// A city restricted to its aligned zones, ready to simulate any number of
/// times. `record` holds alignment and urban form but no performance.
#[derive(Debug, Clone)]
pub struct PreparedCity {
    pub record: CityRecord,
    pub scenario: Scenario,
    pub skims: SkimSet,
}

fn validation_message(s: &Scenario) -> Option<String> {
    let report = validate_scenario(s);
    if report.is_empty() {
        return None;
    }
    let quoted: Vec<String> = report
        .violations
        .iter()
        .take(MAX_QUOTED_VIOLATIONS)
        .map(|v| format!("{} {}: {}", v.code, v.subject, v.message))
        .collect();
    let more = report.violations.len().saturating_sub(MAX_QUOTED_VIOLATIONS);
    let tail = if more > 0 { format!("; {more} more") } else { String::new() };
    Some(format!("invalid scenario: {}{tail}", quoted.join("; ")))
}

fn prepare(s: &Scenario, analysis: &AnalysisConfig) -> Result<PreparedCity> {
    if let Some(msg) = validation_message(s) {
        bail!(msg);
    }
    // A scenario without a city outline is taken as already aligned.
    let (zones, coverage, spill) = if s.geometry.city.is_empty() {
        (s.zones.iter().map(|z| z.id.clone()).collect::<Vec<_>>(), None, None)
    } else {
        let a = align_boundary(&s.geometry, analysis.overlap_threshold)?;
        (a.zones, Some(a.coverage), Some(a.spill))
    };
    if zones.is_empty() {
        bail!("no zone reaches overlap threshold {}", analysis.overlap_threshold);
    }
    let share = intra_city_trip_share(&s.od, &zones)?;
    let row = select_cities(
        &[CityCandidate {
            city: s.name.clone(),
            n_zones: zones.len(),
            share,
        }],
        &analysis.selection,
    );
    let restricted = s.restrict_to_zones(&zones);
    let skims = build_skims(&restricted.network, &restricted.periods)?;
    let urbanform = build_urbanform_vector(&restricted);
    Ok(PreparedCity {
        record: CityRecord {
            city: s.name.clone(),
            region: s.region.clone(),
            location: Some(s.location),
            n_zones: Some(zones.len()),
            coverage,
            spill,
            intra_share: Some(share),
            accepted: row[0].accepted,
            ws: f64::NAN,
            mp: f64::NAN,
            replicate: 0,
            seed: None,
            performance: None,
            urbanform: Some(urbanform),
            error: None,
        },
        scenario: restricted,
        skims,
    })
}

/// Prepares one city, turning any failure into an error row.
pub fn prepare_city(input: &CityInput, analysis: &AnalysisConfig) -> std::result::Result<PreparedCity, CityRecord> {
    let s = input
        .scenario
        .as_ref()
        .map_err(|e| CityRecord::failed(&input.name, format!("load failed: {e}")))?;
    prepare(s, analysis).map_err(|e| {
        let mut rec = CityRecord::failed(&s.name, format!("{e:#}"));
        rec.region = s.region.clone();
        rec.location = Some(s.location);
        rec
    })
}

/// Prepares every input in parallel. Later inputs reusing an earlier
/// city name become error rows.
pub fn prepare_all(inputs: &[CityInput], analysis: &AnalysisConfig) -> Vec<std::result::Result<PreparedCity, CityRecord>> {
    let mut seen = HashSet::new();
    let duplicate: Vec<bool> = inputs.iter().map(|c| !seen.insert(c.name.clone())).collect();
    inputs
        .par_iter()
        .zip(duplicate.par_iter())
        .map(|(input, &dup)| {
            if dup {
                Err(CityRecord::failed(&input.name, "duplicate city name".into()))
            } else {
                prepare_city(input, analysis)
            }
        })
        .collect()
}

/// Simulates a prepared city. The returned record carries the
/// performance report or the error.
pub fn simulate_prepared(
    city: &PreparedCity,
    sim: &SimConfig,
    master: u64,
    replicate: u64,
) -> (CityRecord, Option<SimulationResult>) {
    let mut rec = city.record.clone();
    rec.ws = sim.ws;
    rec.mp = sim.mp;
    rec.replicate = replicate;
    let seed = run_seed(master, &rec.city, sim.ws, sim.mp, replicate);
    rec.seed = Some(seed);
    let outcome = run_simulation(&city.scenario, &city.skims, sim, seed)
        .map_err(|e| anyhow!(e))
        .and_then(|r| Ok((compute_performance(&r)?, r)));
    match outcome {
        Ok((perf, result)) => {
            rec.performance = Some(perf);
            (rec, Some(result))
        }
        Err(e) => {
            rec.error = Some(format!("simulation failed: {e:#}"));
            (rec, None)
        }
    }
}

/// One simulated city; `result` is kept only when requested.
#[derive(Debug, Clone)]
pub struct CityRun {
    pub record: CityRecord,
    pub result: Option<SimulationResult>,
}

/// Prepares and simulates every input city (replicate 0).
pub fn run_batch(
    inputs: &[CityInput],
    sim: &SimConfig,
    analysis: &AnalysisConfig,
    master: u64,
    keep_results: bool,
) -> (Vec<CityRun>, Vec<PreparedCity>) {
    let prepared = prepare_all(inputs, analysis);
    let runs = prepared
        .par_iter()
        .map(|p| match p {
            Ok(city) => {
                let (record, result) = simulate_prepared(city, sim, master, 0);
                CityRun {
                    record,
                    result: result.filter(|_| keep_results),
                }
            }
            Err(rec) => {
                let mut record = rec.clone();
                record.ws = sim.ws;
                record.mp = sim.mp;
                CityRun { record, result: None }
            }
        })
        .collect();
    (runs, prepared.into_iter().filter_map(|p| p.ok()).collect())
}
