//! CSV and JSON writers for the result tables.

use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use crate::batch::CityRecord;

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for r in rows {
        w.serialize(r).with_context(|| format!("writing {}", path.display()))?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}

/// Flat performance row of one city in one cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerformanceRow {
    pub city: String,
    pub region: String,
    pub ws: f64,
    pub mp: f64,
    pub replicate: u64,
    pub seed: Option<u64>,
    pub accepted: bool,
    pub fleet_size: Option<u32>,
    pub generated: Option<usize>,
    pub served: Option<usize>,
    pub abandoned: Option<usize>,
    pub still_waiting: Option<usize>,
    pub sharers_generated: Option<usize>,
    pub sharers_pooled: Option<usize>,
    pub served_trips_per_sav: Option<f64>,
    pub pct_pooled_trips: Option<f64>,
    pub pct_extra_vmt: Option<f64>,
    pub empty_vmt: Option<f64>,
    pub occupied_vmt: Option<f64>,
    pub demanded_vmt: Option<f64>,
    pub demanded_vmt_all: Option<f64>,
    pub flags: String,
    pub error: String,
}

impl From<&CityRecord> for PerformanceRow {
    fn from(r: &CityRecord) -> Self {
        let p = r.performance.as_ref();
        Self {
            city: r.city.clone(),
            region: r.region.clone(),
            ws: r.ws,
            mp: r.mp,
            replicate: r.replicate,
            seed: r.seed,
            accepted: r.accepted,
            fleet_size: p.map(|p| p.fleet_size),
            generated: p.map(|p| p.generated_count),
            served: p.map(|p| p.served_count),
            abandoned: p.map(|p| p.abandoned_count),
            still_waiting: p.map(|p| p.still_waiting_count),
            sharers_generated: p.map(|p| p.sharers_generated),
            sharers_pooled: p.map(|p| p.sharers_pooled),
            served_trips_per_sav: p.and_then(|p| p.served_trips_per_sav),
            pct_pooled_trips: p.and_then(|p| p.pct_pooled_trips),
            pct_extra_vmt: p.and_then(|p| p.pct_extra_vmt),
            empty_vmt: p.map(|p| p.empty_vmt),
            occupied_vmt: p.map(|p| p.occupied_vmt),
            demanded_vmt: p.map(|p| p.demanded_vmt),
            demanded_vmt_all: p.map(|p| p.demanded_vmt_all),
            flags: p.map_or(String::new(), |p| p.flags.join(";")),
            error: r.error.clone().unwrap_or_default(),
        }
    }
}

/// Boundary alignment and selection outcome of one city.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionOut {
    pub city: String,
    pub region: String,
    pub n_zones: Option<usize>,
    pub coverage: Option<f64>,
    pub spill: Option<f64>,
    pub intra_share: Option<f64>,
    pub accepted: bool,
    pub error: String,
}

impl From<&CityRecord> for SelectionOut {
    fn from(r: &CityRecord) -> Self {
        Self {
            city: r.city.clone(),
            region: r.region.clone(),
            n_zones: r.n_zones,
            coverage: r.coverage,
            spill: r.spill,
            intra_share: r.intra_share,
            accepted: r.accepted,
            error: r.error.clone().unwrap_or_default(),
        }
    }
}

pub fn write_performance(path: &Path, records: &[CityRecord]) -> Result<()> {
    write_csv(path, &records.iter().map(PerformanceRow::from).collect::<Vec<_>>())
}

pub fn write_selection(path: &Path, records: &[CityRecord]) -> Result<()> {
    write_csv(path, &records.iter().map(SelectionOut::from).collect::<Vec<_>>())
}

pub fn write_urbanform(path: &Path, records: &[CityRecord]) -> Result<()> {
    let rows: Vec<_> = records.iter().filter_map(|r| r.urbanform.clone()).collect();
    savsim_analytics::urbanform::write_urbanform_csv(&rows, path).with_context(|| format!("writing {}", path.display()))
}
