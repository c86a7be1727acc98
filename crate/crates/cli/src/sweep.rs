//! Sensitivity sweep over willingness to share (WS) and market
//! penetration (MP).
//!
//! Cells vary one rate at a time around the baseline: WS values at the
//! baseline MP, then MP values at the baseline WS. Every cell refits the
//! three models, and each coefficient shared with the same replicate's
//! baseline model is compared with a two-estimate normal test.

use std::collections::BTreeMap;

use anyhow::{bail, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use savsim_analytics::stats::coeff_ttest;
use savsim_core::SimConfig;

use crate::batch::{simulate_prepared, CityRecord, PreparedCity};
use crate::config::AnalysisConfig;
use crate::regress::{fit_bundle, is_control, RegressionBundle};

pub const BASELINE_WS: f64 = 0.275;
pub const BASELINE_MP: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub ws_values: Vec<f64>,
    pub mp_values: Vec<f64>,
    pub share_thresholds: Vec<f64>,
    pub replicates: Vec<u64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            ws_values: vec![0.10, 0.20, 0.275, 0.30, 0.40, 0.50],
            mp_values: vec![0.25, 0.50, 0.75, 1.00],
            share_thresholds: vec![0.20, 0.25, 0.30, 0.35, 0.40, 0.45],
            replicates: vec![0],
        }
    }
}

impl SweepSpec {
    /// Only the baseline cell.
    pub fn baseline_only() -> Self {
        Self {
            ws_values: Vec::new(),
            mp_values: Vec::new(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(v) = self.ws_values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            bail!("sweep ws value {v} must lie in [0, 1]");
        }
        if let Some(v) = self.mp_values.iter().find(|v| !(**v > 0.0 && **v <= 1.0)) {
            bail!("sweep mp value {v} must lie in (0, 1]");
        }
        if let Some(v) = self.share_thresholds.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            bail!("share threshold {v} must lie in [0, 1]");
        }
        if self.replicates.is_empty() {
            bail!("sweep needs at least one replicate");
        }
        Ok(())
    }

    /// `(ws, mp)` cells, baseline first, without duplicates.
    pub fn cells(&self) -> Vec<(f64, f64)> {
        let mut out = vec![(BASELINE_WS, BASELINE_MP)];
        let candidates = self
            .ws_values
            .iter()
            .map(|&ws| (ws, BASELINE_MP))
            .chain(self.mp_values.iter().map(|&mp| (BASELINE_WS, mp)));
        for c in candidates {
            if !out.contains(&c) {
                out.push(c);
            }
        }
        out
    }
}

/// Coefficient difference between a cell and its replicate's baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub ws: f64,
    pub mp: f64,
    pub replicate: u64,
    pub response: String,
    pub variable: String,
    pub baseline_estimate: f64,
    pub baseline_se: f64,
    pub estimate: f64,
    pub se: f64,
    pub statistic: Option<f64>,
    pub p: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    /// Per-city rows of every cell, cells in order.
    pub records: Vec<CityRecord>,
    pub bundles: Vec<RegressionBundle>,
    pub comparisons: Vec<Comparison>,
}

/// Compares every urban-form coefficient of `cell` also selected in the
/// same response's baseline model.
pub fn compare_bundles(baseline: &RegressionBundle, cell: &RegressionBundle) -> Vec<Comparison> {
    let mut out = Vec::new();
    for m in &cell.models {
        let (Some(reg), Some(base)) = (&m.regression, baseline.model(&m.response).and_then(|b| b.regression.as_ref()))
        else {
            continue;
        };
        for v in base.selected.iter().filter(|v| !is_control(v) && reg.selected.contains(v)) {
            let (b1, se1, _) = base.fit.coefficient(v).expect("selected variables are fitted");
            let (b2, se2, _) = reg.fit.coefficient(v).expect("selected variables are fitted");
            let test = coeff_ttest(b1, se1, b2, se2);
            out.push(Comparison {
                ws: cell.ws,
                mp: cell.mp,
                replicate: cell.replicate,
                response: m.response.clone(),
                variable: v.clone(),
                baseline_estimate: b1,
                baseline_se: se1,
                estimate: b2,
                se: se2,
                statistic: test.as_ref().ok().map(|t| t.0),
                p: test.as_ref().ok().map(|t| t.1),
                error: test.err().map(|e| e.to_string()),
            });
        }
    }
    out
}

/// Simulates the accepted prepared cities in every cell and replicate, then
/// fits and compares models. `sim` supplies the non-rate settings.
pub fn run_sweep(
    cities: &[PreparedCity],
    sim: &SimConfig,
    spec: &SweepSpec,
    analysis: &AnalysisConfig,
    master: u64,
) -> Result<SweepOutcome> {
    spec.validate()?;
    let cities: Vec<&PreparedCity> = cities.iter().filter(|c| c.record.accepted).collect();
    let cells = spec.cells();
    let units: Vec<(u64, (f64, f64))> =
        spec.replicates.iter().flat_map(|&r| cells.iter().map(move |&c| (r, c))).collect();
    let jobs: Vec<(usize, &PreparedCity)> =
        (0..units.len()).flat_map(|u| cities.iter().map(move |&c| (u, c))).collect();
    let simulated: Vec<(usize, CityRecord)> = jobs
        .par_iter()
        .map(|&(u, city)| {
            let (r, (ws, mp)) = units[u];
            let cfg = SimConfig { ws, mp, ..sim.clone() };
            (u, simulate_prepared(city, &cfg, master, r).0)
        })
        .collect();
    let mut per_unit: Vec<Vec<CityRecord>> = vec![Vec::new(); units.len()];
    for (u, rec) in simulated {
        per_unit[u].push(rec);
    }
    let bundles: Vec<RegressionBundle> = units
        .par_iter()
        .zip(per_unit.par_iter())
        .map(|(&(r, (ws, mp)), recs)| fit_bundle(recs, analysis, master, (ws, mp, r)))
        .collect();
    let baselines: BTreeMap<u64, &RegressionBundle> = bundles
        .iter()
        .filter(|b| (b.ws, b.mp) == (BASELINE_WS, BASELINE_MP))
        .map(|b| (b.replicate, b))
        .collect();
    let comparisons = bundles
        .iter()
        .filter(|b| (b.ws, b.mp) != (BASELINE_WS, BASELINE_MP))
        .flat_map(|b| compare_bundles(baselines[&b.replicate], b))
        .collect();
    Ok(SweepOutcome {
        records: per_unit.into_iter().flatten().collect(),
        bundles,
        comparisons,
    })
}
