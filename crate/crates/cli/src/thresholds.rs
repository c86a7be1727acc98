//! Robustness of the models to the intra-city trip share cut-off.
//!
//! The baseline models are fitted on cities above the configured share
//! threshold. For every other threshold the cities above it are taken, the
//! baseline models predict their responses (RMSE), and the baseline
//! variables are refitted on that subset with 95% confidence intervals.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use savsim_analytics::stats::{ols, Column, DesignTable, INTERCEPT};

use crate::batch::CityRecord;
use crate::config::AnalysisConfig;
use crate::regress::{fit_bundle, is_control, response_value, RegressionBundle};

pub const CI_LEVEL: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub threshold: f64,
    pub response: String,
    pub n_cities: usize,
    pub rmse: Option<f64>,
    pub refit_adj_r2: Option<f64>,
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCoefficient {
    pub threshold: f64,
    pub response: String,
    pub variable: String,
    pub estimate: f64,
    pub std_error: f64,
    pub p: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdStudy {
    pub baseline_threshold: f64,
    pub baseline: RegressionBundle,
    pub rows: Vec<ThresholdRow>,
    pub coefficients: Vec<ThresholdCoefficient>,
}

/// Cities eligible at some threshold: fully measured with enough zones.
fn eligible<'a>(records: &'a [CityRecord], analysis: &AnalysisConfig) -> Vec<&'a CityRecord> {
    records
        .iter()
        .filter(|r| r.is_complete() && r.n_zones.is_some_and(|n| n > analysis.selection.min_zones))
        .collect()
}

/// Design row of one city for a fitted model: intercept, its region
/// indicator and the model's variables, as named columns.
fn prediction_row(table: &DesignTable, row: usize, vars: &[String]) -> (Vec<String>, Vec<f64>) {
    let mut names = vec![INTERCEPT.to_string(), format!("region_{}", table.regions[row])];
    let mut values = vec![1.0, 1.0];
    for v in vars {
        names.push(v.clone());
        values.push(table.column(v).map_or(f64::NAN, |c| c.values[row]));
    }
    (names, values)
}

pub fn run_threshold_study(records: &[CityRecord], thresholds: &[f64], analysis: &AnalysisConfig, master: u64) -> ThresholdStudy {
    let pool = eligible(records, analysis);
    let baseline_threshold = analysis.selection.min_share;
    let share = |r: &CityRecord| r.intra_share.unwrap_or(f64::NAN);
    let base_records: Vec<CityRecord> = pool
        .iter()
        .filter(|r| share(r) > baseline_threshold)
        .map(|r| CityRecord {
            accepted: true,
            ..(*r).clone()
        })
        .collect();
    let (ws, mp, rep) = records.first().map_or((f64::NAN, f64::NAN, 0), |r| (r.ws, r.mp, r.replicate));
    let baseline = fit_bundle(&base_records, analysis, master, (ws, mp, rep));

    let mut rows = Vec::new();
    let mut coefficients = Vec::new();
    for &t in thresholds {
        let subset: Vec<&CityRecord> = pool.iter().copied().filter(|r| share(r) > t).collect();
        for model in &baseline.models {
            let mut row = ThresholdRow {
                threshold: t,
                response: model.response.clone(),
                n_cities: 0,
                rmse: None,
                refit_adj_r2: None,
                skipped: None,
            };
            let Some(reg) = &model.regression else {
                row.skipped = Some(format!("no baseline model: {}", model.error.clone().unwrap_or_default()));
                rows.push(row);
                continue;
            };
            let with_y: Vec<&CityRecord> =
                subset.iter().copied().filter(|r| response_value(&model.response, r).is_some()).collect();
            row.n_cities = with_y.len();
            if with_y.is_empty() {
                row.skipped = Some(format!("no city above share {t}"));
                rows.push(row);
                continue;
            }
            let y: Vec<f64> = with_y.iter().map(|r| response_value(&model.response, r).expect("filtered")).collect();
            let Some(lookup) = variables_table(&with_y, &reg.selected) else {
                row.skipped = Some("baseline variables unavailable for this subset".into());
                rows.push(row);
                continue;
            };
            let predictions: Vec<f64> = (0..lookup.n())
                .map(|i| {
                    let (names, values) = prediction_row(&lookup, i, &reg.selected);
                    reg.fit.predict(&names, &DMatrix::from_row_slice(1, values.len(), &values))[0]
                })
                .collect();
            let sse: f64 = predictions.iter().zip(&y).map(|(p, v)| (p - v).powi(2)).sum();
            row.rmse = Some((sse / y.len() as f64).sqrt());
            match lookup.design(&reg.selected).map_err(|e| e.to_string()).and_then(|(names, x)| {
                ols(&names, &x, &y).map_err(|e| e.to_string())
            }) {
                Ok(fit) => {
                    row.refit_adj_r2 = Some(fit.adj_r2);
                    for (i, name) in fit.names.iter().enumerate() {
                        if is_control(name) {
                            continue;
                        }
                        let (lo, hi) = fit.confidence_interval(name, CI_LEVEL).unwrap_or((f64::NAN, f64::NAN));
                        coefficients.push(ThresholdCoefficient {
                            threshold: t,
                            response: model.response.clone(),
                            variable: name.clone(),
                            estimate: fit.coefficients[i],
                            std_error: fit.std_errors[i],
                            p: fit.p_values[i],
                            ci_low: lo,
                            ci_high: hi,
                        });
                    }
                }
                Err(e) => row.skipped = Some(format!("refit skipped: {e}")),
            }
            rows.push(row);
        }
    }
    ThresholdStudy {
        baseline_threshold,
        baseline,
        rows,
        coefficients,
    }
}

/// The given cities with the named model variables. A `Log` suffix marks
/// the natural log of the raw urban-form measure, as the baseline
/// transform produced it.
fn variables_table(records: &[&CityRecord], vars: &[String]) -> Option<DesignTable> {
    let mut columns = Vec::new();
    for v in vars {
        let raw = v.strip_suffix("Log").unwrap_or(v);
        let logged = raw.len() != v.len();
        let values: Option<Vec<f64>> = records
            .iter()
            .map(|r| {
                let x = r.urbanform.as_ref()?.get(raw)?;
                match logged {
                    true => (x > 0.0).then(|| x.ln()),
                    false => Some(x),
                }
            })
            .collect();
        columns.push(Column::new(v.clone(), values?));
    }
    DesignTable::new(
        records.iter().map(|r| r.city.clone()).collect(),
        records.iter().map(|r| r.region.clone()).collect(),
        columns,
    )
    .ok()
}
