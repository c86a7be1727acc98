//! Cross-city regressions of the three performance measures on urban form,
//! with Moran's I of each model's residuals over city locations.

use anyhow::Result;
use serde::{Deserialize, Serialize};

use savsim_analytics::stats::{
    morans_test, stepwise_select, transform_variables, Column, DesignTable, MoranResult, RegressionResult,
    TransformConfig, INTERCEPT,
};
use savsim_core::scenario::Point;
use savsim_core::seed::derive_path;

use crate::batch::{cell_label, CityRecord};
use crate::config::AnalysisConfig;

pub const TRIPS_PER_SAV: &str = "servedTripsPerSav";
pub const PCT_POOLED: &str = "pctPooledTrips";
pub const PCT_EXTRA_VMT: &str = "pctExtraVmt";
pub const PCT_EXTRA_VMT_LOG: &str = "pctExtraVmtLog";

/// Cities entering the regressions: accepted and fully measured.
pub fn regression_sample(records: &[CityRecord]) -> Vec<&CityRecord> {
    records.iter().filter(|r| r.accepted && r.is_complete()).collect()
}

/// Urban-form design table of the given cities: columns with missing
/// values dropped, heavy-tailed columns logged.
pub fn design_table(records: &[&CityRecord], transform: &TransformConfig) -> Result<DesignTable> {
    let forms: Vec<_> = records
        .iter()
        .map(|r| r.urbanform.as_ref().expect("complete records carry urban form"))
        .collect();
    let names: Vec<String> = forms.first().map_or_else(Vec::new, |f| f.columns().into_iter().map(|(n, _)| n).collect());
    let columns = names
        .iter()
        .map(|n| Column::new(n.clone(), forms.iter().map(|f| f.get(n).unwrap_or(f64::NAN)).collect()))
        .collect();
    let table = DesignTable::new(
        records.iter().map(|r| r.city.clone()).collect(),
        records.iter().map(|r| r.region.clone()).collect(),
        columns,
    )?
    .drop_incomplete();
    Ok(transform_variables(&table, transform))
}

/// A response variable over the cities of a design table. `None` marks a
/// city whose measure is undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub name: String,
    pub values: Vec<Option<f64>>,
    pub flags: Vec<String>,
}

/// The three responses. Extra VMT is logged only when every defined value
/// is strictly positive; otherwise the level is used and flagged.
pub fn responses(records: &[&CityRecord]) -> Vec<Response> {
    let perf = |f: fn(&savsim_core::PerformanceReport) -> Option<f64>| -> Vec<Option<f64>> {
        records.iter().map(|r| r.performance.as_ref().and_then(f)).collect()
    };
    let extra = perf(|p| p.pct_extra_vmt);
    let positive = extra.iter().flatten().all(|v| *v > 0.0);
    let extra_response = if positive {
        Response {
            name: PCT_EXTRA_VMT_LOG.into(),
            values: extra.iter().map(|v| v.map(f64::ln)).collect(),
            flags: Vec::new(),
        }
    } else {
        Response {
            name: PCT_EXTRA_VMT.into(),
            values: extra,
            flags: vec!["non-positive extra VMT present; level used instead of log".into()],
        }
    };
    vec![
        Response {
            name: TRIPS_PER_SAV.into(),
            values: perf(|p| p.served_trips_per_sav),
            flags: Vec::new(),
        },
        Response {
            name: PCT_POOLED.into(),
            values: perf(|p| p.pct_pooled_trips),
            flags: Vec::new(),
        },
        extra_response,
    ]
}

/// Value of a named response for one record, using the same transform.
pub fn response_value(name: &str, record: &CityRecord) -> Option<f64> {
    let p = record.performance.as_ref()?;
    match name {
        TRIPS_PER_SAV => p.served_trips_per_sav,
        PCT_POOLED => p.pct_pooled_trips,
        PCT_EXTRA_VMT => p.pct_extra_vmt,
        PCT_EXTRA_VMT_LOG => p.pct_extra_vmt.filter(|v| *v > 0.0).map(f64::ln),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub response: String,
    pub cities: Vec<String>,
    pub regression: Option<RegressionResult>,
    pub moran: Option<MoranResult>,
    pub error: Option<String>,
    pub moran_error: Option<String>,
    pub flags: Vec<String>,
}

/// The three models of one simulation cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionBundle {
    pub ws: f64,
    pub mp: f64,
    pub replicate: u64,
    pub cities: Vec<String>,
    pub log_transformed: Vec<String>,
    pub flagged: Vec<(String, String)>,
    pub models: Vec<ModelReport>,
    pub error: Option<String>,
}

impl RegressionBundle {
    pub fn model(&self, response: &str) -> Option<&ModelReport> {
        self.models.iter().find(|m| m.response == response)
    }
}

fn fit_model(
    table: &DesignTable,
    locations: &[Point],
    response: &Response,
    analysis: &AnalysisConfig,
    moran_seed: u64,
) -> ModelReport {
    let rows: Vec<usize> = (0..table.n()).filter(|&i| response.values[i].is_some()).collect();
    let sub = table.subset(&rows);
    let y: Vec<f64> = rows.iter().map(|&i| response.values[i].expect("filtered")).collect();
    let mut report = ModelReport {
        response: response.name.clone(),
        cities: sub.cities.clone(),
        regression: None,
        moran: None,
        error: None,
        moran_error: None,
        flags: response.flags.clone(),
    };
    if rows.len() < table.n() {
        report.flags.push(format!("{} cities without a defined value left out", table.n() - rows.len()));
    }
    match stepwise_select(&sub, &y, &response.name, &analysis.stepwise) {
        Ok(reg) => {
            let coords: Vec<Point> = rows.iter().map(|&i| locations[i]).collect();
            let perms = (analysis.moran_permutations > 0).then_some((analysis.moran_permutations, moran_seed));
            match morans_test(&reg.fit.residuals, &coords, perms) {
                Ok(m) => report.moran = Some(m),
                Err(e) => report.moran_error = Some(e.to_string()),
            }
            report.regression = Some(reg);
        }
        Err(e) => report.error = Some(e.to_string()),
    }
    report
}

/// Fits the three response models on the regression sample of `records`.
pub fn fit_bundle(
    records: &[CityRecord],
    analysis: &AnalysisConfig,
    master: u64,
    (ws, mp, replicate): (f64, f64, u64),
) -> RegressionBundle {
    let sample = regression_sample(records);
    let mut bundle = RegressionBundle {
        ws,
        mp,
        replicate,
        cities: sample.iter().map(|r| r.city.clone()).collect(),
        log_transformed: Vec::new(),
        flagged: Vec::new(),
        models: Vec::new(),
        error: None,
    };
    let table = match design_table(&sample, &analysis.transform) {
        Ok(t) => t,
        Err(e) => {
            bundle.error = Some(format!("{e:#}"));
            return bundle;
        }
    };
    bundle.log_transformed = table.log_transformed.clone();
    bundle.flagged = table.flagged.clone();
    let locations: Vec<Point> = sample.iter().map(|r| r.location.expect("complete records have a location")).collect();
    let cell = cell_label(ws, mp);
    let rep = format!("replicate:{replicate}");
    bundle.models = responses(&sample)
        .iter()
        .map(|resp| {
            let seed = derive_path(master, &[&format!("moran:{}", resp.name), &cell, &rep]);
            fit_model(&table, &locations, resp, analysis, seed)
        })
        .collect();
    bundle
}

/// Whether a design column is a control rather than an urban-form measure.
pub fn is_control(name: &str) -> bool {
    name == INTERCEPT || name.starts_with("region_")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub ws: f64,
    pub mp: f64,
    pub replicate: u64,
    pub response: String,
    pub variable: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t: f64,
    pub p: f64,
    pub vif: Option<f64>,
    pub n: usize,
    pub adj_r2: f64,
}

pub fn coefficient_rows(bundle: &RegressionBundle) -> Vec<CoefficientRow> {
    let mut rows = Vec::new();
    for m in &bundle.models {
        let Some(reg) = &m.regression else { continue };
        let f = &reg.fit;
        for (i, name) in f.names.iter().enumerate() {
            rows.push(CoefficientRow {
                ws: bundle.ws,
                mp: bundle.mp,
                replicate: bundle.replicate,
                response: m.response.clone(),
                variable: name.clone(),
                estimate: f.coefficients[i],
                std_error: f.std_errors[i],
                t: f.t_stats[i],
                p: f.p_values[i],
                vif: reg.vif.iter().find(|(v, _)| v == name).map(|(_, x)| *x),
                n: f.n,
                adj_r2: f.adj_r2,
            });
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoranRow {
    pub ws: f64,
    pub mp: f64,
    pub replicate: u64,
    pub response: String,
    pub n: usize,
    pub i: Option<f64>,
    pub expected: Option<f64>,
    pub variance: Option<f64>,
    pub z: Option<f64>,
    pub p_normal: Option<f64>,
    pub p_permutation: Option<f64>,
    pub error: Option<String>,
}

pub fn moran_rows(bundle: &RegressionBundle) -> Vec<MoranRow> {
    bundle
        .models
        .iter()
        .map(|m| MoranRow {
            ws: bundle.ws,
            mp: bundle.mp,
            replicate: bundle.replicate,
            response: m.response.clone(),
            n: m.cities.len(),
            i: m.moran.as_ref().map(|x| x.i),
            expected: m.moran.as_ref().map(|x| x.expected),
            variance: m.moran.as_ref().and_then(|x| x.variance),
            z: m.moran.as_ref().and_then(|x| x.z),
            p_normal: m.moran.as_ref().and_then(|x| x.p_normal),
            p_permutation: m.moran.as_ref().and_then(|x| x.p_permutation),
            error: m.error.clone().or_else(|| m.moran_error.clone()),
        })
        .collect()
}
