//! Regression toolkit: moments and variable transforms, least squares with
//! region fixed effects, variance inflation, forward stepwise selection,
//! Moran's I on residuals and coefficient comparison tests.

mod ols;
mod spatial;
mod stepwise;

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

pub use ols::{ols, vif, OlsFit};
pub use spatial::{morans_i, morans_test, MoranResult};
pub use stepwise::{stepwise_select, RegressionResult, StepRecord, StepwiseConfig};

use crate::error::StatsError;

pub const INTERCEPT: &str = "(intercept)";

fn central_moments(x: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    (mean, m2 / n, m4 / n)
}

/// Excess kurtosis `m4 / m2² − 3` from population central moments.
pub fn kurtosis(x: &[f64]) -> Result<f64, StatsError> {
    if x.len() < 4 {
        return Err(StatsError::TooFewObservations { needed: 4, got: x.len() });
    }
    let (_, m2, m4) = central_moments(x);
    if !(m2 > 0.0) {
        return Err(StatsError::ZeroVariance("sample".into()));
    }
    Ok(m4 / (m2 * m2) - 3.0)
}

/// Pearson correlation; `None` when either side has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if !(saa > 0.0 && sbb > 0.0) {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KurtosisKind {
    #[default]
    Excess,
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransformConfig {
    pub kind: KurtosisKind,
    /// Columns with |kurtosis| above this are log candidates.
    pub threshold: f64,
}

impl Default for TransformConfig {
    fn default() -> Self {
        Self {
            kind: KurtosisKind::Excess,
            threshold: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformOutcome {
    Unchanged,
    Logged,
    /// Heavy-tailed but not strictly positive, so left as is.
    FlaggedNonPositive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
}

impl Column {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            values,
        }
    }
}

/// Replaces a heavy-tailed, strictly positive column by its natural log,
/// renamed with a `Log` suffix.
pub fn transform_column(col: &Column, cfg: &TransformConfig) -> (Column, TransformOutcome) {
    let Ok(excess) = kurtosis(&col.values) else {
        return (col.clone(), TransformOutcome::Unchanged);
    };
    let k = match cfg.kind {
        KurtosisKind::Excess => excess,
        KurtosisKind::Raw => excess + 3.0,
    };
    if k.abs() <= cfg.threshold {
        return (col.clone(), TransformOutcome::Unchanged);
    }
    if col.values.iter().all(|v| *v > 0.0) {
        (
            Column::new(format!("{}Log", col.name), col.values.iter().map(|v| v.ln()).collect()),
            TransformOutcome::Logged,
        )
    } else {
        (col.clone(), TransformOutcome::FlaggedNonPositive)
    }
}

/// Candidate regressors per city plus the region of each city.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignTable {
    pub cities: Vec<String>,
    pub regions: Vec<String>,
    pub columns: Vec<Column>,
    /// Original names of columns replaced by their log.
    pub log_transformed: Vec<String>,
    /// Columns left untransformed or dropped, with the reason.
    pub flagged: Vec<(String, String)>,
}

impl DesignTable {
    pub fn new(cities: Vec<String>, regions: Vec<String>, columns: Vec<Column>) -> Result<Self, StatsError> {
        let n = cities.len();
        if regions.len() != n {
            return Err(StatsError::Dimension(format!("{} regions for {n} cities", regions.len())));
        }
        if let Some(c) = columns.iter().find(|c| c.values.len() != n) {
            return Err(StatsError::Dimension(format!("column {} has {} values for {n} cities", c.name, c.values.len())));
        }
        Ok(Self {
            cities,
            regions,
            columns,
            log_transformed: Vec::new(),
            flagged: Vec::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.cities.len()
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    /// Drops columns with missing (non-finite) values, flagging each.
    pub fn drop_incomplete(mut self) -> Self {
        let (keep, drop): (Vec<Column>, Vec<Column>) =
            self.columns.into_iter().partition(|c| c.values.iter().all(|v| v.is_finite()));
        self.flagged
            .extend(drop.into_iter().map(|c| (c.name, "missing values".to_string())));
        self.columns = keep;
        self
    }

    /// Rows at the given positions.
    pub fn subset(&self, rows: &[usize]) -> Self {
        Self {
            cities: rows.iter().map(|&i| self.cities[i].clone()).collect(),
            regions: rows.iter().map(|&i| self.regions[i].clone()).collect(),
            columns: self
                .columns
                .iter()
                .map(|c| Column::new(c.name.clone(), rows.iter().map(|&i| c.values[i]).collect()))
                .collect(),
            log_transformed: self.log_transformed.clone(),
            flagged: self.flagged.clone(),
        }
    }

    /// One-hot region indicators, omitting the alphabetically first region.
    pub fn region_dummies(&self) -> Vec<Column> {
        let present: BTreeSet<&str> = self.regions.iter().map(String::as_str).collect();
        present
            .into_iter()
            .skip(1)
            .map(|r| {
                Column::new(
                    format!("region_{r}"),
                    self.regions.iter().map(|x| if x == r { 1.0 } else { 0.0 }).collect(),
                )
            })
            .collect()
    }

    /// Intercept, region dummies and the named columns, in that order.
    pub fn design(&self, vars: &[String]) -> Result<(Vec<String>, DMatrix<f64>), StatsError> {
        let mut names = vec![INTERCEPT.to_string()];
        let mut cols: Vec<Vec<f64>> = vec![vec![1.0; self.n()]];
        for d in self.region_dummies() {
            names.push(d.name);
            cols.push(d.values);
        }
        for v in vars {
            let c = self
                .column(v)
                .ok_or_else(|| StatsError::Dimension(format!("unknown column {v}")))?;
            names.push(c.name.clone());
            cols.push(c.values.clone());
        }
        let m = DMatrix::from_fn(self.n(), cols.len(), |i, j| cols[j][i]);
        Ok((names, m))
    }
}

/// Log-transforms every heavy-tailed, strictly positive column.
pub fn transform_variables(table: &DesignTable, cfg: &TransformConfig) -> DesignTable {
    let mut out = table.clone();
    out.columns.clear();
    for c in &table.columns {
        let (col, outcome) = transform_column(c, cfg);
        match outcome {
            TransformOutcome::Logged => out.log_transformed.push(c.name.clone()),
            TransformOutcome::FlaggedNonPositive => out
                .flagged
                .push((c.name.clone(), "heavy-tailed with non-positive values; not logged".into())),
            TransformOutcome::Unchanged => {}
        }
        out.columns.push(col);
    }
    out
}

/// Normal test for the difference of two independent estimates:
/// `(b1 − b2) / √(se1² + se2²)` with a two-sided p-value.
pub fn coeff_ttest(b1: f64, se1: f64, b2: f64, se2: f64) -> Result<(f64, f64), StatsError> {
    if !(se1 > 0.0 && se2 > 0.0) {
        return Err(StatsError::NonPositiveStdError);
    }
    let z = (b1 - b2) / (se1 * se1 + se2 * se2).sqrt();
    Ok((z, two_sided_normal_p(z)))
}

pub(crate) fn two_sided_normal_p(z: f64) -> f64 {
    let n = Normal::standard();
    (2.0 * n.cdf(-z.abs())).min(1.0)
}
