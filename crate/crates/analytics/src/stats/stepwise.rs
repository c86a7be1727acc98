//! Forward stepwise selection with a correlation screen and a VIF screen.
//!
//! Region dummies and the intercept enter every fit and are exempt from
//! both screens. The first candidate is the one most correlated with the
//! response; later candidates are the ones most correlated with the current
//! residuals among those whose correlation with every selected variable is
//! at most `r_max`. A candidate pushing any selected VIF above `vif_max` is
//! barred and the search continues. Selection stops at the first candidate
//! that fails to raise adjusted R² or leaves a selected coefficient
//! insignificant at `alpha`.

use std::collections::HashSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::ols::{ols, vif, OlsFit};
use super::{pearson, DesignTable};
use crate::error::StatsError;

/// Adjusted R² gains at or below this count as no gain.
const MIN_GAIN: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepwiseConfig {
    pub r_max: f64,
    pub vif_max: f64,
    pub alpha: f64,
}

impl Default for StepwiseConfig {
    fn default() -> Self {
        Self {
            r_max: 0.75,
            vif_max: 5.0,
            alpha: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub variable: String,
    pub accepted: bool,
    /// Adjusted R² of the trial fit, when it could be fitted.
    pub adj_r2: Option<f64>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub response: String,
    pub selected: Vec<String>,
    pub fixed_effects: Vec<String>,
    pub fit: OlsFit,
    /// VIF of each selected variable within the final design.
    pub vif: Vec<(String, f64)>,
    pub steps: Vec<StepRecord>,
    pub n: usize,
}

impl RegressionResult {
    /// Adjusted R² after each accepted step.
    pub fn adj_r2_path(&self) -> Vec<f64> {
        self.steps.iter().filter(|s| s.accepted).filter_map(|s| s.adj_r2).collect()
    }
}

/// VIF of each selected variable, regressed on the other design columns.
fn selected_vif(x: &DMatrix<f64>, n_fixed: usize) -> Result<Vec<f64>, StatsError> {
    let k = x.ncols();
    if k - n_fixed == 0 {
        return Ok(Vec::new());
    }
    // drop the intercept; vif() adds its own
    let without = x.columns(1, k - 1).into_owned();
    if without.ncols() < 2 {
        return Ok(vec![1.0]);
    }
    let all = vif(&without)?;
    Ok(all[n_fixed - 1..].to_vec())
}

pub fn stepwise_select(
    table: &DesignTable,
    y: &[f64],
    response: &str,
    cfg: &StepwiseConfig,
) -> Result<RegressionResult, StatsError> {
    if y.len() != table.n() {
        return Err(StatsError::Dimension(format!("{} responses for {} cities", y.len(), table.n())));
    }
    let (fixed_names, x0) = table.design(&[])?;
    let n_fixed = fixed_names.len();
    let mut fit = ols(&fixed_names, &x0, y)?;
    let mut current_adj = fit.adj_r2;
    let mut selected: Vec<String> = Vec::new();
    let mut barred: HashSet<String> = HashSet::new();
    let mut steps = Vec::new();

    let usable: Vec<&super::Column> = table
        .columns
        .iter()
        .filter(|c| c.values.iter().all(|v| v.is_finite()) && pearson(&c.values, y).is_some())
        .collect();

    let y_scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    loop {
        // nothing left to explain
        if fit.residuals.iter().all(|e| e.abs() <= MIN_GAIN * (1.0 + y_scale)) {
            break;
        }
        let target: &[f64] = if selected.is_empty() { y } else { &fit.residuals };
        let mut best: Option<(&super::Column, f64)> = None;
        for c in &usable {
            if selected.contains(&c.name) || barred.contains(&c.name) {
                continue;
            }
            let screened = selected.iter().all(|s| {
                let sv = &table.column(s).expect("selected columns exist").values;
                pearson(&c.values, sv).is_some_and(|r| r.abs() <= cfg.r_max)
            });
            if !screened {
                continue;
            }
            let Some(r) = pearson(&c.values, target) else {
                continue;
            };
            if best.is_none_or(|(_, b)| r.abs() > b) {
                best = Some((c, r.abs()));
            }
        }
        let Some((cand, _)) = best else {
            if steps.is_empty() {
                return Err(StatsError::NoCandidate);
            }
            break;
        };
        let mut trial_vars = selected.clone();
        trial_vars.push(cand.name.clone());
        let (names, x) = table.design(&trial_vars)?;
        let trial = match ols(&names, &x, y) {
            Ok(f) => f,
            Err(StatsError::RankDeficient(col)) => {
                barred.insert(cand.name.clone());
                steps.push(StepRecord {
                    variable: cand.name.clone(),
                    accepted: false,
                    adj_r2: None,
                    reason: format!("rank deficient at {col}"),
                });
                continue;
            }
            Err(StatsError::TooFewObservations { .. }) => {
                steps.push(StepRecord {
                    variable: cand.name.clone(),
                    accepted: false,
                    adj_r2: None,
                    reason: "too few observations".into(),
                });
                break;
            }
            Err(e) => return Err(e),
        };
        let vifs = selected_vif(&x, n_fixed)?;
        if let Some(v) = vifs.iter().copied().find(|v| !(*v <= cfg.vif_max)) {
            barred.insert(cand.name.clone());
            steps.push(StepRecord {
                variable: cand.name.clone(),
                accepted: false,
                adj_r2: Some(trial.adj_r2),
                reason: format!("VIF {v} above {}", cfg.vif_max),
            });
            continue;
        }
        let insignificant = trial_vars
            .iter()
            .find(|v| trial.coefficient(v).is_none_or(|(_, _, p)| !(p < cfg.alpha)));
        let gain = trial.adj_r2 - current_adj;
        if !(gain > MIN_GAIN) || insignificant.is_some() {
            let reason = match insignificant {
                Some(v) => format!("{v} not significant at {}", cfg.alpha),
                None => "adjusted R2 did not increase".into(),
            };
            steps.push(StepRecord {
                variable: cand.name.clone(),
                accepted: false,
                adj_r2: Some(trial.adj_r2),
                reason,
            });
            break;
        }
        steps.push(StepRecord {
            variable: cand.name.clone(),
            accepted: true,
            adj_r2: Some(trial.adj_r2),
            reason: String::new(),
        });
        selected = trial_vars;
        current_adj = trial.adj_r2;
        fit = trial;
    }

    let (_, x) = table.design(&selected)?;
    let vifs = selected_vif(&x, n_fixed)?;
    Ok(RegressionResult {
        response: response.to_string(),
        vif: selected.iter().cloned().zip(vifs).collect(),
        selected,
        fixed_effects: fixed_names[1..].to_vec(),
        fit,
        steps,
        n: table.n(),
    })
}
