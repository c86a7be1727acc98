use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::StatsError;

/// A column whose QR diagonal falls below this fraction of its own norm is
/// treated as lying in the span of the earlier columns.
const RANK_TOL: f64 = 1e-9;

/// `1 − R²` at or below this is a perfect fit for VIF purposes.
const PERFECT_FIT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub p_values: Vec<f64>,
    pub r2: f64,
    pub adj_r2: f64,
    pub sigma2: f64,
    pub residuals: Vec<f64>,
    pub n: usize,
    pub df: usize,
}

impl OlsFit {
    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// `(estimate, standard error, p-value)` of a named coefficient.
    pub fn coefficient(&self, name: &str) -> Option<(f64, f64, f64)> {
        self.index(name)
            .map(|i| (self.coefficients[i], self.std_errors[i], self.p_values[i]))
    }

    /// Two-sided confidence interval of a named coefficient at `level`
    /// (for example 0.95), from the t distribution on the residual degrees
    /// of freedom.
    pub fn confidence_interval(&self, name: &str, level: f64) -> Option<(f64, f64)> {
        let (b, se, _) = self.coefficient(name)?;
        let t = StudentsT::new(0.0, 1.0, self.df as f64).ok()?;
        let q = t.inverse_cdf(0.5 + level / 2.0);
        Some((b - q * se, b + q * se))
    }

    /// Predictions for a design whose columns are named by `names`; columns
    /// the fit does not know contribute nothing, and fit columns missing
    /// from the design are taken as zero.
    pub fn predict(&self, names: &[String], x: &DMatrix<f64>) -> Vec<f64> {
        (0..x.nrows())
            .map(|i| {
                names
                    .iter()
                    .enumerate()
                    .filter_map(|(j, n)| self.index(n).map(|k| self.coefficients[k] * x[(i, j)]))
                    .sum()
            })
            .collect()
    }
}

/// Least squares via QR with classical standard errors and two-sided
/// t-test p-values. `x` must already contain the intercept column.
pub fn ols(names: &[String], x: &DMatrix<f64>, y: &[f64]) -> Result<OlsFit, StatsError> {
    let (n, p) = x.shape();
    if names.len() != p || y.len() != n {
        return Err(StatsError::Dimension(format!(
            "{n}x{p} design with {} names and {} responses",
            names.len(),
            y.len()
        )));
    }
    if n <= p {
        return Err(StatsError::TooFewObservations { needed: p + 1, got: n });
    }
    let qr = x.clone().qr();
    let r = qr.r();
    for j in 0..p {
        let norm = x.column(j).norm();
        if !(r[(j, j)].abs() > RANK_TOL * norm) {
            return Err(StatsError::RankDeficient(names[j].clone()));
        }
    }
    let yv = DVector::from_column_slice(y);
    let qty = qr.q().transpose() * &yv;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| StatsError::RankDeficient(names[p - 1].clone()))?;
    let fitted = x * &beta;
    let resid: Vec<f64> = yv.iter().zip(fitted.iter()).map(|(a, b)| a - b).collect();
    let ssr: f64 = resid.iter().map(|e| e * e).sum();
    let ybar = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    let df = n - p;
    let r2 = if sst > 0.0 { 1.0 - ssr / sst } else { 0.0 };
    let adj_r2 = 1.0 - (1.0 - r2) * (n - 1) as f64 / df as f64;
    let sigma2 = ssr / df as f64;

    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| StatsError::RankDeficient(names[p - 1].clone()))?;
    let tdist = StudentsT::new(0.0, 1.0, df as f64).expect("positive degrees of freedom");
    let mut std_errors = Vec::with_capacity(p);
    let mut t_stats = Vec::with_capacity(p);
    let mut p_values = Vec::with_capacity(p);
    for j in 0..p {
        let var = sigma2 * r_inv.row(j).iter().map(|v| v * v).sum::<f64>();
        let se = var.sqrt();
        let b = beta[j];
        let t = if se > 0.0 {
            b / se
        } else if b == 0.0 {
            0.0
        } else {
            b.signum() * f64::INFINITY
        };
        let pv = if t.is_infinite() {
            0.0
        } else {
            (2.0 * tdist.cdf(-t.abs())).min(1.0)
        };
        std_errors.push(se);
        t_stats.push(t);
        p_values.push(pv);
    }
    Ok(OlsFit {
        names: names.to_vec(),
        coefficients: beta.iter().copied().collect(),
        std_errors,
        t_stats,
        p_values,
        r2,
        adj_r2,
        sigma2,
        residuals: resid,
        n,
        df,
    })
}

/// Variance inflation of each column of `x` (no intercept column): the
/// column is regressed on an intercept plus every other column, and
/// `1 / (1 − R²)` is reported. Perfect collinearity gives infinity.
pub fn vif(x: &DMatrix<f64>) -> Result<Vec<f64>, StatsError> {
    let (n, k) = x.shape();
    if k < 2 {
        return Err(StatsError::Dimension("VIF needs at least two predictors".into()));
    }
    let mut out = Vec::with_capacity(k);
    for j in 0..k {
        let others = DMatrix::from_fn(n, k, |i, c| match c {
            0 => 1.0,
            c if c <= j => x[(i, c - 1)],
            c => x[(i, c)],
        });
        let names: Vec<String> = (0..k).map(|c| format!("x{c}")).collect();
        let target: Vec<f64> = x.column(j).iter().copied().collect();
        let v = match ols(&names, &others, &target) {
            Ok(fit) if 1.0 - fit.r2 > PERFECT_FIT_TOL => 1.0 / (1.0 - fit.r2),
            Ok(_) => f64::INFINITY,
            Err(StatsError::RankDeficient(_)) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        out.push(v);
    }
    Ok(out)
}
