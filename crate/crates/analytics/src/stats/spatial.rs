//! Moran's I of regression residuals with inverse-distance weights.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use savsim_core::scenario::Point;

use super::two_sided_normal_p;
use crate::error::StatsError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoranResult {
    pub i: f64,
    pub expected: f64,
    /// Variance under randomization; needs at least four observations.
    pub variance: Option<f64>,
    pub z: Option<f64>,
    pub p_normal: Option<f64>,
    pub p_permutation: Option<f64>,
}

fn weights(coords: &[Point]) -> Result<Vec<Vec<f64>>, StatsError> {
    let n = coords.len();
    let mut w = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let d = coords[i].distance(&coords[j]);
                if !(d > 0.0) {
                    return Err(StatsError::CoincidentCentroids(i.min(j), i.max(j)));
                }
                w[i][j] = 1.0 / d;
            }
        }
    }
    Ok(w)
}

fn deviations(x: &[f64]) -> Result<Vec<f64>, StatsError> {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let z: Vec<f64> = x.iter().map(|v| v - mean).collect();
    if !(z.iter().map(|v| v * v).sum::<f64>() > 0.0) {
        return Err(StatsError::ZeroVariance("residuals".into()));
    }
    Ok(z)
}

fn statistic(w: &[Vec<f64>], s0: f64, z: &[f64]) -> f64 {
    let n = z.len() as f64;
    let mut cross = 0.0;
    for (i, row) in w.iter().enumerate() {
        for (j, wij) in row.iter().enumerate() {
            cross += wij * z[i] * z[j];
        }
    }
    let ss: f64 = z.iter().map(|v| v * v).sum();
    n / s0 * cross / ss
}

fn check(residuals: &[f64], coords: &[Point]) -> Result<(), StatsError> {
    if residuals.len() != coords.len() {
        return Err(StatsError::Dimension(format!(
            "{} residuals for {} centroids",
            residuals.len(),
            coords.len()
        )));
    }
    if residuals.len() < 3 {
        return Err(StatsError::TooFewObservations { needed: 3, got: residuals.len() });
    }
    Ok(())
}

/// `I = (n / Σw) · Σᵢⱼ wᵢⱼ zᵢ zⱼ / Σ zᵢ²` with `wᵢⱼ = 1 / dᵢⱼ`.
pub fn morans_i(residuals: &[f64], coords: &[Point]) -> Result<f64, StatsError> {
    check(residuals, coords)?;
    let w = weights(coords)?;
    let z = deviations(residuals)?;
    let s0: f64 = w.iter().flatten().sum();
    Ok(statistic(&w, s0, &z))
}

/// Moran's I with its normal-approximation p-value under randomization and,
/// when `permutations` is given as `(draws, seed)`, a two-sided
/// permutation p-value.
pub fn morans_test(
    residuals: &[f64],
    coords: &[Point],
    permutations: Option<(usize, u64)>,
) -> Result<MoranResult, StatsError> {
    check(residuals, coords)?;
    let w = weights(coords)?;
    let z = deviations(residuals)?;
    let n = z.len();
    let nf = n as f64;
    let s0: f64 = w.iter().flatten().sum();
    let i = statistic(&w, s0, &z);
    let expected = -1.0 / (nf - 1.0);

    let variance = (n >= 4).then(|| {
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for a in 0..n {
            let (mut row, mut col) = (0.0, 0.0);
            for b in 0..n {
                s1 += (w[a][b] + w[b][a]).powi(2);
                row += w[a][b];
                col += w[b][a];
            }
            s2 += (row + col).powi(2);
        }
        s1 /= 2.0;
        let m2: f64 = z.iter().map(|v| v * v).sum();
        let m4: f64 = z.iter().map(|v| v.powi(4)).sum();
        let b2 = nf * m4 / (m2 * m2);
        let num = nf * ((nf * nf - 3.0 * nf + 3.0) * s1 - nf * s2 + 3.0 * s0 * s0)
            - b2 * ((nf * nf - nf) * s1 - 2.0 * nf * s2 + 6.0 * s0 * s0);
        let den = (nf - 1.0) * (nf - 2.0) * (nf - 3.0) * s0 * s0;
        num / den - expected * expected
    });
    let z_score = variance.filter(|v| *v > 0.0).map(|v| (i - expected) / v.sqrt());

    let p_permutation = permutations.map(|(draws, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut perm = z.clone();
        let observed = (i - expected).abs();
        let mut extreme = 0usize;
        for _ in 0..draws {
            perm.shuffle(&mut rng);
            if (statistic(&w, s0, &perm) - expected).abs() >= observed {
                extreme += 1;
            }
        }
        (extreme + 1) as f64 / (draws + 1) as f64
    });

    Ok(MoranResult {
        i,
        expected,
        variance,
        z: z_score,
        p_normal: z_score.map(two_sided_normal_p),
        p_permutation,
    })
}
