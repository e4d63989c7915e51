use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::corpus_io::{mean, variance, VariableMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableMoments {
    pub variable: String,
    pub mean: f64,
    /// Divisor n−1.
    pub variance: f64,
    /// `None` when the variance is zero.
    pub skewness: Option<f64>,
    /// `None` when the variance is zero.
    pub excess_kurtosis: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentsReport {
    pub variables: Vec<VariableMoments>,
}

impl MomentsReport {
    pub fn get(&self, name: &str) -> Option<&VariableMoments> {
        self.variables.iter().find(|v| v.variable == name)
    }
}

/// Sample moments per column. Skewness is m3/m2^1.5 and excess kurtosis
/// m4/m2² − 3, with central moments using divisor n.
pub fn moments(m: &VariableMatrix) -> Result<MomentsReport> {
    let n = m.n();
    if n < 2 {
        return Err(Error::Prep("moments need at least 2 rows".into()));
    }
    let variables = m
        .iter()
        .map(|(name, col)| {
            let mu = mean(col);
            let nf = n as f64;
            let (m2, m3, m4) = col.iter().fold((0.0, 0.0, 0.0), |(a, b, c), &x| {
                let d = x - mu;
                let d2 = d * d;
                (a + d2, b + d2 * d, c + d2 * d2)
            });
            let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);
            let defined = m2 > 0.0;
            VariableMoments {
                variable: name.to_string(),
                mean: mu,
                variance: variance(col),
                skewness: defined.then(|| m3 / m2.powf(1.5)),
                excess_kurtosis: defined.then(|| m4 / (m2 * m2) - 3.0),
            }
        })
        .collect();
    Ok(MomentsReport { variables })
}

/// Normal QQ points `(theoretical quantile, sorted sample value)` using
/// plotting positions (i − 0.5)/n.
pub fn qq_points(xs: &[f64]) -> Vec<(f64, f64)> {
    let normal = Normal::standard();
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, x)| (normal.inverse_cdf((i as f64 + 0.5) / n), x))
        .collect()
}
