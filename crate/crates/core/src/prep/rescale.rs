use serde::{Deserialize, Serialize};

use crate::corpus_io::{variance, VariableMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaleReport {
    pub max_ratio: f64,
    /// Accumulated power-of-two factor per variable, in column order.
    pub multipliers: Vec<(String, f64)>,
    pub doublings: usize,
    pub initial_ratio: f64,
    pub final_ratio: f64,
}

/// Doubles the minimum-variance column until max/min variance is at most
/// `max_ratio`.
pub fn rescale_variances(
    m: &VariableMatrix,
    max_ratio: f64,
) -> Result<(VariableMatrix, RescaleReport)> {
    if !(max_ratio >= 1.0) {
        return Err(Error::Prep(format!("max ratio must be >= 1, got {max_ratio}")));
    }
    let mut out = m.clone();
    let mut vars: Vec<f64> = m.columns().iter().map(|c| variance(c)).collect();
    if let Some(i) = vars.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::Prep(format!(
            "variable {:?} has zero variance; rescaling cannot terminate",
            m.names()[i]
        )));
    }
    let mut multipliers = vec![1.0f64; vars.len()];
    let ratio = |vars: &[f64]| {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for &v in vars {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        hi / lo
    };
    let initial_ratio = ratio(&vars);
    let mut doublings = 0;
    while ratio(&vars) > max_ratio {
        let i_min = vars
            .iter()
            .enumerate()
            .fold(0, |best, (i, &v)| if v < vars[best] { i } else { best });
        let name = m.names()[i_min].clone();
        let col = out.column_mut(&name).expect("column exists");
        for x in col.iter_mut() {
            *x *= 2.0;
        }
        let new_var = variance(col);
        debug_assert_eq!(new_var, 4.0 * vars[i_min]);
        vars[i_min] = new_var;
        multipliers[i_min] *= 2.0;
        doublings += 1;
    }
    let final_ratio = ratio(&vars);
    Ok((
        out,
        RescaleReport {
            max_ratio,
            multipliers: m.names().iter().cloned().zip(multipliers).collect(),
            doublings,
            initial_ratio,
            final_ratio,
        },
    ))
}
