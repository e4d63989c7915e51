use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::chisq::{chisq_sf, noncentral_chisq_cdf, noncentrality_for};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rmsea {
    pub point: f64,
    pub lo90: f64,
    pub hi90: f64,
    pub p_close: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub chisq: f64,
    pub df: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitIndices {
    pub chisq: f64,
    pub df: usize,
    pub p_exact: f64,
    pub rmsea: Rmsea,
    pub cfi: f64,
    /// Undefined for saturated models.
    pub tli: Option<f64>,
    pub srmr: f64,
    pub aic: f64,
    pub bic: f64,
    pub baseline: Baseline,
    /// df = 0: the exact-fit test and RMSEA carry no information.
    pub saturated: bool,
    pub flags: Vec<String>,
}

/// RMSEA point estimate and 90% interval for a χ² statistic.
pub fn rmsea(chisq: f64, df: usize, n: usize) -> Rmsea {
    if df == 0 {
        return Rmsea {
            point: 0.0,
            lo90: 0.0,
            hi90: 0.0,
            p_close: 1.0,
        };
    }
    let dfn = df as f64;
    let scale = dfn * (n as f64 - 1.0);
    let to_rmsea = |lambda: f64| (lambda / scale).sqrt();
    let lambda0 = 0.05 * 0.05 * scale;
    Rmsea {
        point: to_rmsea((chisq - dfn).max(0.0)),
        lo90: to_rmsea(noncentrality_for(chisq, dfn, 0.95)),
        hi90: to_rmsea(noncentrality_for(chisq, dfn, 0.05)),
        p_close: 1.0 - noncentral_chisq_cdf(chisq, dfn, lambda0),
    }
}

/// Standardized root mean square residual over the lower triangle, with
/// residuals on the correlation scale of the sample.
pub fn srmr(sample: &DMatrix<f64>, sigma: &DMatrix<f64>) -> f64 {
    let p = sample.nrows();
    let mut sum = 0.0;
    for i in 0..p {
        for j in 0..=i {
            let scale = (sample[(i, i)] * sample[(j, j)]).sqrt();
            let r = (sample[(i, j)] - sigma[(i, j)]) / scale;
            sum += r * r;
        }
    }
    (sum / (p * (p + 1) / 2) as f64).sqrt()
}

/// χ² of the independence model (free variances, zero covariances).
pub fn baseline_chisq(sample: &DMatrix<f64>, n: usize) -> Option<f64> {
    let ln_det_s = 2.0
        * sample
            .clone()
            .cholesky()?
            .l_dirty()
            .diagonal()
            .iter()
            .map(|d| d.ln())
            .sum::<f64>();
    let ln_det_diag: f64 = sample.diagonal().iter().map(|d| d.ln()).sum();
    Some((n as f64 - 1.0) * (ln_det_diag - ln_det_s).max(0.0))
}

/// The full battery for a converged fit with `n_free` parameters.
pub fn fit_indices(
    chisq: f64,
    df: usize,
    n: usize,
    n_free: usize,
    sample: &DMatrix<f64>,
    sigma: &DMatrix<f64>,
) -> Result<FitIndices> {
    let p = sample.nrows();
    let df_b = p * (p - 1) / 2;
    if df_b <= df {
        return Err(Error::Model(format!(
            "baseline model df ({df_b}) does not exceed model df ({df}); incremental indices are undefined"
        )));
    }
    let chisq_b = baseline_chisq(sample, n)
        .ok_or_else(|| Error::Estimation("sample covariance is not positive definite".into()))?;
    let dfn = df as f64;
    let dfb = df_b as f64;

    let num = (chisq - dfn).max(0.0);
    let den = num.max(chisq_b - dfb).max(0.0);
    let cfi = if den > 0.0 { 1.0 - num / den } else { 1.0 };

    let mut flags = Vec::new();
    let tli = if df == 0 {
        None
    } else {
        let rb = chisq_b / dfb;
        let denom = rb - 1.0;
        (denom != 0.0).then(|| (rb - chisq / dfn) / denom)
    };
    if let Some(t) = tli.filter(|t| !(0.0..=1.0).contains(t)) {
        flags.push(format!("TLI {t:.4} lies outside [0, 1]"));
    }
    let saturated = df == 0;
    if saturated {
        flags.push("saturated".to_string());
    }
    let t = n_free as f64;
    Ok(FitIndices {
        chisq,
        df,
        p_exact: if saturated { 1.0 } else { chisq_sf(chisq, dfn) },
        rmsea: rmsea(chisq, df, n),
        cfi,
        tli,
        srmr: srmr(sample, sigma),
        aic: chisq + 2.0 * t,
        bic: chisq + t * (n as f64).ln(),
        baseline: Baseline {
            chisq: chisq_b,
            df: df_b,
        },
        saturated,
        flags,
    })
}
