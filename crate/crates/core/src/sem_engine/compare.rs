use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::chisq::chisq_sf;
use super::estimate::FitResult;
use super::indices::FitIndices;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedComparison {
    pub delta_chisq: f64,
    pub delta_df: usize,
    pub p: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InformationComparison {
    pub aic: [f64; 2],
    pub bic: [f64; 2],
    /// Index (0 or 1) of the model with the smaller criterion; ties go to 0.
    pub preferred_aic: usize,
    pub preferred_bic: usize,
}

fn indices(fit: &FitResult, which: &str) -> Result<FitIndices> {
    fit.indices
        .clone()
        .ok_or_else(|| Error::Estimation(format!("the {which} model did not converge")))
}

fn same_data(a: &FitResult, b: &FitResult) -> Result<()> {
    let sa: BTreeSet<&String> = a.manifests.iter().collect();
    let sb: BTreeSet<&String> = b.manifests.iter().collect();
    if a.n != b.n || sa != sb {
        return Err(Error::Model(
            "models were not fitted to the same variables and sample size".into(),
        ));
    }
    Ok(())
}

/// χ² difference test of `restricted` against `full`. The restricted model's
/// free parameters must be a subset of the full model's.
pub fn compare_nested(full: &FitResult, restricted: &FitResult) -> Result<NestedComparison> {
    same_data(full, restricted)?;
    let full_ids: BTreeSet<&str> = full.free_ids().collect();
    let extra: Vec<&str> = restricted.free_ids().filter(|id| !full_ids.contains(id)).collect();
    if !extra.is_empty() {
        return Err(Error::Model(format!(
            "models are not nested (restricted model frees {}); compare AIC or BIC instead",
            extra.join(", ")
        )));
    }
    let (f, r) = (indices(full, "full")?, indices(restricted, "restricted")?);
    let mut warnings = Vec::new();
    let mut delta_chisq = r.chisq - f.chisq;
    if delta_chisq < 0.0 {
        warnings.push(format!(
            "negative chi-square difference {delta_chisq:.3e} floored at 0"
        ));
        delta_chisq = 0.0;
    }
    let delta_df = r.df - f.df;
    let p = if delta_df == 0 {
        1.0
    } else {
        chisq_sf(delta_chisq, delta_df as f64)
    };
    Ok(NestedComparison {
        delta_chisq,
        delta_df,
        p,
        warnings,
    })
}

/// AIC/BIC comparison for models that need not be nested.
pub fn compare_information(a: &FitResult, b: &FitResult) -> Result<InformationComparison> {
    same_data(a, b)?;
    let (ia, ib) = (indices(a, "first")?, indices(b, "second")?);
    let pick = |x: f64, y: f64| usize::from(y < x);
    Ok(InformationComparison {
        aic: [ia.aic, ib.aic],
        bic: [ia.bic, ib.bic],
        preferred_aic: pick(ia.aic, ib.aic),
        preferred_bic: pick(ia.bic, ib.bic),
    })
}
