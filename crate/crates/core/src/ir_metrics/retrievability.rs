use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus_io::RunRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Utility {
    /// 1 if rank ≤ r*, else 0.
    Indicator,
    /// `1 / rank^gamma` for any retrieved rank; r* is not used.
    Gravity { gamma: f64 },
}

impl Utility {
    pub fn value(&self, rank: Option<u32>, cutoff: u32) -> f64 {
        match (*self, rank) {
            (_, None) => 0.0,
            (Utility::Indicator, Some(r)) => f64::from(u8::from(r <= cutoff)),
            (Utility::Gravity { gamma }, Some(r)) => (r as f64).powf(-gamma),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievabilityConfig {
    /// `(query_id, L(q))`.
    pub likelihoods: Vec<(String, f64)>,
    pub cutoff: u32,
    pub utility: Utility,
}

impl RetrievabilityConfig {
    /// Every query from `run` with likelihood 1.
    pub fn uniform(run: &[RunRecord], cutoff: u32, utility: Utility) -> Self {
        let mut qs: Vec<String> = run.iter().map(|r| r.query_id.clone()).collect();
        qs.sort();
        qs.dedup();
        RetrievabilityConfig {
            likelihoods: qs.into_iter().map(|q| (q, 1.0)).collect(),
            cutoff,
            utility,
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.cutoff < 1 {
            return Err(Error::Data("retrievability cutoff r* must be at least 1".into()));
        }
        if let Some((q, l)) = self.likelihoods.iter().find(|(_, l)| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::Data(format!("query {q}: likelihood {l} must be finite and nonnegative")));
        }
        if let Utility::Gravity { gamma } = self.utility {
            if !gamma.is_finite() {
                return Err(Error::Data("gravity exponent must be finite".into()));
            }
        }
        Ok(())
    }
}

/// `ret(d) = Σ_q L(q) f(r(d, q), r*)`. `rank_of(q)` is `None` when the
/// document was not retrieved for `q`.
pub fn retrievability(cfg: &RetrievabilityConfig, rank_of: impl Fn(&str) -> Option<u32>) -> Result<f64> {
    cfg.check()?;
    Ok(cfg
        .likelihoods
        .iter()
        .map(|(q, l)| l * cfg.utility.value(rank_of(q), cfg.cutoff))
        .sum())
}

/// Retrievability of every document appearing in `run`, keyed by doc id.
pub fn retrievability_all(cfg: &RetrievabilityConfig, run: &[RunRecord]) -> Result<BTreeMap<String, f64>> {
    let mut ranks: BTreeMap<&str, BTreeMap<&str, u32>> = BTreeMap::new();
    for r in run {
        let best = ranks.entry(&r.doc_id).or_default().entry(&r.query_id).or_insert(r.rank);
        *best = (*best).min(r.rank);
    }
    ranks
        .into_iter()
        .map(|(d, per_query)| {
            let v = retrievability(cfg, |q| per_query.get(q).copied())?;
            Ok((d.to_string(), v))
        })
        .collect()
}
