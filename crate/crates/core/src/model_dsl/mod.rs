//! The model-specification language.
//!
//! One statement per line, `#` starts a comment:
//!
//! ```text
//! Y <- X1 + X2 + X3        # regression, outcome on the left
//! A -> 1*X4 + X6           # measurement, latent on the left
//! A <-> B                  # covariance
//! var(X6) = 0.5            # fixed (residual) variance
//! ```
//!
//! A term may carry a fixed value as `<value>*<name>`. Several lines for the
//! same outcome or latent are merged in order of appearance.
//!
//! `->` always has a latent on its left. A chain such as
//! "qrel → eliteness → log tfsum" is written as a regression of the latent on
//! the manifest plus a measurement from the latent:
//!
//! ```text
//! eliteness <- qrel
//! eliteness -> logtfsum
//! ```

mod parser;
mod serialize;
mod validate;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use parser::{parse_model, parse_model_unchecked};
pub use serialize::serialize;
pub use validate::{find_cycle, scale_markers, validate, Diagnostic};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Param {
    Free,
    Fixed(f64),
}

impl Param {
    pub fn fixed(self) -> Option<f64> {
        match self {
            Param::Free => None,
            Param::Fixed(v) => Some(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub name: String,
    pub value: Param,
}

impl Term {
    pub fn free(name: impl Into<String>) -> Self {
        Term {
            name: name.into(),
            value: Param::Free,
        }
    }

    pub fn fixed(name: impl Into<String>, value: f64) -> Self {
        Term {
            name: name.into(),
            value: Param::Fixed(value),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regression {
    pub outcome: String,
    pub predictors: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub latent: String,
    pub indicators: Vec<Term>,
}

/// A covariance between two distinct variables; `left < right`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Covariance {
    pub left: String,
    pub right: String,
    pub value: Param,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceFix {
    pub name: String,
    pub value: f64,
}

/// Identifies a clause for diagnostics.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClauseKey {
    Measurement(String),
    Regression(String),
    Covariance(String, String),
    Variance(String),
}

impl std::fmt::Display for ClauseKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ClauseKey::Measurement(l) => write!(f, "{l} -> ..."),
            ClauseKey::Regression(o) => write!(f, "{o} <- ..."),
            ClauseKey::Covariance(a, b) => write!(f, "{a} <-> {b}"),
            ClauseKey::Variance(v) => write!(f, "var({v})"),
        }
    }
}

/// A parsed model. Clauses are kept in canonical order (sorted by their
/// left-hand name); terms keep their order of appearance because the first
/// indicator of a latent is its default scale marker.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SemModel {
    pub measurements: Vec<Measurement>,
    pub regressions: Vec<Regression>,
    pub covariances: Vec<Covariance>,
    pub variance_fixes: Vec<VarianceFix>,
    /// First source line of each clause. Not part of model equality.
    #[serde(skip)]
    pub lines: BTreeMap<ClauseKey, usize>,
}

impl PartialEq for SemModel {
    fn eq(&self, other: &Self) -> bool {
        self.measurements == other.measurements
            && self.regressions == other.regressions
            && self.covariances == other.covariances
            && self.variance_fixes == other.variance_fixes
    }
}

impl SemModel {
    /// Sorts clauses into canonical order.
    pub fn canonicalize(&mut self) {
        self.measurements.sort_by(|a, b| a.latent.cmp(&b.latent));
        self.regressions.sort_by(|a, b| a.outcome.cmp(&b.outcome));
        for c in &mut self.covariances {
            if c.left > c.right {
                std::mem::swap(&mut c.left, &mut c.right);
            }
        }
        self.covariances
            .sort_by(|a, b| (&a.left, &a.right).cmp(&(&b.left, &b.right)));
        self.variance_fixes.sort_by(|a, b| a.name.cmp(&b.name));
    }

    pub fn is_empty(&self) -> bool {
        self.measurements.is_empty()
            && self.regressions.is_empty()
            && self.covariances.is_empty()
            && self.variance_fixes.is_empty()
    }

    pub fn line_of(&self, key: &ClauseKey) -> usize {
        self.lines.get(key).copied().unwrap_or(0)
    }

    /// Names on the left of a measurement.
    pub fn latents(&self) -> BTreeSet<&str> {
        self.measurements.iter().map(|m| m.latent.as_str()).collect()
    }

    pub fn is_latent(&self, name: &str) -> bool {
        self.measurements.iter().any(|m| m.latent == name)
    }

    /// Every variable name in first-appearance order over the canonical
    /// clause sequence.
    pub fn variables(&self) -> Vec<&str> {
        let names = self
            .measurements
            .iter()
            .flat_map(|m| {
                std::iter::once(m.latent.as_str())
                    .chain(m.indicators.iter().map(|t| t.name.as_str()))
            })
            .chain(self.regressions.iter().flat_map(|r| {
                std::iter::once(r.outcome.as_str())
                    .chain(r.predictors.iter().map(|t| t.name.as_str()))
            }))
            .chain(
                self.covariances
                    .iter()
                    .flat_map(|c| [c.left.as_str(), c.right.as_str()]),
            )
            .chain(self.variance_fixes.iter().map(|v| v.name.as_str()));
        let mut seen = BTreeSet::new();
        names.filter(|n| seen.insert(*n)).collect()
    }

    /// Non-latent variables, in first-appearance order.
    pub fn manifests(&self) -> Vec<&str> {
        let latents = self.latents();
        self.variables()
            .into_iter()
            .filter(|n| !latents.contains(n))
            .collect()
    }

    /// Variables with at least one incoming directed effect.
    pub fn endogenous(&self) -> BTreeSet<&str> {
        let mut out: BTreeSet<&str> = self
            .regressions
            .iter()
            .filter(|r| !r.predictors.is_empty())
            .map(|r| r.outcome.as_str())
            .collect();
        for m in &self.measurements {
            out.extend(m.indicators.iter().map(|t| t.name.as_str()));
        }
        out
    }

    /// Directed edges `(from, to)`: predictor → outcome and latent → indicator.
    pub fn edges(&self) -> Vec<(&str, &str)> {
        let mut out = Vec::new();
        for r in &self.regressions {
            for t in &r.predictors {
                out.push((t.name.as_str(), r.outcome.as_str()));
            }
        }
        for m in &self.measurements {
            for t in &m.indicators {
                out.push((m.latent.as_str(), t.name.as_str()));
            }
        }
        out
    }
}
