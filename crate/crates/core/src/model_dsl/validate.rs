use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{ClauseKey, Param, SemModel};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Diagnostic {
    /// Source line of the offending clause, 0 when unknown.
    pub line: usize,
    pub clause: String,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.line > 0 {
            write!(f, "line {}: {}: {}", self.line, self.clause, self.message)
        } else {
            write!(f, "{}: {}", self.clause, self.message)
        }
    }
}

fn diag(m: &SemModel, key: ClauseKey, message: String) -> Diagnostic {
    Diagnostic {
        line: m.line_of(&key),
        clause: key.to_string(),
        message,
    }
}

/// A directed cycle as a closed path (`[A, B, A]`), if any. Nodes are visited
/// in name order so the reported cycle is deterministic.
pub fn find_cycle(m: &SemModel) -> Option<Vec<String>> {
    let mut adj: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for (from, to) in m.edges() {
        adj.entry(from).or_default().insert(to);
        adj.entry(to).or_default();
    }
    // 0 unvisited, 1 on stack, 2 done
    let mut state: BTreeMap<&str, u8> = adj.keys().map(|k| (*k, 0)).collect();
    let mut path: Vec<&str> = Vec::new();

    fn visit<'a>(
        n: &'a str,
        adj: &BTreeMap<&'a str, BTreeSet<&'a str>>,
        state: &mut BTreeMap<&'a str, u8>,
        path: &mut Vec<&'a str>,
    ) -> Option<Vec<String>> {
        state.insert(n, 1);
        path.push(n);
        for &next in &adj[n] {
            match state[next] {
                1 => {
                    let start = path.iter().position(|p| *p == next).expect("on stack");
                    let mut cycle: Vec<String> =
                        path[start..].iter().map(|s| s.to_string()).collect();
                    cycle.push(next.to_string());
                    return Some(cycle);
                }
                0 => {
                    if let Some(c) = visit(next, adj, state, path) {
                        return Some(c);
                    }
                }
                _ => {}
            }
        }
        path.pop();
        state.insert(n, 2);
        None
    }

    let nodes: Vec<&str> = adj.keys().copied().collect();
    for n in nodes {
        if state[n] == 0 {
            if let Some(c) = visit(n, &adj, &mut state, &mut path) {
                return Some(c);
            }
        }
    }
    None
}

/// For each latent, the indicator whose loading is fixed to 1 by default, or
/// `None` when the user already set the scale through a fixed loading or a
/// fixed latent variance.
pub fn scale_markers(m: &SemModel) -> BTreeMap<String, Option<String>> {
    m.measurements
        .iter()
        .map(|meas| {
            let user_scaled = meas.indicators.iter().any(|t| t.value != Param::Free)
                || m.variance_fixes.iter().any(|v| v.name == meas.latent);
            let marker = if user_scaled {
                None
            } else {
                meas.indicators.first().map(|t| t.name.clone())
            };
            (meas.latent.clone(), marker)
        })
        .collect()
}

/// Checks that do not depend on data: empty latents, cycles, settable scale.
pub(crate) fn check_structure(m: &SemModel) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for meas in &m.measurements {
        let key = ClauseKey::Measurement(meas.latent.clone());
        if meas.indicators.is_empty() {
            out.push(diag(m, key, format!("latent {} has no indicators", meas.latent)));
            continue;
        }
        let var_fix = m.variance_fixes.iter().find(|v| v.name == meas.latent);
        if let Some(v) = var_fix.filter(|v| !(v.value > 0.0)) {
            out.push(diag(
                m,
                ClauseKey::Variance(v.name.clone()),
                format!(
                    "latent {} has its variance fixed to {}; the scale cannot be set",
                    meas.latent, v.value
                ),
            ));
            continue;
        }
        let fixed: Vec<f64> = meas.indicators.iter().filter_map(|t| t.value.fixed()).collect();
        if var_fix.is_none() && !fixed.is_empty() && fixed.iter().all(|&v| v == 0.0) {
            out.push(diag(
                m,
                key,
                format!(
                    "latent {} has only zero fixed loadings; fix one loading to a nonzero value or fix its variance",
                    meas.latent
                ),
            ));
        }
    }
    if let Some(cycle) = find_cycle(m) {
        let (from, to) = (&cycle[0], &cycle[1]);
        let key = if m.is_latent(from)
            && m
                .measurements
                .iter()
                .any(|x| &x.latent == from && x.indicators.iter().any(|t| &t.name == to))
        {
            ClauseKey::Measurement(from.clone())
        } else {
            ClauseKey::Regression(to.clone())
        };
        out.push(diag(
            m,
            key,
            format!("structural cycle {}", cycle.join(" -> ")),
        ));
    }
    out.sort();
    out
}

/// Diagnostics for `m` against the columns available in the data, ordered by
/// (line, clause). Empty means the model can be estimated.
pub fn validate(m: &SemModel, data_names: &BTreeSet<String>) -> Vec<Diagnostic> {
    let mut out = check_structure(m);
    let clause_of = |name: &str| -> ClauseKey {
        if let Some(meas) = m
            .measurements
            .iter()
            .find(|x| x.indicators.iter().any(|t| t.name == name))
        {
            return ClauseKey::Measurement(meas.latent.clone());
        }
        if let Some(r) = m
            .regressions
            .iter()
            .find(|r| r.outcome == name || r.predictors.iter().any(|t| t.name == name))
        {
            return ClauseKey::Regression(r.outcome.clone());
        }
        if let Some(c) = m.covariances.iter().find(|c| c.left == name || c.right == name) {
            return ClauseKey::Covariance(c.left.clone(), c.right.clone());
        }
        ClauseKey::Variance(name.to_string())
    };
    for name in m.manifests() {
        if !data_names.contains(name) {
            out.push(diag(
                m,
                clause_of(name),
                format!("variable {name} is not a data column"),
            ));
        }
    }
    for latent in m.latents() {
        if data_names.contains(latent) {
            out.push(diag(
                m,
                ClauseKey::Measurement(latent.to_string()),
                format!("latent {latent} clashes with a data column of the same name"),
            ));
        }
    }
    out.sort();
    out.dedup();
    out
}
