//! Clusters of highly collinear variables.
//!
//! Variables are nodes of a graph with an edge wherever `|r| >= threshold`.
//! Each connected component of two or more variables is a cluster; one member
//! is kept and the rest are ignored.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corpus_io::CovMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollinearComponent {
    /// Members in name order.
    pub members: Vec<String>,
    pub kept: String,
    /// True when every pair of members is directly connected.
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollinearityReport {
    pub threshold: f64,
    pub components: Vec<CollinearComponent>,
}

impl CollinearityReport {
    pub fn kept(&self) -> Vec<&str> {
        self.components.iter().map(|c| c.kept.as_str()).collect()
    }

    /// Clustered variables that were not kept, in name order.
    pub fn ignored(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self
            .components
            .iter()
            .flat_map(|c| c.members.iter().filter(move |m| **m != c.kept))
            .map(String::as_str)
            .collect();
        out.sort_unstable();
        out
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

/// Finds collinear clusters. The kept member of each cluster is the first
/// `keep_list` entry it contains, otherwise its largest-variance member
/// (ties go to the smaller name).
pub fn collinearity(
    c: &CovMatrix,
    threshold: f64,
    keep_list: &[String],
) -> Result<CollinearityReport> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::Prep(format!(
            "collinearity threshold must be in (0, 1], got {threshold}"
        )));
    }
    let p = c.dim();
    let r = c.to_correlation();
    let adjacent = |i: usize, j: usize| i != j && r.values[(i, j)].abs() >= threshold;

    let mut seen = vec![false; p];
    let mut components = Vec::new();
    for start in 0..p {
        if seen[start] {
            continue;
        }
        let mut stack = vec![start];
        let mut members = Vec::new();
        seen[start] = true;
        while let Some(i) = stack.pop() {
            members.push(i);
            for j in 0..p {
                if !seen[j] && adjacent(i, j) {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        if members.len() < 2 {
            continue;
        }
        members.sort_by(|&a, &b| c.names[a].cmp(&c.names[b]));
        let complete = members
            .iter()
            .all(|&a| members.iter().all(|&b| a == b || adjacent(a, b)));
        let kept = keep_list
            .iter()
            .find_map(|k| members.iter().copied().find(|&m| &c.names[m] == k))
            .unwrap_or_else(|| {
                // members are in name order, so the strict comparison keeps
                // the smallest name among equal variances
                members
                    .iter()
                    .copied()
                    .reduce(|best, m| {
                        if c.values[(m, m)] > c.values[(best, best)] {
                            m
                        } else {
                            best
                        }
                    })
                    .expect("component is non-empty")
            });
        components.push(CollinearComponent {
            members: members.iter().map(|&m| c.names[m].clone()).collect(),
            kept: c.names[kept].clone(),
            complete,
        });
    }
    components.sort_by(|a, b| a.members[0].cmp(&b.members[0]));
    Ok(CollinearityReport {
        threshold,
        components,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub threshold: f64,
    pub clusters: usize,
    pub clustered_variables: usize,
    /// Every cluster is a complete subgraph.
    pub all_complete: bool,
    pub report: CollinearityReport,
}

/// Component structure across a grid of thresholds, for picking the
/// smallest threshold whose clusters are all complete subgraphs.
pub fn collinearity_sweep(
    c: &CovMatrix,
    thresholds: &[f64],
    keep_list: &[String],
) -> Result<Vec<SweepEntry>> {
    thresholds
        .iter()
        .map(|&t| {
            let report = collinearity(c, t, keep_list)?;
            let clustered: BTreeSet<&str> = report
                .components
                .iter()
                .flat_map(|k| k.members.iter().map(String::as_str))
                .collect();
            Ok(SweepEntry {
                threshold: t,
                clusters: report.components.len(),
                clustered_variables: clustered.len(),
                all_complete: report.components.iter().all(|k| k.complete),
                report,
            })
        })
        .collect()
}

/// Parses a keep-list: one name per line, `#` starts a comment.
pub fn parse_keep_list(text: &str) -> Vec<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn corr(names: &[&str], r: &[f64]) -> CovMatrix {
        let p = names.len();
        CovMatrix::new(
            names.iter().map(|s| s.to_string()).collect(),
            DMatrix::from_row_slice(p, p, r),
            100,
            true,
        )
        .unwrap()
    }

    #[test]
    fn single_edge_component() {
        let c = corr(
            &["X1", "X2", "X3"],
            &[1.0, 0.95, 0.2, 0.95, 1.0, 0.3, 0.2, 0.3, 1.0],
        );
        let rep = collinearity(&c, 0.90, &[]).unwrap();
        assert_eq!(rep.components.len(), 1);
        assert_eq!(rep.components[0].members, vec!["X1", "X2"]);
        assert_eq!(rep.kept(), vec!["X1"]);
        assert_eq!(rep.ignored(), vec!["X2"]);
    }

    #[test]
    fn nothing_above_threshold() {
        let c = corr(&["a", "b"], &[1.0, 0.5, 0.5, 1.0]);
        assert!(collinearity(&c, 0.9, &[]).unwrap().is_empty());
    }

    #[test]
    fn chain_is_one_component() {
        let c = corr(
            &["A", "B", "C"],
            &[1.0, 0.92, 0.3, 0.92, 1.0, 0.91, 0.3, 0.91, 1.0],
        );
        let rep = collinearity(&c, 0.9, &[]).unwrap();
        assert_eq!(rep.components.len(), 1);
        assert_eq!(rep.components[0].members, vec!["A", "B", "C"]);
        assert!(!rep.components[0].complete);
    }

    #[test]
    fn negative_correlation_counts() {
        let c = corr(&["a", "b"], &[1.0, -0.97, -0.97, 1.0]);
        assert_eq!(collinearity(&c, 0.9, &[]).unwrap().components.len(), 1);
    }

    #[test]
    fn keeps_largest_variance_unless_overridden() {
        let c = CovMatrix::new(
            vec!["a".into(), "b".into()],
            DMatrix::from_row_slice(2, 2, &[1.0, 1.98, 1.98, 4.0]),
            50,
            false,
        )
        .unwrap();
        assert_eq!(collinearity(&c, 0.9, &[]).unwrap().kept(), vec!["b"]);
        let keep = vec!["a".to_string()];
        assert_eq!(collinearity(&c, 0.9, &keep).unwrap().kept(), vec!["a"]);
    }

    #[test]
    fn threshold_range_checked() {
        let c = corr(&["a", "b"], &[1.0, 0.5, 0.5, 1.0]);
        assert!(collinearity(&c, 0.0, &[]).is_err());
        assert!(collinearity(&c, 1.1, &[]).is_err());
        assert!(collinearity(&c, 1.0, &[]).is_ok());
    }

    #[test]
    fn sweep_reports_completeness() {
        let c = corr(
            &["A", "B", "C"],
            &[1.0, 0.92, 0.3, 0.92, 1.0, 0.91, 0.3, 0.91, 1.0],
        );
        let sweep = collinearity_sweep(&c, &[0.9, 0.915, 0.95], &[]).unwrap();
        assert!(!sweep[0].all_complete);
        assert_eq!(sweep[1].clusters, 1);
        assert!(sweep[1].all_complete);
        assert_eq!(sweep[2].clusters, 0);
    }

    #[test]
    fn keep_list_comments() {
        assert_eq!(
            parse_keep_list("# kept\ntfsum\n  doclen # general\n\n"),
            vec!["tfsum", "doclen"]
        );
    }
}
