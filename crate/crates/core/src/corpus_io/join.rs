use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::matrix::VariableMatrix;
use super::records::{qrel_index, FeatureRecord, QrelRecord, RunRecord};
use super::table::LabeledMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JoinedRow {
    pub query_id: String,
    pub doc_id: String,
    /// `None` for rows that did not come from a run.
    pub rank: Option<u32>,
    pub score: Option<f64>,
    pub qrel: u32,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JoinedTable {
    pub feature_names: Vec<String>,
    pub rows: Vec<JoinedRow>,
}

/// Counts reported alongside a join.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinDiagnostics {
    pub joined: usize,
    /// Run records without a matching feature record.
    pub dropped: usize,
    /// Joined rows whose qrel was absent and defaulted to 0.
    pub unjudged_defaulted: usize,
}

fn feature_names(feats: &[FeatureRecord]) -> Vec<String> {
    feats
        .first()
        .map(|f| f.names().map(str::to_string).collect())
        .unwrap_or_default()
}

/// Links every run record to the feature record of the same
/// `(query_id, doc_id)`. Unjudged documents get qrel 0; run records without
/// features are dropped and counted.
pub fn join(
    run: &[RunRecord],
    qrels: &[QrelRecord],
    feats: &[FeatureRecord],
) -> (JoinedTable, JoinDiagnostics) {
    let names = feature_names(feats);
    let qrel_of = qrel_index(qrels);
    let feat_of: HashMap<(&str, &str), &FeatureRecord> = feats
        .iter()
        .map(|f| ((f.query_id.as_str(), f.doc_id.as_str()), f))
        .collect();

    let mut diag = JoinDiagnostics::default();
    let mut rows = Vec::with_capacity(run.len());
    for r in run {
        let key = (r.query_id.as_str(), r.doc_id.as_str());
        let Some(f) = feat_of.get(&key) else {
            diag.dropped += 1;
            continue;
        };
        let qrel = match qrel_of.get(&key) {
            Some(&q) => q,
            None => {
                diag.unjudged_defaulted += 1;
                0
            }
        };
        rows.push(JoinedRow {
            query_id: r.query_id.clone(),
            doc_id: r.doc_id.clone(),
            rank: Some(r.rank),
            score: Some(r.score),
            qrel,
            features: f.features.iter().map(|&(_, v)| v).collect(),
        });
    }
    diag.joined = rows.len();
    (
        JoinedTable {
            feature_names: names,
            rows,
        },
        diag,
    )
}

/// A table built from feature records alone (no run). The qrel comes from
/// `qrels` when judged, otherwise from the record's own label.
pub fn from_features(feats: &[FeatureRecord], qrels: &[QrelRecord]) -> JoinedTable {
    let qrel_of = qrel_index(qrels);
    let rows = feats
        .iter()
        .map(|f| JoinedRow {
            query_id: f.query_id.clone(),
            doc_id: f.doc_id.clone(),
            rank: None,
            score: None,
            qrel: qrel_of
                .get(&(f.query_id.as_str(), f.doc_id.as_str()))
                .copied()
                .unwrap_or(f.label),
            features: f.features.iter().map(|&(_, v)| v).collect(),
        })
        .collect();
    JoinedTable {
        feature_names: feature_names(feats),
        rows,
    }
}

impl JoinedTable {
    pub fn query_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.rows.iter().map(|r| r.query_id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Flattens to labelled columns `query_id, doc_id` and numeric columns
    /// `rank, score` (when every row has them), `qrel`, then the features.
    pub fn to_labeled(&self) -> Result<LabeledMatrix> {
        if self.rows.is_empty() {
            return Err(Error::Data("joined table has no rows".into()));
        }
        let mut pairs: Vec<(String, Vec<f64>)> = Vec::new();
        if self.rows.iter().all(|r| r.rank.is_some()) {
            pairs.push((
                "rank".into(),
                self.rows.iter().map(|r| f64::from(r.rank.unwrap_or(0))).collect(),
            ));
            pairs.push((
                "score".into(),
                self.rows.iter().map(|r| r.score.unwrap_or(f64::NAN)).collect(),
            ));
        }
        pairs.push((
            "qrel".into(),
            self.rows.iter().map(|r| f64::from(r.qrel)).collect(),
        ));
        for (j, name) in self.feature_names.iter().enumerate() {
            pairs.push((name.clone(), self.rows.iter().map(|r| r.features[j]).collect()));
        }
        let labels = vec![
            (
                "query_id".to_string(),
                self.rows.iter().map(|r| r.query_id.clone()).collect(),
            ),
            (
                "doc_id".to_string(),
                self.rows.iter().map(|r| r.doc_id.clone()).collect(),
            ),
        ];
        LabeledMatrix::new(labels, VariableMatrix::from_pairs(pairs)?)
    }
}

/// Averages every feature over each query's rows and appends the supplied
/// per-query effectiveness as column `effectiveness_name`. Rows are ordered
/// by ascending query id.
pub fn aggregate_by_query(
    t: &JoinedTable,
    effectiveness: &BTreeMap<String, f64>,
    effectiveness_name: &str,
) -> Result<VariableMatrix> {
    let mut groups: BTreeMap<&str, Vec<&JoinedRow>> = BTreeMap::new();
    for row in &t.rows {
        groups.entry(row.query_id.as_str()).or_default().push(row);
    }
    if groups.is_empty() {
        return Err(Error::Data("joined table has no rows".into()));
    }
    let k = t.feature_names.len();
    let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(groups.len()); k + 1];
    for (qid, rows) in &groups {
        let eff = effectiveness.get(*qid).ok_or_else(|| {
            Error::Data(format!("no effectiveness value for query {qid:?}"))
        })?;
        for (j, col) in columns.iter_mut().take(k).enumerate() {
            let sum: f64 = rows.iter().map(|r| r.features[j]).sum();
            col.push(sum / rows.len() as f64);
        }
        columns[k].push(*eff);
    }
    let mut names = t.feature_names.clone();
    names.push(effectiveness_name.to_string());
    VariableMatrix::new(names, columns)
}
