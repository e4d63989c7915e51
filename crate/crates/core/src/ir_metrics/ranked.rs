use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus_io::{QrelRecord, RunRecord};
use crate::error::{Error, Result};

/// Per-document precision transform `ln(qrel + 1) / (rank + 1)`.
pub fn doc_precision(qrel: u32, rank: u32) -> f64 {
    (qrel as f64 + 1.0).ln() / (rank as f64 + 1.0)
}

pub const DOC_PRECISION_FORMULA: &str = "Y = ln(qrel + 1) / (rank + 1)";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub doc_id: String,
    pub rank: u32,
    pub qrel: u32,
}

/// One query's result list in rank order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedList {
    pub query_id: String,
    entries: Vec<RankedEntry>,
}

impl RankedList {
    /// Ranks must start at 1 or later and increase strictly.
    pub fn new(query_id: impl Into<String>, entries: Vec<RankedEntry>) -> Result<Self> {
        let query_id = query_id.into();
        let mut prev = 0;
        for e in &entries {
            if e.rank <= prev {
                return Err(Error::Data(format!(
                    "query {query_id}: rank {} of {} does not increase on rank {prev}",
                    e.rank, e.doc_id
                )));
            }
            prev = e.rank;
        }
        Ok(RankedList { query_id, entries })
    }

    /// A list from bare qrels at ranks 1, 2, ...
    pub fn from_qrels(query_id: impl Into<String>, qrels: &[u32]) -> Self {
        let entries = qrels
            .iter()
            .enumerate()
            .map(|(i, &q)| RankedEntry {
                doc_id: format!("d{}", i + 1),
                rank: i as u32 + 1,
                qrel: q,
            })
            .collect();
        RankedList {
            query_id: query_id.into(),
            entries,
        }
    }

    pub fn entries(&self) -> &[RankedEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn qrels(&self) -> impl Iterator<Item = u32> + '_ {
        self.entries.iter().map(|e| e.qrel)
    }
}

/// Groups run records by query (ascending id) in rank order; documents
/// without a judgement get qrel 0. Ranks are taken as given.
pub fn ranked_lists(run: &[RunRecord], qrels: &[QrelRecord]) -> Result<Vec<RankedList>> {
    let judged: BTreeMap<(&str, &str), u32> = qrels
        .iter()
        .map(|q| ((q.query_id.as_str(), q.doc_id.as_str()), q.qrel))
        .collect();
    let mut by_query: BTreeMap<&str, Vec<RankedEntry>> = BTreeMap::new();
    for r in run {
        by_query.entry(&r.query_id).or_default().push(RankedEntry {
            doc_id: r.doc_id.clone(),
            rank: r.rank,
            qrel: judged
                .get(&(r.query_id.as_str(), r.doc_id.as_str()))
                .copied()
                .unwrap_or(0),
        });
    }
    by_query
        .into_iter()
        .map(|(q, mut entries)| {
            entries.sort_by_key(|e| e.rank);
            RankedList::new(q, entries)
        })
        .collect()
}

/// Number of judged documents with `qrel >= threshold` per query.
pub fn total_relevant(qrels: &[QrelRecord], threshold: u32) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for q in qrels {
        let c = out.entry(q.query_id.clone()).or_insert(0);
        if q.qrel >= threshold {
            *c += 1;
        }
    }
    out
}

/// Relevant documents among the first `min(r, len)` entries, divided by `r`.
pub fn precision_at(l: &RankedList, r: usize, binarize_at: u32) -> f64 {
    if r == 0 {
        return 0.0;
    }
    let hits = l.qrels().take(r).filter(|&q| q >= binarize_at).count();
    hits as f64 / r as f64
}

/// Sum of the precision at each relevant position, over `total_relevant`.
pub fn average_precision(l: &RankedList, total_relevant: usize, binarize_at: u32) -> f64 {
    if total_relevant == 0 {
        return 0.0;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, q) in l.qrels().enumerate() {
        if q >= binarize_at {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / total_relevant as f64
}

fn dcg(qrels: impl Iterator<Item = u32>, cutoff: usize) -> f64 {
    qrels
        .take(cutoff)
        .enumerate()
        .map(|(i, q)| (2f64.powi(q as i32) - 1.0) / ((i + 2) as f64).log2())
        .sum()
}

/// NDCG with gain `2^qrel - 1` and discount `log2(i + 1)`; the ideal ordering
/// uses the list's own qrels.
pub fn ndcg(l: &RankedList, cutoff: usize) -> f64 {
    let mut ideal: Vec<u32> = l.qrels().collect();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg = dcg(ideal.into_iter(), cutoff);
    if idcg == 0.0 {
        return 0.0;
    }
    dcg(l.qrels(), cutoff) / idcg
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn doc_precision_values() {
        assert_eq!(doc_precision(0, 1), 0.0);
        assert_eq!(doc_precision(0, 57), 0.0);
        assert!((doc_precision(2, 1) - 3f64.ln() / 2.0).abs() < 1e-15);
        assert!((doc_precision(2, 1) - 0.5493).abs() < 1e-4);
        assert!(doc_precision(1, 1) > doc_precision(1, 9));
    }

    #[test]
    fn precision_examples() {
        let l = RankedList::from_qrels("q", &[1, 0, 1]);
        assert!((precision_at(&l, 3, 1) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(precision_at(&RankedList::from_qrels("q", &[1]), 5, 1), 0.2);
        assert_eq!(precision_at(&RankedList::from_qrels("q", &[0, 0]), 2, 1), 0.0);
        assert_eq!(precision_at(&RankedList::from_qrels("q", &[1, 2]), 2, 2), 0.5);
    }

    #[test]
    fn ap_examples() {
        let l = RankedList::from_qrels("q", &[1, 0, 1]);
        assert!((average_precision(&l, 2, 1) - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
        assert_eq!(average_precision(&RankedList::from_qrels("q", &[1, 1, 0]), 2, 1), 1.0);
        assert_eq!(average_precision(&RankedList::from_qrels("q", &[0, 0]), 3, 1), 0.0);
        assert_eq!(average_precision(&l, 0, 1), 0.0);
    }

    #[test]
    fn ndcg_examples() {
        let l = RankedList::from_qrels("q", &[2, 0, 1]);
        let idcg = 3.0 + 1.0 / 3f64.log2();
        assert!((ndcg(&l, 3) - 3.5 / idcg).abs() < 1e-12);
        assert!((ndcg(&l, 3) - 0.9639).abs() < 1e-4);
        assert_eq!(ndcg(&RankedList::from_qrels("q", &[3, 2, 0]), 3), 1.0);
        assert_eq!(ndcg(&RankedList::from_qrels("q", &[0, 0]), 2), 0.0);
    }

    #[test]
    fn rank_order_enforced() {
        let e = |d: &str, rank| RankedEntry {
            doc_id: d.into(),
            rank,
            qrel: 0,
        };
        assert!(RankedList::new("q", vec![e("a", 1), e("b", 3)]).is_ok());
        assert!(RankedList::new("q", vec![e("a", 2), e("b", 2)]).is_err());
        assert!(RankedList::new("q", vec![e("a", 0)]).is_err());
    }

    #[test]
    fn lists_from_run() {
        let run = vec![
            RunRecord { query_id: "2".into(), doc_id: "x".into(), rank: 2, score: 1.0, run_tag: "t".into() },
            RunRecord { query_id: "2".into(), doc_id: "y".into(), rank: 1, score: 2.0, run_tag: "t".into() },
            RunRecord { query_id: "1".into(), doc_id: "z".into(), rank: 1, score: 2.0, run_tag: "t".into() },
        ];
        let qrels = vec![QrelRecord { query_id: "2".into(), doc_id: "x".into(), qrel: 2 }];
        let lists = ranked_lists(&run, &qrels).unwrap();
        assert_eq!(lists[0].query_id, "1");
        let docs: Vec<_> = lists[1].entries().iter().map(|e| (e.doc_id.as_str(), e.qrel)).collect();
        assert_eq!(docs, vec![("y", 0), ("x", 2)]);
        assert_eq!(total_relevant(&qrels, 1)["2"], 1);
    }

    proptest! {
        #[test]
        fn relabeling_docs_changes_nothing(qrels in prop::collection::vec(0u32..4, 1..10), r in 1usize..12) {
            let a = RankedList::from_qrels("q", &qrels);
            let mut b = a.clone();
            for (i, e) in b.entries.iter_mut().enumerate() {
                e.doc_id = format!("other{}", 97 * i + 5);
            }
            prop_assert_eq!(ndcg(&a, r), ndcg(&b, r));
            prop_assert_eq!(precision_at(&a, r, 1), precision_at(&b, r, 1));
        }

        #[test]
        fn doc_precision_positive_iff_relevant(q in 0u32..10, rank in 1u32..1000) {
            prop_assert_eq!(doc_precision(q, rank) > 0.0, q >= 1);
        }
    }
}
