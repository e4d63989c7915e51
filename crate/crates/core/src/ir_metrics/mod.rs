//! Retrieval-side variables: the per-document precision transform, ranked
//! list metrics, retrievability, rank correlations and term weights.
//!
//! Logarithms are natural except for the log2 discount in NDCG.

mod correlation;
mod ranked;
mod retrievability;
mod termstats;

pub use correlation::{kendall_tau, scores_from_order, spearman_rho};
pub use ranked::{
    average_precision, doc_precision, ndcg, precision_at, ranked_lists, total_relevant,
    RankedEntry, RankedList, DOC_PRECISION_FORMULA,
};
pub use retrievability::{retrievability, retrievability_all, RetrievabilityConfig, Utility};
pub use termstats::{
    bm25_components, vsm_components, Bm25Components, TermStats, VsmScore, VsmTerm, BM25_B,
    BM25_K1, TFIDF_FORMULA,
};
