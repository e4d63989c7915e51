//! Structural equation modeling for diagnosing information-retrieval
//! evaluation results.
//!
//! The crate is organised as a pipeline:
//!
//! - [`corpus_io`] reads runs, relevance judgments and learning-to-rank
//!   feature files, joins them and turns them into numeric matrices.
//! - [`prep`] cleans those matrices (log shift, outliers, collinearity,
//!   variance rescaling) and offers PCA/EFA diagnostics.
//! - [`model_dsl`] parses the model language (`<-`, `->`, `<->`).
//! - [`sem_engine`] fits models by maximum likelihood and reports fit indices.
//! - [`ir_metrics`] computes the retrieval-side variables (precision, AP,
//!   NDCG, retrievability, BM25/VSM term-weight components).

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod corpus_io;
pub mod error;
pub mod ir_metrics;
pub mod model_dsl;
pub mod prep;
pub mod sem_engine;

pub use error::{Error, Result};
