//! Reading runs, qrels and feature files; joining them; moving between
//! tables, matrices and covariance files.

mod covfile;
mod join;
mod matrix;
mod records;
mod table;

pub use covfile::{read_cov, write_cov};
pub use join::{aggregate_by_query, from_features, join, JoinDiagnostics, JoinedRow, JoinedTable};
pub use matrix::{covariance, mean, variance, CovInput, CovKind, CovMatrix, VariableMatrix};
pub use records::{
    parse_features, parse_qrels, parse_run, parse_schema, FeatureFormat, FeatureRecord,
    FeatureSchema, QrelRecord, RunRecord,
};
pub use table::{read_csv, write_csv, LabeledMatrix};
