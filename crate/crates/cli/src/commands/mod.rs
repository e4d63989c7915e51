mod analysis;
mod data;
mod fit;
mod ir;

pub use analysis::{compare, run_efa, run_pca};
pub use data::{cov_export, cov_import, join, prep};
pub use fit::{fit, load_model, GroupOutcome, FIT_FORMULAS};
pub use ir::{metrics, retrievability, termweights};
