//! Maximum-likelihood estimation of structural equation models in RAM form.
//!
//! Implied covariance: `Σ = F (I - A)^-1 S (I - A)^-T F'`.
//! Discrepancy: `F = ln|Σ| - ln|S| + tr(S Σ^-1) - p`, with `χ² = (n - 1) F`.

mod chisq;
mod compare;
mod discrepancy;
mod estimate;
mod indices;
mod optimizer;
mod ram;
mod report;

pub use chisq::{chisq_cdf, chisq_sf, noncentral_chisq_cdf, noncentrality_for};
pub use compare::{compare_information, compare_nested, InformationComparison, NestedComparison};
pub use discrepancy::{implied_cov, ml_fit_value, Discrepancy};
pub use estimate::{estimate, Convergence, EstimateOptions, FitResult, ParameterEstimate, RSquared};
pub use indices::{baseline_chisq, fit_indices, rmsea, srmr, Baseline, FitIndices, Rmsea};
pub use optimizer::{minimize, OptimOutcome};
pub use ram::{build_ram, path_id, Cell, FixedCell, Matrix, ParamKind, RamSystem};
pub use report::render_text;
