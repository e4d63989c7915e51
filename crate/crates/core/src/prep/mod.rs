//! Data preparation: transforms, outlier handling, distribution diagnostics,
//! collinearity clusters, variance rescaling and exploratory PCA/EFA.

mod collinearity;
mod factor;
mod moments;
mod rescale;
mod transform;

pub use collinearity::{
    collinearity, collinearity_sweep, parse_keep_list, CollinearComponent, CollinearityReport,
    SweepEntry,
};
pub use factor::{efa, pca, FactorKind, FactorSolution};
pub use moments::{moments, qq_points, MomentsReport, VariableMoments};
pub use rescale::{rescale_variances, RescaleReport};
pub use transform::{log_shift, outliers_to_mean, OutlierCount, LOG_SHIFT_FORMULA};
