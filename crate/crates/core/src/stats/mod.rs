//! Model fitting: least squares, the hotspot scaling law, growth
//! regressions and distribution summaries.

pub mod growth;
pub mod ols;
pub mod scaling;
pub mod special;
pub mod summary;

pub use growth::{
    aic, f_statistic, fit_growth_model, optimal_compactness, select_by_aic, Coefficient,
    CompactnessIndex, GrowthObservation, ModelSpec, RegressionFit,
};
pub use ols::{ols, Design, OlsFit};
pub use scaling::{fit_scaling, ScalingFit, ScalingObservation, OUTLIER_Z};
pub use special::{f_sf, regularized_beta, t_pvalue};
pub use summary::{median, summarize_index, IndexSummary, SummaryWarning};
