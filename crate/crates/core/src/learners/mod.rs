//! Classical learners and statistics backing the metrics and analyses.

pub mod gbt;
mod lbfgs;
pub mod logistic;
pub mod stats;

pub use gbt::{fit_tree_ensemble, GbtConfig, TreeEnsembleModel};
pub use logistic::{
    fit_linear_low_reg, fit_logistic, fit_logistic_cv, regularization_grid, LogisticModel,
    OneVsRestLinear,
};
pub use stats::{
    bin_equal_width, discrete_mi, discrete_mi_binned, entropy, fractional_ranks, ks_statistic,
    ols_variance_explained, spearman, OlsFit,
};
