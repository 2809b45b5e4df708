//! Maximum-entropy LP copula models for mixed discrete/continuous pairs.
//!
//! A single fitted [`MaxEntCopulaModel`] drives every downstream tool in this
//! crate:
//!
//! - [`marginals`]: empirical, tabulated and negative binomial marginals.
//! - [`lp_basis`]: orthonormal LP polynomials of the mid-distribution transform.
//! - [`comoments`]: LP co-means and penalised constraint selection.
//! - [`maxent`]: the log-bilinear copula, its exact partition function and fit.
//! - [`loglinear`]: Goodman association parameters, odds ratios, logratio biplots.
//! - [`inference`]: mutual information, G² and smooth-G² tests, permutation p-values.
//! - [`logistic`]: copula-logistic regression and LP feature matrices.
//!
//! ```
//! use lpcop_core::{datasets, fit_table, g2_test, FitConfig};
//!
//! let table = datasets::hellman();
//! let fit = fit_table(&table, &FitConfig::default()).unwrap();
//! assert_eq!(fit.model.terms(), &[(1, 1)]);
//! assert!((g2_test(&table).statistic - 2.50).abs() < 0.02);
//! ```

pub mod comoments;
pub mod datasets;
pub mod error;
pub mod inference;
pub mod logistic;
pub mod loglinear;
pub mod lp_basis;
pub mod marginals;
pub mod maxent;
pub mod pipeline;
pub mod table;

pub use comoments::{
    comoments, comoments_table, select, select_all, select_with, CoMomentTable, Penalty, SelectionResult, Term,
};
pub use error::{Error, Result};
pub use inference::{
    chi_square_sf, empirical_mi, feature_importance, g2_test, mi_permutation_pvalue, mutual_information,
    smooth_g2_fitted, smooth_g2_test, FeatureScore, TestMethod, TestReport,
};
pub use logistic::{
    ccd_route_probability, feature_matrix, ls_plot, CopulaLogisticModel, FeatureMatrix, FeatureSchema, Variable,
};
pub use loglinear::{
    biplot_coordinates, intrinsic_association, log_odds_ratio, plugin_loglinear, to_loglinear, Biplot, LogLinearModel,
};
pub use lp_basis::{max_degree_default, LpBasis, DEFAULT_DEGREE_CAP};
pub use marginals::{
    fit_negbin, truncate_parametric, truncate_parametric_covering, Marginal, MarginalKind, NegBinomialParams,
    ParametricFamily,
};
pub use maxent::{
    fit, fit_with, log_partition, log_partition_gradient, CcdSlice, FitOptions, FitReport, MaxEntCopulaModel, Side,
};
pub use pipeline::{
    bases_for_pairs, bases_for_table, fit_comoments, fit_pairs, fit_table, FitConfig, FittedCopula, MarginalMode,
};
pub use table::ContingencyTable;
