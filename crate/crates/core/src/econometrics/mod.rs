//! Pooled OLS with heteroskedasticity-robust errors and the diagnostics that
//! go with it: VIF, two-way variance decomposition, orthogonalised
//! interactions and grand-mean elasticities.

mod anova;
mod elasticity;
mod ols;
mod orthogonal;
mod spec;
mod suite;
mod vif;

pub use anova::{
    decomposition_markdown, decomposition_rows, variance_decomposition, VarianceDecomposition,
    DECOMPOSITION_HEADER,
};
pub use elasticity::{
    compute_elasticities, elasticity, read_provenance, resolve_means, write_elasticities_csv,
    ElasticityInput, ElasticityRow,
};
pub use ols::{
    build_design, f_pvalue, fit_design, pooled_ols, robust_se, significance_stars, Coefficient,
    Design, HcType, RegressionResult, RobustCovariance, INTERCEPT,
};
pub use orthogonal::{interaction_term, orthogonalize, orthogonalize_series};
pub use spec::{read_specs, Interaction, OrthoMode, RegressionSpec, Regressor};
pub use suite::{run_model_suite, ModelSuite, SuiteColumn};
pub use vif::{vif, VifResult};
