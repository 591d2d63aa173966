//! Binary expansion linear effect (BELIEF) models for a binary response.
//!
//! Predictors are expanded into sign bits, observations are reduced to
//! per-cell counts and response sums, and the saturated linear model of
//! `E[B | bits]` over all bit products is estimated through Walsh-Hadamard
//! transforms of the cell means.
//!
//! - [`expansion`] - rescaling and dyadic bit expansion of raw columns
//! - [`bitalgebra`] - interaction masks, the fast WHT and GF(2) subgroups
//! - [`estimator`] - least-squares, Moore-Penrose and ridge slope estimates
//! - [`model`] - JSON persistence of fitted models
//! - [`glm_bridge`] - translation between GLM and BELIEF coefficients
//! - [`inference`] - slope tests and conditional-independence statements
//! - [`simharness`] - simulation scenarios, logistic baseline, ROC/AUC

pub mod bitalgebra;
pub mod error;
pub mod estimator;
pub mod expansion;
pub mod glm_bridge;
pub mod inference;
pub mod model;
pub mod simharness;
pub mod special;

pub use bitalgebra::{
    hadamard_entry, wht, wht_in_place, BitLabel, InteractionMask, Subgroup, XorKernelMatrix,
};
pub use error::{BeliefError, Result};
pub use estimator::{
    aggregate, check_bounds, classify_degeneracy, covariance, detect_separation, fit_lse, fit_mp,
    fit_ridge, predict, BeliefFit, CellTable, DegeneracyCase, DegeneracyReport, EstimatorKind,
    Prediction, SlopeCovariance,
};
pub use expansion::{
    binary_expand, build_panel, ecdf_rescale, BitPanel, Expander, ExpansionConfig, RawColumn,
    VariableSpec,
};
pub use glm_bridge::{
    belief_to_glm, glm_to_belief, hidden_interaction_report, taylor_sensitivity, BitWeighting,
    GlmCoefs, HiddenInteractionMode, HiddenInteractionReport, Link, LinkFunction,
};
pub use inference::{
    independence_report, significant_slopes, CondIndepStatement, Correction, SlopeTest,
};
pub use model::BeliefModel;
pub use simharness::{generate, roc_auc, run_comparison, Comparison, RocCurve, Scenario};
