//! Defect-prediction toolkit.
//!
//! Trains class-level ("traditional") and commit-level ("just-in-time")
//! defect classifiers, evaluates them with accuracy and ROC AUC, and explains
//! them with Integrated Gradients and Kernel SHAP. Attributions are reduced
//! to max-normalized importance rankings that can be compared across methods.
//!
//! Module map:
//! - [`data`]: schemas, CSV ingestion, stratified splitting, standardization,
//!   class weights, synthetic data.
//! - [`models`]: logistic regression, random forest, and the 64/32/20/10/1 MLP.
//! - [`metrics`]: accuracy, confusion counts, midrank AUC.
//! - [`attribution`]: Integrated Gradients, Kernel SHAP, exact Shapley values,
//!   importance aggregation and ranking comparison.
//! - [`pipeline`]: the end-to-end experiment and its JSON report.
//! - [`cli`]: command implementations behind the `defectlens` binary.

pub mod attribution;
pub mod cli;
pub mod data;
mod error;
pub mod metrics;
pub mod models;
pub mod pipeline;
mod rng;

pub use error::{Error, ErrorCategory, Result};
