//! Feature attribution: Integrated Gradients for differentiable models,
//! Kernel SHAP and exact Shapley values for any scorer, and the reduction of
//! per-instance attributions to normalized importance rankings.

mod ig;
mod importance;
mod shap;

use serde::{Deserialize, Serialize};

pub use ig::{integrated_gradients, integrated_gradients_batch, Baseline, IgConfig};
pub use importance::{
    compare_rankings, compare_rankings_lenient, global_importance, ImportanceReport,
    RankingComparison,
};
pub use shap::{
    exact_shapley, kernel_shap, kernel_shap_batch, model_scorer, ShapConfig, ShapMode,
    EXACT_SHAPLEY_MAX_FEATURES, MAX_EXACT_THRESHOLD,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributionMethod {
    IntegratedGradients,
    KernelShap,
    ExactShapley,
}

impl AttributionMethod {
    /// Short tag used in file names.
    pub fn tag(self) -> &'static str {
        match self {
            AttributionMethod::IntegratedGradients => "ig",
            AttributionMethod::KernelShap => "shap",
            AttributionMethod::ExactShapley => "shapley",
        }
    }
}

/// Per-feature attribution for one explained instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionVector {
    pub values: Vec<f64>,
    pub instance: Vec<f64>,
    /// IG reference point, or the column means of the SHAP background.
    pub baseline: Vec<f64>,
    pub method: AttributionMethod,
    /// Model output at the instance.
    pub prediction: f64,
    /// Model output at the baseline (IG) or mean output over the background (SHAP).
    pub reference_value: f64,
    /// `|sum(values) - (prediction - reference_value)|`.
    pub completeness_gap: f64,
}

impl AttributionVector {
    pub(crate) fn new(
        values: Vec<f64>,
        instance: Vec<f64>,
        baseline: Vec<f64>,
        method: AttributionMethod,
        prediction: f64,
        reference_value: f64,
    ) -> Self {
        let total: f64 = values.iter().sum();
        let completeness_gap = (total - (prediction - reference_value)).abs();
        Self {
            values,
            instance,
            baseline,
            method,
            prediction,
            reference_value,
            completeness_gap,
        }
    }
}
