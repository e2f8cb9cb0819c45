use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AttributionMethod, AttributionVector};
use crate::models::{check_width, Classifier, OutputSpace};
use crate::{Error, Result};

/// Reference point of the integration path.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    /// The origin of the model's (standardized) input space, i.e. the
    /// training mean in raw units.
    #[default]
    ZeroInStandardizedSpace,
    Custom(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IgConfig {
    /// Number of midpoint-rule evaluations along the path.
    pub steps: usize,
    pub baseline: Baseline,
    pub output: OutputSpace,
}

impl Default for IgConfig {
    fn default() -> Self {
        Self {
            steps: 64,
            baseline: Baseline::ZeroInStandardizedSpace,
            output: OutputSpace::Probability,
        }
    }
}

impl IgConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::Config("integrated gradients needs steps >= 1".into()));
        }
        if let Baseline::Custom(b) = &self.baseline {
            if b.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config("baseline has non-finite entries".into()));
            }
        }
        Ok(())
    }

    fn baseline_for(&self, p: usize) -> Result<Vec<f64>> {
        match &self.baseline {
            Baseline::ZeroInStandardizedSpace => Ok(vec![0.0; p]),
            Baseline::Custom(b) => {
                check_width(p, b.len())?;
                Ok(b.clone())
            }
        }
    }
}

/// Integrated Gradients of `model` at `x`.
///
/// The path integral from the baseline `x'` to `x` is approximated with the
/// midpoint rule: `IG_i = (x_i - x'_i) / m * sum_k dF/dx_i(x' + (k - 1/2)/m (x - x'))`,
/// which is exact whenever the gradient is constant along the path.
pub fn integrated_gradients(
    model: &dyn Classifier,
    x: &[f64],
    cfg: &IgConfig,
) -> Result<AttributionVector> {
    let f = model
        .as_differentiable()
        .ok_or(Error::NonDifferentiableModel(model.kind().as_str()))?;
    cfg.validate()?;
    let p = model.n_features();
    check_width(p, x.len())?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("instance has non-finite entries".into()));
    }
    let baseline = cfg.baseline_for(p)?;
    let delta: Vec<f64> = x.iter().zip(&baseline).map(|(a, b)| a - b).collect();

    let m = cfg.steps;
    let mut grad_sum = vec![0.0; p];
    let mut point = vec![0.0; p];
    for k in 0..m {
        let alpha = (k as f64 + 0.5) / m as f64;
        for i in 0..p {
            point[i] = baseline[i] + alpha * delta[i];
        }
        let g = f.input_gradient(&point, cfg.output)?;
        for (acc, gi) in grad_sum.iter_mut().zip(g) {
            *acc += gi;
        }
    }
    let values = delta
        .iter()
        .zip(&grad_sum)
        .map(|(d, g)| d * g / m as f64)
        .collect();
    let prediction = f.output(x, cfg.output)?;
    let reference = f.output(&baseline, cfg.output)?;
    Ok(AttributionVector::new(
        values,
        x.to_vec(),
        baseline,
        AttributionMethod::IntegratedGradients,
        prediction,
        reference,
    ))
}

/// Integrated Gradients for every row of `rows`, in row order.
pub fn integrated_gradients_batch(
    model: &dyn Classifier,
    rows: &Array2<f64>,
    cfg: &IgConfig,
) -> Result<Vec<AttributionVector>> {
    check_width(model.n_features(), rows.ncols())?;
    let rows: Vec<Vec<f64>> = rows.rows().into_iter().map(|r| r.to_vec()).collect();
    rows.par_iter()
        .map(|x| integrated_gradients(model, x, cfg))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Differentiable, ForestModel, LogisticModel, MlpModel, ModelKind};
    use ndarray::ArrayView1;

    /// `F(x) = w . x`, with no squashing.
    struct Linear(Vec<f64>);

    impl Classifier for Linear {
        fn kind(&self) -> ModelKind {
            ModelKind::Logistic
        }
        fn n_features(&self) -> usize {
            self.0.len()
        }
        fn predict_row(&self, x: ArrayView1<'_, f64>) -> f64 {
            self.0.iter().zip(x.iter()).map(|(w, v)| w * v).sum()
        }
        fn as_differentiable(&self) -> Option<&dyn Differentiable> {
            Some(self)
        }
    }

    impl Differentiable for Linear {
        fn output(&self, x: &[f64], _: OutputSpace) -> Result<f64> {
            Ok(self.0.iter().zip(x).map(|(w, v)| w * v).sum())
        }
        fn input_gradient(&self, _: &[f64], _: OutputSpace) -> Result<Vec<f64>> {
            Ok(self.0.clone())
        }
    }

    #[test]
    fn linear_model_exact_for_any_steps() {
        let f = Linear(vec![2.0, -1.0]);
        for steps in [1, 3, 64] {
            let cfg = IgConfig {
                steps,
                ..IgConfig::default()
            };
            let a = integrated_gradients(&f, &[1.0, 1.0], &cfg).unwrap();
            assert_eq!(a.values, vec![2.0, -1.0]);
            assert!(a.completeness_gap < 1e-15);
        }
    }

    #[test]
    fn single_feature_sigmoid_completeness() {
        let m = LogisticModel {
            weights: vec![1.0],
            bias: 0.0,
        };
        let cfg = IgConfig {
            steps: 4096,
            ..IgConfig::default()
        };
        let a = integrated_gradients(&m, &[2.0], &cfg).unwrap();
        // sigmoid(2) - sigmoid(0)
        assert!((a.values[0] - 0.380_797_077_977_882_4).abs() < 1e-6);
    }

    #[test]
    fn constant_model_gives_zero() {
        let mut m = MlpModel::initialize(3, 0.0, 1);
        for l in &mut m.layers {
            l.weights.fill(0.0);
        }
        let a = integrated_gradients(&m, &[1.0, -2.0, 0.5], &IgConfig::default()).unwrap();
        assert_eq!(a.values, vec![0.0; 3]);
        assert!(a.completeness_gap < 1e-15);
    }

    #[test]
    fn custom_baseline_and_width_checks() {
        let f = Linear(vec![1.0, 1.0]);
        let cfg = IgConfig {
            baseline: Baseline::Custom(vec![1.0, 0.0]),
            ..IgConfig::default()
        };
        let a = integrated_gradients(&f, &[3.0, 2.0], &cfg).unwrap();
        assert_eq!(a.values, vec![2.0, 2.0]);
        assert_eq!(a.baseline, vec![1.0, 0.0]);
        assert!(matches!(
            integrated_gradients(&f, &[1.0], &IgConfig::default()),
            Err(Error::WidthMismatch { .. })
        ));
        let bad = IgConfig {
            baseline: Baseline::Custom(vec![0.0]),
            ..IgConfig::default()
        };
        assert!(integrated_gradients(&f, &[1.0, 1.0], &bad).is_err());
        let zero = IgConfig {
            steps: 0,
            ..IgConfig::default()
        };
        assert!(matches!(integrated_gradients(&f, &[1.0, 1.0], &zero), Err(Error::Config(_))));
    }

    #[test]
    fn forest_is_rejected() {
        let forest = ForestModel {
            n_features: 2,
            trees: Vec::new(),
            tree_seeds: Vec::new(),
        };
        assert!(matches!(
            integrated_gradients(&forest, &[0.0, 0.0], &IgConfig::default()),
            Err(Error::NonDifferentiableModel("forest"))
        ));
    }

    #[test]
    fn logit_space_completeness() {
        let m = MlpModel::initialize(4, 0.0, 9);
        let cfg = IgConfig {
            steps: 512,
            output: OutputSpace::Logit,
            ..IgConfig::default()
        };
        let a = integrated_gradients(&m, &[0.3, -1.2, 0.8, 2.0], &cfg).unwrap();
        assert!(a.completeness_gap <= 1e-3 * (a.prediction - a.reference_value).abs().max(1.0));
    }

    #[test]
    fn batch_preserves_order() {
        let m = MlpModel::initialize(3, 0.0, 2);
        let rows = ndarray::array![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.5, -0.5, 2.0]];
        let batch = integrated_gradients_batch(&m, &rows, &IgConfig::default()).unwrap();
        for (r, a) in batch.iter().enumerate() {
            let single = integrated_gradients(&m, &rows.row(r).to_vec(), &IgConfig::default()).unwrap();
            assert_eq!(*a, single);
        }
    }
}
