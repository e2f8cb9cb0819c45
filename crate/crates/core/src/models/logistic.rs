use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use super::{
    bce_from_logit, check_training_inputs, check_width, sigmoid, Classifier, Differentiable,
    ModelKind, OutputSpace, TrainConfig,
};
use crate::data::ClassWeights;
use crate::{Error, Result};

/// Stop once every gradient component is at most this in magnitude.
pub const GRADIENT_TOLERANCE: f64 = 1e-6;

const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

struct Objective<'a> {
    x: &'a Array2<f64>,
    y: &'a [u8],
    sample_weights: Array1<f64>,
    l2: f64,
}

impl Objective<'_> {
    fn logits(&self, w: &Array1<f64>, b: f64) -> Array1<f64> {
        self.x.dot(w) + b
    }

    fn loss(&self, w: &Array1<f64>, b: f64) -> f64 {
        let z = self.logits(w, b);
        let n = self.y.len() as f64;
        let data: f64 = z
            .iter()
            .zip(self.y)
            .zip(&self.sample_weights)
            .map(|((&z, &y), &s)| s * bce_from_logit(z, y))
            .sum();
        data / n + 0.5 * self.l2 * w.dot(w)
    }

    fn gradient(&self, w: &Array1<f64>, b: f64) -> (Array1<f64>, f64) {
        let z = self.logits(w, b);
        let n = self.y.len() as f64;
        let residual: Array1<f64> = z
            .iter()
            .zip(self.y)
            .zip(&self.sample_weights)
            .map(|((&z, &y), &s)| s * (sigmoid(z) - f64::from(y)))
            .collect();
        let gw = self.x.t().dot(&residual) / n + self.l2 * w;
        (gw, residual.sum() / n)
    }
}

impl LogisticModel {
    /// Minimizes class-weighted cross-entropy plus `l2/2 * |w|^2` by full-batch
    /// gradient descent from zero. Each step starts at `cfg.learning_rate` and
    /// is halved until the Armijo condition holds.
    pub fn fit(x: &Array2<f64>, y: &[u8], cw: &ClassWeights, cfg: &TrainConfig) -> Result<Self> {
        Ok(Self::fit_with_history(x, y, cw, cfg)?.0)
    }

    /// As [`LogisticModel::fit`], also returning the loss after every accepted step
    /// (the first entry is the loss at the zero initialization).
    pub fn fit_with_history(
        x: &Array2<f64>,
        y: &[u8],
        cw: &ClassWeights,
        cfg: &TrainConfig,
    ) -> Result<(Self, Vec<f64>)> {
        check_training_inputs(x, y)?;
        cfg.validate()?;
        let obj = Objective {
            x,
            y,
            sample_weights: y.iter().map(|&l| cw.weight_for(l)).collect(),
            l2: cfg.l2_penalty,
        };
        let mut w = Array1::<f64>::zeros(x.ncols());
        let mut b = 0.0;
        let mut loss = obj.loss(&w, b);
        let mut history = vec![loss];

        for epoch in 0..cfg.max_epochs {
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch });
            }
            let (gw, gb) = obj.gradient(&w, b);
            let gnorm_inf = gw.iter().fold(gb.abs(), |m, g| m.max(g.abs()));
            if gnorm_inf <= GRADIENT_TOLERANCE {
                break;
            }
            let gsq = gw.dot(&gw) + gb * gb;
            let mut step = cfg.learning_rate;
            let accepted = loop {
                let w_try = &w - &(step * &gw);
                let b_try = b - step * gb;
                let l_try = obj.loss(&w_try, b_try);
                if l_try.is_finite() && l_try <= loss - ARMIJO * step * gsq {
                    break Some((w_try, b_try, l_try));
                }
                step *= 0.5;
                if step < MIN_STEP {
                    break None;
                }
            };
            match accepted {
                Some((w_new, b_new, l_new)) => {
                    w = w_new;
                    b = b_new;
                    loss = l_new;
                    history.push(loss);
                }
                // no descent left at machine precision
                None => break,
            }
        }
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch: cfg.max_epochs,
            });
        }
        Ok((
            Self {
                weights: w.to_vec(),
                bias: b,
            },
            history,
        ))
    }

    fn logit(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }
}

impl Classifier for LogisticModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Logistic
    }

    fn n_features(&self) -> usize {
        self.weights.len()
    }

    fn predict_row(&self, x: ArrayView1<'_, f64>) -> f64 {
        let z: f64 = self.weights.iter().zip(x.iter()).map(|(w, v)| w * v).sum::<f64>() + self.bias;
        sigmoid(z)
    }

    fn as_differentiable(&self) -> Option<&dyn Differentiable> {
        Some(self)
    }
}

impl Differentiable for LogisticModel {
    fn output(&self, x: &[f64], space: OutputSpace) -> Result<f64> {
        check_width(self.weights.len(), x.len())?;
        let z = self.logit(x);
        Ok(match space {
            OutputSpace::Probability => sigmoid(z),
            OutputSpace::Logit => z,
        })
    }

    fn input_gradient(&self, x: &[f64], space: OutputSpace) -> Result<Vec<f64>> {
        check_width(self.weights.len(), x.len())?;
        let scale = match space {
            OutputSpace::Probability => {
                let s = sigmoid(self.logit(x));
                s * (1.0 - s)
            }
            OutputSpace::Logit => 1.0,
        };
        Ok(self.weights.iter().map(|w| scale * w).collect())
    }
}
