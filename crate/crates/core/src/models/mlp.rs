use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{
    bce_from_logit, check_training_inputs, check_width, sigmoid, Classifier, Differentiable,
    ModelKind, OutputSpace, TrainConfig,
};
use crate::data::{stratified_indices, ClassWeights};
use crate::metrics::auc;
use crate::rng::{derive_seed, seeded, Rng};
use crate::{Error, Result};

/// Widths of the hidden layers; a single sigmoid output neuron follows.
pub const HIDDEN_SIZES: [usize; 4] = [64, 32, 20, 10];

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// `y = W x + b`, with `W` stored as (outputs x inputs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl DenseLayer {
    fn glorot(fan_in: usize, fan_out: usize, rng: &mut Rng) -> Self {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let weights = Array2::from_shape_simple_fn((fan_out, fan_in), || {
            rng.random_range(-limit..limit)
        });
        Self {
            weights,
            bias: Array1::zeros(fan_out),
        }
    }

    /// Batch forward: rows of `input` are instances.
    fn forward(&self, input: &Array2<f64>) -> Array2<f64> {
        input.dot(&self.weights.t()) + &self.bias
    }
}

/// Dense ReLU network `p -> 64 -> 32 -> 20 -> 10 -> 1` with a sigmoid output.
///
/// Dropout is applied after every hidden layer during training only
/// (inverted dropout, so inference needs no rescaling).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layer_sizes: Vec<usize>,
    pub layers: Vec<DenseLayer>,
    pub dropout_rate: f64,
}

/// Per-layer (weights, bias) tensors: gradients and Adam moments.
type LayerTensors = Vec<(Array2<f64>, Array1<f64>)>;

struct Adam {
    m: LayerTensors,
    v: LayerTensors,
    t: i32,
}

impl Adam {
    fn new(layers: &[DenseLayer]) -> Self {
        let zeros = || {
            layers
                .iter()
                .map(|l| (Array2::zeros(l.weights.raw_dim()), Array1::zeros(l.bias.len())))
                .collect::<Vec<_>>()
        };
        Self {
            m: zeros(),
            v: zeros(),
            t: 0,
        }
    }

    fn step(&mut self, layers: &mut [DenseLayer], grads: &[(Array2<f64>, Array1<f64>)], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - BETA1.powi(self.t);
        let c2 = 1.0 - BETA2.powi(self.t);
        let update = |theta: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = BETA1 * *m + (1.0 - BETA1) * g;
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
            *theta -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
        };
        for (i, layer) in layers.iter_mut().enumerate() {
            let (gw, gb) = &grads[i];
            let (mw, mb) = &mut self.m[i];
            let (vw, vb) = &mut self.v[i];
            ndarray::Zip::from(&mut layer.weights)
                .and(mw)
                .and(vw)
                .and(gw)
                .for_each(|th, m, v, &g| update(th, m, v, g));
            ndarray::Zip::from(&mut layer.bias)
                .and(mb)
                .and(vb)
                .and(gb)
                .for_each(|th, m, v, &g| update(th, m, v, g));
        }
    }
}

impl MlpModel {
    /// Fresh Glorot-uniform network for `p` inputs.
    pub fn initialize(p: usize, dropout_rate: f64, seed: u64) -> Self {
        let mut rng = seeded(seed);
        let mut layer_sizes = vec![p];
        layer_sizes.extend(HIDDEN_SIZES);
        layer_sizes.push(1);
        let layers = layer_sizes
            .windows(2)
            .map(|w| DenseLayer::glorot(w[0], w[1], &mut rng))
            .collect();
        Self {
            layer_sizes,
            layers,
            dropout_rate,
        }
    }

    /// Trains with Adam on class-weighted cross-entropy in shuffled mini-batches.
    ///
    /// When `cfg.validation_fraction > 0`, a stratified slice of the training
    /// rows is held out; training stops after `early_stop_patience` epochs
    /// without a validation-AUC improvement and the best weights are restored.
    pub fn fit(x: &Array2<f64>, y: &[u8], cw: &ClassWeights, cfg: &TrainConfig) -> Result<Self> {
        check_training_inputs(x, y)?;
        cfg.validate()?;
        let mut model = Self::initialize(x.ncols(), cfg.dropout_rate, derive_seed(cfg.seed, 0));

        let (fit_rows, val_rows) = if cfg.validation_fraction > 0.0 {
            match stratified_indices(y, cfg.validation_fraction, derive_seed(cfg.seed, 1)) {
                Ok((train, val)) => (train, Some(val)),
                // too few rows of a class to hold any out
                Err(Error::DegenerateSplit { .. }) => ((0..y.len()).collect(), None),
                Err(e) => return Err(e),
            }
        } else {
            ((0..y.len()).collect(), None)
        };
        let validation = val_rows.map(|rows| {
            let labels: Vec<u8> = rows.iter().map(|&i| y[i]).collect();
            (x.select(Axis(0), &rows), labels)
        });

        let mut rng = seeded(derive_seed(cfg.seed, 2));
        let mut adam = Adam::new(&model.layers);
        let mut order = fit_rows;
        let mut best: Option<(f64, Vec<DenseLayer>)> = None;
        let mut stale = 0;

        for epoch in 0..cfg.max_epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(cfg.batch_size) {
                let xb = x.select(Axis(0), batch);
                let yb: Vec<u8> = batch.iter().map(|&i| y[i]).collect();
                let sw: Vec<f64> = yb.iter().map(|&l| cw.weight_for(l)).collect();
                let (loss, grads) = model.loss_and_gradients(&xb, &yb, &sw, cfg, &mut rng);
                if !loss.is_finite() {
                    return Err(Error::NonFiniteLoss { epoch });
                }
                adam.step(&mut model.layers, &grads, cfg.learning_rate);
            }

            if let Some((xv, yv)) = &validation {
                let scores = model.predict_proba(xv)?;
                if scores.iter().any(|s| !s.is_finite()) {
                    return Err(Error::NonFiniteLoss { epoch });
                }
                let score = auc(&scores, yv)?;
                if best.as_ref().is_none_or(|(b, _)| score > *b) {
                    best = Some((score, model.layers.clone()));
                    stale = 0;
                } else {
                    stale += 1;
                    if stale >= cfg.early_stop_patience {
                        break;
                    }
                }
            }
        }
        if let Some((_, layers)) = best {
            model.layers = layers;
        }
        Ok(model)
    }

    /// Mean weighted loss over the batch (plus L2 on weights) and its gradients,
    /// with dropout masks drawn from `rng`.
    fn loss_and_gradients(
        &self,
        xb: &Array2<f64>,
        yb: &[u8],
        sw: &[f64],
        cfg: &TrainConfig,
        rng: &mut Rng,
    ) -> (f64, LayerTensors) {
        let n_layers = self.layers.len();
        let batch = xb.nrows() as f64;
        let keep = 1.0 - cfg.dropout_rate;

        // activations[l] is the input to layer l; pre[l] its pre-activation output
        let mut activations = vec![xb.clone()];
        let mut pre = Vec::with_capacity(n_layers);
        let mut masks: Vec<Option<Array2<f64>>> = Vec::with_capacity(n_layers - 1);
        for (l, layer) in self.layers.iter().enumerate() {
            let z = layer.forward(&activations[l]);
            if l + 1 < n_layers {
                let mut a = z.mapv(|v| v.max(0.0));
                let mask = (cfg.dropout_rate > 0.0).then(|| {
                    Array2::from_shape_simple_fn(a.raw_dim(), || {
                        if rng.random::<f64>() < keep {
                            1.0 / keep
                        } else {
                            0.0
                        }
                    })
                });
                if let Some(m) = &mask {
                    a *= m;
                }
                masks.push(mask);
                activations.push(a);
            }
            pre.push(z);
        }

        let logits = pre[n_layers - 1].column(0);
        let mut loss = 0.0;
        let mut delta = Array2::zeros((xb.nrows(), 1));
        for i in 0..yb.len() {
            let z = logits[i];
            loss += sw[i] * bce_from_logit(z, yb[i]);
            delta[[i, 0]] = sw[i] * (sigmoid(z) - f64::from(yb[i])) / batch;
        }
        loss /= batch;
        if cfg.l2_penalty > 0.0 {
            let sq: f64 = self.layers.iter().map(|l| l.weights.iter().map(|w| w * w).sum::<f64>()).sum();
            loss += 0.5 * cfg.l2_penalty * sq;
        }

        let mut grads = vec![(Array2::zeros((0, 0)), Array1::zeros(0)); n_layers];
        for l in (0..n_layers).rev() {
            let layer = &self.layers[l];
            let mut gw = delta.t().dot(&activations[l]);
            if cfg.l2_penalty > 0.0 {
                gw.scaled_add(cfg.l2_penalty, &layer.weights);
            }
            let gb = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut back = delta.dot(&layer.weights);
                ndarray::Zip::from(&mut back)
                    .and(&pre[l - 1])
                    .for_each(|d, &z| {
                        if z <= 0.0 {
                            *d = 0.0;
                        }
                    });
                if let Some(m) = &masks[l - 1] {
                    back *= m;
                }
                delta = back;
            }
            grads[l] = (gw, gb);
        }
        (loss, grads)
    }

    fn logits(&self, x: &Array2<f64>) -> Array1<f64> {
        let mut a = x.clone();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            a = layer.forward(&a);
            if l < last {
                a.mapv_inplace(|v| v.max(0.0));
            }
        }
        a.column(0).to_owned()
    }

    fn logit_row(&self, x: ArrayView1<'_, f64>) -> f64 {
        let mut a = x.to_owned();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            a = layer.weights.dot(&a) + &layer.bias;
            if l < last {
                a.mapv_inplace(|v| v.max(0.0));
            }
        }
        a[0]
    }
}

impl Classifier for MlpModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Mlp
    }

    fn n_features(&self) -> usize {
        self.layer_sizes[0]
    }

    fn predict_row(&self, x: ArrayView1<'_, f64>) -> f64 {
        sigmoid(self.logit_row(x))
    }

    fn predict_proba(&self, x: &Array2<f64>) -> Result<Vec<f64>> {
        check_width(self.n_features(), x.ncols())?;
        Ok(self.logits(x).iter().map(|&z| sigmoid(z)).collect())
    }

    fn as_differentiable(&self) -> Option<&dyn Differentiable> {
        Some(self)
    }
}

impl Differentiable for MlpModel {
    fn output(&self, x: &[f64], space: OutputSpace) -> Result<f64> {
        check_width(self.n_features(), x.len())?;
        let z = self.logit_row(ArrayView1::from(x));
        Ok(match space {
            OutputSpace::Probability => sigmoid(z),
            OutputSpace::Logit => z,
        })
    }

    /// Reverse-mode gradient of the output at `x`; ReLU'(0) is taken as 0.
    fn input_gradient(&self, x: &[f64], space: OutputSpace) -> Result<Vec<f64>> {
        check_width(self.n_features(), x.len())?;
        let last = self.layers.len() - 1;
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut a = Array1::from(x.to_vec());
        for (l, layer) in self.layers.iter().enumerate() {
            let z = layer.weights.dot(&a) + &layer.bias;
            if l < last {
                a = z.mapv(|v| v.max(0.0));
            }
            pre.push(z);
        }
        let logit = pre[last][0];
        let scale = match space {
            OutputSpace::Probability => {
                let s = sigmoid(logit);
                s * (1.0 - s)
            }
            OutputSpace::Logit => 1.0,
        };
        let mut delta = Array1::from(vec![scale]);
        for l in (0..self.layers.len()).rev() {
            let mut back = self.layers[l].weights.t().dot(&delta);
            if l > 0 {
                ndarray::Zip::from(&mut back).and(&pre[l - 1]).for_each(|d, &z| {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                });
            }
            delta = back;
        }
        Ok(delta.to_vec())
    }
}
