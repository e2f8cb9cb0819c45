use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::{DefectDataset, FeatureSchema};
use crate::rng::seeded;
use crate::{Error, Result};

/// Draws `n` standard-normal rows and labels them Bernoulli(σ(w·x + b + ε)),
/// with ε ~ N(0, noise_scale²).
pub fn generate_synthetic_linear(
    n: usize,
    weights: &[f64],
    bias: f64,
    noise_scale: f64,
    seed: u64,
) -> Result<DefectDataset> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need n >= 2, got {n}")));
    }
    if weights.is_empty() {
        return Err(Error::InvalidArgument("weights must be non-empty".into()));
    }
    if !(noise_scale >= 0.0 && noise_scale.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise scale {noise_scale}")));
    }
    let p = weights.len();
    let noise = Normal::new(0.0, noise_scale).expect("validated scale");
    let mut rng = seeded(seed);
    let mut x = Array2::zeros((n, p));
    let mut labels = Vec::with_capacity(n);
    for mut row in x.rows_mut() {
        for v in row.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        let eps = if noise_scale > 0.0 {
            noise.sample(&mut rng)
        } else {
            0.0
        };
        let z: f64 = row.iter().zip(weights).map(|(a, w)| a * w).sum::<f64>() + bias + eps;
        let prob = 1.0 / (1.0 + (-z).exp());
        labels.push(u8::from(rng.random::<f64>() < prob));
    }
    DefectDataset::new(
        x,
        labels,
        FeatureSchema::synthetic(p),
        format!("synthetic-linear(seed={seed})"),
    )
}
