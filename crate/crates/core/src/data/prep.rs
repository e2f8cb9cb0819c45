use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::DefectDataset;
use crate::rng::seeded;
use crate::{Error, Result};

/// Per-class stratified partition of `labels` into (train, test) row indices.
///
/// Each class contributes `round(n_c * test_fraction)` rows to the test side.
/// Both sides must keep at least one row of each class. Indices come back
/// sorted ascending.
pub fn stratified_indices(
    labels: &[u8],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test fraction {test_fraction} outside (0, 1)"
        )));
    }
    let mut rng = seeded(seed);
    let mut train = Vec::with_capacity(labels.len());
    let mut test = Vec::new();
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        let n_test = (idx.len() as f64 * test_fraction).round() as usize;
        if n_test == 0 || n_test >= idx.len() {
            return Err(Error::DegenerateSplit { class });
        }
        idx.shuffle(&mut rng);
        test.extend_from_slice(&idx[..n_test]);
        train.extend_from_slice(&idx[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Stratified, seeded train/test split of a dataset.
pub fn stratified_split(
    data: &DefectDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(DefectDataset, DefectDataset)> {
    let (train, test) = stratified_indices(data.labels(), test_fraction, seed)?;
    Ok((data.subset(&train), data.subset(&test)))
}

/// Column-wise z-scoring with population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Standardizer {
    /// Fits column means and population standard deviations. Constant columns
    /// get scale 1.
    pub fn fit(features: &Array2<f64>) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(Error::EmptyMatrix);
        }
        let n = features.nrows() as f64;
        let mut means = Vec::with_capacity(features.ncols());
        let mut scales = Vec::with_capacity(features.ncols());
        for col in features.axis_iter(Axis(1)) {
            let mean = col.sum() / n;
            let first = col[0];
            let constant = col.iter().all(|&v| v == first);
            let var = col.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let sd = var.sqrt();
            means.push(if constant { first } else { mean });
            scales.push(if constant || sd.is_nan() || sd <= 0.0 { 1.0 } else { sd });
        }
        Ok(Self { means, scales })
    }

    pub fn width(&self) -> usize {
        self.means.len()
    }

    fn check(&self, features: &Array2<f64>) -> Result<()> {
        if features.ncols() != self.width() {
            return Err(Error::WidthMismatch {
                expected: self.width(),
                found: features.ncols(),
            });
        }
        Ok(())
    }

    pub fn transform(&self, features: &Array2<f64>) -> Result<Array2<f64>> {
        self.check(features)?;
        let means = Array1::from(self.means.clone());
        let scales = Array1::from(self.scales.clone());
        Ok((features - &means) / &scales)
    }

    pub fn inverse_transform(&self, features: &Array2<f64>) -> Result<Array2<f64>> {
        self.check(features)?;
        let means = Array1::from(self.means.clone());
        let scales = Array1::from(self.scales.clone());
        Ok(features * &scales + &means)
    }

    /// Standardized copy of a dataset.
    pub fn transform_dataset(&self, data: &DefectDataset) -> Result<DefectDataset> {
        data.with_features(self.transform(data.features())?)
    }
}

/// Per-class loss multipliers that balance the two classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub negative: f64,
    pub positive: f64,
}

impl ClassWeights {
    pub fn unit() -> Self {
        Self {
            negative: 1.0,
            positive: 1.0,
        }
    }

    #[inline]
    pub fn weight_for(&self, label: u8) -> f64 {
        if label == 1 {
            self.positive
        } else {
            self.negative
        }
    }
}

/// `w_c = N / (2 N_c)` for each class, so both classes carry total weight N/2.
pub fn compute_class_weights(labels: &[u8]) -> Result<ClassWeights> {
    let n = labels.len();
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let n = n as f64;
    Ok(ClassWeights {
        negative: n / (2.0 * n_neg as f64),
        positive: n / (2.0 * n_pos as f64),
    })
}
