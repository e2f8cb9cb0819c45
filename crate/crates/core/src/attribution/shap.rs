use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, Axis};
use rand::seq::index::sample;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AttributionMethod, AttributionVector};
use crate::models::{check_width, Classifier};
use crate::rng::{derive_seed, seeded};
use crate::{Error, Result};

/// Upper bound on `ShapConfig::exact_threshold`.
pub const MAX_EXACT_THRESHOLD: usize = 14;
/// Largest feature count [`exact_shapley`] accepts.
pub const EXACT_SHAPLEY_MAX_FEATURES: usize = 12;

/// Coalitions evaluated per batched model call.
const COALITION_CHUNK: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapConfig {
    /// Reference rows; "absent" features take their values from these.
    pub background: Array2<f64>,
    pub coalition_budget: usize,
    /// Feature counts up to this are solved over all `2^p` coalitions.
    pub exact_threshold: usize,
    pub seed: u64,
}

/// How the coalition set was built for one explanation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapMode {
    Exact,
    Sampled,
}

impl ShapConfig {
    pub fn new(background: Array2<f64>) -> Self {
        Self {
            background,
            coalition_budget: 2048,
            exact_threshold: 10,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.background.nrows() == 0 {
            return Err(Error::EmptyBackground);
        }
        if self.exact_threshold > MAX_EXACT_THRESHOLD {
            return Err(Error::Config(format!(
                "exact_threshold {} exceeds {MAX_EXACT_THRESHOLD}",
                self.exact_threshold
            )));
        }
        if self.coalition_budget == 0 {
            return Err(Error::Config("coalition_budget must be positive".into()));
        }
        Ok(())
    }

    pub fn mode_for(&self, p: usize) -> ShapMode {
        if p <= self.exact_threshold {
            ShapMode::Exact
        } else {
            ShapMode::Sampled
        }
    }
}

/// Wraps a fitted classifier as a batch scorer for the SHAP routines.
pub fn model_scorer(model: &dyn Classifier) -> impl Fn(&Array2<f64>) -> Vec<f64> + Sync + '_ {
    move |rows: &Array2<f64>| {
        model
            .predict_proba(rows)
            .expect("scorer called with rows of the model's width")
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Coalition value `v(S)`: mean prediction over background rows with the
/// features in `S` replaced by the instance's values.
struct CoalitionGame<'a, F> {
    predict: &'a F,
    x: &'a [f64],
    background: &'a Array2<f64>,
}

impl<F: Fn(&Array2<f64>) -> Vec<f64>> CoalitionGame<'_, F> {
    fn values(&self, masks: &[Vec<bool>]) -> Vec<f64> {
        let nb = self.background.nrows();
        let mut out = Vec::with_capacity(masks.len());
        for chunk in masks.chunks(COALITION_CHUNK) {
            let mut rows = Array2::zeros((chunk.len() * nb, self.x.len()));
            for (c, mask) in chunk.iter().enumerate() {
                let mut block = rows.slice_mut(ndarray::s![c * nb..(c + 1) * nb, ..]);
                block.assign(self.background);
                for (j, &on) in mask.iter().enumerate() {
                    if on {
                        block.column_mut(j).fill(self.x[j]);
                    }
                }
            }
            let scores = (self.predict)(&rows);
            for c in 0..chunk.len() {
                out.push(scores[c * nb..(c + 1) * nb].iter().sum::<f64>() / nb as f64);
            }
        }
        out
    }
}

/// Kernel-weighted coalitions (excluding the empty and full sets).
struct Design {
    masks: Vec<Vec<bool>>,
    weights: Vec<f64>,
}

fn exact_design(p: usize) -> Design {
    let mut masks = Vec::new();
    let mut weights = Vec::new();
    for bits in 1u32..(1 << p) - 1 {
        let mask: Vec<bool> = (0..p).map(|j| bits >> j & 1 == 1).collect();
        let s = bits.count_ones() as usize;
        masks.push(mask);
        weights.push((p - 1) as f64 / (binomial(p, s) * s as f64 * (p - s) as f64));
    }
    Design { masks, weights }
}

/// Budgeted design: whole subset sizes are enumerated (smallest and largest
/// first) while the budget covers them at their kernel share; the rest is
/// drawn from the kernel distribution over the remaining sizes, each draw
/// paired with its complement.
fn sampled_design(p: usize, budget: usize, seed: u64) -> Design {
    // size s and its complement p - s share one slot; the middle size of an
    // even p has no partner
    let n_sizes = (p - 1).div_ceil(2);
    let n_paired = (p - 1) / 2;
    let mut kernel: Vec<f64> = (1..=n_sizes)
        .map(|s| {
            let w = (p - 1) as f64 / (s * (p - s)) as f64;
            if s <= n_paired {
                2.0 * w
            } else {
                w
            }
        })
        .collect();
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|w| *w /= total);

    let mut design = Design {
        masks: Vec::new(),
        weights: Vec::new(),
    };
    let mut left = budget as f64;
    let mut remaining = kernel.clone();
    let mut n_full = 0;
    for s in 1..=n_sizes {
        let paired = s <= n_paired;
        let count = binomial(p, s) * if paired { 2.0 } else { 1.0 };
        if left * remaining[s - 1] / count < 1.0 - 1e-8 {
            break;
        }
        n_full += 1;
        left -= count;
        if remaining[s - 1] < 1.0 {
            let scale = 1.0 - remaining[s - 1];
            remaining.iter_mut().for_each(|w| *w /= scale);
        }
        let w = kernel[s - 1] / count;
        for combo in combinations(p, s) {
            let mut mask = vec![false; p];
            combo.iter().for_each(|&j| mask[j] = true);
            if paired {
                design.masks.push(mask.iter().map(|b| !b).collect());
                design.weights.push(w);
            }
            design.masks.push(mask);
            design.weights.push(w);
        }
    }

    let mut left = budget.saturating_sub(design.masks.len());
    if n_full < n_sizes && left > 0 {
        let fixed = design.masks.len();
        let mut size_probs: Vec<f64> = kernel[n_full..]
            .iter()
            .enumerate()
            .map(|(i, &w)| if n_full + i < n_paired { w / 2.0 } else { w })
            .collect();
        let total: f64 = size_probs.iter().sum();
        size_probs.iter_mut().for_each(|w| *w /= total);

        let mut rng = seeded(seed);
        let mut index: HashMap<Vec<bool>, usize> = HashMap::new();
        let mut add = |mask: Vec<bool>, design: &mut Design, left: &mut usize| {
            if let Some(&at) = index.get(&mask) {
                design.weights[at] += 1.0;
            } else {
                index.insert(mask.clone(), design.masks.len());
                design.masks.push(mask);
                design.weights.push(1.0);
                *left -= 1;
            }
        };
        let mut draws = 0;
        while left > 0 && draws < 4 * budget {
            draws += 1;
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick = size_probs.len() - 1;
            for (i, &w) in size_probs.iter().enumerate() {
                acc += w;
                if u < acc {
                    pick = i;
                    break;
                }
            }
            let s = n_full + pick + 1;
            let mut mask = vec![false; p];
            sample(&mut rng, p, s).into_iter().for_each(|j| mask[j] = true);
            let complement: Vec<bool> = mask.iter().map(|b| !b).collect();
            add(mask, &mut design, &mut left);
            if left > 0 && s <= n_paired {
                add(complement, &mut design, &mut left);
            }
        }
        let left_mass: f64 = kernel[n_full..].iter().sum();
        let drawn: f64 = design.weights[fixed..].iter().sum();
        if drawn > 0.0 {
            design.weights[fixed..]
                .iter_mut()
                .for_each(|w| *w *= left_mass / drawn);
        }
    }
    design
}

/// All `k`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut combo: Vec<usize> = (0..k).collect();
    loop {
        out.push(combo.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if combo[i] < n - k + i {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        combo[i] += 1;
        for j in i + 1..k {
            combo[j] = combo[j - 1] + 1;
        }
    }
}

/// Weighted least squares `min sum w (v(z) - v0 - z.phi)^2` subject to
/// `sum phi = delta`, solved by eliminating the last coordinate.
fn solve_constrained(design: &Design, values: &[f64], v0: f64, delta: f64, p: usize) -> Vec<f64> {
    if p == 1 {
        return vec![delta];
    }
    let rows = design.masks.len();
    let q = p - 1;
    let mut a = DMatrix::<f64>::zeros(rows, q);
    let mut b = DVector::<f64>::zeros(rows);
    for (r, (mask, (&w, &v))) in design
        .masks
        .iter()
        .zip(design.weights.iter().zip(values))
        .enumerate()
    {
        let sw = w.sqrt();
        let last = f64::from(u8::from(mask[q]));
        for j in 0..q {
            a[(r, j)] = sw * (f64::from(u8::from(mask[j])) - last);
        }
        b[r] = sw * (v - v0 - last * delta);
    }
    let svd = a.svd(true, true);
    let phi = svd
        .solve(&b, 1e-12)
        .expect("SVD computed with both singular vector sets");
    let mut out: Vec<f64> = phi.iter().copied().collect();
    let head: f64 = out.iter().sum();
    out.push(delta - head);
    out
}

/// Kernel SHAP values of `x` under `predict`.
///
/// `predict` scores each row of a matrix. With `p <= exact_threshold` every
/// coalition is used and the result equals the exact Shapley values;
/// otherwise `coalition_budget` coalitions are used (see [`ShapMode`]).
/// Attributions always sum to `f(x) - mean f(background)` up to rounding.
pub fn kernel_shap<F>(predict: &F, x: &[f64], cfg: &ShapConfig) -> Result<AttributionVector>
where
    F: Fn(&Array2<f64>) -> Vec<f64>,
{
    cfg.validate()?;
    let p = cfg.background.ncols();
    check_width(p, x.len())?;
    if p == 0 {
        return Err(Error::InvalidArgument("no features".into()));
    }
    let game = CoalitionGame {
        predict,
        x,
        background: &cfg.background,
    };
    let ends = game.values(&[vec![false; p], vec![true; p]]);
    let (v0, v_full) = (ends[0], ends[1]);
    let design = match cfg.mode_for(p) {
        ShapMode::Exact => exact_design(p),
        ShapMode::Sampled => sampled_design(p, cfg.coalition_budget, cfg.seed),
    };
    let values = game.values(&design.masks);
    let phi = solve_constrained(&design, &values, v0, v_full - v0, p);
    let baseline = cfg
        .background
        .mean_axis(Axis(0))
        .expect("non-empty background")
        .to_vec();
    Ok(AttributionVector::new(
        phi,
        x.to_vec(),
        baseline,
        AttributionMethod::KernelShap,
        v_full,
        v0,
    ))
}

/// Kernel SHAP for every row of `rows`, in row order. Row `i` samples with
/// seed `derive_seed(cfg.seed, i)`, so results do not depend on scheduling.
pub fn kernel_shap_batch<F>(
    predict: &F,
    rows: &Array2<f64>,
    cfg: &ShapConfig,
) -> Result<Vec<AttributionVector>>
where
    F: Fn(&Array2<f64>) -> Vec<f64> + Sync,
{
    cfg.validate()?;
    check_width(cfg.background.ncols(), rows.ncols())?;
    (0..rows.nrows())
        .into_par_iter()
        .map(|i| {
            let local = ShapConfig {
                seed: derive_seed(cfg.seed, i as u64),
                ..cfg.clone()
            };
            kernel_shap(predict, &rows.row(i).to_vec(), &local)
        })
        .collect()
}

/// Shapley values by direct enumeration of all `2^p` coalitions:
/// `phi_i = sum_{S not containing i} |S|! (p-|S|-1)! / p! * (v(S + i) - v(S))`.
pub fn exact_shapley<F>(
    predict: &F,
    x: &[f64],
    background: &Array2<f64>,
) -> Result<AttributionVector>
where
    F: Fn(&Array2<f64>) -> Vec<f64>,
{
    if background.nrows() == 0 {
        return Err(Error::EmptyBackground);
    }
    let p = background.ncols();
    check_width(p, x.len())?;
    if p > EXACT_SHAPLEY_MAX_FEATURES {
        return Err(Error::TooManyFeatures {
            max: EXACT_SHAPLEY_MAX_FEATURES,
            found: p,
        });
    }
    let nb = background.nrows() as f64;
    let value = |bits: usize| -> f64 {
        let mut rows = background.clone();
        for (j, &xj) in x.iter().enumerate() {
            if bits >> j & 1 == 1 {
                rows.column_mut(j).fill(xj);
            }
        }
        predict(&rows).iter().sum::<f64>() / nb
    };
    let v: Vec<f64> = (0..1usize << p).map(value).collect();

    let factorial = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
    let p_fact = factorial(p);
    let coef: Vec<f64> = (0..p)
        .map(|s| factorial(s) * factorial(p - s - 1) / p_fact)
        .collect();
    let mut phi = vec![0.0; p];
    for (i, phi_i) in phi.iter_mut().enumerate() {
        for bits in 0..1usize << p {
            if bits >> i & 1 == 0 {
                *phi_i += coef[bits.count_ones() as usize] * (v[bits | 1 << i] - v[bits]);
            }
        }
    }
    let baseline = background.mean_axis(Axis(0)).expect("non-empty").to_vec();
    Ok(AttributionVector::new(
        phi,
        x.to_vec(),
        baseline,
        AttributionMethod::ExactShapley,
        v[(1 << p) - 1],
        v[0],
    ))
}
