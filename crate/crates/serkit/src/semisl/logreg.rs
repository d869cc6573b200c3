//! Multinomial logistic regression trained by full-batch gradient descent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Training hyperparameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// L2 penalty on non-bias weights.
    pub l2: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 300, learning_rate: 0.1, l2: 1e-4 }
    }
}

/// Softmax classifier with per-column standardization baked into the model.
#[derive(Debug, Clone)]
pub struct ClassifierModel {
    pub classes: Vec<String>,
    /// (dim + 1) × k weights, row-major; the final row is the bias.
    weights: Vec<f64>,
    dim: usize,
    feature_means: Vec<f64>,
    feature_scales: Vec<f64>,
}

impl ClassifierModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == label)
    }

    fn standardize(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.feature_means)
            .zip(&self.feature_scales)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

fn softmax_in_place(logits: &mut [f64]) {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for l in logits.iter_mut() {
        *l = (*l - max).exp();
        sum += *l;
    }
    for l in logits.iter_mut() {
        *l /= sum;
    }
}

/// Class probabilities for one standardized, bias-augmented row.
fn probabilities(weights: &[f64], k: usize, row: &[f64]) -> Vec<f64> {
    let d1 = row.len() + 1;
    debug_assert_eq!(weights.len(), d1 * k);
    let mut logits = vec![0.0; k];
    for (c, logit) in logits.iter_mut().enumerate() {
        let mut acc = weights[(d1 - 1) * k + c]; // bias row
        for (j, v) in row.iter().enumerate() {
            acc += weights[j * k + c] * v;
        }
        *logit = acc;
    }
    softmax_in_place(&mut logits);
    logits
}

/// Mean cross-entropy plus the L2 term, over standardized rows with class
/// indices. Shared by training, the finite-difference check, and `selftest`.
pub fn cross_entropy_loss(
    weights: &[f64],
    rows: &[Vec<f64>],
    targets: &[usize],
    k: usize,
    l2: f64,
) -> f64 {
    let n = rows.len() as f64;
    let mut loss = 0.0;
    for (row, &y) in rows.iter().zip(targets) {
        let probs = probabilities(weights, k, row);
        loss -= probs[y].max(1e-300).ln();
    }
    loss /= n;
    let d = rows[0].len();
    let mut penalty = 0.0;
    for j in 0..d {
        for c in 0..k {
            let w = weights[j * k + c];
            penalty += w * w;
        }
    }
    loss + 0.5 * l2 * penalty
}

/// Analytic gradient of [`cross_entropy_loss`] with respect to the flat
/// weight vector (bias row included, not penalized).
pub fn cross_entropy_gradient(
    weights: &[f64],
    rows: &[Vec<f64>],
    targets: &[usize],
    k: usize,
    l2: f64,
) -> Vec<f64> {
    let d1 = rows[0].len() + 1;
    let n = rows.len() as f64;
    let mut grad = vec![0.0; d1 * k];
    for (row, &y) in rows.iter().zip(targets) {
        let mut probs = probabilities(weights, k, row);
        probs[y] -= 1.0;
        for (j, v) in row.iter().enumerate() {
            for (c, p) in probs.iter().enumerate() {
                grad[j * k + c] += p * v;
            }
        }
        for (c, p) in probs.iter().enumerate() {
            grad[(d1 - 1) * k + c] += p;
        }
    }
    for g in grad.iter_mut() {
        *g /= n;
    }
    for j in 0..d1 - 1 {
        for c in 0..k {
            grad[j * k + c] += l2 * weights[j * k + c];
        }
    }
    grad
}

/// Train on feature rows with string labels. Weights start at zero, so the
/// optimization is deterministic; with zero epochs the model predicts the
/// uniform distribution.
pub fn train_builtin(
    features: &Matrix,
    labels: &[String],
    cfg: &TrainConfig,
) -> Result<ClassifierModel> {
    if features.rows() != labels.len() {
        return Err(Error::contract(format!(
            "{} rows vs {} labels",
            features.rows(),
            labels.len()
        )));
    }
    if features.rows() == 0 {
        return Err(Error::contract("empty training set"));
    }
    let mut classes: Vec<String> = labels.to_vec();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::contract("training needs at least 2 classes"));
    }
    let k = classes.len();
    let d = features.cols();

    // per-column z-score from the training split
    let feature_means = features.column_means();
    let n = features.rows() as f64;
    let mut feature_scales = vec![0.0; d];
    for row in features.iter_rows() {
        for (s, (v, m)) in feature_scales.iter_mut().zip(row.iter().zip(&feature_means)) {
            *s += (v - m) * (v - m);
        }
    }
    for s in feature_scales.iter_mut() {
        let std = (*s / n).sqrt();
        *s = if std > 0.0 { std } else { 1.0 };
    }

    let rows: Vec<Vec<f64>> = features
        .iter_rows()
        .map(|row| {
            row.iter()
                .zip(&feature_means)
                .zip(&feature_scales)
                .map(|((v, m), s)| (v - m) / s)
                .collect()
        })
        .collect();
    let targets: Vec<usize> = labels
        .iter()
        .map(|l| classes.iter().position(|c| c == l).expect("deduped from labels"))
        .collect();

    let mut weights = vec![0.0; (d + 1) * k];
    for _ in 0..cfg.epochs {
        let grad = cross_entropy_gradient(&weights, &rows, &targets, k, cfg.l2);
        for (w, g) in weights.iter_mut().zip(&grad) {
            *w -= cfg.learning_rate * g;
        }
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::numeric("training diverged to non-finite weights"));
    }
    Ok(ClassifierModel { classes, weights, dim: d, feature_means, feature_scales })
}

/// Per-row argmax class and full probability vector.
pub fn predict(model: &ClassifierModel, features: &Matrix) -> Result<Vec<(String, Vec<f64>)>> {
    if features.cols() != model.dim {
        return Err(Error::contract(format!(
            "feature dimension {} does not match model dimension {}",
            features.cols(),
            model.dim
        )));
    }
    let k = model.classes.len();
    Ok(features
        .iter_rows()
        .map(|row| {
            let std_row = model.standardize(row);
            let probs = probabilities(&model.weights, k, &std_row);
            let mut best = 0;
            for (i, p) in probs.iter().enumerate() {
                if *p > probs[best] {
                    best = i;
                }
            }
            (model.classes[best].clone(), probs)
        })
        .collect())
}

/// Relative error between the analytic gradient and central finite
/// differences on a random problem; used by the acceptance suite and
/// `selftest`.
pub fn gradient_check(seed: u64) -> f64 {
    let (n, d, k) = (5usize, 3usize, 3usize);
    let mut state = seed | 1;
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    };
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| next()).collect()).collect();
    let targets: Vec<usize> = (0..n).map(|i| i % k).collect();
    let weights: Vec<f64> = (0..(d + 1) * k).map(|_| next() * 0.5).collect();
    let l2 = 1e-4;
    let analytic = cross_entropy_gradient(&weights, &rows, &targets, k, l2);
    let h = 1e-5;
    let mut max_rel = 0.0f64;
    for i in 0..weights.len() {
        let mut plus = weights.clone();
        plus[i] += h;
        let mut minus = weights.clone();
        minus[i] -= h;
        let numeric = (cross_entropy_loss(&plus, &rows, &targets, k, l2)
            - cross_entropy_loss(&minus, &rows, &targets, k, l2))
            / (2.0 * h);
        let denom = analytic[i].abs().max(numeric.abs()).max(1e-8);
        max_rel = max_rel.max((analytic[i] - numeric).abs() / denom);
    }
    max_rel
}
