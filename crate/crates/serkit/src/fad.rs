//! Fréchet audio distance over Gaussian-fitted embedding sets and the
//! acoustic pseudo-labeling built on it.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Mean and covariance fitted to one embedding set.
#[derive(Debug, Clone)]
pub struct GaussianStats {
    pub mean: Vec<f64>,
    /// Symmetric positive-semidefinite covariance, row-major D×D.
    pub covariance: Matrix,
    pub n: usize,
}

impl GaussianStats {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Fit a Gaussian with the population (1/n) covariance.
///
/// `shrinkage` blends toward the diagonal: (1−λ)·Σ + λ·diag(Σ). It leaves
/// the diagonal untouched, so λ = 1 yields a purely diagonal covariance.
pub fn fit_gaussian(embeddings: &Matrix, shrinkage: f64) -> Result<GaussianStats> {
    if embeddings.rows() < 2 {
        return Err(Error::contract(format!(
            "need at least 2 embedding rows, got {}",
            embeddings.rows()
        )));
    }
    if !(0.0..=1.0).contains(&shrinkage) {
        return Err(Error::contract(format!("shrinkage {shrinkage} outside [0, 1]")));
    }
    let d = embeddings.cols();
    let mean = embeddings.column_means();
    let n = embeddings.rows() as f64;
    let mut cov = vec![0.0; d * d];
    for row in embeddings.iter_rows() {
        for i in 0..d {
            let ci = row[i] - mean[i];
            for j in i..d {
                cov[i * d + j] += ci * (row[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov[i * d + j] / n;
            let v = if i == j { v } else { v * (1.0 - shrinkage) };
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
    }
    Ok(GaussianStats {
        mean,
        covariance: Matrix::from_vec(d, d, cov)?,
        n: embeddings.rows(),
    })
}

const EIGENVALUE_CLIP: f64 = 1e-10;
const NEGATIVE_EIGENVALUE_LIMIT: f64 = -1e-6;

/// PSD square root via symmetric eigendecomposition; eigenvalues below the
/// clip threshold are zeroed, eigenvalues below the corruption limit error.
fn psd_sqrt(sym: &DMatrix<f64>, context: &str) -> Result<DMatrix<f64>> {
    let eig = nalgebra::SymmetricEigen::new(sym.clone());
    let scale = eig.eigenvalues.iter().fold(1.0f64, |a, &b| a.max(b.abs()));
    let mut roots = Vec::with_capacity(eig.eigenvalues.len());
    for &l in eig.eigenvalues.iter() {
        if l < NEGATIVE_EIGENVALUE_LIMIT * scale {
            return Err(Error::numeric(format!(
                "{context}: eigenvalue {l} below the corruption limit"
            )));
        }
        roots.push(if l > EIGENVALUE_CLIP { l.sqrt() } else { 0.0 });
    }
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, r) in roots.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*r);
    }
    Ok(&scaled * v.transpose())
}

/// Squared 2-Wasserstein distance between Gaussians:
/// ‖μa − μb‖² + tr(Σa + Σb − 2√(ΣaΣb)).
///
/// The cross term is evaluated as tr of the PSD root of the symmetrized
/// product √Σa · Σb · √Σa, which equals tr √(ΣaΣb) but stays in symmetric
/// eigendecompositions throughout. The result is clipped at 0.
pub fn frechet_distance(a: &GaussianStats, b: &GaussianStats) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::contract(format!(
            "dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let ca = a.covariance.to_nalgebra();
    let cb = b.covariance.to_nalgebra();
    let sym_a = (&ca + ca.transpose()) * 0.5;
    let sym_b = (&cb + cb.transpose()) * 0.5;
    let root_a = psd_sqrt(&sym_a, "covariance A")?;
    let product = &root_a * &sym_b * &root_a;
    let product = (&product + product.transpose()) * 0.5;
    let cross = psd_sqrt(&product, "cross product")?;
    let mean_term: f64 = a
        .mean
        .iter()
        .zip(&b.mean)
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    let trace_term = sym_a.trace() + sym_b.trace() - 2.0 * cross.trace();
    Ok((mean_term + trace_term).max(0.0))
}

/// Encoder × class grid of FAD scores with a per-class average row.
#[derive(Debug, Clone, Serialize)]
pub struct FadScoreTable {
    pub encoders: Vec<String>,
    pub classes: Vec<String>,
    /// scores[encoder_idx][class_idx]
    pub scores: Vec<Vec<f64>>,
    /// Unweighted mean across encoders, per class.
    pub averages: Vec<f64>,
}

impl FadScoreTable {
    /// Assemble from precomputed scores; used both by [`score_table`] and by
    /// fixture grids fed in directly.
    pub fn from_grid(
        encoders: Vec<String>,
        classes: Vec<String>,
        scores: Vec<Vec<f64>>,
    ) -> Result<FadScoreTable> {
        if encoders.is_empty() || classes.is_empty() {
            return Err(Error::contract("empty score grid"));
        }
        if scores.len() != encoders.len()
            || scores.iter().any(|row| row.len() != classes.len())
        {
            return Err(Error::contract("score grid shape mismatch"));
        }
        let averages = (0..classes.len())
            .map(|c| scores.iter().map(|row| row[c]).sum::<f64>() / encoders.len() as f64)
            .collect();
        Ok(FadScoreTable { encoders, classes, scores, averages })
    }

    /// Min-max normalize each encoder row before averaging; an alternative
    /// average for robustness studies (raw averaging is the default).
    pub fn normalized_averages(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.classes.len()];
        for row in &self.scores {
            let lo = row.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let span = hi - lo;
            for (a, &v) in acc.iter_mut().zip(row) {
                *a += if span > 0.0 { (v - lo) / span } else { 0.0 };
            }
        }
        acc.iter().map(|v| v / self.scores.len() as f64).collect()
    }
}

/// Fill the FAD grid for every (encoder, class) pair against the unlabeled
/// pool's per-encoder Gaussians.
pub fn score_table(
    labeled: &BTreeMap<String, BTreeMap<String, GaussianStats>>,
    unlabeled: &BTreeMap<String, GaussianStats>,
) -> Result<FadScoreTable> {
    if labeled.is_empty() {
        return Err(Error::contract("no labeled classes"));
    }
    let encoders: Vec<String> = unlabeled.keys().cloned().collect();
    if encoders.is_empty() {
        return Err(Error::contract("no unlabeled encoders"));
    }
    let classes: Vec<String> = labeled.keys().cloned().collect();
    for (class, per_encoder) in labeled {
        let have: Vec<&String> = per_encoder.keys().collect();
        let want: Vec<&String> = encoders.iter().collect();
        if have != want {
            return Err(Error::contract(format!(
                "class {class:?} has encoders {have:?}, expected {want:?}"
            )));
        }
    }
    let mut scores = Vec::with_capacity(encoders.len());
    for encoder in &encoders {
        let mut row = Vec::with_capacity(classes.len());
        for class in &classes {
            row.push(frechet_distance(&labeled[class][encoder], &unlabeled[encoder])?);
        }
        scores.push(row);
    }
    FadScoreTable::from_grid(encoders, classes, scores)
}

/// Pseudo-label assignment: the class with the smallest average FAD.
#[derive(Debug, Clone, Serialize)]
pub struct PseudoLabel {
    pub class: String,
    /// Set when another class shares the minimal average; the winner is
    /// then the lexicographically first.
    pub tie: bool,
}

pub fn assign_pseudo_label(table: &FadScoreTable) -> Result<PseudoLabel> {
    if table.averages.is_empty() {
        return Err(Error::contract("empty score table"));
    }
    let min = table.averages.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut minima: Vec<&String> = table
        .classes
        .iter()
        .zip(&table.averages)
        .filter(|(_, v)| **v == min)
        .map(|(c, _)| c)
        .collect();
    minima.sort();
    Ok(PseudoLabel { class: minima[0].clone(), tie: minima.len() > 1 })
}
