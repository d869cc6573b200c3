//! Canonical correlation analysis for representation probing.
//!
//! Similarity between two row-aligned matrices is the set of canonical
//! correlations of the whitened cross-covariance, computed through its
//! singular values. Whitening floors each covariance's eigenvalue spectrum
//! at `reg` times its mean eigenvalue: healthy directions are whitened
//! without bias while rank-deficient ones stay bounded, and the conditioning
//! is invariant to uniform rescaling of the inputs. `reg = 0` disables
//! conditioning entirely (zero-variance input then errors).

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Default covariance ridge.
pub const DEFAULT_REG: f64 = 1e-6;

/// How the canonical-correlation vector is reduced to one scalar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reduction {
    /// Mean over all min(p, q) canonical correlations.
    #[default]
    Mean,
    /// Largest canonical correlation only.
    Top1,
}

/// Canonical correlations in descending order plus their mean.
#[derive(Debug, Clone)]
pub struct CcaResult {
    pub correlations: Vec<f64>,
    pub k: usize,
    pub mean_corr: f64,
    /// Set when n ≤ max(p, q); estimates are then unreliable.
    pub underdetermined: bool,
}

impl CcaResult {
    pub fn reduce(&self, reduction: Reduction) -> f64 {
        match reduction {
            Reduction::Mean => self.mean_corr,
            Reduction::Top1 => self.correlations.first().copied().unwrap_or(0.0),
        }
    }
}

fn centered(m: &Matrix) -> DMatrix<f64> {
    let means = m.column_means();
    let mut out = m.to_nalgebra();
    for mut row in out.row_iter_mut() {
        for (v, mu) in row.iter_mut().zip(&means) {
            *v -= mu;
        }
    }
    out
}

/// Population covariance of a centered matrix.
fn covariance(centered: &DMatrix<f64>) -> DMatrix<f64> {
    let n = centered.nrows() as f64;
    (centered.transpose() * centered) / n
}

/// Covariance regularization: floor the eigenvalue spectrum at
/// reg × mean eigenvalue. Directions above the floor are whitened exactly
/// (no ridge bias), degenerate directions are lifted to the floor. With
/// `reg = 0` a non-positive eigenvalue is an error.
fn floored_eigen(cov: &DMatrix<f64>, reg: f64) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let eig = nalgebra::SymmetricEigen::new(cov.clone());
    let mean_eigenvalue = eig.eigenvalues.iter().sum::<f64>() / eig.eigenvalues.len() as f64;
    let floor = reg * mean_eigenvalue.max(0.0);
    let mut values = Vec::with_capacity(eig.eigenvalues.len());
    for &l in eig.eigenvalues.iter() {
        let v = l.max(floor);
        if v <= 0.0 {
            return Err(Error::numeric("zero-variance column with reg = 0"));
        }
        values.push(v);
    }
    Ok((eig.eigenvectors, values))
}

/// Symmetric inverse square root of the floored covariance.
fn inverse_sqrt(cov: &DMatrix<f64>, reg: f64) -> Result<DMatrix<f64>> {
    let (vectors, values) = floored_eigen(cov, reg)?;
    let mut scaled = vectors.clone();
    for (j, l) in values.iter().enumerate() {
        scaled.column_mut(j).scale_mut(1.0 / l.sqrt());
    }
    Ok(&scaled * vectors.transpose())
}

/// The floored covariance itself, reconstructed; the eigen-oracle inverts
/// this with LU instead of going through the inverse square root.
fn floored_covariance(cov: &DMatrix<f64>, reg: f64) -> Result<DMatrix<f64>> {
    let (vectors, values) = floored_eigen(cov, reg)?;
    let mut scaled = vectors.clone();
    for (j, l) in values.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*l);
    }
    Ok(&scaled * vectors.transpose())
}

/// Canonical correlations between row-aligned matrices.
pub fn cca(x: &Matrix, y: &Matrix, reg: f64) -> Result<CcaResult> {
    if x.rows() != y.rows() {
        return Err(Error::contract(format!(
            "row mismatch: {} vs {}",
            x.rows(),
            y.rows()
        )));
    }
    if x.rows() < 2 {
        return Err(Error::contract("CCA needs at least 2 rows"));
    }
    if x.cols() == 0 || y.cols() == 0 {
        return Err(Error::contract("CCA needs at least 1 column per side"));
    }
    if reg < 0.0 {
        return Err(Error::contract("reg must be non-negative"));
    }
    let underdetermined = x.rows() <= x.cols().max(y.cols());
    let cx = centered(x);
    let cy = centered(y);
    let sxy = (cx.transpose() * &cy) / x.rows() as f64;
    let wx = inverse_sqrt(&covariance(&cx), reg)?;
    let wy = inverse_sqrt(&covariance(&cy), reg)?;
    let m = wx * sxy * wy;
    let mut correlations: Vec<f64> = m
        .singular_values()
        .iter()
        .map(|&s| s.clamp(0.0, 1.0))
        .collect();
    correlations.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let k = x.cols().min(y.cols());
    correlations.truncate(k);
    while correlations.len() < k {
        correlations.push(0.0);
    }
    let mean_corr = correlations.iter().sum::<f64>() / k as f64;
    Ok(CcaResult { correlations, k, mean_corr, underdetermined })
}

/// Independent route used by `selftest` and the acceptance suite: squared
/// canonical correlations are the eigenvalues of
/// Σxx⁻¹ Σxy Σyy⁻¹ Σyx (same regularized covariances, different algebra).
pub fn cca_eigen_oracle(x: &Matrix, y: &Matrix, reg: f64) -> Result<Vec<f64>> {
    if x.rows() != y.rows() || x.rows() < 2 {
        return Err(Error::contract("oracle needs row-aligned input with n >= 2"));
    }
    let cx = centered(x);
    let cy = centered(y);
    let n = x.rows() as f64;
    let sxy = (cx.transpose() * &cy) / n;
    let syx = sxy.transpose();
    let sxx_inv = floored_covariance(&covariance(&cx), reg)?
        .try_inverse()
        .ok_or_else(|| Error::numeric("singular Σxx in oracle"))?;
    let syy_inv = floored_covariance(&covariance(&cy), reg)?
        .try_inverse()
        .ok_or_else(|| Error::numeric("singular Σyy in oracle"))?;
    let m = sxx_inv * sxy * syy_inv * syx;
    let mut rho: Vec<f64> = m
        .complex_eigenvalues()
        .iter()
        .map(|c| c.re.clamp(0.0, 1.0).sqrt())
        .collect();
    rho.sort_by(|a, b| b.partial_cmp(a).unwrap());
    rho.truncate(x.cols().min(y.cols()));
    Ok(rho)
}

/// Average contiguous row bins down to `target_len` rows. Bin sizes differ
/// by at most one, larger bins first; `target_len == rows` passes through.
pub fn downsample_rows(m: &Matrix, target_len: usize) -> Result<Matrix> {
    if target_len == 0 {
        return Err(Error::contract("target_len must be at least 1"));
    }
    if target_len > m.rows() {
        return Err(Error::contract(format!(
            "cannot upsample {} rows to {target_len}; swap operands instead",
            m.rows()
        )));
    }
    if target_len == m.rows() {
        return Ok(m.clone());
    }
    let base = m.rows() / target_len;
    let rem = m.rows() % target_len;
    let mut values = Vec::with_capacity(target_len * m.cols());
    let mut row = 0usize;
    for bin in 0..target_len {
        let size = base + usize::from(bin < rem);
        let mut acc = vec![0.0; m.cols()];
        for r in row..row + size {
            for (a, v) in acc.iter_mut().zip(m.row(r)) {
                *a += v;
            }
        }
        row += size;
        values.extend(acc.into_iter().map(|v| v / size as f64));
    }
    Matrix::from_vec(target_len, m.cols(), values)
}

/// Downsample whichever of the pair is longer so both have the shorter
/// one's row count.
pub fn align_rows(a: &Matrix, b: &Matrix) -> Result<(Matrix, Matrix)> {
    let target = a.rows().min(b.rows());
    Ok((downsample_rows(a, target)?, downsample_rows(b, target)?))
}

/// Per-layer similarity against one feature matrix.
#[derive(Debug, Clone)]
pub struct LayerSweep {
    /// Index = layer; value = reduced similarity.
    pub scores: Vec<f64>,
}

/// Similarity of each layer's representation to the feature matrix.
pub fn layer_similarity_sweep(
    layers: &[Matrix],
    features: &Matrix,
    reg: f64,
    reduction: Reduction,
) -> Result<LayerSweep> {
    if layers.is_empty() {
        return Err(Error::contract("empty layer list"));
    }
    let mut scores = Vec::with_capacity(layers.len());
    for layer in layers {
        let (a, b) = align_rows(layer, features)?;
        scores.push(cca(&a, &b, reg)?.reduce(reduction));
    }
    Ok(LayerSweep { scores })
}

/// Symmetric layer × layer similarity matrix.
pub fn pairwise_layer_correlation(
    layers: &[Matrix],
    reg: f64,
    reduction: Reduction,
) -> Result<Matrix> {
    if layers.len() < 2 {
        return Err(Error::contract("pairwise correlation needs at least 2 layers"));
    }
    let target = layers.iter().map(Matrix::rows).min().unwrap();
    let aligned: Vec<Matrix> = layers
        .iter()
        .map(|l| downsample_rows(l, target))
        .collect::<Result<_>>()?;
    let n = aligned.len();
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        let self_corr = cca(&aligned[i], &aligned[i], reg)?.reduce(reduction);
        out.set(i, i, self_corr);
        for j in i + 1..n {
            let v = cca(&aligned[i], &aligned[j], reg)?.reduce(reduction);
            out.set(i, j, v);
            out.set(j, i, v);
        }
    }
    Ok(out)
}

/// Similarity deltas between hierarchical feature levels.
#[derive(Debug, Clone, serde::Serialize)]
pub struct HierarchicalCcaDiff {
    pub cca_frame: f64,
    pub cca_phone: f64,
    pub cca_word: f64,
    /// phone-level similarity minus frame-level similarity
    pub d_phone_frame: f64,
    /// word-level similarity minus phone-level similarity
    pub d_word_phone: f64,
}

/// Compare one representation matrix against frame/phone/word aggregates of
/// a feature matrix.
pub fn hierarchical_cca_diff(
    reps: &Matrix,
    feats_frame: &Matrix,
    feats_phone: &Matrix,
    feats_word: &Matrix,
    reg: f64,
    reduction: Reduction,
) -> Result<HierarchicalCcaDiff> {
    let level = |feats: &Matrix| -> Result<f64> {
        let (a, b) = align_rows(reps, feats)?;
        Ok(cca(&a, &b, reg)?.reduce(reduction))
    };
    let cca_frame = level(feats_frame)?;
    let cca_phone = level(feats_phone)?;
    let cca_word = level(feats_word)?;
    Ok(HierarchicalCcaDiff {
        cca_frame,
        cca_phone,
        cca_word,
        d_phone_frame: cca_phone - cca_frame,
        d_word_phone: cca_word - cca_phone,
    })
}

/// Per-class similarity scores plus the classes skipped for thin data.
#[derive(Debug, Clone)]
pub struct EmotionConditionedCca {
    pub scores: BTreeMap<String, f64>,
    pub skipped: Vec<String>,
}

/// Class-conditioned similarity; classes with fewer than `min_rows` pooled
/// rows are reported absent rather than scored.
pub fn emotion_conditioned_cca(
    reps_by_class: &BTreeMap<String, Matrix>,
    features_by_class: &BTreeMap<String, Matrix>,
    min_rows: usize,
    reg: f64,
    reduction: Reduction,
) -> Result<EmotionConditionedCca> {
    if reps_by_class.is_empty() {
        return Err(Error::contract("empty class map"));
    }
    let rep_keys: Vec<&String> = reps_by_class.keys().collect();
    let feat_keys: Vec<&String> = features_by_class.keys().collect();
    if rep_keys != feat_keys {
        return Err(Error::contract(format!(
            "class sets differ: {rep_keys:?} vs {feat_keys:?}"
        )));
    }
    let mut scores = BTreeMap::new();
    let mut skipped = Vec::new();
    for (class, reps) in reps_by_class {
        let feats = &features_by_class[class];
        if reps.rows() < min_rows || feats.rows() < min_rows {
            skipped.push(class.clone());
            continue;
        }
        let (a, b) = align_rows(reps, feats)?;
        scores.insert(class.clone(), cca(&a, &b, reg)?.reduce(reduction));
    }
    Ok(EmotionConditionedCca { scores, skipped })
}
