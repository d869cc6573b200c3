//! Synthetic Gaussian-blob datasets for harness experiments and tests.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Blob dataset shape. `separation` is the distance of each class mean from
/// the origin along its own random unit direction; within-class scatter is
/// unit-variance isotropic noise.
#[derive(Debug, Clone, Copy)]
pub struct BlobSpec {
    pub n: usize,
    pub dim: usize,
    pub classes: usize,
    pub separation: f64,
    pub seed: u64,
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Draw `n` points round-robin over `classes` Gaussian blobs. Returns
/// (features, class label) pairs with labels "c0".."c{k-1}".
pub fn make_blobs(spec: &BlobSpec) -> Vec<(Vec<f64>, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    // class means: random directions scaled to the requested separation
    let means: Vec<Vec<f64>> = (0..spec.classes)
        .map(|_| {
            let raw: Vec<f64> = (0..spec.dim).map(|_| standard_normal(&mut rng)).collect();
            let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
            raw.iter().map(|v| v / norm * spec.separation).collect()
        })
        .collect();
    (0..spec.n)
        .map(|i| {
            let class = i % spec.classes;
            let features = means[class]
                .iter()
                .map(|m| m + standard_normal(&mut rng))
                .collect();
            (features, format!("c{class}"))
        })
        .collect()
}

/// Corrupt each label independently with probability `rate`, replacing it
/// with a uniformly random *different* class.
pub fn corrupt_labels(
    labels: &[String],
    classes: &[String],
    rate: f64,
    seed: u64,
) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    labels
        .iter()
        .map(|label| {
            if rng.gen_range(0.0..1.0) >= rate {
                return label.clone();
            }
            let others: Vec<&String> = classes.iter().filter(|c| *c != label).collect();
            if others.is_empty() {
                label.clone()
            } else {
                others[rng.gen_range(0..others.len())].clone()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blob_shape_and_determinism() {
        let spec = BlobSpec { n: 40, dim: 8, classes: 4, separation: 2.0, seed: 3 };
        let a = make_blobs(&spec);
        let b = make_blobs(&spec);
        assert_eq!(a.len(), 40);
        assert!(a.iter().all(|(f, _)| f.len() == 8));
        assert_eq!(
            a.iter().map(|(_, l)| l.clone()).collect::<Vec<_>>(),
            b.iter().map(|(_, l)| l.clone()).collect::<Vec<_>>()
        );
        assert_eq!(a[0].0, b[0].0);
    }

    #[test]
    fn corruption_rate_roughly_respected() {
        let classes: Vec<String> = (0..4).map(|i| format!("c{i}")).collect();
        let labels = vec![classes[0].clone(); 4000];
        let noisy = corrupt_labels(&labels, &classes, 0.2, 9);
        let flipped = noisy.iter().filter(|l| **l != classes[0]).count();
        let rate = flipped as f64 / labels.len() as f64;
        assert!((rate - 0.2).abs() < 0.03, "rate {rate}");
        // corrupted labels are never the original
        assert!(noisy.iter().all(|l| classes.contains(l)));
    }
}
