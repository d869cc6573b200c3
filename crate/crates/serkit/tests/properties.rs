//! Cross-module statistical and consistency properties.

use std::path::PathBuf;

use serkit::asr::{align, wer};
use serkit::cca::{cca, DEFAULT_REG};
use serkit::matrix::Matrix;
use serkit::metrics::{ccc, pcc};

struct Rng(u64);

impl Rng {
    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        self.0
    }

    fn signed(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }

    fn normal(&mut self) -> f64 {
        // Box-Muller
        let u1 = ((self.next_u64() >> 11) as f64 / (1u64 << 53) as f64).max(1e-12);
        let u2 = (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

/// Adding isotropic noise of growing variance to Y must not raise the mean
/// canonical correlation (checked statistically over 20 seeds).
#[test]
fn cca_mean_corr_monotone_under_noise() {
    let mut improvement_votes = 0usize;
    for seed in 0..20u64 {
        let mut rng = Rng(seed * 7 + 1);
        let n = 400;
        let p = 3;
        let x = Matrix::from_vec(n, p, (0..n * p).map(|_| rng.signed()).collect()).unwrap();
        let mut last = f64::INFINITY;
        let mut monotone = true;
        for noise_scale in [0.0, 0.5, 1.0, 2.0, 4.0] {
            let values: Vec<f64> = x
                .values()
                .iter()
                .map(|v| v + noise_scale * rng.normal())
                .collect();
            let y = Matrix::from_vec(n, p, values).unwrap();
            let score = cca(&x, &y, DEFAULT_REG).unwrap().mean_corr;
            if score > last + 0.02 {
                monotone = false;
            }
            last = score;
        }
        if !monotone {
            improvement_votes += 1;
        }
    }
    // sampling noise may wobble individual runs; the trend must hold
    assert!(improvement_votes <= 2, "{improvement_votes}/20 seeds broke monotonicity");
}

#[test]
fn ccc_equals_pcc_when_moments_match() {
    // same mean and variance on both sides: CCC reduces to PCC exactly
    let targets = [-1.5, -0.5, 0.5, 1.5];
    let preds = [1.5, 0.5, -0.5, -1.5]; // a permutation: same moments
    let p = pcc(&preds, &targets).unwrap();
    let c = ccc(&preds, &targets).unwrap();
    assert!((p - c).abs() < 1e-12, "{p} vs {c}");
}

#[test]
fn wer_of_empty_hypothesis_is_one() {
    let reference: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
    let empty: Vec<String> = vec![];
    let alignment = align(&reference, &empty);
    assert_eq!(wer(&alignment).unwrap(), 1.0);
}

#[test]
fn manifest_reread_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path: PathBuf = dir.path().join("m.jsonl");
    std::fs::write(
        &path,
        concat!(
            r#"{"id":"u1","ref":"One two.","hyps":{"A":"one two"},"emotion":"happy"}"#,
            "\n",
            r#"{"id":"u2","ref":"Three!","hyps":{"A":"three","B":"free"}}"#,
            "\n",
        ),
    )
    .unwrap();
    let first = serkit::manifest::read_manifest(&path).unwrap();
    let second = serkit::manifest::read_manifest(&path).unwrap();
    assert_eq!(first, second);
    assert_eq!(first[0].id, "u1");
    assert_eq!(first[1].id, "u2");
}
