//! `serkit selftest` — bundled numerical oracle suite.
//!
//! Checks, one line per group: edit-distance DP against an exhaustive
//! recursion, Fréchet distance against 1-D/diagonal closed forms plus its
//! symmetry and rotation invariances, the CCA singular-value route against
//! the generalized-eigenvalue oracle (and self/affine invariances), and the
//! classifier's analytic gradient against central finite differences,
//! alongside the accuracy-identity checks.

use nalgebra::DMatrix;
use serkit::asr::align;
use serkit::cca::{cca, cca_eigen_oracle, DEFAULT_REG};
use serkit::error::{Error, Result};
use serkit::fad::{frechet_distance, GaussianStats};
use serkit::matrix::Matrix;
use serkit::metrics::{ccc, unweighted_accuracy, weighted_accuracy_paper, ConfusionCounts};
use serkit::semisl::gradient_check;

struct Rng(u64);

impl Rng {
    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        self.0
    }

    fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    fn signed(&mut self) -> f64 {
        self.uniform() * 2.0 - 1.0
    }

    fn below(&mut self, n: usize) -> usize {
        (self.next_u64() >> 33) as usize % n
    }
}

/// Exhaustive-recursion edit distance; deliberately separate from the DP in
/// the library.
fn brute_force_distance(a: &[u8], b: &[u8]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let same = a[0] == b[0];
    let diag = brute_force_distance(&a[1..], &b[1..]) + usize::from(!same);
    let del = brute_force_distance(&a[1..], b) + 1;
    let ins = brute_force_distance(a, &b[1..]) + 1;
    diag.min(del).min(ins)
}

pub fn check_edit_distance(cases: usize) -> Result<()> {
    let mut rng = Rng(0x5eed);
    for case in 0..cases {
        let len_a = rng.below(9);
        let len_b = rng.below(9);
        let a: Vec<u8> = (0..len_a).map(|_| rng.below(4) as u8).collect();
        let b: Vec<u8> = (0..len_b).map(|_| rng.below(4) as u8).collect();
        let ra: Vec<String> = a.iter().map(u8::to_string).collect();
        let rb: Vec<String> = b.iter().map(u8::to_string).collect();
        let dp = align(&ra, &rb).edits();
        let brute = brute_force_distance(&a, &b);
        if dp != brute {
            return Err(Error::numeric(format!(
                "edit distance case {case}: DP {dp} vs brute force {brute} ({a:?} / {b:?})"
            )));
        }
    }
    Ok(())
}

fn diagonal_gaussian(means: &[f64], vars: &[f64]) -> GaussianStats {
    let d = means.len();
    let mut cov = vec![0.0; d * d];
    for i in 0..d {
        cov[i * d + i] = vars[i];
    }
    GaussianStats {
        mean: means.to_vec(),
        covariance: Matrix::from_vec(d, d, cov).expect("diagonal covariance"),
        n: 2,
    }
}

fn random_gaussian(rng: &mut Rng, dim: usize) -> GaussianStats {
    let mean: Vec<f64> = (0..dim).map(|_| rng.signed() * 3.0).collect();
    // PSD covariance: AᵀA + small diagonal
    let a = DMatrix::from_fn(dim, dim, |_, _| rng.signed());
    let cov = a.transpose() * &a + DMatrix::identity(dim, dim) * 0.1;
    GaussianStats {
        mean,
        covariance: Matrix::from_vec(dim, dim, cov.iter().copied().collect())
            .expect("covariance"),
        n: 2,
    }
}

fn random_rotation(rng: &mut Rng, dim: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(dim, dim, |_, _| rng.signed());
    a.qr().q()
}

pub fn check_fad_closed_forms(cases: usize) -> Result<()> {
    let mut rng = Rng(0xfad);
    for case in 0..cases {
        // 1-D closed form (μa−μb)² + (σa−σb)²
        let (ma, mb) = (rng.signed() * 5.0, rng.signed() * 5.0);
        let (va, vb) = (rng.uniform() * 4.0 + 0.01, rng.uniform() * 4.0 + 0.01);
        let d = frechet_distance(&diagonal_gaussian(&[ma], &[va]), &diagonal_gaussian(&[mb], &[vb]))?;
        let want = (ma - mb).powi(2) + (va.sqrt() - vb.sqrt()).powi(2);
        if (d - want).abs() > 1e-9 {
            return Err(Error::numeric(format!("1-D FAD case {case}: {d} vs {want}")));
        }
        // diagonal covariances: per-dimension sum
        let dim = 2 + rng.below(3);
        let means_a: Vec<f64> = (0..dim).map(|_| rng.signed() * 3.0).collect();
        let means_b: Vec<f64> = (0..dim).map(|_| rng.signed() * 3.0).collect();
        let vars_a: Vec<f64> = (0..dim).map(|_| rng.uniform() * 3.0 + 0.01).collect();
        let vars_b: Vec<f64> = (0..dim).map(|_| rng.uniform() * 3.0 + 0.01).collect();
        let ga = diagonal_gaussian(&means_a, &vars_a);
        let gb = diagonal_gaussian(&means_b, &vars_b);
        let d = frechet_distance(&ga, &gb)?;
        let want: f64 = (0..dim)
            .map(|i| {
                (means_a[i] - means_b[i]).powi(2) + (vars_a[i].sqrt() - vars_b[i].sqrt()).powi(2)
            })
            .sum();
        if (d - want).abs() > 1e-9 {
            return Err(Error::numeric(format!("diagonal FAD case {case}: {d} vs {want}")));
        }
        if (frechet_distance(&gb, &ga)? - d).abs() > 1e-8 {
            return Err(Error::numeric(format!("FAD symmetry violated at case {case}")));
        }
    }
    // identity and rotation invariance on full covariances
    for case in 0..20 {
        let dim = 2 + rng.below(3);
        let ga = random_gaussian(&mut rng, dim);
        let gb = random_gaussian(&mut rng, dim);
        if frechet_distance(&ga, &ga)? > 1e-8 {
            return Err(Error::numeric(format!("FAD identity violated at case {case}")));
        }
        let d = frechet_distance(&ga, &gb)?;
        let q = random_rotation(&mut rng, dim);
        let rotate = |g: &GaussianStats| -> GaussianStats {
            let mu = DMatrix::from_column_slice(dim, 1, &g.mean);
            let rotated_mean = &q * mu;
            let cov = g.covariance.to_nalgebra();
            let rotated_cov = &q * cov * q.transpose();
            GaussianStats {
                mean: rotated_mean.iter().copied().collect(),
                covariance: Matrix::from_vec(dim, dim, rotated_cov.iter().copied().collect())
                    .expect("rotated covariance"),
                n: g.n,
            }
        };
        let dr = frechet_distance(&rotate(&ga), &rotate(&gb))?;
        if (d - dr).abs() > 1e-6 {
            return Err(Error::numeric(format!(
                "FAD rotation invariance case {case}: {d} vs {dr}"
            )));
        }
    }
    Ok(())
}

fn random_matrix(rng: &mut Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.signed()).collect())
        .expect("random matrix")
}

/// Well-conditioned random transform: I + 0.4·G stays far from singular.
fn random_transform(rng: &mut Rng, dim: usize) -> Vec<Vec<f64>> {
    (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| if i == j { 1.0 } else { 0.0 } + 0.4 * rng.signed())
                .collect()
        })
        .collect()
}

fn apply_transform(m: &Matrix, t: &[Vec<f64>], offset: &[f64]) -> Matrix {
    let cols = m.cols();
    let mut values = Vec::with_capacity(m.rows() * cols);
    for row in m.iter_rows() {
        for j in 0..cols {
            let mut v = offset[j];
            for i in 0..cols {
                v += row[i] * t[i][j];
            }
            values.push(v);
        }
    }
    Matrix::from_vec(m.rows(), cols, values).expect("transformed matrix")
}

pub fn check_cca(oracle_cases: usize, affine_cases: usize) -> Result<()> {
    let mut rng = Rng(0xcca);
    // self-similarity
    for _ in 0..10 {
        let rows = 80 + rng.below(40);
        let cols = 2 + rng.below(3);
        let x = random_matrix(&mut rng, rows, cols);
        let r = cca(&x, &x, DEFAULT_REG)?;
        for c in &r.correlations {
            if (c - 1.0).abs() > 1e-6 {
                return Err(Error::numeric(format!("CCA self-similarity {c}")));
            }
        }
    }
    // affine invariance
    for case in 0..affine_cases {
        let n = 120 + rng.below(60);
        let p = 2 + rng.below(2);
        let q = 2 + rng.below(2);
        let x = random_matrix(&mut rng, n, p);
        let y = random_matrix(&mut rng, n, q);
        let base = cca(&x, &y, DEFAULT_REG)?;
        let tx = random_transform(&mut rng, p);
        let ty = random_transform(&mut rng, q);
        let ox: Vec<f64> = (0..p).map(|_| rng.signed() * 2.0).collect();
        let oy: Vec<f64> = (0..q).map(|_| rng.signed() * 2.0).collect();
        let moved = cca(&apply_transform(&x, &tx, &ox), &apply_transform(&y, &ty, &oy), DEFAULT_REG)?;
        for (a, b) in base.correlations.iter().zip(&moved.correlations) {
            if (a - b).abs() > 1e-5 {
                return Err(Error::numeric(format!(
                    "CCA affine invariance case {case}: {a} vs {b}"
                )));
            }
        }
    }
    // singular-value route against the eigenvalue oracle
    for case in 0..oracle_cases {
        let n = 10 + rng.below(41);
        let p = 1 + rng.below(3);
        let q = 1 + rng.below(3);
        let x = random_matrix(&mut rng, n, p);
        let y = random_matrix(&mut rng, n, q);
        let svd_route = cca(&x, &y, DEFAULT_REG)?.correlations;
        let eig_route = cca_eigen_oracle(&x, &y, DEFAULT_REG)?;
        for (a, b) in svd_route.iter().zip(&eig_route) {
            if (a - b).abs() > 1e-8 {
                return Err(Error::numeric(format!(
                    "CCA oracle case {case}: svd {a} vs eig {b}"
                )));
            }
        }
    }
    Ok(())
}

pub fn check_metric_identities(confusion_cases: usize) -> Result<()> {
    let mut rng = Rng(0xacc);
    for case in 0..confusion_cases {
        let k = 2 + rng.below(4);
        let mut cm =
            ConfusionCounts::new((0..k).map(|i| format!("c{i}")).collect())?;
        for _ in 0..1 + rng.below(80) {
            let p = rng.below(k);
            let t = rng.below(k);
            cm.record(p, t);
        }
        let ua = unweighted_accuracy(&cm)?;
        let wa = weighted_accuracy_paper(&cm)?;
        if ua != wa {
            return Err(Error::numeric(format!(
                "accuracy identity case {case}: UA {ua} != WA {wa}"
            )));
        }
    }
    // CCC closed form: preds = 2·targets with zero mean → 0.8
    let targets = [-2.0, -1.0, 0.0, 1.0, 2.0];
    let preds: Vec<f64> = targets.iter().map(|t| 2.0 * t).collect();
    let c = ccc(&preds, &targets)?;
    if (c - 0.8).abs() > 1e-9 {
        return Err(Error::numeric(format!("CCC closed form: {c} vs 0.8")));
    }
    // classifier gradient vs central differences
    for seed in 1..=5u64 {
        let rel = gradient_check(seed);
        if rel >= 1e-4 {
            return Err(Error::numeric(format!(
                "gradient check seed {seed}: relative error {rel}"
            )));
        }
    }
    Ok(())
}

type Check = Box<dyn Fn() -> Result<()>>;

pub fn run() -> Result<()> {
    let checks: Vec<(&str, Check)> = vec![
        ("edit-distance oracle (1000 cases)", Box::new(|| check_edit_distance(1000))),
        ("FAD closed forms + invariances (200 cases)", Box::new(|| check_fad_closed_forms(200))),
        ("CCA oracle + invariances (100 + 50 cases)", Box::new(|| check_cca(100, 50))),
        ("metric identities + gradient check (500 cases)", Box::new(|| check_metric_identities(500))),
    ];
    let mut failed = false;
    for (name, check) in checks {
        match check() {
            Ok(()) => println!("selftest: PASS {name}"),
            Err(e) => {
                failed = true;
                println!("selftest: FAIL {name}: {e}");
            }
        }
    }
    if failed {
        Err(Error::numeric("selftest failed"))
    } else {
        Ok(())
    }
}
