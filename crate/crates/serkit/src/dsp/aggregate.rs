//! Frame→phone→word feature aggregation and percentile bucketing.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Hierarchy target for [`hierarchical_aggregate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregateLevel {
    /// One row per 5 consecutive frames.
    Phone,
    /// One row per 5 consecutive phones (25 frames).
    Word,
}

/// Group size used for both hierarchy steps.
pub const GROUP: usize = 5;

fn aggregate_once(features: &Matrix) -> Matrix {
    let rows = features.rows();
    let out_rows = rows.div_ceil(GROUP);
    let mut values = Vec::with_capacity(out_rows * features.cols());
    for g in 0..out_rows {
        let start = g * GROUP;
        let end = (start + GROUP).min(rows);
        let size = (end - start) as f64;
        let mut acc = vec![0.0; features.cols()];
        for r in start..end {
            for (a, v) in acc.iter_mut().zip(features.row(r)) {
                *a += v;
            }
        }
        values.extend(acc.into_iter().map(|v| v / size));
    }
    Matrix::from_vec(out_rows, features.cols(), values).expect("shape preserved")
}

/// Average non-overlapping groups of 5 rows; the final partial group is
/// averaged over its actual size. Word level applies the grouping twice.
pub fn hierarchical_aggregate(features: &Matrix, level: AggregateLevel) -> Result<Matrix> {
    if features.rows() == 0 {
        return Err(Error::contract("empty feature matrix"));
    }
    let phone = aggregate_once(features);
    Ok(match level {
        AggregateLevel::Phone => phone,
        AggregateLevel::Word => aggregate_once(&phone),
    })
}

/// Percentile bucket for one value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Bucket {
    Low,
    Mid,
    High,
}

impl Bucket {
    pub fn label(&self) -> &'static str {
        match self {
            Bucket::Low => "low",
            Bucket::Mid => "mid",
            Bucket::High => "high",
        }
    }
}

/// Split values at the lowest `low_pct`% and highest `high_pct`% of the
/// ordered list (nearest-rank cutoffs: the k-th smallest and k-th largest
/// values with k = ceil(pct/100·n)). A value at or below the low cutoff is
/// low, at or above the high cutoff is high; when the cutoffs coincide the
/// conflicting values resolve to mid, so degenerate distributions bucket
/// everything as mid.
pub fn bucketize_by_percentile(
    values: &[f64],
    low_pct: f64,
    high_pct: f64,
) -> Result<Vec<Bucket>> {
    if values.is_empty() {
        return Err(Error::contract("empty input"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::contract("non-finite value"));
    }
    if !(0.0..=100.0).contains(&low_pct) || !(0.0..=100.0).contains(&high_pct) {
        return Err(Error::contract("percentiles must lie in [0, 100]"));
    }
    let n = values.len();
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = |pct: f64| ((pct / 100.0 * n as f64).ceil() as usize).clamp(1, n);
    let low_cut = sorted[rank(low_pct) - 1];
    let high_cut = sorted[n - rank(high_pct)];
    Ok(values
        .iter()
        .map(|&v| {
            let is_low = v <= low_cut;
            let is_high = v >= high_cut;
            match (is_low, is_high) {
                (true, true) => Bucket::Mid,
                (true, false) => Bucket::Low,
                (false, true) => Bucket::High,
                (false, false) => Bucket::Mid,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_frames_make_two_phones() {
        let m = Matrix::from_vec(10, 1, (0..10).map(|i| i as f64).collect()).unwrap();
        let phones = hierarchical_aggregate(&m, AggregateLevel::Phone).unwrap();
        assert_eq!(phones.rows(), 2);
        assert_eq!(phones.values(), &[2.0, 7.0]);
    }

    #[test]
    fn ninety_eight_frames_chain() {
        let m = Matrix::zeros(98, 3);
        let phones = hierarchical_aggregate(&m, AggregateLevel::Phone).unwrap();
        assert_eq!(phones.rows(), 20);
        let words = hierarchical_aggregate(&m, AggregateLevel::Word).unwrap();
        assert_eq!(words.rows(), 4);
    }

    #[test]
    fn constant_matrix_unchanged() {
        let m = Matrix::from_vec(13, 2, vec![3.5; 26]).unwrap();
        let phones = hierarchical_aggregate(&m, AggregateLevel::Phone).unwrap();
        assert!(phones.values().iter().all(|&v| (v - 3.5).abs() < 1e-15));
        let words = hierarchical_aggregate(&m, AggregateLevel::Word).unwrap();
        assert!(words.values().iter().all(|&v| (v - 3.5).abs() < 1e-15));
    }

    #[test]
    fn partial_group_averages_over_actual_size() {
        let m = Matrix::from_vec(7, 1, vec![1.0, 1.0, 1.0, 1.0, 1.0, 4.0, 6.0]).unwrap();
        let phones = hierarchical_aggregate(&m, AggregateLevel::Phone).unwrap();
        assert_eq!(phones.values(), &[1.0, 5.0]);
    }

    #[test]
    fn bucket_one_to_ten() {
        let values: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let buckets = bucketize_by_percentile(&values, 30.0, 30.0).unwrap();
        for (i, b) in buckets.iter().enumerate() {
            let expect = match i {
                0..=2 => Bucket::Low,
                7..=9 => Bucket::High,
                _ => Bucket::Mid,
            };
            assert_eq!(*b, expect, "value {}", i + 1);
        }
    }

    #[test]
    fn all_equal_resolves_mid() {
        let buckets = bucketize_by_percentile(&[2.0; 6], 30.0, 30.0).unwrap();
        assert!(buckets.iter().all(|b| *b == Bucket::Mid));
    }

    #[test]
    fn single_value_is_mid() {
        let buckets = bucketize_by_percentile(&[42.0], 30.0, 30.0).unwrap();
        assert_eq!(buckets, vec![Bucket::Mid]);
    }

    #[test]
    fn empty_rejected() {
        assert!(bucketize_by_percentile(&[], 30.0, 30.0).is_err());
    }
}
