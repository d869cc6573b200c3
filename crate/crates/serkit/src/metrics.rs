//! Classification and regression metrics.

use crate::error::{Error, Result};

/// Confusion matrix over a fixed class list.
#[derive(Debug, Clone)]
pub struct ConfusionCounts {
    classes: Vec<String>,
    /// matrix[t][p] = count of samples with true class t predicted as p.
    matrix: Vec<Vec<usize>>,
    total: usize,
}

impl ConfusionCounts {
    pub fn new(classes: Vec<String>) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::contract("empty class list"));
        }
        let k = classes.len();
        Ok(ConfusionCounts { classes, matrix: vec![vec![0; k]; k], total: 0 })
    }

    /// Build from (predicted, target) label pairs; the class list is the
    /// sorted union of labels seen.
    pub fn from_labels(pairs: &[(String, String)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::contract("no label pairs"));
        }
        let mut classes: Vec<String> = pairs
            .iter()
            .flat_map(|(p, t)| [p.clone(), t.clone()])
            .collect();
        classes.sort();
        classes.dedup();
        let mut cm = ConfusionCounts::new(classes)?;
        for (pred, target) in pairs {
            cm.record_by_name(pred, target)?;
        }
        Ok(cm)
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == name)
    }

    pub fn record_by_name(&mut self, pred: &str, target: &str) -> Result<()> {
        let p = self
            .class_index(pred)
            .ok_or_else(|| Error::contract(format!("unknown predicted class {pred:?}")))?;
        let t = self
            .class_index(target)
            .ok_or_else(|| Error::contract(format!("unknown target class {target:?}")))?;
        self.record(p, t);
        Ok(())
    }

    pub fn record(&mut self, pred: usize, target: usize) {
        self.matrix[target][pred] += 1;
        self.total += 1;
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn true_positives(&self, class: usize) -> usize {
        self.matrix[class][class]
    }

    /// Samples whose true class is `class`.
    pub fn support(&self, class: usize) -> usize {
        self.matrix[class].iter().sum()
    }

    /// Samples predicted as `class`.
    pub fn predicted(&self, class: usize) -> usize {
        self.matrix.iter().map(|row| row[class]).sum()
    }

    pub fn matrix(&self) -> &[Vec<usize>] {
        &self.matrix
    }
}

/// Fraction of all samples predicted correctly.
pub fn unweighted_accuracy(cm: &ConfusionCounts) -> Result<f64> {
    if cm.total == 0 {
        return Err(Error::contract("empty confusion matrix"));
    }
    let correct: usize = (0..cm.classes.len()).map(|c| cm.true_positives(c)).sum();
    Ok(correct as f64 / cm.total as f64)
}

/// Class-weighted accuracy, Σ_c (n_c/n)·(TP_c/n_c). The class weights
/// cancel exactly in ℚ, so this is computed in the reduced form Σ_c TP_c / n
/// and coincides with [`unweighted_accuracy`] on every confusion matrix.
pub fn weighted_accuracy_paper(cm: &ConfusionCounts) -> Result<f64> {
    if cm.total == 0 {
        return Err(Error::contract("empty confusion matrix"));
    }
    let tp_sum: usize = (0..cm.classes.len())
        .filter(|&c| cm.support(c) > 0)
        .map(|c| cm.true_positives(c))
        .sum();
    Ok(tp_sum as f64 / cm.total as f64)
}

/// Macro-average recall. Errors when any class has zero support.
pub fn balanced_accuracy(cm: &ConfusionCounts) -> Result<f64> {
    let k = cm.classes.len();
    let mut acc = 0.0;
    for c in 0..k {
        let n_c = cm.support(c);
        if n_c == 0 {
            return Err(Error::contract(format!(
                "class {:?} has no samples; balanced accuracy undefined",
                cm.classes[c]
            )));
        }
        acc += cm.true_positives(c) as f64 / n_c as f64;
    }
    Ok(acc / k as f64)
}

/// Per-class one-vs-rest precision/recall/F1.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ClassPrf {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Per-class scores plus macro and support-weighted aggregates.
#[derive(Debug, Clone, serde::Serialize)]
pub struct PrfReport {
    pub per_class: Vec<ClassPrf>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
}

/// Precision/recall/F1 with the 0/0 → 0 convention for empty denominators.
pub fn precision_recall_f1(cm: &ConfusionCounts) -> Result<PrfReport> {
    if cm.total == 0 {
        return Err(Error::contract("empty confusion matrix"));
    }
    let k = cm.classes.len();
    let mut per_class = Vec::with_capacity(k);
    for c in 0..k {
        let tp = cm.true_positives(c) as f64;
        let predicted = cm.predicted(c) as f64;
        let support = cm.support(c);
        let precision = if predicted > 0.0 { tp / predicted } else { 0.0 };
        let recall = if support > 0 { tp / support as f64 } else { 0.0 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        per_class.push(ClassPrf { class: cm.classes[c].clone(), precision, recall, f1, support });
    }
    let kf = k as f64;
    let nf = cm.total as f64;
    let macro_precision = per_class.iter().map(|c| c.precision).sum::<f64>() / kf;
    let macro_recall = per_class.iter().map(|c| c.recall).sum::<f64>() / kf;
    let macro_f1 = per_class.iter().map(|c| c.f1).sum::<f64>() / kf;
    let wsum = |f: fn(&ClassPrf) -> f64, rows: &[ClassPrf]| {
        rows.iter().map(|c| f(c) * c.support as f64).sum::<f64>() / nf
    };
    let weighted_precision = wsum(|c| c.precision, &per_class);
    let weighted_recall = wsum(|c| c.recall, &per_class);
    let weighted_f1 = wsum(|c| c.f1, &per_class);
    Ok(PrfReport {
        per_class,
        macro_precision,
        macro_recall,
        macro_f1,
        weighted_precision,
        weighted_recall,
        weighted_f1,
    })
}

fn check_pair(predictions: &[f64], targets: &[f64]) -> Result<()> {
    if predictions.len() != targets.len() {
        return Err(Error::contract(format!(
            "length mismatch: {} predictions vs {} targets",
            predictions.len(),
            targets.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::contract("empty sequences"));
    }
    if predictions.iter().chain(targets).any(|v| !v.is_finite()) {
        return Err(Error::contract("non-finite value"));
    }
    Ok(())
}

pub fn mse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    check_pair(predictions, targets)?;
    let n = predictions.len() as f64;
    Ok(predictions.iter().zip(targets).map(|(p, t)| (t - p) * (t - p)).sum::<f64>() / n)
}

pub fn mae(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    check_pair(predictions, targets)?;
    let n = predictions.len() as f64;
    Ok(predictions.iter().zip(targets).map(|(p, t)| (t - p).abs()).sum::<f64>() / n)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population (1/n) variance; the same convention is used in both PCC and
/// CCC so the CCC closed-form identities hold exactly.
fn population_var(xs: &[f64], mu: f64) -> f64 {
    xs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / xs.len() as f64
}

/// Pearson correlation coefficient. Errors when either side has zero variance.
pub fn pcc(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    check_pair(predictions, targets)?;
    if predictions.len() < 2 {
        return Err(Error::contract("correlation needs at least 2 points"));
    }
    let mp = mean(predictions);
    let mt = mean(targets);
    let n = predictions.len() as f64;
    let cov = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - mp) * (t - mt))
        .sum::<f64>()
        / n;
    let vp = population_var(predictions, mp);
    let vt = population_var(targets, mt);
    if vp == 0.0 || vt == 0.0 {
        return Err(Error::numeric("zero variance; PCC undefined"));
    }
    Ok(cov / (vp.sqrt() * vt.sqrt()))
}

/// Concordance correlation coefficient, 2ρσσ̂ / (σ² + σ̂² + (μ−μ̂)²).
pub fn ccc(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    let rho = pcc(predictions, targets)?;
    let mp = mean(predictions);
    let mt = mean(targets);
    let sp = population_var(predictions, mp).sqrt();
    let st = population_var(targets, mt).sqrt();
    Ok(2.0 * rho * st * sp / (st * st + sp * sp + (mt - mp) * (mt - mp)))
}

/// Scoring mode for sentiment-style continuous scores in [-3, 3].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreAccuracy {
    /// Binary polarity accuracy; pairs where either side is exactly 0 are
    /// excluded.
    Acc2,
    /// Seven-class accuracy after rounding half away from zero to integers
    /// in [-3, 3].
    Acc7,
}

fn round_half_away(v: f64) -> i64 {
    if v >= 0.0 { (v + 0.5).floor() as i64 } else { (v - 0.5).ceil() as i64 }
}

pub fn acc_from_scores(
    pred_scores: &[f64],
    target_scores: &[f64],
    mode: ScoreAccuracy,
) -> Result<f64> {
    check_pair(pred_scores, target_scores)?;
    match mode {
        ScoreAccuracy::Acc7 => {
            if let Some(bad) = pred_scores
                .iter()
                .chain(target_scores)
                .find(|v| v.abs() > 3.0)
            {
                return Err(Error::contract(format!("score {bad} outside [-3, 3]")));
            }
            let hits = pred_scores
                .iter()
                .zip(target_scores)
                .filter(|(p, t)| round_half_away(**p) == round_half_away(**t))
                .count();
            Ok(hits as f64 / pred_scores.len() as f64)
        }
        ScoreAccuracy::Acc2 => {
            let kept: Vec<(f64, f64)> = pred_scores
                .iter()
                .zip(target_scores)
                .filter(|(p, t)| **p != 0.0 && **t != 0.0)
                .map(|(p, t)| (*p, *t))
                .collect();
            if kept.is_empty() {
                return Err(Error::contract("no pairs left after zero exclusion"));
            }
            let hits = kept.iter().filter(|(p, t)| (*p > 0.0) == (*t > 0.0)).count();
            Ok(hits as f64 / kept.len() as f64)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cm_from(pairs: &[(&str, &str)]) -> ConfusionCounts {
        let owned: Vec<(String, String)> =
            pairs.iter().map(|(p, t)| (p.to_string(), t.to_string())).collect();
        ConfusionCounts::from_labels(&owned).unwrap()
    }

    #[test]
    fn ua_perfect_and_all_wrong() {
        let cm = cm_from(&[("a", "a"), ("b", "b")]);
        assert_eq!(unweighted_accuracy(&cm).unwrap(), 1.0);
        let cm = cm_from(&[("a", "b"), ("b", "a")]);
        assert_eq!(unweighted_accuracy(&cm).unwrap(), 0.0);
    }

    #[test]
    fn ua_seven_of_ten() {
        let mut pairs = vec![("a", "a"); 4];
        pairs.extend(vec![("b", "b"); 3]);
        pairs.extend(vec![("a", "b"); 2]);
        pairs.push(("b", "a"));
        let cm = cm_from(&pairs);
        assert!((unweighted_accuracy(&cm).unwrap() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn majority_predictor_on_imbalance() {
        // 90 of class a, 10 of class b, everything predicted a
        let mut pairs = vec![("a", "a"); 90];
        pairs.extend(vec![("a", "b"); 10]);
        let cm = cm_from(&pairs);
        assert!((weighted_accuracy_paper(&cm).unwrap() - 0.9).abs() < 1e-15);
        assert!((balanced_accuracy(&cm).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn class_never_predicted_gets_zero_precision() {
        let cm = cm_from(&[("a", "a"), ("a", "b")]);
        let report = precision_recall_f1(&cm).unwrap();
        let b = report.per_class.iter().find(|c| c.class == "b").unwrap();
        assert_eq!(b.precision, 0.0);
        assert_eq!(b.recall, 0.0);
        assert_eq!(b.f1, 0.0);
    }

    #[test]
    fn three_class_hand_worked() {
        // confusion (rows = target, cols = pred) over classes a,b,c:
        //   a: [2, 1, 0]
        //   b: [0, 3, 1]
        //   c: [1, 0, 2]
        let mut pairs = Vec::new();
        pairs.extend(vec![("a", "a"); 2]);
        pairs.push(("b", "a"));
        pairs.extend(vec![("b", "b"); 3]);
        pairs.push(("c", "b"));
        pairs.push(("a", "c"));
        pairs.extend(vec![("c", "c"); 2]);
        let cm = cm_from(&pairs);
        let r = precision_recall_f1(&cm).unwrap();
        let a = &r.per_class[0];
        // precision a = 2/3, recall a = 2/3
        assert!((a.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((a.recall - 2.0 / 3.0).abs() < 1e-12);
        let b = &r.per_class[1];
        // predicted b = 4, tp = 3; support b = 4
        assert!((b.precision - 0.75).abs() < 1e-12);
        assert!((b.recall - 0.75).abs() < 1e-12);
        let c = &r.per_class[2];
        // predicted c = 3, tp = 2; support c = 3
        assert!((c.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((c.recall - 2.0 / 3.0).abs() < 1e-12);
        assert!((unweighted_accuracy(&cm).unwrap() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn f1_is_harmonic_mean_bounded() {
        // for P, R > 0: P·R ≤ F1·max(P, R), since F1 = 2PR/(P+R)
        let mut pairs = vec![("a", "a"); 5];
        pairs.extend([("a", "b"), ("b", "a"), ("b", "b"), ("b", "b"), ("a", "b")]);
        let cm = cm_from(&pairs);
        let report = precision_recall_f1(&cm).unwrap();
        for c in &report.per_class {
            if c.precision > 0.0 && c.recall > 0.0 {
                assert!(
                    c.precision * c.recall <= c.f1 * c.precision.max(c.recall) + 1e-12,
                    "class {}",
                    c.class
                );
            }
        }
    }

    #[test]
    fn mse_mae_constant_offset() {
        let targets = [1.0, 2.0, 3.0];
        let preds = [3.0, 4.0, 5.0];
        assert_eq!(mse(&preds, &targets).unwrap(), 4.0);
        assert_eq!(mae(&preds, &targets).unwrap(), 2.0);
        assert_eq!(mse(&targets, &targets).unwrap(), 0.0);
    }

    #[test]
    fn pcc_ccc_identity_and_scaling() {
        let targets = [-2.0, -1.0, 0.0, 1.0, 2.0];
        assert!((pcc(&targets, &targets).unwrap() - 1.0).abs() < 1e-12);
        assert!((ccc(&targets, &targets).unwrap() - 1.0).abs() < 1e-12);
        // preds = 2 * targets, zero mean: PCC 1, CCC = 2*2/(1+4) = 0.8
        let preds: Vec<f64> = targets.iter().map(|t| 2.0 * t).collect();
        assert!((pcc(&preds, &targets).unwrap() - 1.0).abs() < 1e-12);
        assert!((ccc(&preds, &targets).unwrap() - 0.8).abs() < 1e-12);
        // anti-correlation
        let neg: Vec<f64> = targets.iter().map(|t| -t).collect();
        assert!((pcc(&neg, &targets).unwrap() + 1.0).abs() < 1e-12);
        assert!(ccc(&neg, &targets).unwrap() < 0.0);
    }

    #[test]
    fn zero_variance_rejected() {
        assert!(pcc(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn acc7_rounding_rule() {
        assert_eq!(acc_from_scores(&[1.4], &[1.0], ScoreAccuracy::Acc7).unwrap(), 1.0);
        assert_eq!(acc_from_scores(&[1.6], &[1.0], ScoreAccuracy::Acc7).unwrap(), 0.0);
        assert_eq!(acc_from_scores(&[-1.5], &[-2.0], ScoreAccuracy::Acc7).unwrap(), 1.0);
    }

    #[test]
    fn acc2_sign_rule() {
        assert_eq!(acc_from_scores(&[-0.2], &[0.4], ScoreAccuracy::Acc2).unwrap(), 0.0);
        assert_eq!(acc_from_scores(&[0.2, -1.0], &[0.4, -2.0], ScoreAccuracy::Acc2).unwrap(), 1.0);
        assert!(acc_from_scores(&[0.0], &[1.0], ScoreAccuracy::Acc2).is_err());
    }

    #[test]
    fn mse_against_direct_loop() {
        let mut x: u64 = 7;
        let mut next = || {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1);
            (x >> 11) as f64 / (1u64 << 53) as f64
        };
        let preds: Vec<f64> = (0..100).map(|_| next()).collect();
        let targets: Vec<f64> = (0..100).map(|_| next()).collect();
        let mut acc = 0.0;
        for i in 0..100 {
            acc += (targets[i] - preds[i]).powi(2);
        }
        acc /= 100.0;
        assert!((mse(&preds, &targets).unwrap() - acc).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn wa_equals_ua(seed in any::<u64>(), k in 2usize..5, n in 1usize..60) {
            let mut x = seed | 1;
            let mut cm = ConfusionCounts::new((0..k).map(|i| format!("c{i}")).collect()).unwrap();
            for _ in 0..n {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1);
                let p = (x >> 33) as usize % k;
                let t = (x >> 13) as usize % k;
                cm.record(p, t);
            }
            prop_assert_eq!(
                unweighted_accuracy(&cm).unwrap(),
                weighted_accuracy_paper(&cm).unwrap()
            );
        }

        #[test]
        fn metrics_invariant_under_pair_permutation(seed in any::<u64>()) {
            let mut x = seed | 1;
            let mut next = || {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1);
                (x >> 11) as f64 / (1u64 << 53) as f64
            };
            let preds: Vec<f64> = (0..20).map(|_| next()).collect();
            let targets: Vec<f64> = (0..20).map(|_| next() + 0.1).collect();
            let mut order: Vec<usize> = (0..20).collect();
            order.reverse();
            let preds_p: Vec<f64> = order.iter().map(|&i| preds[i]).collect();
            let targets_p: Vec<f64> = order.iter().map(|&i| targets[i]).collect();
            prop_assert!((mse(&preds, &targets).unwrap() - mse(&preds_p, &targets_p).unwrap()).abs() < 1e-12);
            prop_assert!((pcc(&preds, &targets).unwrap() - pcc(&preds_p, &targets_p).unwrap()).abs() < 1e-12);
            prop_assert!((ccc(&preds, &targets).unwrap() - ccc(&preds_p, &targets_p).unwrap()).abs() < 1e-12);
        }
    }
}
