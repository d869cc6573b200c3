//! Multi-view semi-supervised training loop and its reference baselines.
//!
//! Unlabeled data carries an acoustic pseudo-label and optionally a
//! linguistic one; agreement promotes a datum to the high-confidence pool.
//! Each loop iteration retrains the built-in classifier from scratch on the
//! labeled and high-confidence data (minus a per-iteration random holdout
//! of the initial high-confidence set), promotes low-confidence data whose
//! model label matches either view, and stops on a stalled validation score.

pub mod logreg;
pub mod synth;

pub use logreg::{
    cross_entropy_gradient, cross_entropy_loss, gradient_check, predict, train_builtin,
    ClassifierModel, TrainConfig,
};

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// One example with a (gold or pseudo) label.
#[derive(Debug, Clone)]
pub struct LabeledExample {
    pub id: String,
    pub features: Vec<f64>,
    pub label: String,
}

/// One example awaiting a label.
#[derive(Debug, Clone)]
pub struct UnlabeledExample {
    pub id: String,
    pub features: Vec<f64>,
}

/// Pseudo-labels for one unlabeled datum.
#[derive(Debug, Clone)]
pub struct PseudoLabelRecord {
    pub id: String,
    pub acoustic: String,
    pub linguistic: Option<String>,
    pub model: Option<String>,
}

/// Strict-majority vote across label maps; an exact tie (no class above
/// half the votes cast for that id) leaves the id unlabeled.
pub fn majority_vote(
    label_sets: &[BTreeMap<String, String>],
) -> Result<BTreeMap<String, Option<String>>> {
    if label_sets.is_empty() {
        return Err(Error::contract("majority_vote needs at least one label set"));
    }
    let mut ids: BTreeSet<&String> = BTreeSet::new();
    for set in label_sets {
        ids.extend(set.keys());
    }
    let mut out = BTreeMap::new();
    for id in ids {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        let mut cast = 0usize;
        for set in label_sets {
            if let Some(label) = set.get(id) {
                *counts.entry(label.as_str()).or_insert(0) += 1;
                cast += 1;
            }
        }
        let winner = counts
            .iter()
            .find(|(_, &c)| 2 * c > cast)
            .map(|(label, _)| label.to_string());
        out.insert(id.clone(), winner);
    }
    Ok(out)
}

/// Split records into high confidence (acoustic and linguistic labels agree)
/// and low confidence (disagreement or missing linguistic label).
pub fn select_high_confidence(
    records: &[PseudoLabelRecord],
) -> (Vec<(String, String)>, Vec<String>) {
    let mut high = Vec::new();
    let mut low = Vec::new();
    for r in records {
        match &r.linguistic {
            Some(l) if *l == r.acoustic => high.push((r.id.clone(), r.acoustic.clone())),
            _ => low.push(r.id.clone()),
        }
    }
    (high, low)
}

/// The loop's working state: disjoint labeled / high-confidence /
/// low-confidence / validation partitions.
#[derive(Debug, Clone)]
pub struct DataPool {
    pub labeled: Vec<LabeledExample>,
    pub high_conf: Vec<LabeledExample>,
    pub low_conf: Vec<UnlabeledExample>,
    pub validation: Vec<LabeledExample>,
    /// Frozen at construction; the per-iteration removal samples from here.
    pub initial_high_conf_ids: BTreeSet<String>,
}

impl DataPool {
    pub fn new(
        labeled: Vec<LabeledExample>,
        high_conf: Vec<LabeledExample>,
        low_conf: Vec<UnlabeledExample>,
        validation: Vec<LabeledExample>,
    ) -> Result<DataPool> {
        let mut seen: BTreeSet<String> = BTreeSet::new();
        let all_ids = labeled
            .iter()
            .map(|e| &e.id)
            .chain(high_conf.iter().map(|e| &e.id))
            .chain(low_conf.iter().map(|e| &e.id))
            .chain(validation.iter().map(|e| &e.id));
        for id in all_ids {
            if !seen.insert(id.clone()) {
                return Err(Error::contract(format!("id {id:?} appears in two partitions")));
            }
        }
        let initial_high_conf_ids = high_conf.iter().map(|e| e.id.clone()).collect();
        Ok(DataPool { labeled, high_conf, low_conf, validation, initial_high_conf_ids })
    }
}

/// Loop hyperparameters.
#[derive(Debug, Clone, Serialize)]
pub struct LoopConfig {
    pub max_iters: usize,
    /// Stop after this many consecutive iterations without a strictly
    /// better validation score.
    pub patience: usize,
    /// Fraction of the initial high-confidence set held out of each
    /// iteration's training pool (resampled every iteration).
    pub removal_rate: f64,
    pub seed: u64,
    #[serde(skip)]
    pub train: TrainConfig,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            max_iters: 40,
            patience: 2,
            removal_rate: 0.2,
            seed: 0,
            train: TrainConfig::default(),
        }
    }
}

/// Why the loop ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIterations,
    Patience,
}

/// Per-iteration pool accounting.
#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub validation_ua: f64,
    /// High-confidence pool size at training time.
    pub high_conf: usize,
    pub low_conf: usize,
    pub promoted: usize,
    /// Initial-high-confidence examples held out of this iteration's
    /// training pool.
    pub removed: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationHistory {
    pub iterations: Vec<IterationRecord>,
    pub final_validation_ua: f64,
    pub best_validation_ua: f64,
    pub stop_reason: StopReason,
}

fn to_matrix(rows: &[Vec<f64>]) -> Result<Matrix> {
    Matrix::from_rows(rows)
}

/// A trained model the loop can query: per-row argmax class plus the full
/// probability vector over [`TrainedModel::classes`].
pub trait TrainedModel {
    fn classes(&self) -> &[String];
    fn predict(&self, features: &Matrix) -> Result<Vec<(String, Vec<f64>)>>;
}

/// Train/predict-proba contract letting external classifiers participate in
/// the loop in place of the built-in logistic model.
pub trait ClassifierFactory {
    fn train(&self, features: &Matrix, labels: &[String]) -> Result<Box<dyn TrainedModel>>;
}

impl TrainedModel for ClassifierModel {
    fn classes(&self) -> &[String] {
        &self.classes
    }

    fn predict(&self, features: &Matrix) -> Result<Vec<(String, Vec<f64>)>> {
        predict(self, features)
    }
}

/// The built-in multinomial logistic classifier as a loop plug-in.
#[derive(Debug, Clone, Copy)]
pub struct BuiltinClassifier(pub TrainConfig);

impl ClassifierFactory for BuiltinClassifier {
    fn train(&self, features: &Matrix, labels: &[String]) -> Result<Box<dyn TrainedModel>> {
        Ok(Box::new(train_builtin(features, labels, &self.0)?))
    }
}

fn validation_ua(model: &dyn TrainedModel, validation: &[LabeledExample]) -> Result<f64> {
    let features = to_matrix(&validation.iter().map(|e| e.features.clone()).collect::<Vec<_>>())?;
    let preds = model.predict(&features)?;
    let correct = preds
        .iter()
        .zip(validation)
        .filter(|((pred, _), gold)| *pred == gold.label)
        .count();
    Ok(correct as f64 / validation.len() as f64)
}

/// Run the loop with the built-in classifier.
pub fn run_loop(
    pool: &DataPool,
    records: &[PseudoLabelRecord],
    cfg: &LoopConfig,
) -> Result<IterationHistory> {
    run_loop_with(pool, records, cfg, &BuiltinClassifier(cfg.train))
}

/// Run the iterative semi-supervised loop on a pool plus the per-datum
/// pseudo-label records (keyed by id; every low-confidence id must appear),
/// training a fresh classifier from `factory` each iteration.
pub fn run_loop_with(
    pool: &DataPool,
    records: &[PseudoLabelRecord],
    cfg: &LoopConfig,
    factory: &dyn ClassifierFactory,
) -> Result<IterationHistory> {
    if pool.labeled.is_empty() {
        return Err(Error::contract("empty labeled set"));
    }
    if pool.validation.is_empty() {
        return Err(Error::contract("empty validation set"));
    }
    if !(0.0..=1.0).contains(&cfg.removal_rate) {
        return Err(Error::contract("removal_rate outside [0, 1]"));
    }
    let record_by_id: HashMap<&str, &PseudoLabelRecord> =
        records.iter().map(|r| (r.id.as_str(), r)).collect();
    for e in &pool.low_conf {
        if !record_by_id.contains_key(e.id.as_str()) {
            return Err(Error::contract(format!("no pseudo-label record for id {:?}", e.id)));
        }
    }
    // validation classes must be learnable from iteration-1 training data
    let train_classes: BTreeSet<&str> = pool
        .labeled
        .iter()
        .chain(&pool.high_conf)
        .map(|e| e.label.as_str())
        .collect();
    if let Some(orphan) = pool
        .validation
        .iter()
        .find(|e| !train_classes.contains(e.label.as_str()))
    {
        return Err(Error::contract(format!(
            "validation class {:?} absent from training classes",
            orphan.label
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let initial_ids: Vec<String> = pool.initial_high_conf_ids.iter().cloned().collect();
    let removal_count =
        ((initial_ids.len() as f64) * cfg.removal_rate).floor() as usize;

    let mut high_conf = pool.high_conf.clone();
    let mut low_conf = pool.low_conf.clone();
    let universe = pool.labeled.len() + high_conf.len() + low_conf.len();
    let mut removed_ids: BTreeSet<String> = BTreeSet::new(); // empty for iteration 1

    let mut history = Vec::new();
    let mut best_ua = f64::NEG_INFINITY;
    let mut stall = 0usize;
    let mut stop_reason = StopReason::MaxIterations;

    for iteration in 1..=cfg.max_iters {
        // (1) fresh classifier on labeled ∪ (high_conf minus this
        // iteration's holdout)
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut labels: Vec<String> = Vec::new();
        for e in pool.labeled.iter().chain(high_conf.iter()) {
            if removed_ids.contains(&e.id) {
                continue;
            }
            rows.push(e.features.clone());
            labels.push(e.label.clone());
        }
        let model = factory.train(&to_matrix(&rows)?, &labels)?;

        // (2) validation score and stopping check
        let ua = validation_ua(model.as_ref(), &pool.validation)?;
        if ua > best_ua {
            best_ua = ua;
            stall = 0;
        } else {
            stall += 1;
        }
        let mut record = IterationRecord {
            iteration,
            validation_ua: ua,
            high_conf: high_conf.len(),
            low_conf: low_conf.len(),
            promoted: 0,
            removed: removed_ids.len(),
        };
        if stall >= cfg.patience {
            history.push(record);
            stop_reason = StopReason::Patience;
            break;
        }

        // (3) predict the low-confidence pool and promote agreements
        if !low_conf.is_empty() {
            let features =
                to_matrix(&low_conf.iter().map(|e| e.features.clone()).collect::<Vec<_>>())?;
            let preds = model.predict(&features)?;
            let mut still_low = Vec::with_capacity(low_conf.len());
            for (example, (model_label, _)) in low_conf.into_iter().zip(preds) {
                let r = record_by_id[example.id.as_str()];
                let agrees = model_label == r.acoustic
                    || r.linguistic.as_deref() == Some(model_label.as_str());
                if agrees {
                    high_conf.push(LabeledExample {
                        id: example.id,
                        features: example.features,
                        label: model_label,
                    });
                    record.promoted += 1;
                } else {
                    still_low.push(example);
                }
            }
            low_conf = still_low;
        }

        // (4) resample the next iteration's holdout from the frozen
        // initial high-confidence ids (previous holdout is reinstated)
        let mut shuffled = initial_ids.clone();
        shuffled.shuffle(&mut rng);
        removed_ids = shuffled.into_iter().take(removal_count).collect();

        debug_assert_eq!(
            pool.labeled.len() + high_conf.len() + low_conf.len(),
            universe,
            "pool conservation"
        );
        history.push(record);
    }

    let final_validation_ua = history.last().map(|r| r.validation_ua).unwrap_or(0.0);
    Ok(IterationHistory {
        iterations: history,
        final_validation_ua,
        best_validation_ua: best_ua,
        stop_reason,
    })
}

/// Elementwise mean of two probability vectors.
pub fn merge_probabilities(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| (x + y) / 2.0).collect()
}

/// Argmax class index when its probability clears the threshold.
pub fn select_by_threshold(probs: &[f64], threshold: f64) -> Option<usize> {
    let mut best = 0usize;
    for (i, p) in probs.iter().enumerate() {
        if *p > probs[best] {
            best = i;
        }
    }
    (probs[best] >= threshold).then_some(best)
}

/// Reference training schemes the loop is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    SupervisedFull,
    SupervisedLimited,
    DecisionMerging,
    CoTraining,
}

impl BaselineKind {
    pub fn parse(s: &str) -> Result<BaselineKind> {
        match s {
            "supervised_full" => Ok(BaselineKind::SupervisedFull),
            "supervised_limited" => Ok(BaselineKind::SupervisedLimited),
            "decision_merging" => Ok(BaselineKind::DecisionMerging),
            "co_training" => Ok(BaselineKind::CoTraining),
            other => Err(Error::contract(format!("unknown baseline {other:?}"))),
        }
    }
}

/// Inputs shared by all baselines. `full_gold` carries gold labels for the
/// entire training universe and feeds only the supervised_full upper bound.
#[derive(Debug, Clone)]
pub struct BaselinePool {
    pub labeled: Vec<LabeledExample>,
    pub unlabeled: Vec<UnlabeledExample>,
    pub full_gold: Vec<LabeledExample>,
    pub validation: Vec<LabeledExample>,
}

/// Boundary splitting each feature vector into view A (columns before
/// `dim_a`) and view B (the rest) for the two-view baselines.
#[derive(Debug, Clone, Copy)]
pub struct TwoViewSplit {
    pub dim_a: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BaselineReport {
    pub kind: BaselineKind,
    pub validation_ua: f64,
    /// Per-iteration scores for the iterative baselines (single entry for
    /// the supervised ones).
    pub ua_trajectory: Vec<f64>,
    /// Unlabeled examples absorbed into training across all iterations.
    pub promoted_total: usize,
}

/// Threshold plus loop controls for the iterative baselines.
#[derive(Debug, Clone)]
pub struct BaselineConfig {
    pub threshold: f64,
    pub max_iters: usize,
    pub patience: usize,
    pub seed: u64,
    pub train: TrainConfig,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            threshold: 0.5,
            max_iters: 40,
            patience: 2,
            seed: 0,
            train: TrainConfig::default(),
        }
    }
}

fn split_features(e: &[f64], split: TwoViewSplit) -> (Vec<f64>, Vec<f64>) {
    (e[..split.dim_a].to_vec(), e[split.dim_a..].to_vec())
}

fn train_on(examples: &[(Vec<f64>, String)], cfg: &TrainConfig) -> Result<ClassifierModel> {
    let rows: Vec<Vec<f64>> = examples.iter().map(|(f, _)| f.clone()).collect();
    let labels: Vec<String> = examples.iter().map(|(_, l)| l.clone()).collect();
    train_builtin(&to_matrix(&rows)?, &labels, cfg)
}

fn merged_validation_ua(
    model_a: &ClassifierModel,
    model_b: &ClassifierModel,
    validation: &[LabeledExample],
    split: TwoViewSplit,
) -> Result<f64> {
    let mut correct = 0usize;
    for e in validation {
        let (fa, fb) = split_features(&e.features, split);
        let pa = predict(model_a, &to_matrix(&[fa])?)?;
        let pb = predict(model_b, &to_matrix(&[fb])?)?;
        let merged = merge_probabilities(&pa[0].1, &pb[0].1);
        let mut best = 0usize;
        for (i, p) in merged.iter().enumerate() {
            if *p > merged[best] {
                best = i;
            }
        }
        if model_a.classes[best] == e.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / validation.len() as f64)
}

/// Run one baseline and report its validation score.
pub fn run_baseline(
    kind: BaselineKind,
    pool: &BaselinePool,
    two_view: Option<TwoViewSplit>,
    cfg: &BaselineConfig,
) -> Result<BaselineReport> {
    if pool.validation.is_empty() {
        return Err(Error::contract("empty validation set"));
    }
    match kind {
        BaselineKind::SupervisedFull => {
            if pool.full_gold.is_empty() {
                return Err(Error::contract("supervised_full needs full gold labels"));
            }
            let examples: Vec<(Vec<f64>, String)> = pool
                .full_gold
                .iter()
                .map(|e| (e.features.clone(), e.label.clone()))
                .collect();
            let model = train_on(&examples, &cfg.train)?;
            let ua = validation_ua(&model, &pool.validation)?;
            Ok(BaselineReport {
                kind,
                validation_ua: ua,
                ua_trajectory: vec![ua],
                promoted_total: 0,
            })
        }
        BaselineKind::SupervisedLimited => {
            let examples: Vec<(Vec<f64>, String)> = pool
                .labeled
                .iter()
                .map(|e| (e.features.clone(), e.label.clone()))
                .collect();
            let model = train_on(&examples, &cfg.train)?;
            let ua = validation_ua(&model, &pool.validation)?;
            Ok(BaselineReport {
                kind,
                validation_ua: ua,
                ua_trajectory: vec![ua],
                promoted_total: 0,
            })
        }
        BaselineKind::DecisionMerging | BaselineKind::CoTraining => {
            let split = two_view.ok_or_else(|| {
                Error::contract("two-view baseline needs a view split (missing second view)")
            })?;
            run_two_view_baseline(kind, pool, split, cfg)
        }
    }
}

fn run_two_view_baseline(
    kind: BaselineKind,
    pool: &BaselinePool,
    split: TwoViewSplit,
    cfg: &BaselineConfig,
) -> Result<BaselineReport> {
    let seed_pool = |view: usize| -> Vec<(Vec<f64>, String)> {
        pool.labeled
            .iter()
            .map(|e| {
                let (fa, fb) = split_features(&e.features, split);
                (if view == 0 { fa } else { fb }, e.label.clone())
            })
            .collect()
    };
    let mut pool_a = seed_pool(0);
    let mut pool_b = seed_pool(1);
    let mut unlabeled: Vec<UnlabeledExample> = pool.unlabeled.clone();

    let mut trajectory = Vec::new();
    let mut promoted_total = 0usize;
    let mut best_ua = f64::NEG_INFINITY;
    let mut stall = 0usize;

    for _ in 1..=cfg.max_iters {
        let model_a = train_on(&pool_a, &cfg.train)?;
        let model_b = train_on(&pool_b, &cfg.train)?;
        let ua = merged_validation_ua(&model_a, &model_b, &pool.validation, split)?;
        trajectory.push(ua);
        if ua > best_ua {
            best_ua = ua;
            stall = 0;
        } else {
            stall += 1;
            if stall >= cfg.patience {
                break;
            }
        }
        if unlabeled.is_empty() {
            // nothing left to promote: one more score already recorded
            break;
        }
        let fa: Vec<Vec<f64>> =
            unlabeled.iter().map(|e| split_features(&e.features, split).0).collect();
        let fb: Vec<Vec<f64>> =
            unlabeled.iter().map(|e| split_features(&e.features, split).1).collect();
        let preds_a = predict(&model_a, &to_matrix(&fa)?)?;
        let preds_b = predict(&model_b, &to_matrix(&fb)?)?;
        let mut still = Vec::with_capacity(unlabeled.len());
        for (i, example) in unlabeled.into_iter().enumerate() {
            let (view_a, view_b) = split_features(&example.features, split);
            match kind {
                BaselineKind::DecisionMerging => {
                    let merged = merge_probabilities(&preds_a[i].1, &preds_b[i].1);
                    if let Some(class) = select_by_threshold(&merged, cfg.threshold) {
                        let label = model_a.classes[class].clone();
                        pool_a.push((view_a, label.clone()));
                        pool_b.push((view_b, label));
                        promoted_total += 1;
                    } else {
                        still.push(example);
                    }
                }
                BaselineKind::CoTraining => {
                    let pick_a = select_by_threshold(&preds_a[i].1, cfg.threshold);
                    let pick_b = select_by_threshold(&preds_b[i].1, cfg.threshold);
                    if pick_a.is_none() && pick_b.is_none() {
                        still.push(example);
                        continue;
                    }
                    // each confident view labels the datum for the other
                    if let Some(class) = pick_a {
                        pool_b.push((view_b.clone(), model_a.classes[class].clone()));
                    }
                    if let Some(class) = pick_b {
                        pool_a.push((view_a.clone(), model_b.classes[class].clone()));
                    }
                    promoted_total += 1;
                }
                _ => unreachable!(),
            }
        }
        unlabeled = still;
    }
    Ok(BaselineReport {
        kind,
        validation_ua: trajectory.last().copied().unwrap_or(0.0),
        ua_trajectory: trajectory,
        promoted_total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn majority_three_agree() {
        let sets = vec![map(&[("u1", "A")]), map(&[("u1", "A")]), map(&[("u1", "A")])];
        let out = majority_vote(&sets).unwrap();
        assert_eq!(out["u1"], Some("A".to_string()));
    }

    #[test]
    fn majority_two_to_one() {
        let sets = vec![map(&[("u1", "A")]), map(&[("u1", "A")]), map(&[("u1", "B")])];
        let out = majority_vote(&sets).unwrap();
        assert_eq!(out["u1"], Some("A".to_string()));
    }

    #[test]
    fn majority_tie_is_absent() {
        let sets = vec![map(&[("u1", "A")]), map(&[("u1", "B")])];
        let out = majority_vote(&sets).unwrap();
        assert_eq!(out["u1"], None);
    }

    #[test]
    fn majority_empty_input_rejected() {
        assert!(majority_vote(&[]).is_err());
    }

    #[test]
    fn high_confidence_selection_rules() {
        let records = vec![
            PseudoLabelRecord {
                id: "a".into(),
                acoustic: "Happy".into(),
                linguistic: Some("Happy".into()),
                model: None,
            },
            PseudoLabelRecord {
                id: "b".into(),
                acoustic: "Happy".into(),
                linguistic: Some("Sad".into()),
                model: None,
            },
            PseudoLabelRecord {
                id: "c".into(),
                acoustic: "Happy".into(),
                linguistic: None,
                model: None,
            },
        ];
        let (high, low) = select_high_confidence(&records);
        assert_eq!(high, vec![("a".to_string(), "Happy".to_string())]);
        assert_eq!(low, vec!["b".to_string(), "c".to_string()]);
    }

    #[test]
    fn selection_invariant_to_order() {
        let mut records = vec![
            PseudoLabelRecord {
                id: "a".into(),
                acoustic: "X".into(),
                linguistic: Some("X".into()),
                model: None,
            },
            PseudoLabelRecord {
                id: "b".into(),
                acoustic: "Y".into(),
                linguistic: Some("Z".into()),
                model: None,
            },
        ];
        let (mut h1, mut l1) = select_high_confidence(&records);
        records.reverse();
        let (mut h2, mut l2) = select_high_confidence(&records);
        h1.sort();
        h2.sort();
        l1.sort();
        l2.sort();
        assert_eq!(h1, h2);
        assert_eq!(l1, l2);
    }

    #[test]
    fn pool_rejects_duplicate_ids() {
        let e = |id: &str| LabeledExample {
            id: id.to_string(),
            features: vec![0.0],
            label: "a".into(),
        };
        let u = |id: &str| UnlabeledExample { id: id.to_string(), features: vec![0.0] };
        assert!(DataPool::new(vec![e("x")], vec![e("x")], vec![], vec![]).is_err());
        assert!(DataPool::new(vec![e("x")], vec![], vec![u("y")], vec![e("y")]).is_err());
        assert!(DataPool::new(vec![e("x")], vec![e("y")], vec![u("z")], vec![e("w")]).is_ok());
    }

    #[test]
    fn paper_probability_example_promotes_class_four() {
        let probs = [0.1, 0.1, 0.3, 0.5];
        let merged = merge_probabilities(&probs, &probs);
        assert_eq!(select_by_threshold(&merged, 0.5), Some(3));
    }

    #[test]
    fn threshold_above_one_promotes_nothing() {
        assert_eq!(select_by_threshold(&[0.4, 0.6], 1.01), None);
    }

    fn small_pool(seed: u64) -> (DataPool, Vec<PseudoLabelRecord>) {
        let data = synth::make_blobs(&synth::BlobSpec {
            n: 120,
            dim: 4,
            classes: 3,
            separation: 3.0,
            seed,
        });
        let mut labeled = Vec::new();
        let mut high = Vec::new();
        let mut low = Vec::new();
        let mut validation = Vec::new();
        let mut records = Vec::new();
        for (i, (features, label)) in data.into_iter().enumerate() {
            let id = format!("u{i}");
            match i % 4 {
                0 => labeled.push(LabeledExample { id, features, label }),
                1 => validation.push(LabeledExample { id, features, label }),
                2 => high.push(LabeledExample { id, features, label }),
                _ => {
                    records.push(PseudoLabelRecord {
                        id: id.clone(),
                        acoustic: label.clone(),
                        linguistic: Some(label),
                        model: None,
                    });
                    low.push(UnlabeledExample { id, features });
                }
            }
        }
        (DataPool::new(labeled, high, low, validation).unwrap(), records)
    }

    #[test]
    fn loop_promotes_and_stops() {
        let (pool, records) = small_pool(7);
        let cfg = LoopConfig {
            max_iters: 10,
            train: TrainConfig { epochs: 120, ..TrainConfig::default() },
            ..LoopConfig::default()
        };
        let history = run_loop(&pool, &records, &cfg).unwrap();
        assert!(!history.iterations.is_empty());
        assert!(history.iterations.len() <= 10);
        let promoted: usize = history.iterations.iter().map(|r| r.promoted).sum();
        assert!(promoted > 0);
        // low_conf is non-increasing
        for w in history.iterations.windows(2) {
            assert!(w[1].low_conf <= w[0].low_conf);
        }
    }

    #[test]
    fn loop_is_deterministic() {
        let (pool, records) = small_pool(9);
        let cfg = LoopConfig {
            max_iters: 6,
            train: TrainConfig { epochs: 60, ..TrainConfig::default() },
            seed: 42,
            ..LoopConfig::default()
        };
        let a = run_loop(&pool, &records, &cfg).unwrap();
        let b = run_loop(&pool, &records, &cfg).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn no_promotion_fixed_point_stops_by_patience() {
        let (mut pool, mut records) = small_pool(11);
        // poison every record so the model label can never match
        for r in &mut records {
            r.acoustic = "nonexistent_a".into();
            r.linguistic = Some("nonexistent_b".into());
        }
        // keep validation classes learnable
        pool.high_conf.clear();
        pool.initial_high_conf_ids.clear();
        let cfg = LoopConfig {
            max_iters: 10,
            train: TrainConfig { epochs: 60, ..TrainConfig::default() },
            ..LoopConfig::default()
        };
        let history = run_loop(&pool, &records, &cfg).unwrap();
        assert_eq!(history.stop_reason, StopReason::Patience);
        assert!(history.iterations.len() <= 4);
        for r in &history.iterations {
            assert_eq!(r.promoted, 0);
        }
    }

    #[test]
    fn max_iters_one_gives_single_record() {
        let (pool, records) = small_pool(13);
        let cfg = LoopConfig {
            max_iters: 1,
            train: TrainConfig { epochs: 60, ..TrainConfig::default() },
            ..LoopConfig::default()
        };
        let history = run_loop(&pool, &records, &cfg).unwrap();
        assert_eq!(history.iterations.len(), 1);
    }

    #[test]
    fn empty_labeled_rejected() {
        let (mut pool, records) = small_pool(15);
        pool.labeled.clear();
        assert!(run_loop(&pool, &records, &LoopConfig::default()).is_err());
    }

    #[test]
    fn unknown_validation_class_rejected() {
        let (mut pool, records) = small_pool(17);
        pool.validation[0].label = "mystery".into();
        assert!(run_loop(&pool, &records, &LoopConfig::default()).is_err());
    }

    #[test]
    fn external_classifier_via_plugin_trait() {
        // a constant-prediction model exercises the plug-in contract
        struct Constant(Vec<String>);
        impl TrainedModel for Constant {
            fn classes(&self) -> &[String] {
                &self.0
            }
            fn predict(&self, features: &Matrix) -> crate::error::Result<Vec<(String, Vec<f64>)>> {
                Ok((0..features.rows())
                    .map(|_| (self.0[0].clone(), vec![1.0, 0.0]))
                    .collect())
            }
        }
        struct ConstantFactory;
        impl ClassifierFactory for ConstantFactory {
            fn train(
                &self,
                _features: &Matrix,
                labels: &[String],
            ) -> crate::error::Result<Box<dyn TrainedModel>> {
                let mut classes: Vec<String> = labels.to_vec();
                classes.sort();
                classes.dedup();
                Ok(Box::new(Constant(classes)))
            }
        }
        let (pool, records) = small_pool(23);
        let cfg = LoopConfig { max_iters: 4, ..LoopConfig::default() };
        let history = run_loop_with(&pool, &records, &cfg, &ConstantFactory).unwrap();
        assert!(!history.iterations.is_empty());
    }

    #[test]
    fn supervised_full_dominates_limited() {
        let data = synth::make_blobs(&synth::BlobSpec {
            n: 300,
            dim: 6,
            classes: 3,
            separation: 1.6,
            seed: 5,
        });
        let mut labeled = Vec::new();
        let mut unlabeled = Vec::new();
        let mut full_gold = Vec::new();
        let mut validation = Vec::new();
        for (i, (features, label)) in data.into_iter().enumerate() {
            let id = format!("u{i}");
            if i % 4 == 0 {
                validation.push(LabeledExample { id, features, label });
                continue;
            }
            full_gold.push(LabeledExample {
                id: id.clone(),
                features: features.clone(),
                label: label.clone(),
            });
            if i % 10 < 2 {
                labeled.push(LabeledExample { id, features, label });
            } else {
                unlabeled.push(UnlabeledExample { id, features });
            }
        }
        let pool = BaselinePool { labeled, unlabeled, full_gold, validation };
        let cfg = BaselineConfig {
            train: TrainConfig { epochs: 150, ..TrainConfig::default() },
            ..BaselineConfig::default()
        };
        let full = run_baseline(BaselineKind::SupervisedFull, &pool, None, &cfg).unwrap();
        let limited = run_baseline(BaselineKind::SupervisedLimited, &pool, None, &cfg).unwrap();
        assert!(full.validation_ua >= limited.validation_ua);
    }

    #[test]
    fn two_view_baseline_requires_split() {
        let (pool, _) = small_pool(19);
        let bp = BaselinePool {
            labeled: pool.labeled,
            unlabeled: pool.low_conf,
            full_gold: vec![],
            validation: pool.validation,
        };
        let err = run_baseline(
            BaselineKind::DecisionMerging,
            &bp,
            None,
            &BaselineConfig::default(),
        );
        assert!(err.is_err());
    }
}
