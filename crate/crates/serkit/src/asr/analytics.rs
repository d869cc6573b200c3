//! Word-level transcript analytics: class ratios, affect buckets, length
//! bins, per-emotion rates, and confidence summaries.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::asr::align::{EditAlignment, EditOp};
use crate::error::{Error, Result};
use crate::lexicon::{Affect, AffectLexicon, ClassLexicon, INSERTION_CLASS, UNCLASSIFIED_CLASS};

/// One scored utterance, as consumed by the corpus-level analytics.
#[derive(Debug, Clone, Copy)]
pub struct UtteranceEval<'a> {
    pub alignment: &'a EditAlignment,
    pub emotion: Option<&'a str>,
    /// Confidence per hypothesis token, when the ASR system supplied them.
    pub confidences: Option<&'a [f64]>,
}

/// Affect band for one dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AffectBand {
    Low,
    Mid,
    High,
    Unknown,
}

/// Per-dimension affect bands for one word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AffectBuckets {
    pub valence: AffectBand,
    pub arousal: AffectBand,
    pub dominance: AffectBand,
}

fn band(score: f64) -> AffectBand {
    // integer bands 1-3 / 4-6 / 7-9 applied to real scores as
    // (-inf, 3], (3, 6], (6, inf): boundaries fall to the lower band
    if score <= 3.0 {
        AffectBand::Low
    } else if score <= 6.0 {
        AffectBand::Mid
    } else {
        AffectBand::High
    }
}

/// Look a word up in the affect lexicon and band each dimension.
pub fn bucketize_affect(lexicon: &AffectLexicon, word: &str) -> AffectBuckets {
    match lexicon.affect_of(word) {
        Some(Affect { valence, arousal, dominance }) => AffectBuckets {
            valence: band(valence),
            arousal: band(arousal),
            dominance: band(dominance),
        },
        None => AffectBuckets {
            valence: AffectBand::Unknown,
            arousal: AffectBand::Unknown,
            dominance: AffectBand::Unknown,
        },
    }
}

/// Word ratio, error ratio, and class error rate for one word class.
#[derive(Debug, Clone, Serialize)]
pub struct ClassStatsRow {
    pub class: String,
    /// words in class / total words
    pub word_ratio: f64,
    /// errors charged to class / total errors
    pub error_ratio: f64,
    /// errors charged to class / words in class
    pub class_error_rate: f64,
    pub word_count: usize,
    pub error_count: usize,
}

/// Corpus-level WR/ER/CR table.
#[derive(Debug, Clone, Serialize)]
pub struct ClassStats {
    pub rows: Vec<ClassStatsRow>,
    pub total_words: usize,
    pub total_errors: usize,
}

/// Per-class word and error counts over a corpus of alignments.
///
/// A reference word counts once toward every class it carries
/// (multi-membership is allowed, so word ratios can sum past 1). Reference
/// words absent from the lexicon fall into the reserved "unclassified"
/// class. Substitution and deletion errors are charged to the reference
/// token's classes; insertions have no reference word and are charged to
/// the reserved "insertion" pseudo-class so error ratios still partition
/// the error mass.
pub fn class_stats(alignments: &[&EditAlignment], lexicon: &ClassLexicon) -> ClassStats {
    let mut classes: Vec<String> = lexicon.declared_tags().iter().cloned().collect();
    classes.push(UNCLASSIFIED_CLASS.to_string());
    classes.push(INSERTION_CLASS.to_string());
    let mut word_count: BTreeMap<&str, usize> =
        classes.iter().map(|c| (c.as_str(), 0)).collect();
    let mut error_count = word_count.clone();
    let mut total_words = 0usize;
    let mut total_errors = 0usize;

    for alignment in alignments {
        total_words += alignment.reference_len;
        total_errors += alignment.edits();
        for op in &alignment.ops {
            let (reference, is_error) = match op {
                EditOp::Match { reference, .. } => (Some(reference), false),
                EditOp::Substitution { reference, .. } => (Some(reference), true),
                EditOp::Deletion { reference } => (Some(reference), true),
                EditOp::Insertion { .. } => (None, true),
            };
            match reference {
                Some(word) => {
                    let found = lexicon.classes_of(word);
                    let tags: Vec<&str> = match &found {
                        Some(set) => set.iter().map(String::as_str).collect(),
                        None => vec![UNCLASSIFIED_CLASS],
                    };
                    for tag in tags {
                        *word_count.get_mut(tag).expect("declared tag") += 1;
                        if is_error {
                            *error_count.get_mut(tag).expect("declared tag") += 1;
                        }
                    }
                }
                None => {
                    *error_count.get_mut(INSERTION_CLASS).expect("reserved") += 1;
                }
            }
        }
    }

    let rows = classes
        .iter()
        .map(|class| {
            let wc = word_count[class.as_str()];
            let ec = error_count[class.as_str()];
            ClassStatsRow {
                class: class.clone(),
                word_ratio: if total_words > 0 { wc as f64 / total_words as f64 } else { 0.0 },
                error_ratio: if total_errors > 0 { ec as f64 / total_errors as f64 } else { 0.0 },
                class_error_rate: if wc > 0 { ec as f64 / wc as f64 } else { 0.0 },
                word_count: wc,
                error_count: ec,
            }
        })
        .collect();
    ClassStats { rows, total_words, total_errors }
}

/// Utterance-length bins used throughout the word-level tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LengthBin {
    UpTo10,
    From11To20,
    From21To30,
    From31,
}

impl LengthBin {
    pub fn of(reference_len: usize) -> LengthBin {
        match reference_len {
            0..=10 => LengthBin::UpTo10,
            11..=20 => LengthBin::From11To20,
            21..=30 => LengthBin::From21To30,
            _ => LengthBin::From31,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            LengthBin::UpTo10 => "<=10",
            LengthBin::From11To20 => "11-20",
            LengthBin::From21To30 => "21-30",
            LengthBin::From31 => ">=31",
        }
    }

    pub fn all() -> [LengthBin; 4] {
        [LengthBin::UpTo10, LengthBin::From11To20, LengthBin::From21To30, LengthBin::From31]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LengthBinRow {
    pub bin: &'static str,
    /// Fraction of utterances falling in this bin.
    pub ratio: f64,
    /// Pooled WER: total edits over total reference words in the bin.
    pub wer: Option<f64>,
    pub utterances: usize,
}

/// WER by reference-length bin. Bin ratios sum to 1.
pub fn length_binned_wer(alignments: &[&EditAlignment]) -> Result<Vec<LengthBinRow>> {
    if alignments.is_empty() {
        return Err(Error::contract("empty corpus"));
    }
    let mut counts: BTreeMap<LengthBin, (usize, usize, usize)> = BTreeMap::new(); // (utts, edits, ref words)
    for alignment in alignments {
        let entry = counts.entry(LengthBin::of(alignment.reference_len)).or_insert((0, 0, 0));
        entry.0 += 1;
        entry.1 += alignment.edits();
        entry.2 += alignment.reference_len;
    }
    let total = alignments.len() as f64;
    Ok(LengthBin::all()
        .into_iter()
        .map(|bin| {
            let (utts, edits, words) = counts.get(&bin).copied().unwrap_or((0, 0, 0));
            LengthBinRow {
                bin: bin.label(),
                ratio: utts as f64 / total,
                wer: (words > 0).then(|| edits as f64 / words as f64),
                utterances: utts,
            }
        })
        .collect())
}

/// How a group's WER is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WerPooling {
    /// Total edits over total reference words.
    Pooled,
    /// Mean of per-utterance WERs.
    MeanPerUtterance,
}

#[derive(Debug, Clone, Serialize)]
pub struct EmotionWerRow {
    pub emotion: String,
    pub wer: f64,
    /// Fraction of the group's reference words carrying the noun tag.
    pub noun_ratio: f64,
    /// Fraction of the group's utterances with at most 10 reference words.
    pub short_utterance_ratio: f64,
    pub utterances: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PerEmotionWer {
    pub rows: Vec<EmotionWerRow>,
    /// Utterances excluded for missing an emotion label.
    pub unlabeled_skipped: usize,
}

/// WER, noun ratio, and short-utterance ratio grouped by emotion label.
pub fn per_emotion_wer(
    items: &[UtteranceEval<'_>],
    lexicon: &ClassLexicon,
    noun_tag: &str,
    pooling: WerPooling,
) -> Result<PerEmotionWer> {
    struct Group {
        utterances: usize,
        edits: usize,
        ref_words: usize,
        noun_words: usize,
        short_utts: usize,
        wer_sum: f64,
    }
    let mut groups: BTreeMap<String, Group> = BTreeMap::new();
    let mut unlabeled_skipped = 0;
    for item in items {
        let Some(emotion) = item.emotion else {
            unlabeled_skipped += 1;
            continue;
        };
        if item.alignment.reference_len == 0 {
            return Err(Error::contract("empty reference in per-emotion WER"));
        }
        let g = groups.entry(emotion.to_string()).or_insert(Group {
            utterances: 0,
            edits: 0,
            ref_words: 0,
            noun_words: 0,
            short_utts: 0,
            wer_sum: 0.0,
        });
        g.utterances += 1;
        g.edits += item.alignment.edits();
        g.ref_words += item.alignment.reference_len;
        g.wer_sum += item.alignment.edits() as f64 / item.alignment.reference_len as f64;
        if item.alignment.reference_len <= 10 {
            g.short_utts += 1;
        }
        for op in &item.alignment.ops {
            let word = match op {
                EditOp::Match { reference, .. }
                | EditOp::Substitution { reference, .. }
                | EditOp::Deletion { reference } => reference,
                EditOp::Insertion { .. } => continue,
            };
            if lexicon.classes_of(word).is_some_and(|tags| tags.contains(noun_tag)) {
                g.noun_words += 1;
            }
        }
    }
    let rows = groups
        .into_iter()
        .map(|(emotion, g)| EmotionWerRow {
            emotion,
            wer: match pooling {
                WerPooling::Pooled => g.edits as f64 / g.ref_words as f64,
                WerPooling::MeanPerUtterance => g.wer_sum / g.utterances as f64,
            },
            noun_ratio: g.noun_words as f64 / g.ref_words as f64,
            short_utterance_ratio: g.short_utts as f64 / g.utterances as f64,
            utterances: g.utterances,
        })
        .collect();
    Ok(PerEmotionWer { rows, unlabeled_skipped })
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct MeanAccumulator {
    pub sum: f64,
    pub count: usize,
}

impl MeanAccumulator {
    fn push(&mut self, v: f64) {
        self.sum += v;
        self.count += 1;
    }

    pub fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum / self.count as f64)
    }
}

/// Mean hypothesis-token confidence grouped by correctness, emotion, and
/// reference-length bin.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ConfidenceSummary {
    pub correct: MeanAccumulator,
    pub incorrect: MeanAccumulator,
    pub by_emotion: BTreeMap<String, MeanAccumulator>,
    pub by_length_bin: BTreeMap<&'static str, MeanAccumulator>,
    pub by_emotion_and_length: BTreeMap<String, BTreeMap<&'static str, MeanAccumulator>>,
    /// Utterances with no confidence scores attached.
    pub skipped: usize,
}

/// Token correctness comes from the alignment ops: matches are correct,
/// substitutions and insertions are incorrect (deletions consume no
/// hypothesis token and thus no confidence).
pub fn confidence_summary(items: &[UtteranceEval<'_>]) -> Result<ConfidenceSummary> {
    let mut summary = ConfidenceSummary::default();
    for item in items {
        let Some(confidences) = item.confidences else {
            summary.skipped += 1;
            continue;
        };
        if confidences.len() != item.alignment.hypothesis_len {
            return Err(Error::contract(format!(
                "{} confidences for {} hypothesis tokens",
                confidences.len(),
                item.alignment.hypothesis_len
            )));
        }
        if let Some(bad) = confidences.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(Error::contract(format!("confidence {bad} outside [0, 1]")));
        }
        let bin = LengthBin::of(item.alignment.reference_len).label();
        let mut hyp_idx = 0usize;
        for op in &item.alignment.ops {
            let correct = match op {
                EditOp::Match { .. } => true,
                EditOp::Substitution { .. } | EditOp::Insertion { .. } => false,
                EditOp::Deletion { .. } => continue,
            };
            let conf = confidences[hyp_idx];
            hyp_idx += 1;
            if correct {
                summary.correct.push(conf);
            } else {
                summary.incorrect.push(conf);
            }
            summary.by_length_bin.entry(bin).or_default().push(conf);
            if let Some(emotion) = item.emotion {
                summary.by_emotion.entry(emotion.to_string()).or_default().push(conf);
                summary
                    .by_emotion_and_length
                    .entry(emotion.to_string())
                    .or_default()
                    .entry(bin)
                    .or_default()
                    .push(conf);
            }
        }
    }
    Ok(summary)
}
