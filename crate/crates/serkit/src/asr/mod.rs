//! Transcript quality metrics and word-level error analytics.

pub mod align;
pub mod analytics;
pub mod ngram;

pub use align::{align, cer, wer, EditAlignment, EditOp};
pub use analytics::{
    bucketize_affect, class_stats, confidence_summary, length_binned_wer, per_emotion_wer,
    AffectBand, AffectBuckets, ClassStats, ClassStatsRow, ConfidenceSummary, EmotionWerRow,
    LengthBin, LengthBinRow, PerEmotionWer, UtteranceEval, WerPooling,
};
pub use ngram::{bleu, bleu_corpus, brevity_penalty, gleu, gleu_counts, BleuSegment, GleuCounts};
