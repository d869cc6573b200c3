//! Batch analytics for speech-emotion research pipelines.
//!
//! The crate operates on raw audio plus externally produced embeddings,
//! transcripts, and labels supplied as files. It covers five areas:
//!
//! - [`dsp`]: paralinguistic descriptors (pitch, jitter/shimmer, HNR,
//!   formants, spectral balance, MFCCs) with frame→phone→word aggregation
//! - [`cca`]: canonical-correlation similarity for layer-wise probing of
//!   representation matrices against feature matrices
//! - [`asr`]: transcript quality metrics (WER/CER/BLEU/GLEU) and word-level
//!   analytics (class ratios, length bins, per-emotion rates, confidence)
//! - [`fad`]: Fréchet distance between Gaussian-fitted embedding sets and
//!   acoustic pseudo-label assignment over multi-encoder score tables
//! - [`semisl`]: the multi-view semi-supervised training loop with a
//!   built-in softmax classifier and reference baselines
//!
//! File formats (WAV, EMAT, CSV, JSONL manifests, TSV lexicons) live in
//! [`audio`], [`matrix`], [`manifest`], and [`lexicon`].

pub mod asr;
pub mod audio;
pub mod cca;
pub mod dsp;
pub mod error;
pub mod fad;
pub mod lexicon;
pub mod manifest;
pub mod matrix;
pub mod metrics;
pub mod semisl;

pub use audio::AudioBuffer;
pub use error::{Error, Result};
pub use matrix::Matrix;
