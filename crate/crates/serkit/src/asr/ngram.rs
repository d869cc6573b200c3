//! BLEU and GLEU n-gram scores.

use std::collections::HashMap;

use crate::error::{Error, Result};

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n && n > 0 {
        for window in tokens.windows(n) {
            let key: Vec<&str> = window.iter().map(AsRef::as_ref).collect();
            *counts.entry(key).or_insert(0) += 1;
        }
    }
    counts
}

/// Brevity penalty: 1 when the candidate is longer than the reference,
/// e^(1 − r/c) otherwise.
pub fn brevity_penalty(candidate_len: usize, reference_len: usize) -> f64 {
    let c = candidate_len as f64;
    let r = reference_len as f64;
    if candidate_len > reference_len {
        1.0
    } else {
        (1.0 - r / c).exp()
    }
}

/// Effective reference length: the reference closest in length to the
/// hypothesis, ties resolved toward the shorter reference.
fn effective_reference_len(ref_lens: &[usize], hyp_len: usize) -> usize {
    let mut best = ref_lens[0];
    for &len in &ref_lens[1..] {
        let d = len.abs_diff(hyp_len);
        let bd = best.abs_diff(hyp_len);
        if d < bd || (d == bd && len < best) {
            best = len;
        }
    }
    best
}

/// One scored segment: any number of references and one hypothesis.
pub struct BleuSegment<'a, S: AsRef<str>> {
    pub references: &'a [Vec<S>],
    pub hypothesis: &'a [S],
}

/// Corpus BLEU with uniform weights over n = 1..=max_n and clipped
/// precision. Without smoothing any zero n-gram precision zeroes the score;
/// with `smoothing` numerators and denominators get +1 (Laplace).
pub fn bleu_corpus<S: AsRef<str>>(
    segments: &[BleuSegment<'_, S>],
    max_n: usize,
    smoothing: bool,
) -> Result<f64> {
    if max_n == 0 {
        return Err(Error::contract("max_n must be at least 1"));
    }
    if segments.is_empty() {
        return Err(Error::contract("no segments"));
    }
    let mut matched = vec![0usize; max_n];
    let mut total = vec![0usize; max_n];
    let mut hyp_len_sum = 0usize;
    let mut ref_len_sum = 0usize;
    for seg in segments {
        if seg.hypothesis.is_empty() {
            return Err(Error::contract("empty hypothesis"));
        }
        if seg.references.is_empty() {
            return Err(Error::contract("segment without references"));
        }
        hyp_len_sum += seg.hypothesis.len();
        let ref_lens: Vec<usize> = seg.references.iter().map(Vec::len).collect();
        ref_len_sum += effective_reference_len(&ref_lens, seg.hypothesis.len());
        for n in 1..=max_n {
            let hyp_counts = ngram_counts(seg.hypothesis, n);
            // clip against the per-gram max across references
            let mut ref_max: HashMap<Vec<&str>, usize> = HashMap::new();
            for reference in seg.references {
                for (gram, count) in ngram_counts(reference, n) {
                    let slot = ref_max.entry(gram).or_insert(0);
                    *slot = (*slot).max(count);
                }
            }
            for (gram, count) in &hyp_counts {
                matched[n - 1] += (*count).min(ref_max.get(gram).copied().unwrap_or(0));
                total[n - 1] += count;
            }
        }
    }
    let mut log_sum = 0.0;
    let weight = 1.0 / max_n as f64;
    for n in 0..max_n {
        let (num, den) = if smoothing {
            (matched[n] + 1, total[n] + 1)
        } else {
            (matched[n], total[n])
        };
        if num == 0 || den == 0 {
            return Ok(0.0);
        }
        log_sum += weight * (num as f64 / den as f64).ln();
    }
    Ok(brevity_penalty(hyp_len_sum, ref_len_sum) * log_sum.exp())
}

/// Sentence BLEU: a single segment with one or more references.
pub fn bleu<S: AsRef<str>>(
    references: &[Vec<S>],
    hypothesis: &[S],
    max_n: usize,
    smoothing: bool,
) -> Result<f64> {
    bleu_corpus(&[BleuSegment { references, hypothesis }], max_n, smoothing)
}

/// Pooled n-gram match counts for GLEU.
#[derive(Debug, Clone, Copy)]
pub struct GleuCounts {
    pub matching: usize,
    pub hypothesis_ngrams: usize,
    pub reference_ngrams: usize,
}

pub fn gleu_counts<S: AsRef<str>>(
    reference: &[S],
    hypothesis: &[S],
    max_n: usize,
) -> GleuCounts {
    let mut matching = 0;
    let mut hyp_total = 0;
    let mut ref_total = 0;
    for n in 1..=max_n {
        let hyp_counts = ngram_counts(hypothesis, n);
        let ref_counts = ngram_counts(reference, n);
        for (gram, count) in &hyp_counts {
            matching += (*count).min(ref_counts.get(gram).copied().unwrap_or(0));
            hyp_total += count;
        }
        ref_total += ref_counts.values().sum::<usize>();
    }
    GleuCounts { matching, hypothesis_ngrams: hyp_total, reference_ngrams: ref_total }
}

/// min(precision, recall) over n-gram counts pooled across n = 1..=max_n.
pub fn gleu<S: AsRef<str>>(reference: &[S], hypothesis: &[S], max_n: usize) -> Result<f64> {
    if reference.is_empty() || hypothesis.is_empty() {
        return Err(Error::contract("GLEU needs non-empty reference and hypothesis"));
    }
    if max_n == 0 {
        return Err(Error::contract("max_n must be at least 1"));
    }
    let c = gleu_counts(reference, hypothesis, max_n);
    let precision = c.matching as f64 / c.hypothesis_ngrams as f64;
    let recall = c.matching as f64 / c.reference_ngrams as f64;
    Ok(precision.min(recall))
}
