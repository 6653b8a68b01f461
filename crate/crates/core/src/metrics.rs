//! Sequence similarity (G-BLEU) and score aggregation.
//!
//! G-BLEU here is the pooled-n-gram variant: all contiguous n-grams for
//! n = 1..=max_n from both sequences go into one pool, the match count is
//! the clipped multiset intersection, and the score is
//! min(precision, recall). It is symmetric, 1 on identical sequences, and
//! needs no separate brevity penalty — length mismatch shows up through
//! whichever of precision/recall is smaller.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::region::{RegionId, RegionTrace};

/// Largest n-gram order pooled by default.
pub const DEFAULT_MAX_N: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("max_n must be at least 1")]
    ZeroMaxN,

    #[error("reference list is empty")]
    NoReferences,

    #[error("value list is empty")]
    NoValues,
}

/// G-BLEU with the default n-gram order.
pub fn gleu(hypothesis: &RegionTrace, reference: &RegionTrace) -> f64 {
    gleu_n(hypothesis, reference, DEFAULT_MAX_N).expect("DEFAULT_MAX_N >= 1")
}

/// G-BLEU over pooled 1..=max_n n-grams.
pub fn gleu_n(
    hypothesis: &RegionTrace,
    reference: &RegionTrace,
    max_n: usize,
) -> Result<f64, MetricError> {
    if max_n == 0 {
        return Err(MetricError::ZeroMaxN);
    }
    let hyp = pooled_ngrams(hypothesis.regions(), max_n);
    let rf = pooled_ngrams(reference.regions(), max_n);
    let hyp_total: usize = hyp.values().sum();
    let ref_total: usize = rf.values().sum();
    let matches: usize = hyp
        .iter()
        .map(|(gram, &count)| count.min(rf.get(gram).copied().unwrap_or(0)))
        .sum();
    // Traces are nonempty, so both totals are at least the 1-gram count.
    let precision = matches as f64 / hyp_total as f64;
    let recall = matches as f64 / ref_total as f64;
    Ok(precision.min(recall))
}

fn pooled_ngrams(tokens: &[RegionId], max_n: usize) -> HashMap<&[RegionId], usize> {
    let mut pool: HashMap<&[RegionId], usize> = HashMap::new();
    for n in 1..=max_n.min(tokens.len()) {
        for gram in tokens.windows(n) {
            *pool.entry(gram).or_insert(0) += 1;
        }
    }
    pool
}

/// Best G-BLEU over the references, ties resolved to the lowest index.
pub fn score_pair(
    hypothesis: &RegionTrace,
    references: &[RegionTrace],
) -> Result<(f64, usize), MetricError> {
    if references.is_empty() {
        return Err(MetricError::NoReferences);
    }
    let mut best = (f64::NEG_INFINITY, 0);
    for (index, reference) in references.iter().enumerate() {
        let score = gleu(hypothesis, reference);
        if score > best.0 {
            best = (score, index);
        }
    }
    Ok(best)
}

/// Mean and sample standard deviation of the K per-query scores of one
/// (scenario, instruction) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    pub mean: f64,
    pub std: f64,
    pub k: usize,
}

/// Aggregate per-query scores into the pair mean. A single query has no
/// spread, so its deviation is reported as 0.
pub fn aggregate_runs(scores: &[f64]) -> Result<PairSummary, MetricError> {
    if scores.is_empty() {
        return Err(MetricError::NoValues);
    }
    let k = scores.len();
    // Constant samples have exactly zero spread; computing it numerically
    // would leave accumulation noise in the reported mean and deviation.
    if scores.iter().all(|s| *s == scores[0]) {
        return Ok(PairSummary { mean: scores[0], std: 0.0, k });
    }
    let mean = scores.iter().sum::<f64>() / k as f64;
    let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
    Ok(PairSummary { mean, std: var.sqrt(), k })
}

/// Mean / std / median / quartiles of a score population (e.g. the 11
/// per-instruction means of one partition).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub mean: f64,
    pub std: f64,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub iqr: f64,
    pub n: usize,
}

/// Summarize with linear-interpolation quantiles: with the values sorted,
/// quantile q sits at rank h = (n - 1) * q and interpolates linearly
/// between the neighboring order statistics.
pub fn summarize_distribution(values: &[f64]) -> Result<DistributionSummary, MetricError> {
    if values.is_empty() {
        return Err(MetricError::NoValues);
    }
    let PairSummary { mean, std, .. } = aggregate_runs(values)?;
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("scores are finite"));
    let q25 = quantile(&sorted, 0.25);
    let median = quantile(&sorted, 0.5);
    let q75 = quantile(&sorted, 0.75);
    Ok(DistributionSummary { mean, std, median, q25, q75, iqr: q75 - q25, n: values.len() })
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}
