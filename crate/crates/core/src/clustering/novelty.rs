//! Confidence-based novelty of terms with respect to the known sub-topics.

use crate::corpus::TermId;
use crate::embedding::EmbeddingSpace;
use crate::error::{Error, Result};
use crate::linalg::{argmax, cosine};

/// `1 - max_k softmax_k(cos(t, s_k) / T)`.
///
/// Evaluated as the softmax mass of the non-maximal topics so that confident
/// terms keep a small positive score instead of cancelling to zero. The
/// result is capped at `1 - 1/K`, its exact supremum.
pub fn novelty_score(t: &[f64], means: &[&[f64]], temperature: f64) -> Result<f64> {
    if means.is_empty() {
        return Err(Error::UndefinedNovelty);
    }
    let logits: Vec<f64> = means.iter().map(|m| cosine(t, m) / temperature).collect();
    let (best, top) = argmax(logits.iter().copied()).expect("non-empty");
    let others: f64 = logits
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != best)
        .map(|(_, &l)| (l - top).exp())
        .sum();
    let k = means.len() as f64;
    Ok((others / (1.0 + others)).min(1.0 - 1.0 / k))
}

/// `(1 - 1/K)^beta`.
pub fn novelty_threshold(k: usize, beta: f64) -> Result<f64> {
    if !(beta >= 1.0) {
        return Err(Error::Config(format!("beta must be >= 1, got {beta}")));
    }
    if k == 0 {
        return Err(Error::UndefinedNovelty);
    }
    Ok((1.0 - 1.0 / k as f64).powf(beta))
}

/// Splits `terms` into `(known, novel)`; a score equal to the threshold
/// counts as novel. Terms without a vector in `space` are skipped.
pub fn split_terms(
    terms: &[TermId],
    space: &EmbeddingSpace,
    temperature: f64,
    threshold: f64,
) -> Result<(Vec<TermId>, Vec<TermId>)> {
    let means = space.topic_means();
    let mut known = Vec::new();
    let mut novel = Vec::new();
    for &t in terms {
        let Some(v) = space.target(t) else { continue };
        if novelty_score(v, &means, temperature)? < threshold {
            known.push(t);
        } else {
            novel.push(t);
        }
    }
    Ok((known, novel))
}

/// Closest known sub-topic by cosine; ties go to the lowest index.
pub fn closest_topic(t: &[f64], means: &[&[f64]]) -> Option<usize> {
    argmax(means.iter().map(|m| cosine(t, m))).map(|(i, _)| i)
}

/// `(term, sub-topic index)` for each known term present in `space`.
pub fn assign_known_terms(known: &[TermId], space: &EmbeddingSpace) -> Vec<(TermId, usize)> {
    let means = space.topic_means();
    known
        .iter()
        .filter_map(|&t| {
            let v = space.target(t)?;
            closest_topic(v, &means).map(|k| (t, k))
        })
        .collect()
}
