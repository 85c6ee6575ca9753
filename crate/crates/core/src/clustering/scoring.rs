//! Document assignment and term significance within one node.
//!
//! Significance of a term is `max_s rel(t, s) * rep(t, s)` where `rel` is the
//! (non-negative) cosine to the sub-topic mean and `rep` is the geometric
//! mean of integrity, distinctiveness and popularity in the sub-topic's
//! document set.

use std::collections::BTreeSet;

use crate::corpus::{Corpus, DocId, TermId, TermStats};
use crate::linalg::{argmax, cosine};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

/// BM25 contribution of one term occurrence count in one document.
#[inline]
pub fn bm25_term(idf: f64, tf: f64, doc_len: f64, avg_len: f64, p: Bm25Params) -> f64 {
    if tf == 0.0 {
        return 0.0;
    }
    idf * tf * (p.k1 + 1.0) / (tf + p.k1 * (1.0 - p.b + p.b * doc_len / avg_len))
}

/// BM25 relevance of `t` to a set of documents, summed over the set. `stats`
/// supplies idf and lengths; documents outside it contribute nothing.
pub fn bm25_score(t: TermId, subcorpus: &[DocId], stats: &TermStats, p: Bm25Params) -> f64 {
    let Some(idf) = stats.idf(t) else { return 0.0 };
    let avg = stats.avg_doc_len();
    subcorpus
        .iter()
        .filter_map(|&d| Some((stats.tf(t, d), stats.doc_len(d)?)))
        .map(|(tf, len)| bm25_term(idf, tf as f64, len as f64, avg, p))
        .sum()
}

/// `argmax_s sum_{t in d} 1[z_t = s] tf(t, d) idf(t)` for every document in
/// `stats`, in `stats.docs()` order. `labels` is indexed by term id. Documents
/// with no positive weight are left unassigned; ties go to the lowest index.
pub fn assign_documents(stats: &TermStats, labels: &[Option<usize>], n_clusters: usize) -> Vec<Option<usize>> {
    let mut weights = vec![0.0; n_clusters];
    stats
        .iter()
        .map(|(_, counts, _)| {
            weights.iter_mut().for_each(|w| *w = 0.0);
            for &(t, tf) in counts {
                if let Some(Some(s)) = labels.get(t) {
                    weights[*s] += tf as f64 * stats.idf_or_zero(t);
                }
            }
            match argmax(weights.iter().copied()) {
                Some((s, w)) if w > 0.0 => Some(s),
                _ => None,
            }
        })
        .collect()
}

/// Per-sub-topic BM25 and frequency tables used for representativeness.
#[derive(Debug, Clone)]
pub struct ClusterProfiles {
    bm25: Vec<Vec<f64>>,
    tf: Vec<Vec<u64>>,
    /// Summed frequency of the node's terms in each sub-corpus.
    total_tf: Vec<u64>,
    docs: Vec<usize>,
}

impl ClusterProfiles {
    /// `z_doc` is aligned with `stats.docs()`; only terms flagged in
    /// `node_terms` (indexed by term id) count towards the popularity
    /// denominator.
    pub fn build(
        stats: &TermStats,
        z_doc: &[Option<usize>],
        n_clusters: usize,
        node_terms: &[bool],
        vocab_size: usize,
        p: Bm25Params,
    ) -> Self {
        let mut bm25 = vec![vec![0.0; vocab_size]; n_clusters];
        let mut tf = vec![vec![0u64; vocab_size]; n_clusters];
        let mut total_tf = vec![0u64; n_clusters];
        let mut docs = vec![0usize; n_clusters];
        let avg = stats.avg_doc_len();
        for ((_, counts, len), z) in stats.iter().zip(z_doc) {
            let Some(s) = *z else { continue };
            docs[s] += 1;
            for &(t, c) in counts {
                bm25[s][t] += bm25_term(stats.idf_or_zero(t), c as f64, len as f64, avg, p);
                tf[s][t] += c as u64;
                if node_terms.get(t).copied().unwrap_or(false) {
                    total_tf[s] += c as u64;
                }
            }
        }
        Self {
            bm25,
            tf,
            total_tf,
            docs,
        }
    }

    pub fn n_clusters(&self) -> usize {
        self.docs.len()
    }

    pub fn bm25(&self, t: TermId, s: usize) -> f64 {
        self.bm25[s][t]
    }

    pub fn subcorpus_size(&self, s: usize) -> usize {
        self.docs[s]
    }

    /// `exp(BM25_s) / (1 + sum_s' exp(BM25_s'))`, evaluated in the log domain.
    pub fn distinctiveness(&self, t: TermId, s: usize) -> f64 {
        let scores = self.bm25.iter().map(|row| row[t]);
        let top = scores.clone().fold(0.0f64, f64::max);
        let denom = (-top).exp() + scores.map(|b| (b - top).exp()).sum::<f64>();
        (self.bm25[s][t] - top).exp() / denom
    }

    /// `log(tf(t, D_s) + 1) / log(sum_t' tf(t', D_s))`, capped at 1. Zero when
    /// the sub-corpus holds fewer than two node-term occurrences.
    pub fn popularity(&self, t: TermId, s: usize) -> f64 {
        let total = self.total_tf[s];
        if total < 2 {
            return 0.0;
        }
        ((self.tf[s][t] as f64 + 1.0).ln() / (total as f64).ln()).min(1.0)
    }

    pub fn representativeness(&self, t: TermId, s: usize, integrity: f64) -> f64 {
        if self.docs[s] == 0 {
            return 0.0;
        }
        (integrity * self.distinctiveness(t, s) * self.popularity(t, s)).cbrt()
    }
}

/// `(max_s max(cos(t, mean_s), 0) * rep(t, s), argmax)`; ties go to the
/// lowest sub-topic index.
pub fn significance_score(
    t: TermId,
    vector: &[f64],
    means: &[Vec<f64>],
    profiles: &ClusterProfiles,
    corpus: &Corpus,
) -> (f64, usize) {
    let integrity = corpus.integrity(t);
    argmax(
        means
            .iter()
            .enumerate()
            .map(|(s, m)| cosine(vector, m).max(0.0) * profiles.representativeness(t, s, integrity)),
    )
    .map(|(s, v)| (v, s))
    .unwrap_or((0.0, 0))
}

/// Outcome of [`select_anchor_terms`].
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSelection {
    pub anchors: Vec<BTreeSet<TermId>>,
    /// Sub-topics whose only anchors are their retained terms.
    pub sparse: Vec<bool>,
}

/// `{t : z_t = s and score(t) >= tau}` per sub-topic, plus the retained
/// terms of each sub-topic regardless of score.
pub fn select_anchor_terms(
    z_term: &[(TermId, usize)],
    score: impl Fn(TermId) -> f64,
    tau_sig: f64,
    retained: &[BTreeSet<TermId>],
    n_clusters: usize,
) -> AnchorSelection {
    let mut anchors: Vec<BTreeSet<TermId>> = (0..n_clusters)
        .map(|s| retained.get(s).cloned().unwrap_or_default())
        .collect();
    let mut earned = vec![false; n_clusters];
    for &(t, s) in z_term {
        if score(t) >= tau_sig {
            if !anchors[s].contains(&t) {
                earned[s] = true;
            }
            anchors[s].insert(t);
        }
    }
    let sparse = earned.iter().map(|e| !e).collect();
    AnchorSelection { anchors, sparse }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::compute_term_stats;

    #[test]
    fn bm25_absent_term_is_zero() {
        let c = Corpus::parse("a b\nb c\nc a\n").unwrap();
        let s = compute_term_stats(&c, &c.all_doc_ids()).unwrap();
        assert_eq!(bm25_score(0, &[1], &s, Bm25Params::default()), 0.0);
        assert!(bm25_score(0, &[0, 2], &s, Bm25Params::default()) > 0.0);
    }

    #[test]
    fn single_topic_document_assignment() {
        let c = Corpus::parse("a b\nb c\nx y\n").unwrap();
        let s = compute_term_stats(&c, &c.all_doc_ids()).unwrap();
        let mut labels = vec![None; c.vocab_size()];
        labels[0] = Some(1);
        labels[1] = Some(1);
        labels[2] = Some(0);
        let z = assign_documents(&s, &labels, 2);
        assert_eq!(z[0], Some(1));
        assert_eq!(z[2], None);
    }

    #[test]
    fn distinctiveness_single_topic_zero_bm25_is_half() {
        // every doc contains `a` so idf(a) = 0 and BM25 vanishes
        let c = Corpus::parse("a b\na c\n").unwrap();
        let s = compute_term_stats(&c, &c.all_doc_ids()).unwrap();
        let p = ClusterProfiles::build(&s, &[Some(0), Some(0)], 1, &[true; 3], 3, Bm25Params::default());
        assert_eq!(p.bm25(0, 0), 0.0);
        assert!((p.distinctiveness(0, 0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn absent_term_has_zero_representativeness() {
        let c = Corpus::parse("a b\nc d\n").unwrap();
        let s = compute_term_stats(&c, &c.all_doc_ids()).unwrap();
        let p = ClusterProfiles::build(&s, &[Some(0), Some(1)], 2, &[true; 4], 4, Bm25Params::default());
        assert_eq!(p.popularity(2, 0), 0.0);
        assert_eq!(p.representativeness(2, 0, 1.0), 0.0);
        let dis = p.distinctiveness(0, 0);
        let pop = p.popularity(0, 0);
        assert!((p.representativeness(0, 0, 1.0) - (dis * pop).cbrt()).abs() < 1e-15);
    }

    #[test]
    fn huge_bm25_does_not_overflow() {
        let text: String = (0..400).map(|_| "a b\n").collect::<String>() + &"c\n".repeat(4000);
        let c = Corpus::parse(&text).unwrap();
        let s = compute_term_stats(&c, &c.all_doc_ids()).unwrap();
        let z: Vec<Option<usize>> = (0..4400).map(|i| Some(usize::from(i >= 400))).collect();
        let p = ClusterProfiles::build(&s, &z, 2, &[true; 3], 3, Bm25Params::default());
        assert!(p.bm25(0, 0) > 700.0);
        let d = p.distinctiveness(0, 0);
        assert!(d.is_finite() && d > 0.99);
    }

    #[test]
    fn anchor_thresholds() {
        let z = vec![(1, 0), (2, 0), (3, 1), (4, 1)];
        let scores = |t: TermId| [0.0, 0.9, 0.29, 0.3, 0.1][t];
        let retained = vec![BTreeSet::from([10]), BTreeSet::from([11])];
        let all = select_anchor_terms(&z, scores, 0.0, &retained, 2);
        assert_eq!(all.anchors[0], BTreeSet::from([1, 2, 10]));
        let none = select_anchor_terms(&z, scores, 1.0 + 1e-9, &retained, 2);
        assert_eq!(none.anchors[0], BTreeSet::from([10]));
        assert_eq!(none.sparse, vec![true, true]);
        let mixed = select_anchor_terms(&z, scores, 0.3, &retained, 2);
        assert_eq!(mixed.anchors[0], BTreeSet::from([1, 10]));
        assert_eq!(mixed.anchors[1], BTreeSet::from([3, 11]));
        assert_eq!(mixed.sparse, vec![false, false]);
    }
}
