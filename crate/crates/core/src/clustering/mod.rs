//! Novelty adaptive clustering of one node's terms and documents.
//!
//! Terms close to a known sub-topic are assigned to it; the rest are
//! clustered with spherical k-means into novel sub-topics. Every candidate
//! number of novel clusters is scored end to end (document assignment,
//! anchor selection, concentration estimates) and the candidate whose
//! concentrations are most uniform across all sub-topics wins.

pub mod kmeans;
pub mod novelty;
pub mod refine;
pub mod scoring;

use std::collections::{BTreeMap, BTreeSet};

use crate::corpus::{compute_term_stats, Corpus, DocId, TermId, TermStats};
use crate::embedding::EmbeddingSpace;
use crate::error::{Error, Result};
use crate::linalg::{argmax, cosine, normalize};
use crate::taxonomy::NodeId;
use crate::vmf::VmfParams;

pub use kmeans::{spherical_kmeans, KMeansConfig, KMeansResult};
pub use novelty::{assign_known_terms, closest_topic, novelty_score, novelty_threshold, split_terms};
pub use refine::{choose_k_by_concentration, concentration_stdev, estimate_vmf, VmfFit};
pub use scoring::{
    assign_documents, bm25_score, select_anchor_terms, significance_score, AnchorSelection, Bm25Params,
    ClusterProfiles,
};

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterConfig {
    /// Novelty threshold exponent per node depth; the last entry applies to
    /// every deeper level.
    pub beta_per_level: Vec<f64>,
    pub temperature: f64,
    pub tau_sig: f64,
    pub k_star_min: usize,
    pub k_star_max: usize,
    pub bm25_k1: f64,
    pub bm25_b: f64,
    pub kmeans_max_iter: usize,
    pub kmeans_tol: f64,
    pub kmeans_restarts: usize,
    /// Novel clusters with fewer anchor terms are discarded.
    pub min_novel_anchors: usize,
    /// Measure relevance to a known sub-topic against the normalized sum of
    /// its assigned term vectors instead of its trained mean direction.
    pub centroid_relevance: bool,
    /// Fold a novel cluster into a known sub-topic when its anchor centroid
    /// is at least as close to that sub-topic's mean as the sub-topic's own
    /// anchors are on average.
    pub novel_cluster_check: bool,
    pub kappa_max: f64,
    pub seed: u64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            beta_per_level: vec![1.5, 3.0],
            temperature: 0.2,
            tau_sig: 0.3,
            k_star_min: 1,
            k_star_max: 5,
            bm25_k1: 1.2,
            bm25_b: 0.75,
            kmeans_max_iter: 100,
            kmeans_tol: 0.0,
            kmeans_restarts: 5,
            min_novel_anchors: 3,
            centroid_relevance: true,
            novel_cluster_check: true,
            kappa_max: 1000.0,
            seed: 0,
        }
    }
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.beta_per_level.is_empty() {
            return bad("beta_per_level must not be empty".into());
        }
        if let Some(b) = self.beta_per_level.iter().find(|&&b| !(b >= 1.0)) {
            return bad(format!("beta must be >= 1, got {b}"));
        }
        if !(self.temperature > 0.0) {
            return bad("temperature must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.tau_sig) {
            return bad("tau_sig must lie in [0, 1]".into());
        }
        if self.k_star_min == 0 || self.k_star_min > self.k_star_max {
            return bad(format!("invalid novel-cluster range {}..={}", self.k_star_min, self.k_star_max));
        }
        if !(self.bm25_k1 >= 0.0) || !(0.0..=1.0).contains(&self.bm25_b) {
            return bad("bm25 parameters out of range".into());
        }
        if self.kmeans_max_iter == 0 {
            return bad("kmeans_max_iter must be positive".into());
        }
        Ok(())
    }

    pub fn beta(&self, depth: usize) -> f64 {
        let i = depth.min(self.beta_per_level.len() - 1);
        self.beta_per_level[i]
    }

    pub fn bm25(&self) -> Bm25Params {
        Bm25Params {
            k1: self.bm25_k1,
            b: self.bm25_b,
        }
    }

    pub fn kmeans(&self, k: usize) -> KMeansConfig {
        KMeansConfig {
            max_iter: self.kmeans_max_iter,
            tol: self.kmeans_tol,
            restarts: self.kmeans_restarts,
            seed: self.seed.wrapping_add(k as u64),
        }
    }
}

/// Everything the clustering of one node reads.
pub struct NodeInput<'a> {
    pub corpus: &'a Corpus,
    /// Node-local embedding; its sub-topics are the known children.
    pub space: &'a EmbeddingSpace,
    pub terms: &'a [TermId],
    pub docs: &'a [DocId],
    pub depth: usize,
}

#[derive(Debug, Clone)]
pub struct KnownUpdate {
    pub id: NodeId,
    pub center: TermId,
    /// Anchor terms with their significance scores.
    pub anchors: BTreeMap<TermId, f64>,
    pub docs: BTreeSet<DocId>,
    pub vmf: Option<VmfParams>,
    /// No anchor besides the retained keyword terms survived.
    pub sparse: bool,
}

#[derive(Debug, Clone)]
pub struct NovelCluster {
    pub center: TermId,
    pub anchors: BTreeMap<TermId, f64>,
    pub docs: BTreeSet<DocId>,
    pub vmf: Option<VmfParams>,
    /// k-means mean direction.
    pub mean: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSummary {
    pub k: usize,
    pub stdev: f64,
    pub kappas: Vec<f64>,
    pub novel_kept: usize,
    /// Novel clusters folded into a known sub-topic.
    pub novel_merged: usize,
}

#[derive(Debug, Clone)]
pub struct SubtopicClustering {
    pub known_terms: BTreeSet<TermId>,
    pub novel_terms: BTreeSet<TermId>,
    /// Term -> sub-topic index (known sub-topics first, then novel clusters).
    pub z_term: BTreeMap<TermId, usize>,
    /// Document -> sub-topic index from anchor terms; unassigned docs absent.
    pub z_doc: BTreeMap<DocId, usize>,
    /// Document assignment from all clustered terms, before anchor filtering.
    pub z_doc_initial: BTreeMap<DocId, usize>,
    pub known_updates: Vec<KnownUpdate>,
    pub novel_clusters: Vec<NovelCluster>,
    pub k_star: usize,
    pub candidates: Vec<CandidateSummary>,
    /// Empty when the node has fewer than two known sub-topics.
    pub novelty: BTreeMap<TermId, f64>,
    pub significance: BTreeMap<TermId, f64>,
}

impl SubtopicClustering {
    pub fn n_known(&self) -> usize {
        self.known_updates.len()
    }
}

struct Ctx<'a> {
    input: &'a NodeInput<'a>,
    cfg: &'a ClusterConfig,
    stats: TermStats,
    terms: Vec<TermId>,
    mask: Vec<bool>,
    known_means: Vec<Vec<f64>>,
    /// Keyword terms of each known sub-topic, always kept as its anchors.
    retained: Vec<BTreeSet<TermId>>,
    owner: BTreeMap<TermId, usize>,
}

impl Ctx<'_> {
    fn vector(&self, t: TermId) -> &[f64] {
        self.input.space.target(t).expect("node term has a vector")
    }
}

/// One way of splitting the node terms, before anchor selection.
struct Proposal {
    k: usize,
    known_terms: BTreeSet<TermId>,
    novel_terms: BTreeSet<TermId>,
    labels: Vec<(TermId, usize)>,
    novel_means: Vec<Vec<f64>>,
}

struct Evaluated {
    proposal: Proposal,
    summary: CandidateSummary,
    z_doc_initial: Vec<Option<usize>>,
    z_doc: Vec<Option<usize>>,
    anchors: Vec<BTreeSet<TermId>>,
    sparse: Vec<bool>,
    keep: Vec<bool>,
    /// Novel clusters folded into a known sub-topic.
    merged_into: Vec<Option<usize>>,
    vmf: Vec<Option<VmfParams>>,
    significance: BTreeMap<TermId, f64>,
}

pub fn cluster_node(input: &NodeInput<'_>, cfg: &ClusterConfig) -> Result<SubtopicClustering> {
    cfg.validate()?;
    let space = input.space;
    let mut terms: Vec<TermId> = input.terms.iter().copied().filter(|&t| space.row(t).is_some()).collect();
    terms.sort_unstable();
    terms.dedup();
    let mut mask = vec![false; input.corpus.vocab_size()];
    terms.iter().for_each(|&t| mask[t] = true);

    let mut owner = BTreeMap::new();
    let mut retained = Vec::new();
    for (k, topic) in space.topics().iter().enumerate() {
        let set: BTreeSet<TermId> = std::iter::once(topic.center)
            .chain(topic.keywords.iter().copied())
            .filter(|t| mask.get(*t).copied().unwrap_or(false))
            .collect();
        for &t in &set {
            owner.insert(t, k);
        }
        retained.push(set);
    }

    let ctx = Ctx {
        input,
        cfg,
        stats: compute_term_stats(input.corpus, input.docs)?,
        terms,
        mask,
        known_means: space.topics().iter().map(|t| t.vmf.mu.clone()).collect(),
        retained,
        owner,
    };

    let (proposals, novelty) = match ctx.known_means.len() {
        0 => (propose_unsupervised(&ctx)?, BTreeMap::new()),
        1 => (propose_single_known(&ctx)?, BTreeMap::new()),
        _ => propose_with_novelty(&ctx)?,
    };

    let mut evaluated = proposals
        .into_iter()
        .map(|p| evaluate(&ctx, p))
        .collect::<Result<Vec<_>>>()?;
    if evaluated.is_empty() {
        evaluated.push(evaluate(
            &ctx,
            Proposal {
                k: 0,
                known_terms: BTreeSet::new(),
                novel_terms: BTreeSet::new(),
                labels: Vec::new(),
                novel_means: Vec::new(),
            },
        )?);
    }

    let candidates: Vec<CandidateSummary> = evaluated.iter().map(|e| e.summary.clone()).collect();
    // candidates that lost clusters to the anchor filter only win when no
    // candidate kept or folded all of its clusters
    let rank = |c: &CandidateSummary| (c.novel_kept + c.novel_merged < c.k, c.stdev, c.k);
    let mut best = 0;
    for (i, e) in evaluated.iter().enumerate() {
        let (a, b) = (rank(&e.summary), rank(&evaluated[best].summary));
        if a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)).is_lt() {
            best = i;
        }
    }
    let mut chosen = evaluated.swap_remove(best);
    if ctx.known_means.is_empty() && chosen.summary.novel_kept < 2 {
        // a single unsupervised child would just duplicate its parent
        chosen.keep.iter_mut().for_each(|k| *k = false);
    }
    Ok(finish(&ctx, chosen, candidates, novelty))
}

fn feasible_ks(cfg: &ClusterConfig, lo: usize, n: usize) -> Vec<usize> {
    let ks: Vec<usize> = (lo..=cfg.k_star_max).filter(|&k| k <= n).collect();
    if ks.is_empty() && n > 0 && lo <= 1 {
        vec![n.min(cfg.k_star_max)]
    } else {
        ks
    }
}

fn run_kmeans(ctx: &Ctx<'_>, pool: &[TermId], k: usize) -> Result<KMeansResult> {
    let vecs: Vec<&[f64]> = pool.iter().map(|&t| ctx.vector(t)).collect();
    spherical_kmeans(&vecs, k, &ctx.cfg.kmeans(k))
}

fn propose_with_novelty(ctx: &Ctx<'_>) -> Result<(Vec<Proposal>, BTreeMap<TermId, f64>)> {
    let n_known = ctx.known_means.len();
    let threshold = novelty_threshold(n_known, ctx.cfg.beta(ctx.input.depth))?;
    let means: Vec<&[f64]> = ctx.known_means.iter().map(|m| m.as_slice()).collect();
    let mut novelty = BTreeMap::new();
    let mut known_terms = BTreeSet::new();
    let mut labels = Vec::new();
    let mut novel = Vec::new();
    for &t in &ctx.terms {
        let v = ctx.vector(t);
        let score = novelty_score(v, &means, ctx.cfg.temperature)?;
        novelty.insert(t, score);
        if let Some(&k) = ctx.owner.get(&t) {
            known_terms.insert(t);
            labels.push((t, k));
        } else if score < threshold {
            known_terms.insert(t);
            labels.push((t, closest_topic(v, &means).expect("known topics")));
        } else {
            novel.push(t);
        }
    }
    let novel_terms: BTreeSet<TermId> = novel.iter().copied().collect();
    let mut proposals = Vec::new();
    for k in feasible_ks(ctx.cfg, ctx.cfg.k_star_min, novel.len()) {
        let km = run_kmeans(ctx, &novel, k)?;
        let mut l = labels.clone();
        l.extend(novel.iter().zip(&km.assignments).map(|(&t, &a)| (t, n_known + a)));
        proposals.push(Proposal {
            k,
            known_terms: known_terms.clone(),
            novel_terms: novel_terms.clone(),
            labels: l,
            novel_means: km.means,
        });
    }
    if proposals.is_empty() {
        proposals.push(Proposal {
            k: 0,
            known_terms,
            novel_terms,
            labels,
            novel_means: Vec::new(),
        });
    }
    Ok((proposals, novelty))
}

/// One known sub-topic: cluster every non-keyword term, then fold the
/// cluster closest to the known mean into the known sub-topic.
fn propose_single_known(ctx: &Ctx<'_>) -> Result<Vec<Proposal>> {
    let known_mean = &ctx.known_means[0];
    let pool: Vec<TermId> = ctx.terms.iter().copied().filter(|t| !ctx.owner.contains_key(t)).collect();
    let base: Vec<(TermId, usize)> = ctx.retained[0].iter().map(|&t| (t, 0)).collect();
    let mut proposals = Vec::new();
    for k in feasible_ks(ctx.cfg, ctx.cfg.k_star_min.max(2), pool.len()) {
        let km = run_kmeans(ctx, &pool, k)?;
        let merged = argmax(km.means.iter().map(|m| cosine(m, known_mean))).expect("k >= 2").0;
        let remap = |a: usize| -> usize {
            match a.cmp(&merged) {
                std::cmp::Ordering::Equal => 0,
                std::cmp::Ordering::Less => 1 + a,
                std::cmp::Ordering::Greater => a,
            }
        };
        let mut labels = base.clone();
        let mut known_terms: BTreeSet<TermId> = ctx.retained[0].clone();
        let mut novel_terms = BTreeSet::new();
        for (&t, &a) in pool.iter().zip(&km.assignments) {
            let s = remap(a);
            labels.push((t, s));
            if s == 0 {
                known_terms.insert(t);
            } else {
                novel_terms.insert(t);
            }
        }
        let novel_means = km
            .means
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != merged)
            .map(|(_, m)| m.clone())
            .collect();
        proposals.push(Proposal {
            k: k - 1,
            known_terms,
            novel_terms,
            labels,
            novel_means,
        });
    }
    if proposals.is_empty() {
        let mut labels = base;
        labels.extend(pool.iter().map(|&t| (t, 0)));
        proposals.push(Proposal {
            k: 0,
            known_terms: ctx.terms.iter().copied().collect(),
            novel_terms: BTreeSet::new(),
            labels,
            novel_means: Vec::new(),
        });
    }
    Ok(proposals)
}

fn propose_unsupervised(ctx: &Ctx<'_>) -> Result<Vec<Proposal>> {
    let pool = &ctx.terms;
    let novel_terms: BTreeSet<TermId> = pool.iter().copied().collect();
    feasible_ks(ctx.cfg, ctx.cfg.k_star_min.max(2), pool.len())
        .into_iter()
        .map(|k| {
            let km = run_kmeans(ctx, pool, k)?;
            Ok(Proposal {
                k,
                known_terms: BTreeSet::new(),
                novel_terms: novel_terms.clone(),
                labels: pool.iter().copied().zip(km.assignments.iter().copied()).collect(),
                novel_means: km.means,
            })
        })
        .collect()
}

fn evaluate(ctx: &Ctx<'_>, proposal: Proposal) -> Result<Evaluated> {
    let corpus = ctx.input.corpus;
    let vocab = corpus.vocab_size();
    let n_known = ctx.known_means.len();
    let mut means: Vec<Vec<f64>> = ctx
        .known_means
        .iter()
        .chain(&proposal.novel_means)
        .cloned()
        .collect();
    let n = means.len();
    if ctx.cfg.centroid_relevance {
        let mut sums = vec![vec![0.0; ctx.input.space.dim()]; n_known];
        for &(t, s) in proposal.labels.iter().filter(|&&(_, s)| s < n_known) {
            sums[s].iter_mut().zip(ctx.vector(t)).for_each(|(a, x)| *a += x);
        }
        for (mean, mut sum) in means.iter_mut().zip(sums) {
            if normalize(&mut sum) > 1e-12 {
                *mean = sum;
            }
        }
    }

    let mut labels = vec![None; vocab];
    for &(t, s) in &proposal.labels {
        labels[t] = Some(s);
    }
    let z_doc_initial = assign_documents(&ctx.stats, &labels, n);
    let profiles = ClusterProfiles::build(&ctx.stats, &z_doc_initial, n, &ctx.mask, vocab, ctx.cfg.bm25());
    let significance: BTreeMap<TermId, f64> = ctx
        .terms
        .iter()
        .map(|&t| (t, significance_score(t, ctx.vector(t), &means, &profiles, corpus).0))
        .collect();

    let AnchorSelection { anchors, sparse } = select_anchor_terms(
        &proposal.labels,
        |t| significance[&t],
        ctx.cfg.tau_sig,
        &ctx.retained,
        n,
    );

    let mut keep: Vec<bool> = (0..n)
        .map(|s| s < n_known || anchors[s].len() >= ctx.cfg.min_novel_anchors.max(1))
        .collect();
    let mut anchors = anchors;
    let mut merged_into = vec![None; n];
    if ctx.cfg.novel_cluster_check {
        // a novel cluster whose centroid falls inside the spread of a known
        // sub-topic's anchors is part of that sub-topic
        let mut known_fits = Vec::with_capacity(n_known);
        for set in &anchors[..n_known] {
            let vecs: Vec<&[f64]> = set.iter().map(|&t| ctx.vector(t)).collect();
            known_fits.push(if vecs.len() >= 2 {
                let fit = estimate_vmf(&vecs, ctx.cfg.kappa_max)?;
                (!fit.degenerate).then_some((fit.params.mu, fit.mean_resultant))
            } else {
                None
            });
        }
        for s in n_known..n {
            if !keep[s] {
                continue;
            }
            let mut centroid = vec![0.0; ctx.input.space.dim()];
            for &t in &anchors[s] {
                centroid.iter_mut().zip(ctx.vector(t)).for_each(|(a, x)| *a += x);
            }
            let inside = argmax(known_fits.iter().map(|f| match f {
                Some((mu, r)) if cosine(&centroid, mu) >= *r => cosine(&centroid, mu),
                _ => f64::NEG_INFINITY,
            }))
            .filter(|&(_, c)| c.is_finite());
            if let Some((target, _)) = inside {
                keep[s] = false;
                merged_into[s] = Some(target);
                let moved = std::mem::take(&mut anchors[s]);
                anchors[target].extend(moved);
            }
        }
    }
    let z_doc = loop {
        let mut anchor_labels = vec![None; vocab];
        for (s, set) in anchors.iter().enumerate().filter(|&(s, _)| keep[s]) {
            for &t in set {
                anchor_labels[t] = Some(s);
            }
        }
        let z = assign_documents(&ctx.stats, &anchor_labels, n);
        let mut sizes = vec![0usize; n];
        z.iter().flatten().for_each(|&s| sizes[s] += 1);
        let mut dropped = false;
        for s in n_known..n {
            if keep[s] && sizes[s] == 0 {
                keep[s] = false;
                dropped = true;
            }
        }
        if !dropped {
            break z;
        }
    };

    let mut vmf = Vec::with_capacity(n);
    let mut kappas = Vec::new();
    for s in 0..n {
        let fit = if keep[s] && anchors[s].len() >= 2 {
            let vecs: Vec<&[f64]> = anchors[s].iter().map(|&t| ctx.vector(t)).collect();
            Some(estimate_vmf(&vecs, ctx.cfg.kappa_max)?.params)
        } else {
            None
        };
        if let Some(f) = &fit {
            kappas.push(f.kappa);
        }
        vmf.push(fit);
    }
    let novel_kept = keep[n_known..].iter().filter(|&&k| k).count();
    let mut stdev = concentration_stdev(&kappas);
    if n_known == 0 && novel_kept < 2 {
        stdev = f64::INFINITY;
    }

    Ok(Evaluated {
        summary: CandidateSummary {
            k: proposal.k,
            stdev,
            kappas,
            novel_kept,
            novel_merged: merged_into.iter().flatten().count(),
        },
        proposal,
        z_doc_initial,
        z_doc,
        anchors,
        sparse,
        keep,
        merged_into,
        vmf,
        significance,
    })
}

fn finish(
    ctx: &Ctx<'_>,
    e: Evaluated,
    candidates: Vec<CandidateSummary>,
    novelty: BTreeMap<TermId, f64>,
) -> SubtopicClustering {
    let n_known = ctx.known_means.len();
    let n = e.keep.len();
    // compact cluster indices over kept sub-topics
    let mut index = vec![None; n];
    let mut next = 0;
    for s in 0..n {
        if e.keep[s] {
            index[s] = Some(next);
            next += 1;
        }
    }
    let docs_of = |z: &[Option<usize>]| -> BTreeMap<DocId, usize> {
        ctx.stats
            .docs()
            .iter()
            .zip(z)
            .filter_map(|(&d, s)| s.and_then(|s| index[s]).map(|i| (d, i)))
            .collect()
    };
    let z_doc = docs_of(&e.z_doc);
    let z_doc_initial = docs_of(&e.z_doc_initial);
    let z_term = e
        .proposal
        .labels
        .iter()
        .filter_map(|&(t, s)| index[s].or_else(|| e.merged_into[s].and_then(|m| index[m])).map(|i| (t, i)))
        .collect();
    let scored = |set: &BTreeSet<TermId>| -> BTreeMap<TermId, f64> {
        set.iter().map(|&t| (t, e.significance[&t])).collect()
    };
    let cluster_docs = |i: usize| -> BTreeSet<DocId> {
        z_doc.iter().filter(|&(_, &s)| s == i).map(|(&d, _)| d).collect()
    };

    let known_updates = ctx
        .input
        .space
        .topics()
        .iter()
        .enumerate()
        .map(|(s, topic)| KnownUpdate {
            id: topic.id,
            center: topic.center,
            anchors: scored(&e.anchors[s]),
            docs: cluster_docs(index[s].expect("known clusters are kept")),
            vmf: e.vmf[s].clone(),
            sparse: e.sparse[s],
        })
        .collect();

    let novel_clusters = (n_known..n)
        .filter(|&s| e.keep[s])
        .map(|s| {
            let mean = e.proposal.novel_means[s - n_known].clone();
            let center = e.anchors[s]
                .iter()
                .map(|&t| (t, cosine(ctx.vector(t), &mean)))
                .fold(None, |best: Option<(TermId, f64)>, (t, c)| match best {
                    Some((_, bc)) if c <= bc => best,
                    _ => Some((t, c)),
                })
                .expect("kept clusters have anchors")
                .0;
            NovelCluster {
                center,
                anchors: scored(&e.anchors[s]),
                docs: cluster_docs(index[s].expect("kept")),
                vmf: e.vmf[s].clone(),
                mean,
            }
        })
        .collect();

    SubtopicClustering {
        known_terms: e.proposal.known_terms,
        novel_terms: e.proposal.novel_terms,
        z_term,
        z_doc,
        z_doc_initial,
        known_updates,
        novel_clusters,
        k_star: e.summary.k,
        candidates,
        novelty,
        significance: e.significance,
    }
}
