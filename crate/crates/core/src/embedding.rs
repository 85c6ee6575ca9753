//! Locally discriminative spherical term embedding.
//!
//! Every term of a node gets a unit target vector and a unit context vector.
//! Each known sub-topic gets a unit mean direction `s` and a concentration
//! `kappa`. The minimized objective has three parts:
//!
//! * skip-gram max-margin: `[t_i.v_neg - t_i.v_pos + m]_+` per context pair
//!   and negative sample,
//! * inter-topic repulsion: `[s_i.s_j - m]_+` over unordered topic pairs,
//! * keyword attraction: `-(log C_d(kappa) + kappa t.s) * 1[t.s < m]` for
//!   every keyword `t` of sub-topic `s`.
//!
//! Training is projected SGD: a Riemannian gradient step followed by
//! renormalization, with `kappa` clamped to `[0, kappa_max]`.

use std::collections::HashMap;
use std::io::Write;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, DocId, TermId};
use crate::error::{Error, Result};
use crate::linalg::{dot, normalize, sphere_step};
use crate::taxonomy::NodeId;
use crate::vmf::{bessel_ratio, random_unit, VmfParams};

#[derive(Debug, Clone, PartialEq)]
pub struct EmbedConfig {
    pub dim: usize,
    pub margin: f64,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub lr: f64,
    /// Number of neighbor terms used to widen the local corpus.
    pub neighbors: usize,
    pub kappa_max: f64,
    pub seed: u64,
    /// Training threads; 1 gives a deterministic run.
    pub workers: usize,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        Self {
            dim: 100,
            margin: 0.3,
            window: 5,
            negatives: 2,
            epochs: 10,
            lr: 0.025,
            neighbors: 100,
            kappa_max: 1000.0,
            seed: 0,
            workers: 1,
        }
    }
}

impl EmbedConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_owned()));
        if self.dim < 2 {
            return bad("dim must be at least 2");
        }
        if !(self.margin > 0.0 && self.margin < 1.0) {
            return bad("margin must lie in (0, 1)");
        }
        if self.negatives == 0 {
            return bad("negatives must be at least 1");
        }
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if !(self.lr > 0.0) {
            return bad("learning rate must be positive");
        }
        if !(self.kappa_max > 0.0) {
            return bad("kappa_max must be positive");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        Ok(())
    }

    /// Concentration at which the expected cosine to the mean equals the
    /// margin; used as the starting value of every sub-topic `kappa`.
    pub fn initial_kappa(&self) -> f64 {
        let r = self.margin;
        let d = self.dim as f64;
        (r * (d - r * r) / (1.0 - r * r)).min(self.kappa_max)
    }
}

/// A known sub-topic handed to the trainer.
#[derive(Debug, Clone)]
pub struct SubtopicSeed {
    pub id: NodeId,
    pub center: TermId,
    pub keywords: Vec<TermId>,
}

#[derive(Debug, Clone)]
pub struct Subtopic {
    pub id: NodeId,
    pub center: TermId,
    pub keywords: Vec<TermId>,
    pub vmf: VmfParams,
}

#[derive(Debug, Clone)]
pub struct EmbeddingSpace {
    dim: usize,
    terms: Vec<TermId>,
    rows: HashMap<TermId, usize>,
    target: Vec<f64>,
    context: Vec<f64>,
    topics: Vec<Subtopic>,
}

impl EmbeddingSpace {
    /// Assembles a space from raw row-major matrices (one row per entry of
    /// `terms`). Rows are not renormalized.
    pub fn from_parts(
        dim: usize,
        terms: Vec<TermId>,
        target: Vec<f64>,
        context: Vec<f64>,
        topics: Vec<Subtopic>,
    ) -> Result<Self> {
        if target.len() != terms.len() * dim || context.len() != terms.len() * dim {
            return Err(Error::Config("embedding matrix shape mismatch".into()));
        }
        if topics.iter().any(|t| t.vmf.dim() != dim) {
            return Err(Error::Config("topic dimension mismatch".into()));
        }
        let rows = terms.iter().enumerate().map(|(i, &t)| (t, i)).collect();
        Ok(Self {
            dim,
            terms,
            rows,
            target,
            context,
            topics,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[TermId] {
        &self.terms
    }

    pub fn row(&self, t: TermId) -> Option<usize> {
        self.rows.get(&t).copied()
    }

    pub fn target(&self, t: TermId) -> Option<&[f64]> {
        self.row(t).map(|r| self.target_row(r))
    }

    pub fn context(&self, t: TermId) -> Option<&[f64]> {
        self.row(t).map(|r| self.context_row(r))
    }

    pub fn target_row(&self, r: usize) -> &[f64] {
        &self.target[r * self.dim..(r + 1) * self.dim]
    }

    pub fn context_row(&self, r: usize) -> &[f64] {
        &self.context[r * self.dim..(r + 1) * self.dim]
    }

    pub fn target_row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.target[r * self.dim..(r + 1) * self.dim]
    }

    pub fn context_row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.context[r * self.dim..(r + 1) * self.dim]
    }

    pub fn topics(&self) -> &[Subtopic] {
        &self.topics
    }

    pub fn topic_mut(&mut self, k: usize) -> &mut Subtopic {
        &mut self.topics[k]
    }

    pub fn topic_means(&self) -> Vec<&[f64]> {
        self.topics.iter().map(|t| t.vmf.mu.as_slice()).collect()
    }

    /// Largest `| |x| - 1 |` over every stored vector.
    pub fn max_norm_deviation(&self) -> f64 {
        let rows = self
            .target
            .chunks(self.dim)
            .chain(self.context.chunks(self.dim))
            .chain(self.topics.iter().map(|t| t.vmf.mu.as_slice()));
        rows.map(|r| (dot(r, r).sqrt() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Terms sorted by descending cosine to `query`, ties by term id.
    pub fn nearest(&self, query: &[f64], exclude: Option<TermId>) -> Vec<(TermId, f64)> {
        let mut scored: Vec<(TermId, f64)> = self
            .terms
            .iter()
            .enumerate()
            .filter(|&(_, &t)| Some(t) != exclude)
            .map(|(r, &t)| (t, dot(self.target_row(r), query)))
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        scored
    }

    /// Text dump: `term v1 .. v_dim` per term (target vectors), then one
    /// `__topic__<name>` line per sub-topic.
    pub fn write_text<W: Write>(&self, corpus: &Corpus, mut w: W) -> Result<()> {
        let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(" ");
        for (r, &t) in self.terms.iter().enumerate() {
            writeln!(w, "{} {}", corpus.vocab().term(t), fmt(self.target_row(r)))?;
        }
        for topic in &self.topics {
            writeln!(w, "__topic__{} {}", corpus.vocab().term(topic.center), fmt(&topic.vmf.mu))?;
        }
        Ok(())
    }
}

/// Docs of the node plus every doc containing one of the `m` terms closest
/// to `center` in the parent space. With no parent space the node docs are
/// returned unchanged.
pub fn retrieve_local_corpus(
    center: TermId,
    node_docs: &[DocId],
    parent: Option<&EmbeddingSpace>,
    corpus: &Corpus,
    m: usize,
) -> Vec<DocId> {
    let mut docs: Vec<DocId> = node_docs.to_vec();
    if let Some(space) = parent {
        if let Some(q) = space.target(center) {
            for (t, _) in space.nearest(q, Some(center)).into_iter().take(m) {
                docs.extend_from_slice(corpus.postings(t));
            }
        }
    }
    docs.sort_unstable();
    docs.dedup();
    docs
}

/// One skip-gram training example with its negatives.
#[derive(Debug, Clone, PartialEq)]
pub struct SkipGramSample {
    pub target: TermId,
    pub context: TermId,
    pub negatives: Vec<TermId>,
}

/// Terms of the objective evaluated by [`objective_value`]. Repulsion is
/// always taken over every pair of sub-topics in the space.
#[derive(Debug, Clone, Default)]
pub struct ObjectiveBatch {
    pub samples: Vec<SkipGramSample>,
    /// `(sub-topic index, keyword term)`.
    pub keywords: Vec<(usize, TermId)>,
}

/// Euclidean gradient of the objective, shaped like the space.
#[derive(Debug, Clone)]
pub struct Gradient {
    pub target: Vec<f64>,
    pub context: Vec<f64>,
    pub topic_mu: Vec<Vec<f64>>,
    pub kappa: Vec<f64>,
}

fn rows_of(space: &EmbeddingSpace, t: TermId) -> usize {
    space
        .row(t)
        .unwrap_or_else(|| panic!("term {t} is not part of the embedding space"))
}

pub fn objective_value(space: &EmbeddingSpace, batch: &ObjectiveBatch, margin: f64) -> f64 {
    let mut total = 0.0;
    for s in &batch.samples {
        let t = space.target_row(rows_of(space, s.target));
        let pos = dot(t, space.context_row(rows_of(space, s.context)));
        for &n in &s.negatives {
            let neg = dot(t, space.context_row(rows_of(space, n)));
            total += (neg - pos + margin).max(0.0);
        }
    }
    let topics = space.topics();
    for i in 0..topics.len() {
        for j in i + 1..topics.len() {
            total += (dot(&topics[i].vmf.mu, &topics[j].vmf.mu) - margin).max(0.0);
        }
    }
    for &(k, w) in &batch.keywords {
        let vmf = &topics[k].vmf;
        let c = dot(space.target_row(rows_of(space, w)), &vmf.mu);
        if c < margin {
            total -= vmf.log_c + vmf.kappa * c;
        }
    }
    total
}

pub fn objective_gradient(space: &EmbeddingSpace, batch: &ObjectiveBatch, margin: f64) -> Gradient {
    let dim = space.dim();
    let n = space.terms().len() * dim;
    let topics = space.topics();
    let mut g = Gradient {
        target: vec![0.0; n],
        context: vec![0.0; n],
        topic_mu: vec![vec![0.0; dim]; topics.len()],
        kappa: vec![0.0; topics.len()],
    };
    let add = |dst: &mut [f64], src: &[f64], scale: f64| {
        dst.iter_mut().zip(src).for_each(|(d, s)| *d += scale * s);
    };

    for s in &batch.samples {
        let (rt, rc) = (rows_of(space, s.target), rows_of(space, s.context));
        let t = space.target_row(rt);
        let vp = space.context_row(rc);
        let pos = dot(t, vp);
        for &neg in &s.negatives {
            let rn = rows_of(space, neg);
            let vn = space.context_row(rn);
            if dot(t, vn) - pos + margin > 0.0 {
                add(&mut g.target[rt * dim..(rt + 1) * dim], vn, 1.0);
                add(&mut g.target[rt * dim..(rt + 1) * dim], vp, -1.0);
                add(&mut g.context[rn * dim..(rn + 1) * dim], t, 1.0);
                add(&mut g.context[rc * dim..(rc + 1) * dim], t, -1.0);
            }
        }
    }
    for i in 0..topics.len() {
        for j in i + 1..topics.len() {
            let (a, b) = (&topics[i].vmf.mu, &topics[j].vmf.mu);
            if dot(a, b) - margin > 0.0 {
                add(&mut g.topic_mu[i], b, 1.0);
                add(&mut g.topic_mu[j], a, 1.0);
            }
        }
    }
    for &(k, w) in &batch.keywords {
        let vmf = &topics[k].vmf;
        let r = rows_of(space, w);
        let t = space.target_row(r);
        let c = dot(t, &vmf.mu);
        if c < margin {
            add(&mut g.target[r * dim..(r + 1) * dim], &vmf.mu, -vmf.kappa);
            add(&mut g.topic_mu[k], t, -vmf.kappa);
            g.kappa[k] += bessel_ratio(dim, vmf.kappa) - c;
        }
    }
    g
}

/// Row storage shared between training workers. Loads and stores are
/// relaxed: concurrent workers may interleave updates to the same row.
struct SharedRows {
    dim: usize,
    data: Vec<AtomicU64>,
}

impl SharedRows {
    fn from_vec(dim: usize, v: &[f64]) -> Self {
        Self {
            dim,
            data: v.iter().map(|x| AtomicU64::new(x.to_bits())).collect(),
        }
    }

    fn load(&self, r: usize, buf: &mut [f64]) {
        let row = &self.data[r * self.dim..(r + 1) * self.dim];
        for (b, a) in buf.iter_mut().zip(row) {
            *b = f64::from_bits(a.load(Ordering::Relaxed));
        }
    }

    fn store(&self, r: usize, buf: &[f64]) {
        let row = &self.data[r * self.dim..(r + 1) * self.dim];
        for (b, a) in buf.iter().zip(row) {
            a.store(b.to_bits(), Ordering::Relaxed);
        }
    }

    fn rows(&self) -> usize {
        self.data.len() / self.dim
    }

    fn renormalize(&self) {
        let mut buf = vec![0.0; self.dim];
        for r in 0..self.rows() {
            self.load(r, &mut buf);
            normalize(&mut buf);
            self.store(r, &buf);
        }
    }

    fn into_vec(self) -> Vec<f64> {
        self.data.into_iter().map(|a| f64::from_bits(a.into_inner())).collect()
    }
}

struct Trainer<'a> {
    cfg: &'a EmbedConfig,
    docs: Vec<Vec<usize>>,
    negatives: Option<WeightedIndex<f64>>,
    keywords: Vec<Vec<usize>>,
    target: SharedRows,
    context: SharedRows,
    mu: SharedRows,
    kappa: Vec<AtomicU64>,
    processed: AtomicUsize,
    total_steps: usize,
}

struct Scratch {
    t: Vec<f64>,
    vp: Vec<f64>,
    vn: Vec<f64>,
    gt: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    ga: Vec<f64>,
}

impl Scratch {
    fn new(dim: usize) -> Self {
        let z = || vec![0.0; dim];
        Self {
            t: z(),
            vp: z(),
            vn: z(),
            gt: z(),
            a: z(),
            b: z(),
            ga: z(),
        }
    }
}

impl Trainer<'_> {
    fn lr(&self) -> f64 {
        let done = self.processed.fetch_add(1, Ordering::Relaxed) as f64;
        let frac = 1.0 - done / self.total_steps.max(1) as f64;
        self.cfg.lr * frac.max(1e-4)
    }

    fn skipgram_step(&self, target: usize, context: usize, lr: f64, rng: &mut ChaCha8Rng, s: &mut Scratch) {
        let Some(sampler) = &self.negatives else { return };
        let m = self.cfg.margin;
        self.target.load(target, &mut s.t);
        self.context.load(context, &mut s.vp);
        let pos = dot(&s.t, &s.vp);
        s.gt.iter_mut().for_each(|x| *x = 0.0);
        let mut active = 0usize;
        for _ in 0..self.cfg.negatives {
            let neg = sampler.sample(rng);
            if neg == context {
                continue;
            }
            self.context.load(neg, &mut s.vn);
            if dot(&s.t, &s.vn) - pos + m > 0.0 {
                active += 1;
                s.gt.iter_mut()
                    .zip(s.vn.iter().zip(&s.vp))
                    .for_each(|(g, (n, p))| *g += n - p);
                sphere_step(&mut s.vn, &s.t, lr);
                self.context.store(neg, &s.vn);
            }
        }
        if active > 0 {
            let scale = -(active as f64);
            s.a.iter_mut().zip(&s.t).for_each(|(a, t)| *a = scale * t);
            sphere_step(&mut s.vp, &s.a, lr);
            self.context.store(context, &s.vp);
            sphere_step(&mut s.t, &s.gt, lr);
            self.target.store(target, &s.t);
        }
    }

    /// Keyword attraction and topic repulsion, one pass over every topic.
    fn topic_step(&self, lr: f64, s: &mut Scratch) {
        let m = self.cfg.margin;
        let dim = self.cfg.dim;
        for (k, kws) in self.keywords.iter().enumerate() {
            self.mu.load(k, &mut s.a);
            let kappa = f64::from_bits(self.kappa[k].load(Ordering::Relaxed));
            s.ga.iter_mut().for_each(|x| *x = 0.0);
            let mut g_kappa = 0.0;
            let mut active = false;
            for &w in kws {
                self.target.load(w, &mut s.t);
                let c = dot(&s.t, &s.a);
                if c < m {
                    active = true;
                    s.ga.iter_mut().zip(&s.t).for_each(|(g, t)| *g -= kappa * t);
                    g_kappa += bessel_ratio(dim, kappa) - c;
                    s.b.iter_mut().zip(&s.a).for_each(|(b, mu)| *b = -kappa * mu);
                    sphere_step(&mut s.t, &s.b, lr);
                    self.target.store(w, &s.t);
                }
            }
            if active {
                sphere_step(&mut s.a, &s.ga, lr);
                self.mu.store(k, &s.a);
                let next = (kappa - lr * g_kappa).clamp(0.0, self.cfg.kappa_max);
                self.kappa[k].store(next.to_bits(), Ordering::Relaxed);
            }
        }
        let n = self.keywords.len();
        for i in 0..n {
            for j in i + 1..n {
                self.mu.load(i, &mut s.a);
                self.mu.load(j, &mut s.b);
                if dot(&s.a, &s.b) - m > 0.0 {
                    s.ga.copy_from_slice(&s.a);
                    sphere_step(&mut s.a, &s.b, lr);
                    sphere_step(&mut s.b, &s.ga, lr);
                    self.mu.store(i, &s.a);
                    self.mu.store(j, &s.b);
                }
            }
        }
    }

    fn run_docs(&self, order: &[usize], rng: &mut ChaCha8Rng) {
        let mut s = Scratch::new(self.cfg.dim);
        let w = self.cfg.window;
        for &d in order {
            let lr = self.lr();
            let tokens = &self.docs[d];
            for (i, &ti) in tokens.iter().enumerate() {
                let lo = i.saturating_sub(w);
                let hi = (i + w).min(tokens.len() - 1);
                for (j, &tj) in tokens.iter().enumerate().take(hi + 1).skip(lo) {
                    if j != i {
                        self.skipgram_step(ti, tj, lr, rng, &mut s);
                    }
                }
            }
            if !self.keywords.is_empty() {
                self.topic_step(lr, &mut s);
            }
        }
    }
}

/// Trains a node-local embedding over `docs`, restricted to the tokens in
/// `terms`. Sub-topic means start at their center term's target vector.
pub fn train_node_embedding(
    corpus: &Corpus,
    docs: &[DocId],
    terms: &[TermId],
    subtopics: &[SubtopicSeed],
    cfg: &EmbedConfig,
) -> Result<EmbeddingSpace> {
    cfg.validate()?;
    if docs.is_empty() {
        return Err(Error::EmptyDocs);
    }
    let mut node_terms = terms.to_vec();
    node_terms.sort_unstable();
    node_terms.dedup();
    let rows: HashMap<TermId, usize> = node_terms.iter().enumerate().map(|(i, &t)| (t, i)).collect();

    let mut keywords = Vec::with_capacity(subtopics.len());
    for st in subtopics {
        let mut kw: Vec<usize> = Vec::new();
        for &t in std::iter::once(&st.center).chain(&st.keywords) {
            let r = *rows.get(&t).ok_or_else(|| {
                Error::Config(format!("keyword term {} is not among the node terms", corpus.vocab().term(t)))
            })?;
            if !kw.contains(&r) {
                kw.push(r);
            }
        }
        keywords.push(kw);
    }

    let mut counts = vec![0f64; node_terms.len()];
    let local: Vec<Vec<usize>> = docs
        .iter()
        .map(|&d| {
            corpus
                .document(d)
                .tokens
                .iter()
                .filter_map(|t| rows.get(t).copied())
                .inspect(|&r| counts[r] += 1.0)
                .collect::<Vec<_>>()
        })
        .filter(|toks| toks.len() >= 2)
        .collect();
    let weights: Vec<f64> = counts.iter().map(|c| c.powf(0.75)).collect();
    let negatives = WeightedIndex::new(&weights).ok();

    let dim = cfg.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut init = |n: usize| -> Vec<f64> { (0..n).flat_map(|_| random_unit(dim, &mut rng)).collect() };
    let target = init(node_terms.len());
    let context = init(node_terms.len());
    let mut mus = Vec::with_capacity(subtopics.len() * dim);
    for kw in &keywords {
        mus.extend_from_slice(&target[kw[0] * dim..(kw[0] + 1) * dim]);
    }
    let kappa0 = cfg.initial_kappa();

    let trainer = Trainer {
        cfg,
        total_steps: local.len() * cfg.epochs,
        docs: local,
        negatives,
        keywords,
        target: SharedRows::from_vec(dim, &target),
        context: SharedRows::from_vec(dim, &context),
        mu: SharedRows::from_vec(dim, &mus),
        kappa: (0..subtopics.len()).map(|_| AtomicU64::new(kappa0.to_bits())).collect(),
        processed: AtomicUsize::new(0),
    };

    let mut order: Vec<usize> = (0..trainer.docs.len()).collect();
    for epoch in 0..cfg.epochs {
        let mut epoch_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, epoch, 0));
        order.shuffle(&mut epoch_rng);
        if cfg.workers == 1 {
            trainer.run_docs(&order, &mut epoch_rng);
        } else {
            let shards: Vec<Vec<usize>> = (0..cfg.workers)
                .map(|w| order.iter().copied().skip(w).step_by(cfg.workers).collect())
                .collect();
            std::thread::scope(|scope| {
                for (w, shard) in shards.iter().enumerate() {
                    let trainer = &trainer;
                    let seed = derive_seed(cfg.seed, epoch, w + 1);
                    scope.spawn(move || {
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        trainer.run_docs(shard, &mut rng);
                    });
                }
            });
        }
        trainer.target.renormalize();
        trainer.context.renormalize();
        trainer.mu.renormalize();
    }

    let kappas: Vec<f64> = trainer
        .kappa
        .iter()
        .map(|a| f64::from_bits(a.load(Ordering::Relaxed)))
        .collect();
    let mus = trainer.mu.into_vec();
    let topics = subtopics
        .iter()
        .enumerate()
        .map(|(k, st)| {
            let mu = mus[k * dim..(k + 1) * dim].to_vec();
            Ok(Subtopic {
                id: st.id,
                center: st.center,
                keywords: st.keywords.clone(),
                vmf: VmfParams::new(mu, kappas[k])?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    EmbeddingSpace::from_parts(dim, node_terms, trainer.target.into_vec(), trainer.context.into_vec(), topics)
}

/// Independent stream seed for one (epoch, worker) slot.
fn derive_seed(seed: u64, epoch: usize, worker: usize) -> u64 {
    let mut z = seed ^ (epoch as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z ^= (worker as u64 + 1).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(v: &[f64]) -> Vec<f64> {
        let mut v = v.to_vec();
        normalize(&mut v);
        v
    }

    fn tiny_space(m_topics: &[&[f64]]) -> EmbeddingSpace {
        let dim = 3;
        let target = [unit(&[1.0, 0.0, 0.0]), unit(&[0.0, 1.0, 0.0])].concat();
        let context = [unit(&[1.0, 0.0, 0.0]), unit(&[0.0, 0.0, 1.0])].concat();
        let topics = m_topics
            .iter()
            .enumerate()
            .map(|(i, mu)| Subtopic {
                id: i,
                center: 0,
                keywords: vec![],
                vmf: VmfParams::new(mu.to_vec(), 2.0).unwrap(),
            })
            .collect();
        EmbeddingSpace::from_parts(dim, vec![10, 11], target, context, topics).unwrap()
    }

    #[test]
    fn single_pair_hinge_by_hand() {
        // t.v_pos = 1, t.v_neg = 0 => [0 - 1 + 0.3]_+ = 0
        let space = tiny_space(&[]);
        let batch = ObjectiveBatch {
            samples: vec![SkipGramSample {
                target: 10,
                context: 10,
                negatives: vec![11],
            }],
            keywords: vec![],
        };
        assert_eq!(objective_value(&space, &batch, 0.3), 0.0);
        let g = objective_gradient(&space, &batch, 0.3);
        assert!(g.target.iter().chain(&g.context).all(|&x| x == 0.0));
    }

    #[test]
    fn satisfied_keyword_and_separated_topics_are_inactive() {
        // topics orthogonal (cos 0 <= m), keyword term exactly on its mean
        let space = tiny_space(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        let batch = ObjectiveBatch {
            samples: vec![],
            keywords: vec![(0, 10), (1, 11)],
        };
        assert_eq!(objective_value(&space, &batch, 0.3), 0.0);
        let g = objective_gradient(&space, &batch, 0.3);
        assert!(g.topic_mu.iter().flatten().all(|&x| x == 0.0));
        assert!(g.kappa.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn close_topics_are_repelled() {
        let space = tiny_space(&[&[1.0, 0.0, 0.0], &[1.0, 0.2, 0.0]]);
        let batch = ObjectiveBatch::default();
        let c = dot(&space.topics()[0].vmf.mu, &space.topics()[1].vmf.mu);
        assert!((objective_value(&space, &batch, 0.3) - (c - 0.3)).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        let mut cfg = EmbedConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.dim = 1;
        assert!(cfg.validate().is_err());
        let cfg = EmbedConfig {
            margin: 1.0,
            ..EmbedConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = EmbedConfig {
            negatives: 0,
            ..EmbedConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn empty_docs_rejected() {
        let c = Corpus::parse("a b c\n").unwrap();
        let err = train_node_embedding(&c, &[], &[0, 1, 2], &[], &EmbedConfig::default()).unwrap_err();
        assert!(matches!(err, Error::EmptyDocs));
    }

    #[test]
    fn retrieval_with_zero_neighbors_is_identity() {
        let c = Corpus::parse("a b\nb c\nc d\n").unwrap();
        let cfg = EmbedConfig {
            dim: 4,
            epochs: 1,
            ..EmbedConfig::default()
        };
        let space = train_node_embedding(&c, &[0, 1, 2], &[0, 1, 2, 3], &[], &cfg).unwrap();
        assert_eq!(retrieve_local_corpus(0, &[0], Some(&space), &c, 0), vec![0]);
        assert_eq!(retrieve_local_corpus(0, &[0], None, &c, 100), vec![0]);
        assert_eq!(retrieve_local_corpus(0, &[0], Some(&space), &c, 3), vec![0, 1, 2]);
    }
}
