//! Planted-topic corpora and metrics against their ground truth.

use std::collections::{BTreeMap, BTreeSet};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, DocId};
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::taxonomy::{NodeJson, Taxonomy};
use crate::vmf::{random_unit, sample_vmf};

/// Two-level planted hierarchy. Level-1 topic `i` is named `t{i}`, its
/// level-2 topic `j` is `t{i}_{j}`; the k-th term of topic `X` is `X_w{k}`,
/// except the first, which is the topic name itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantedCorpusSpec {
    pub level1_topics: usize,
    pub level2_per_topic: usize,
    pub terms_per_topic: usize,
    /// Documents per level-2 topic.
    pub docs_per_topic: usize,
    pub doc_len: usize,
    pub kappa_topic: f64,
    pub dim: usize,
    /// Share of tokens drawn uniformly from the whole vocabulary.
    pub vocab_noise_frac: f64,
    /// Share of tokens drawn from the parent (level-1) topic's own terms.
    pub parent_term_frac: f64,
    /// Terms are drawn with weight `exp(sharpness * cos(term, topic mean))`.
    pub term_sharpness: f64,
    pub seed: u64,
}

impl Default for PlantedCorpusSpec {
    fn default() -> Self {
        Self {
            level1_topics: 3,
            level2_per_topic: 3,
            terms_per_topic: 40,
            docs_per_topic: 200,
            doc_len: 60,
            kappa_topic: 50.0,
            dim: 16,
            vocab_noise_frac: 0.1,
            parent_term_frac: 0.25,
            term_sharpness: 5.0,
            seed: 0,
        }
    }
}

impl PlantedCorpusSpec {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            self.level1_topics,
            self.level2_per_topic,
            self.terms_per_topic,
            self.docs_per_topic,
            self.doc_len,
        ];
        if counts.contains(&0) {
            return Err(Error::Config("planted corpus counts must be at least 1".into()));
        }
        if !(self.kappa_topic > 0.0) {
            return Err(Error::Config("kappa_topic must be positive".into()));
        }
        if self.dim < 2 {
            return Err(Error::Config("dim must be at least 2".into()));
        }
        let fr = self.vocab_noise_frac + self.parent_term_frac;
        if self.vocab_noise_frac < 0.0 || self.parent_term_frac < 0.0 || fr > 1.0 {
            return Err(Error::Config("token mixture fractions must be non-negative and sum to at most 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PlantedTopic {
    pub name: String,
    /// Index of the parent in [`SyntheticCorpus::topics`].
    pub parent: Option<usize>,
    pub terms: Vec<String>,
    pub mean: Vec<f64>,
    /// Documents generated from this topic or any of its descendants.
    pub docs: Vec<DocId>,
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    /// Level-1 topics come first, then level-2 topics grouped by parent.
    pub topics: Vec<PlantedTopic>,
    /// Level-2 topic of every document.
    pub doc_labels: Vec<usize>,
    /// Owning topic of every term.
    pub term_labels: BTreeMap<String, usize>,
}

pub fn generate_synthetic_corpus(spec: &PlantedCorpusSpec) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut topics = Vec::new();
    for i in 0..spec.level1_topics {
        let mean = random_unit(spec.dim, &mut rng);
        topics.push(PlantedTopic {
            name: format!("t{i}"),
            parent: None,
            terms: Vec::new(),
            mean,
            docs: Vec::new(),
        });
    }
    for i in 0..spec.level1_topics {
        for j in 0..spec.level2_per_topic {
            let mean = sample_vmf(&topics[i].mean, spec.kappa_topic, &mut rng);
            topics.push(PlantedTopic {
                name: format!("t{i}_{j}"),
                parent: Some(i),
                terms: Vec::new(),
                mean,
                docs: Vec::new(),
            });
        }
    }

    let mut term_labels = BTreeMap::new();
    let mut samplers = Vec::with_capacity(topics.len());
    for (k, topic) in topics.iter_mut().enumerate() {
        let mut weights = Vec::with_capacity(spec.terms_per_topic);
        for w in 0..spec.terms_per_topic {
            let name = if w == 0 {
                topic.name.clone()
            } else {
                format!("{}_w{w}", topic.name)
            };
            let v = sample_vmf(&topic.mean, spec.kappa_topic, &mut rng);
            weights.push((spec.term_sharpness * dot(&v, &topic.mean)).exp());
            term_labels.insert(name.clone(), k);
            topic.terms.push(name);
        }
        samplers.push(WeightedIndex::new(&weights).map_err(|e| Error::Config(e.to_string()))?);
    }
    let all_terms: Vec<(usize, usize)> = topics
        .iter()
        .enumerate()
        .flat_map(|(k, t)| (0..t.terms.len()).map(move |w| (k, w)))
        .collect();

    let mut docs: Vec<(usize, Vec<String>)> = Vec::new();
    for leaf in spec.level1_topics..topics.len() {
        let parent = topics[leaf].parent.expect("level-2 topic");
        for _ in 0..spec.docs_per_topic {
            let tokens = (0..spec.doc_len)
                .map(|_| {
                    let u: f64 = rng.random();
                    let (k, w) = if u < spec.vocab_noise_frac {
                        all_terms[rng.random_range(0..all_terms.len())]
                    } else if u < spec.vocab_noise_frac + spec.parent_term_frac {
                        (parent, samplers[parent].sample(&mut rng))
                    } else {
                        (leaf, samplers[leaf].sample(&mut rng))
                    };
                    topics[k].terms[w].clone()
                })
                .collect();
            docs.push((leaf, tokens));
        }
    }
    docs.shuffle(&mut rng);

    let doc_labels: Vec<usize> = docs.iter().map(|(l, _)| *l).collect();
    for (d, &leaf) in doc_labels.iter().enumerate() {
        topics[leaf].docs.push(d);
        let p = topics[leaf].parent.expect("level-2 topic");
        topics[p].docs.push(d);
    }
    let corpus = Corpus::from_token_lists(docs.into_iter().map(|(_, t)| t))?;
    Ok(SyntheticCorpus {
        corpus,
        topics,
        doc_labels,
        term_labels,
    })
}

impl SyntheticCorpus {
    pub fn topic_index(&self, name: &str) -> Option<usize> {
        self.topics.iter().position(|t| t.name == name)
    }

    fn is_deleted(&self, k: usize, deleted: &BTreeSet<usize>) -> bool {
        deleted.contains(&k) || self.topics[k].parent.is_some_and(|p| deleted.contains(&p))
    }

    fn deleted_set(&self, deleted: &[&str]) -> Result<BTreeSet<usize>> {
        deleted
            .iter()
            .map(|n| self.topic_index(n).ok_or_else(|| Error::UnknownTopicName((*n).to_owned())))
            .collect()
    }

    /// Input hierarchy with `deleted` topics (and their descendants) left out.
    pub fn outline(&self, deleted: &[&str]) -> Result<String> {
        let del = self.deleted_set(deleted)?;
        let mut out = String::new();
        for (i, top) in self.topics.iter().enumerate().filter(|(_, t)| t.parent.is_none()) {
            if del.contains(&i) {
                continue;
            }
            out.push_str(&top.name);
            out.push('\n');
            for (k, child) in self.topics.iter().enumerate() {
                if child.parent == Some(i) && !del.contains(&k) {
                    out.push('\t');
                    out.push_str(&child.name);
                    out.push('\n');
                }
            }
        }
        Ok(out)
    }

    pub fn partial_taxonomy(&self, deleted: &[&str]) -> Result<Taxonomy> {
        Taxonomy::parse(&self.outline(deleted)?, &self.corpus)
    }

    pub fn ground_truth(&self, deleted: &[&str]) -> Result<GroundTruth> {
        let del = self.deleted_set(deleted)?;
        let topics = self
            .topics
            .iter()
            .map(|t| TruthTopic {
                name: t.name.clone(),
                parent: t.parent.map(|p| self.topics[p].name.clone()),
                terms: t.terms.clone(),
                docs: t.docs.clone(),
            })
            .collect();
        let novel_docs = self
            .doc_labels
            .iter()
            .enumerate()
            .filter(|&(_, &l)| self.is_deleted(l, &del))
            .map(|(d, _)| d)
            .collect();
        Ok(GroundTruth {
            topics,
            deleted: del.iter().map(|&k| self.topics[k].name.clone()).collect(),
            num_docs: self.doc_labels.len(),
            novel_docs,
        })
    }

    /// One document per line.
    pub fn corpus_text(&self) -> String {
        let vocab = self.corpus.vocab();
        let mut out = String::new();
        for doc in self.corpus.documents() {
            let line: Vec<&str> = doc.tokens.iter().map(|&t| vocab.term(t)).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthTopic {
    pub name: String,
    pub parent: Option<String>,
    pub terms: Vec<String>,
    pub docs: Vec<DocId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub topics: Vec<TruthTopic>,
    pub deleted: Vec<String>,
    pub num_docs: usize,
    /// Documents generated by a deleted topic.
    pub novel_docs: Vec<DocId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoveltyMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision, recall and F1 of "assigned to a novel cluster" against the
/// document labels (`true` = novel). Unassigned documents count as predicted
/// known. With nothing predicted and nothing novel all three are 1; with
/// nothing predicted but some novel documents all three are 0; with
/// predictions but no novel documents precision and F1 are 0 and recall 1.
pub fn novelty_detection_metrics(
    z_doc: &BTreeMap<DocId, usize>,
    novel_clusters: &BTreeSet<usize>,
    labels: &BTreeMap<DocId, bool>,
) -> NoveltyMetrics {
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (d, &novel) in labels {
        let predicted = z_doc.get(d).is_some_and(|s| novel_clusters.contains(s));
        match (predicted, novel) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            (false, false) => {}
        }
    }
    let pred = tp + fp;
    let truth = tp + fneg;
    if pred == 0 && truth == 0 {
        return NoveltyMetrics {
            precision: 1.0,
            recall: 1.0,
            f1: 1.0,
        };
    }
    let precision = if pred == 0 { 0.0 } else { tp as f64 / pred as f64 };
    let recall = if truth == 0 { 1.0 } else { tp as f64 / truth as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    NoveltyMetrics { precision, recall, f1 }
}

/// Share of the first ten entries of `found_ranked` that belong to `planted`.
pub fn cluster_recovery_score<S: AsRef<str>>(found_ranked: &[S], planted: &BTreeSet<String>) -> f64 {
    let top: Vec<&str> = found_ranked.iter().take(10).map(|s| s.as_ref()).collect();
    if top.is_empty() {
        return 0.0;
    }
    top.iter().filter(|t| planted.contains(**t)).count() as f64 / top.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeletedTopicScore {
    pub name: String,
    pub parent: String,
    /// Novel node with the best recovery anywhere in the tree.
    pub best_match: Option<String>,
    pub best_match_parent: Option<String>,
    pub best_recovery: f64,
    /// Best recovery among novel children of the true parent.
    pub recovery_under_parent: f64,
    pub novel_under_parent: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub novel_nodes: usize,
    pub deleted: Vec<DeletedTopicScore>,
    pub novelty: NoveltyMetrics,
}

/// Compares a completed taxonomy with the planted ground truth.
pub fn score_prediction(pred: &NodeJson, truth: &GroundTruth) -> ScoreReport {
    // (node, parent name)
    let mut nodes: Vec<(&NodeJson, &str)> = Vec::new();
    let mut stack: Vec<(&NodeJson, &str)> = pred.children.iter().rev().map(|c| (c, pred.name.as_str())).collect();
    while let Some((n, p)) = stack.pop() {
        nodes.push((n, p));
        stack.extend(n.children.iter().rev().map(|c| (c, n.name.as_str())));
    }
    let novel: Vec<(&NodeJson, &str)> = nodes.into_iter().filter(|(n, _)| n.is_novel).collect();

    let deleted = truth
        .deleted
        .iter()
        .filter_map(|name| truth.topics.iter().find(|t| &t.name == name))
        .map(|topic| {
            let planted: BTreeSet<String> = topic.terms.iter().cloned().collect();
            let parent = topic.parent.clone().unwrap_or_else(|| pred.name.clone());
            let mut best: Option<(&NodeJson, &str, f64)> = None;
            let mut under = 0.0f64;
            let mut count = 0;
            for &(n, p) in &novel {
                let r = cluster_recovery_score(&n.terms, &planted);
                if best.is_none_or(|(_, _, b)| r > b) {
                    best = Some((n, p, r));
                }
                if p == parent {
                    count += 1;
                    under = under.max(r);
                }
            }
            DeletedTopicScore {
                name: topic.name.clone(),
                parent,
                best_match: best.map(|(n, _, _)| n.name.clone()),
                best_match_parent: best.map(|(_, p, _)| p.to_owned()),
                best_recovery: best.map_or(0.0, |(_, _, r)| r),
                recovery_under_parent: under,
                novel_under_parent: count,
            }
        })
        .collect();

    // every document of a novel node is predicted novel
    let mut z_doc = BTreeMap::new();
    for (n, _) in &novel {
        for &d in &n.doc_ids {
            z_doc.insert(d, 1usize);
        }
    }
    let novel_docs: BTreeSet<DocId> = truth.novel_docs.iter().copied().collect();
    let labels: BTreeMap<DocId, bool> = (0..truth.num_docs).map(|d| (d, novel_docs.contains(&d))).collect();
    ScoreReport {
        novel_nodes: novel.len(),
        deleted,
        novelty: novelty_detection_metrics(&z_doc, &BTreeSet::from([1]), &labels),
    }
}
