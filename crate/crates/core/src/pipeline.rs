//! Top-down completion of a partial taxonomy.
//!
//! Nodes are expanded breadth-first. Each expanded node gets a local
//! embedding trained on its (retrieval-augmented) document set, its terms
//! are clustered into known and novel sub-topics, and the resulting children
//! are inserted and queued.

use std::collections::{BTreeMap, VecDeque};
use std::fs;
use std::io::Write;
use std::path::Path;
use std::rc::Rc;

use crate::clustering::{cluster_node, CandidateSummary, ClusterConfig, NodeInput};
use crate::corpus::{Corpus, TermId};
use crate::embedding::{retrieve_local_corpus, train_node_embedding, EmbedConfig, EmbeddingSpace, SubtopicSeed};
use crate::error::{Error, Result};
use crate::taxonomy::{ChildUpdate, NodeId, Taxonomy};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub embed: EmbedConfig,
    pub cluster: ClusterConfig,
    /// `None` uses the depth of the input hierarchy (at least 1).
    pub max_depth: Option<usize>,
    pub min_terms: usize,
    pub min_docs: usize,
    pub top_k_output: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            embed: EmbedConfig::default(),
            cluster: ClusterConfig::default(),
            max_depth: None,
            min_terms: 50,
            min_docs: 20,
            top_k_output: 20,
            seed: 0,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value {value:?} for key {key}")))
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.embed.validate()?;
        self.cluster.validate()?;
        if self.max_depth == Some(0) {
            return Err(Error::Config("max_depth must be at least 1".into()));
        }
        if self.min_terms < self.cluster.k_star_max {
            return Err(Error::Config(format!(
                "min_terms ({}) must be at least kmax_novel ({})",
                self.min_terms, self.cluster.k_star_max
            )));
        }
        Ok(())
    }

    /// Applies one `key=value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "dim" => self.embed.dim = parse_value(key, value)?,
            "window" => self.embed.window = parse_value(key, value)?,
            "margin" => self.embed.margin = parse_value(key, value)?,
            "negatives" => self.embed.negatives = parse_value(key, value)?,
            "epochs" => self.embed.epochs = parse_value(key, value)?,
            "lr" => self.embed.lr = parse_value(key, value)?,
            "M" => self.embed.neighbors = parse_value(key, value)?,
            "workers" => self.embed.workers = parse_value(key, value)?,
            "kappa_max" => {
                let k: f64 = parse_value(key, value)?;
                self.embed.kappa_max = k;
                self.cluster.kappa_max = k;
            }
            "beta1" | "beta2" => {
                let i = if key == "beta1" { 0 } else { 1 };
                let b = parse_value(key, value)?;
                let betas = &mut self.cluster.beta_per_level;
                while betas.len() <= i {
                    let last = *betas.last().unwrap_or(&b);
                    betas.push(last);
                }
                betas[i] = b;
            }
            "temperature" => self.cluster.temperature = parse_value(key, value)?,
            "tau_sig" => self.cluster.tau_sig = parse_value(key, value)?,
            "kmax_novel" => self.cluster.k_star_max = parse_value(key, value)?,
            "kmin_novel" => self.cluster.k_star_min = parse_value(key, value)?,
            "min_novel_anchors" => self.cluster.min_novel_anchors = parse_value(key, value)?,
            "centroid_relevance" => self.cluster.centroid_relevance = parse_value(key, value)?,
            "novel_cluster_check" => self.cluster.novel_cluster_check = parse_value(key, value)?,
            "bm25_k1" => self.cluster.bm25_k1 = parse_value(key, value)?,
            "bm25_b" => self.cluster.bm25_b = parse_value(key, value)?,
            "max_depth" => self.max_depth = Some(parse_value(key, value)?),
            "min_terms" => self.min_terms = parse_value(key, value)?,
            "min_docs" => self.min_docs = parse_value(key, value)?,
            "top_k" => self.top_k_output = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            _ => return Err(Error::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Applies a flat `key=value` file; blank lines and `#` comments are
    /// ignored.
    pub fn apply_overrides(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", i + 1)))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }
}

/// What happened at one expanded node.
#[derive(Debug, Clone)]
pub struct NodeReport {
    pub node: NodeId,
    pub depth: usize,
    pub n_known: usize,
    pub k_star: usize,
    pub candidates: Vec<CandidateSummary>,
    /// Novelty score of every clustered term; empty with fewer than two
    /// known sub-topics.
    pub novelty: BTreeMap<TermId, f64>,
    pub threshold: Option<f64>,
    pub local_docs: usize,
    pub novel_children: Vec<NodeId>,
}

#[derive(Debug, Clone)]
pub struct Completion {
    pub taxonomy: Taxonomy,
    pub reports: Vec<NodeReport>,
}

fn node_seed(seed: u64, node: NodeId) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ (node as u64).wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn complete_taxonomy(corpus: &Corpus, partial: &Taxonomy, cfg: &PipelineConfig) -> Result<Completion> {
    complete_taxonomy_with_dump(corpus, partial, cfg, None)
}

/// Like [`complete_taxonomy`], additionally writing each node's embedding
/// and term table into `dump_dir`.
pub fn complete_taxonomy_with_dump(
    corpus: &Corpus,
    partial: &Taxonomy,
    cfg: &PipelineConfig,
    dump_dir: Option<&Path>,
) -> Result<Completion> {
    cfg.validate()?;
    let max_depth = cfg.max_depth.unwrap_or_else(|| partial.depth().max(1));
    if partial.depth() > max_depth {
        return Err(Error::Config(format!(
            "input hierarchy depth {} exceeds max_depth {max_depth}",
            partial.depth()
        )));
    }
    if let Some(dir) = dump_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }

    let mut tax = partial.clone();
    let root = tax.root();
    {
        let freq = corpus.term_frequencies();
        let node = tax.node_mut(root);
        node.terms = freq
            .iter()
            .enumerate()
            .filter(|&(_, &f)| f > 0)
            .map(|(t, &f)| (t, f as f64))
            .collect();
        node.docs = corpus.all_doc_ids().into_iter().collect();
    }

    let mut reports = Vec::new();
    let mut queue: VecDeque<(NodeId, Option<Rc<EmbeddingSpace>>)> = VecDeque::from([(root, None)]);
    while let Some((id, parent_space)) = queue.pop_front() {
        let depth = tax.node_depth(id);
        let node = tax.node(id);
        let children = node.children.clone();
        let expand = depth < max_depth && node.terms.len() >= cfg.min_terms && node.docs.len() >= cfg.min_docs;
        if !expand {
            log::debug!("node {id} not expanded ({} terms, {} docs)", node.terms.len(), node.docs.len());
            queue.extend(children.into_iter().map(|c| (c, None)));
            continue;
        }

        let terms: Vec<TermId> = node.terms.keys().copied().collect();
        let docs: Vec<_> = node.docs.iter().copied().collect();
        let center = node.center_term;
        let seeds: Vec<SubtopicSeed> = tax
            .subtree_keywords(id)?
            .into_iter()
            .map(|(child, set)| {
                let c = tax.node(child).center_term.expect("non-root child");
                SubtopicSeed {
                    id: child,
                    center: c,
                    keywords: set.into_iter().filter(|&t| t != c).collect(),
                }
            })
            .collect();

        let local_docs = match center {
            Some(c) => retrieve_local_corpus(c, &docs, parent_space.as_deref(), corpus, cfg.embed.neighbors),
            None => docs.clone(),
        };
        let seed = node_seed(cfg.seed, id);
        let embed_cfg = EmbedConfig {
            seed,
            ..cfg.embed.clone()
        };
        let space = train_node_embedding(corpus, &local_docs, &terms, &seeds, &embed_cfg)?;

        // the node's own name is not a candidate for its children
        let pool: Vec<TermId> = terms.iter().copied().filter(|&t| Some(t) != center).collect();
        let cluster_cfg = ClusterConfig {
            seed,
            ..cfg.cluster.clone()
        };
        let input = NodeInput {
            corpus,
            space: &space,
            terms: &pool,
            docs: &docs,
            depth,
        };
        let result = cluster_node(&input, &cluster_cfg)?;

        if let Some(dir) = dump_dir {
            dump_node(dir, id, corpus, &space, &result)?;
        }

        let mut updates: Vec<ChildUpdate> = result
            .known_updates
            .iter()
            .map(|k| ChildUpdate {
                center_term: k.center,
                terms: k.anchors.clone(),
                docs: k.docs.clone(),
                is_novel: false,
                vmf: k.vmf.clone(),
            })
            .collect();
        let mut novel: Vec<_> = result.novel_clusters.iter().collect();
        novel.sort_by(|a, b| b.anchors.len().cmp(&a.anchors.len()).then(a.center.cmp(&b.center)));
        updates.extend(novel.into_iter().map(|n| ChildUpdate {
            center_term: n.center,
            terms: n.anchors.clone(),
            docs: n.docs.clone(),
            is_novel: true,
            vmf: n.vmf.clone(),
        }));
        let n_known = result.n_known();
        let ids = tax.insert_children(id, updates)?;
        let novel_children = ids[n_known..].to_vec();
        log::info!(
            "node {id} depth {depth}: {} known, {} novel children, K*={}",
            n_known,
            novel_children.len(),
            result.k_star
        );

        reports.push(NodeReport {
            node: id,
            depth,
            n_known,
            k_star: result.k_star,
            candidates: result.candidates.clone(),
            threshold: (n_known >= 2).then(|| {
                crate::clustering::novelty_threshold(n_known, cfg.cluster.beta(depth)).expect("validated beta")
            }),
            novelty: result.novelty,
            local_docs: local_docs.len(),
            novel_children,
        });

        let space = Rc::new(space);
        queue.extend(tax.node(id).children.iter().map(|&c| (c, Some(Rc::clone(&space)))));
    }
    Ok(Completion { taxonomy: tax, reports })
}

fn dump_node(
    dir: &Path,
    id: NodeId,
    corpus: &Corpus,
    space: &EmbeddingSpace,
    result: &crate::clustering::SubtopicClustering,
) -> Result<()> {
    let emb_path = dir.join(format!("node_{id}_embedding.txt"));
    let f = fs::File::create(&emb_path).map_err(|e| Error::io(&emb_path, e))?;
    space.write_text(corpus, std::io::BufWriter::new(f))?;

    let csv_path = dir.join(format!("node_{id}_terms.csv"));
    let f = fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    let mut w = std::io::BufWriter::new(f);
    writeln!(w, "term,novelty,significance,cluster,novel")?;
    for (&t, &sig) in &result.significance {
        let nov = result.novelty.get(&t).map(|v| v.to_string()).unwrap_or_default();
        let cluster = result.z_term.get(&t).map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{nov},{sig},{cluster},{}",
            corpus.vocab().term(t),
            result.novel_terms.contains(&t)
        )?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides() {
        let mut c = PipelineConfig::default();
        c.apply_overrides("dim=16\n# comment\nbeta2 = 2.5\nM=7\nkmax_novel=3\n").unwrap();
        assert_eq!(c.embed.dim, 16);
        assert_eq!(c.cluster.beta_per_level, vec![1.5, 2.5]);
        assert_eq!(c.embed.neighbors, 7);
        assert_eq!(c.cluster.k_star_max, 3);
        assert!(c.apply_overrides("nope=1").is_err());
        assert!(c.apply_overrides("dim=abc").is_err());
        assert!(c.apply_overrides("dim").is_err());
    }

    #[test]
    fn min_terms_must_cover_kmax() {
        let c = PipelineConfig {
            min_terms: 3,
            ..PipelineConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn node_seeds_differ() {
        assert_ne!(node_seed(0, 0), node_seed(0, 1));
        assert_eq!(node_seed(5, 3), node_seed(5, 3));
    }
}
