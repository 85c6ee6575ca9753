//! Topic tree: parsing of the partial input hierarchy, sub-tree keyword sets,
//! child insertion and JSON output.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, DocId, TermId};
use crate::error::{Error, Result};
use crate::vmf::VmfParams;

pub type NodeId = usize;

#[derive(Debug, Clone)]
pub struct TopicNode {
    pub id: NodeId,
    /// `None` only for the root.
    pub center_term: Option<TermId>,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    /// Member terms with their ranking score (significance, or corpus
    /// frequency for the root).
    pub terms: BTreeMap<TermId, f64>,
    pub docs: BTreeSet<DocId>,
    pub is_novel: bool,
    pub vmf: Option<VmfParams>,
}

impl TopicNode {
    fn new(id: NodeId, center_term: Option<TermId>, parent: Option<NodeId>, is_novel: bool) -> Self {
        let mut terms = BTreeMap::new();
        if let Some(c) = center_term {
            terms.insert(c, 0.0);
        }
        Self {
            id,
            center_term,
            parent,
            children: Vec::new(),
            terms,
            docs: BTreeSet::new(),
            is_novel,
            vmf: None,
        }
    }

    /// Terms ordered by descending score, ties by ascending term id.
    pub fn ranked_terms(&self) -> Vec<TermId> {
        let mut v: Vec<(TermId, f64)> = self.terms.iter().map(|(&t, &s)| (t, s)).collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        v.into_iter().map(|(t, _)| t).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Taxonomy {
    nodes: Vec<TopicNode>,
    root: NodeId,
}

/// Result of one sub-topic for [`Taxonomy::insert_children`].
#[derive(Debug, Clone)]
pub struct ChildUpdate {
    pub center_term: TermId,
    pub terms: BTreeMap<TermId, f64>,
    pub docs: BTreeSet<DocId>,
    pub is_novel: bool,
    pub vmf: Option<VmfParams>,
}

/// Lower-cases and joins whitespace runs with underscores.
pub fn normalize_topic_name(name: &str) -> String {
    name.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join("_")
}

impl Taxonomy {
    /// A taxonomy consisting of a lone root.
    pub fn new() -> Self {
        Self {
            nodes: vec![TopicNode::new(0, None, None, false)],
            root: 0,
        }
    }

    /// Parses a tab-indented outline, one topic per line, with an implicit
    /// root above the zero-indent lines.
    pub fn parse(text: &str, corpus: &Corpus) -> Result<Self> {
        let mut tax = Self::new();
        // stack[d] = most recent node at outline depth d (root at depth 0)
        let mut stack = vec![tax.root];
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let indent = raw.chars().take_while(|&c| c == '\t').count();
            let depth = indent + 1;
            if depth > stack.len() {
                return Err(Error::MalformedHierarchy {
                    line,
                    reason: format!("indentation jumps from {} to {} tabs", stack.len() - 1, indent),
                });
            }
            let name = normalize_topic_name(&raw[indent..]);
            let term = corpus
                .vocab()
                .id(&name)
                .ok_or_else(|| Error::UnknownTopicName(name.clone()))?;
            stack.truncate(depth);
            let parent = stack[depth - 1];
            let id = tax.push_node(parent, term, false);
            stack.push(id);
        }
        Ok(tax)
    }

    fn push_node(&mut self, parent: NodeId, center: TermId, is_novel: bool) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(TopicNode::new(id, Some(center), Some(parent), is_novel));
        self.nodes[parent].children.push(id);
        id
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &TopicNode {
        &self.nodes[id]
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut TopicNode {
        &mut self.nodes[id]
    }

    pub fn get(&self, id: NodeId) -> Result<&TopicNode> {
        self.nodes.get(id).ok_or(Error::UnknownNode(id))
    }

    pub fn nodes(&self) -> &[TopicNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_depth(&self, mut id: NodeId) -> usize {
        let mut depth = 0;
        while let Some(p) = self.nodes[id].parent {
            depth += 1;
            id = p;
        }
        depth
    }

    /// Depth of the deepest node; 0 for a lone root.
    pub fn depth(&self) -> usize {
        (0..self.nodes.len()).map(|i| self.node_depth(i)).max().unwrap_or(0)
    }

    /// Pre-order traversal of the sub-tree rooted at `id`.
    pub fn subtree(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.nodes[n].children.iter().rev());
        }
        out
    }

    /// For each child of `id`, the center terms of every node in the
    /// sub-tree rooted at that child, in child order.
    pub fn subtree_keywords(&self, id: NodeId) -> Result<Vec<(NodeId, BTreeSet<TermId>)>> {
        let node = self.get(id)?;
        let mut owner: HashMap<TermId, NodeId> = HashMap::new();
        let mut out = Vec::with_capacity(node.children.len());
        for &child in &node.children {
            let mut set = BTreeSet::new();
            for n in self.subtree(child) {
                if let Some(t) = self.nodes[n].center_term {
                    if let Some(&prev) = owner.get(&t) {
                        if prev != child {
                            return Err(Error::AmbiguousKeyword(format!("term#{t}")));
                        }
                    }
                    owner.insert(t, child);
                    set.insert(t);
                }
            }
            out.push((child, set));
        }
        Ok(out)
    }

    /// Updates known children in place (matched by center term) and appends
    /// novel ones. Returns the node ids in the order of `results`.
    pub fn insert_children(&mut self, parent: NodeId, results: Vec<ChildUpdate>) -> Result<Vec<NodeId>> {
        self.get(parent)?;
        let mut by_center: HashMap<TermId, NodeId> = self.nodes[parent]
            .children
            .iter()
            .filter_map(|&c| self.nodes[c].center_term.map(|t| (t, c)))
            .collect();

        // validate everything before mutating
        let mut seen = BTreeSet::new();
        for r in &results {
            if !seen.insert(r.center_term) {
                return Err(Error::CenterTermCollision(format!("term#{}", r.center_term)));
            }
            let exists = by_center.contains_key(&r.center_term);
            if r.is_novel && exists {
                return Err(Error::CenterTermCollision(format!("term#{}", r.center_term)));
            }
            if !r.is_novel && !exists {
                return Err(Error::Config(format!(
                    "known sub-topic term#{} is not a child of node {parent}",
                    r.center_term
                )));
            }
        }

        let mut ids = Vec::with_capacity(results.len());
        for r in results {
            let id = if r.is_novel {
                let id = self.push_node(parent, r.center_term, true);
                by_center.insert(r.center_term, id);
                id
            } else {
                by_center[&r.center_term]
            };
            let node = &mut self.nodes[id];
            node.terms = r.terms;
            node.terms.entry(r.center_term).or_insert(0.0);
            node.docs = r.docs;
            node.vmf = r.vmf;
            ids.push(id);
        }
        Ok(ids)
    }

    /// Tab-indented outline of the topic names, the inverse of
    /// [`Taxonomy::parse`].
    pub fn to_outline(&self, corpus: &Corpus) -> String {
        let mut out = String::new();
        for n in self.subtree(self.root).into_iter().skip(1) {
            let depth = self.node_depth(n);
            let name = corpus.vocab().term(self.nodes[n].center_term.expect("non-root"));
            out.push_str(&"\t".repeat(depth - 1));
            out.push_str(name);
            out.push('\n');
        }
        out
    }

    pub fn to_json_tree(&self, corpus: &Corpus, top_k: usize) -> NodeJson {
        self.node_json(self.root, corpus, top_k)
    }

    fn node_json(&self, id: NodeId, corpus: &Corpus, top_k: usize) -> NodeJson {
        let node = &self.nodes[id];
        let name = match node.center_term {
            Some(t) => corpus.vocab().term(t).to_owned(),
            None => "root".to_owned(),
        };
        NodeJson {
            name,
            is_novel: node.is_novel,
            terms: node
                .ranked_terms()
                .into_iter()
                .take(top_k)
                .map(|t| corpus.vocab().term(t).to_owned())
                .collect(),
            doc_ids: node.docs.iter().copied().collect(),
            kappa: node.vmf.as_ref().map(|v| v.kappa),
            children: node
                .children
                .iter()
                .map(|&c| self.node_json(c, corpus, top_k))
                .collect(),
        }
    }

    /// Pretty-printed JSON with `top_k` ranked terms per node.
    pub fn serialize(&self, corpus: &Corpus, top_k: usize) -> Result<String> {
        let mut s = serde_json::to_string_pretty(&self.to_json_tree(corpus, top_k))?;
        s.push('\n');
        Ok(s)
    }
}

impl Default for Taxonomy {
    fn default() -> Self {
        Self::new()
    }
}

/// On-disk form of one node of a completed taxonomy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeJson {
    pub name: String,
    pub is_novel: bool,
    pub terms: Vec<String>,
    pub doc_ids: Vec<DocId>,
    pub kappa: Option<f64>,
    pub children: Vec<NodeJson>,
}

impl NodeJson {
    /// Pre-order iterator over this node and its descendants with depth.
    pub fn walk(&self) -> Vec<(usize, &NodeJson)> {
        let mut out = Vec::new();
        let mut stack = vec![(0usize, self)];
        while let Some((d, n)) = stack.pop() {
            out.push((d, n));
            stack.extend(n.children.iter().rev().map(|c| (d + 1, c)));
        }
        out
    }

    /// Outline of the names below this node, parsable by [`Taxonomy::parse`].
    pub fn to_outline(&self) -> String {
        let mut out = String::new();
        for (d, n) in self.walk().into_iter().skip(1) {
            out.push_str(&"\t".repeat(d - 1));
            out.push_str(&n.name);
            out.push('\n');
        }
        out
    }
}
