//! Pre-tokenized corpus, vocabulary and frequency statistics.
//!
//! Documents are one per line with whitespace-separated tokens. Multi-word
//! phrases are expected to be joined with underscores by an upstream phrase
//! miner; nothing here ever splits a token.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub type TermId = usize;
pub type DocId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: DocId,
    pub tokens: Vec<TermId>,
}

/// Dense bijection between term strings and ids, in first-occurrence order.
#[derive(Debug, Clone, Default)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, TermId>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, term: &str) -> TermId {
        if let Some(&id) = self.index.get(term) {
            return id;
        }
        let id = self.terms.len();
        self.terms.push(term.to_owned());
        self.index.insert(term.to_owned(), id);
        id
    }

    pub fn id(&self, term: &str) -> Option<TermId> {
        self.index.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> &str {
        &self.terms[id]
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (TermId, &str)> {
        self.terms.iter().enumerate().map(|(i, t)| (i, t.as_str()))
    }
}

#[derive(Debug, Clone)]
pub struct Corpus {
    documents: Vec<Document>,
    vocab: Vocabulary,
    integrity: Vec<f64>,
    /// term id -> ascending ids of the documents containing it
    postings: Vec<Vec<DocId>>,
}

impl Corpus {
    /// Builds a corpus from raw text, one document per line. Blank lines are
    /// skipped and do not consume a document id.
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_token_lists(text.lines().map(|l| l.split_whitespace()))
    }

    pub fn from_token_lists<I, D, S>(docs: I) -> Result<Self>
    where
        I: IntoIterator<Item = D>,
        D: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut vocab = Vocabulary::new();
        let mut documents = Vec::new();
        for doc in docs {
            let tokens: Vec<TermId> = doc.into_iter().map(|t| vocab.intern(t.as_ref())).collect();
            if tokens.is_empty() {
                continue;
            }
            documents.push(Document {
                id: documents.len(),
                tokens,
            });
        }
        if documents.is_empty() {
            return Err(Error::EmptyCorpus);
        }

        let mut postings = vec![Vec::new(); vocab.len()];
        for doc in &documents {
            for &t in &doc.tokens {
                let list: &mut Vec<DocId> = &mut postings[t];
                if list.last() != Some(&doc.id) {
                    list.push(doc.id);
                }
            }
        }
        let integrity = vec![1.0; vocab.len()];
        Ok(Self {
            documents,
            vocab,
            integrity,
            postings,
        })
    }

    /// Reads `term<TAB>score` lines. Terms missing from the file keep 1.0;
    /// terms not in the vocabulary are ignored.
    pub fn set_integrity_from_str(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (term, score) = line.rsplit_once('\t').ok_or_else(|| Error::MalformedIntegrity {
                line: lineno + 1,
                reason: "expected term<TAB>score".into(),
            })?;
            let score: f64 = score.trim().parse().map_err(|_| Error::MalformedIntegrity {
                line: lineno + 1,
                reason: format!("bad score {score:?}"),
            })?;
            if !(0.0..=1.0).contains(&score) {
                return Err(Error::MalformedIntegrity {
                    line: lineno + 1,
                    reason: format!("score {score} outside [0, 1]"),
                });
            }
            if let Some(id) = self.vocab.id(term.trim()) {
                self.integrity[id] = score;
            }
        }
        Ok(())
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn document(&self, id: DocId) -> &Document {
        &self.documents[id]
    }

    pub fn num_docs(&self) -> usize {
        self.documents.len()
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn integrity(&self, t: TermId) -> f64 {
        self.integrity[t]
    }

    pub fn postings(&self, t: TermId) -> &[DocId] {
        &self.postings[t]
    }

    pub fn all_doc_ids(&self) -> Vec<DocId> {
        (0..self.documents.len()).collect()
    }

    /// Total occurrences of every term over the whole corpus.
    pub fn term_frequencies(&self) -> Vec<u64> {
        let mut freq = vec![0u64; self.vocab.len()];
        for doc in &self.documents {
            for &t in &doc.tokens {
                freq[t] += 1;
            }
        }
        freq
    }
}

pub fn load_corpus(path: impl AsRef<Path>, integrity_path: Option<&Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut corpus = Corpus::parse(&text)?;
    if let Some(ip) = integrity_path {
        let text = fs::read_to_string(ip).map_err(|e| Error::io(ip, e))?;
        corpus.set_integrity_from_str(&text)?;
    }
    Ok(corpus)
}

/// Term frequency statistics restricted to a subset of documents.
#[derive(Debug, Clone)]
pub struct TermStats {
    docs: Vec<DocId>,
    counts: Vec<Vec<(TermId, u32)>>,
    doc_len: Vec<usize>,
    df: Vec<u32>,
    idf: Vec<f64>,
    avg_doc_len: f64,
}

impl TermStats {
    pub fn num_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn docs(&self) -> &[DocId] {
        &self.docs
    }

    pub fn avg_doc_len(&self) -> f64 {
        self.avg_doc_len
    }

    fn position(&self, d: DocId) -> Option<usize> {
        self.docs.binary_search(&d).ok()
    }

    pub fn contains_doc(&self, d: DocId) -> bool {
        self.position(d).is_some()
    }

    /// Sparse `(term, count)` pairs of a document, sorted by term id.
    pub fn doc_counts(&self, d: DocId) -> Option<&[(TermId, u32)]> {
        self.position(d).map(|i| self.counts[i].as_slice())
    }

    pub fn doc_len(&self, d: DocId) -> Option<usize> {
        self.position(d).map(|i| self.doc_len[i])
    }

    pub fn tf(&self, t: TermId, d: DocId) -> u32 {
        self.doc_counts(d)
            .and_then(|c| c.binary_search_by_key(&t, |&(term, _)| term).ok().map(|i| c[i].1))
            .unwrap_or(0)
    }

    pub fn df(&self, t: TermId) -> u32 {
        self.df.get(t).copied().unwrap_or(0)
    }

    /// `None` for terms that do not occur in the subset.
    pub fn idf(&self, t: TermId) -> Option<f64> {
        if self.df(t) == 0 {
            None
        } else {
            Some(self.idf[t])
        }
    }

    /// Same as [`TermStats::idf`] with absent terms mapped to zero weight.
    pub fn idf_or_zero(&self, t: TermId) -> f64 {
        self.idf(t).unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (DocId, &[(TermId, u32)], usize)> {
        self.docs
            .iter()
            .zip(&self.counts)
            .zip(&self.doc_len)
            .map(|((&d, c), &l)| (d, c.as_slice(), l))
    }
}

/// Statistics over `doc_subset`; duplicate ids are counted once. Unknown ids
/// are ignored.
pub fn compute_term_stats(corpus: &Corpus, doc_subset: &[DocId]) -> Result<TermStats> {
    let mut docs: Vec<DocId> = doc_subset
        .iter()
        .copied()
        .filter(|&d| d < corpus.num_docs())
        .collect();
    docs.sort_unstable();
    docs.dedup();
    if docs.is_empty() {
        return Err(Error::EmptyStats);
    }

    let mut df = vec![0u32; corpus.vocab_size()];
    let mut counts = Vec::with_capacity(docs.len());
    let mut doc_len = Vec::with_capacity(docs.len());
    for &d in &docs {
        let tokens = &corpus.document(d).tokens;
        let mut sorted = tokens.clone();
        sorted.sort_unstable();
        let mut c: Vec<(TermId, u32)> = Vec::new();
        for t in sorted {
            match c.last_mut() {
                Some((last, n)) if *last == t => *n += 1,
                _ => c.push((t, 1)),
            }
        }
        for &(t, _) in &c {
            df[t] += 1;
        }
        counts.push(c);
        doc_len.push(tokens.len());
    }

    let n = docs.len() as f64;
    let idf = df
        .iter()
        .map(|&f| if f == 0 { 0.0 } else { (n / f as f64).ln() })
        .collect();
    let avg_doc_len = doc_len.iter().sum::<usize>() as f64 / n;
    Ok(TermStats {
        docs,
        counts,
        doc_len,
        df,
        idf,
        avg_doc_len,
    })
}

/// Skip-gram `(target, context)` pairs within `window` positions, clipped at
/// the document boundaries.
pub fn context_pairs(tokens: &[TermId], window: usize) -> Vec<(TermId, TermId)> {
    let mut out = Vec::new();
    for (i, &t) in tokens.iter().enumerate() {
        let lo = i.saturating_sub(window);
        let hi = (i + window).min(tokens.len().saturating_sub(1));
        for j in lo..=hi {
            if j != i {
                out.push((t, tokens[j]));
            }
        }
    }
    out
}
