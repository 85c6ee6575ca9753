//! Completion of partial topic taxonomies from a text corpus.
//!
//! The crate expands a hierarchy of topic names top-down: every node gets a
//! locally trained spherical embedding, its terms are split into those that
//! belong to the given sub-topics and novel ones, and the novel terms are
//! clustered into new sub-topics.

pub mod clustering;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod pipeline;
pub mod taxonomy;
pub mod vmf;

pub use corpus::{load_corpus, Corpus, DocId, TermId};
pub use error::{Error, Result};
pub use pipeline::{complete_taxonomy, Completion, PipelineConfig};
pub use taxonomy::{NodeJson, Taxonomy};
