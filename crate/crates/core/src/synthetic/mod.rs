//! Seeded generators for documents, edits and labeled revision corpora.
//! Used by the test suites and by the `generate` CLI subcommand.

pub mod documents;
pub mod corpus;

pub use corpus::{generate_corpus, SyntheticConfig, SyntheticCorpus, SyntheticRevision};
