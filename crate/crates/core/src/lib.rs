//! Weakly supervised data tooling for low-resource machine translation.
//!
//! The pipeline aligns monolingual word embeddings with a seed dictionary
//! ([`embeddings`]), induces a high-coverage projected lexicon by CSLS
//! retrieval, mines comparable sentence pairs from linked documents by
//! dictionary translation and Jaccard overlap ([`mining`]), and generates
//! code-switched corpora ([`codeswitch`]). [`retrieval_eval`] scores
//! retrieval against gold bitext and [`lingmetrics`] measures how close two
//! languages are.

pub mod codeswitch;
pub mod corpus;
pub mod embeddings;
mod error;
pub mod lexicon;
pub mod lingmetrics;
pub mod mining;
pub mod retrieval_eval;
pub mod synthetic;

pub use error::{Error, Result};
pub use lexicon::{Lexicon, Provenance};
