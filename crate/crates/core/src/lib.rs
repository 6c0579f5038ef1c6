//! Dynamic topic modelling and persistence analysis for dated, institution-tagged
//! text corpora.
//!
//! The crate covers the full pipeline:
//!
//! 1. [`corpus`] — tokenize raw documents, detect bigram phrases, build a
//!    vocabulary and assemble a sliced corpus.
//! 2. [`dtm`] — fit a dynamic topic model whose per-topic word distributions
//!    evolve as Gaussian chains over yearly slices, and classify documents
//!    into topic mixtures.
//! 3. [`selection`] — score topic coherence (NPMI / UMass) and pick the topic
//!    count by grid search.
//! 4. [`analysis`] — local/global topic taxonomy, per-institution and
//!    per-period aggregation, exemplar retrieval.
//! 5. [`econ`] — AR(1) persistence regressions with Newey-West standard
//!    errors, plus a VAR(1) robustness check.
//! 6. [`cli`] — subcommands gluing the stages together through versioned
//!    archives with run manifests.

pub mod analysis;
pub mod archive;
pub mod calendar;
pub mod cli;
pub mod corpus;
pub mod dtm;
pub mod econ;
pub mod error;
pub mod manifest;
pub mod report;
pub mod selection;

pub use error::{Error, ErrorClass, Result};

/// Tool version recorded in archives and manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
