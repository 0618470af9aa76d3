//! Hybrid retrieval over scientific papers: paragraph-level dense search
//! combined with TF-IDF, fused with BM25 by reciprocal rank, then modulated by
//! answer and summary matches. Also ships TREC-style evaluation and citation
//! graph training tuples.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod fusion;
pub mod graph;
pub mod index;
pub mod pipeline;
pub mod rank;
pub mod store;
pub mod synth;
pub mod text;

pub use error::{Error, Result};
