//! Keyword (TF-IDF, BM25) and dense paragraph indexes.

mod dense;
mod embed;
mod inverted;

pub use dense::DenseIndex;
pub use embed::{Embedder, EmbeddingVector, HashEmbedder, DEFAULT_DIMENSION, DEFAULT_EMBEDDER_SEED};
pub use inverted::{build_inverted_index, Bm25Params, InvertedIndex, InvertedIndexParts, Posting};
