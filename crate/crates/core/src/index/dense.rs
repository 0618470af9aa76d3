use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::corpus::ParagraphKey;
use crate::error::{Error, Result};
use crate::index::EmbeddingVector;

/// Exhaustive cosine index over paragraph embeddings, kept sorted by key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseIndex {
    dimension: usize,
    entries: Vec<(ParagraphKey, EmbeddingVector)>,
}

impl DenseIndex {
    pub fn new(dimension: usize) -> Self {
        DenseIndex {
            dimension,
            entries: Vec::new(),
        }
    }

    pub fn from_entries(dimension: usize, mut entries: Vec<(ParagraphKey, EmbeddingVector)>) -> Result<Self> {
        if let Some((_, v)) = entries.iter().find(|(_, v)| v.dimension() != dimension) {
            return Err(Error::DimensionMismatch {
                expected: dimension,
                actual: v.dimension(),
            });
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidConfig(format!("duplicate paragraph key {}", w[0].0)));
        }
        Ok(DenseIndex { dimension, entries })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(ParagraphKey, EmbeddingVector)] {
        &self.entries
    }

    pub fn get(&self, key: &ParagraphKey) -> Option<&EmbeddingVector> {
        self.entries
            .binary_search_by(|(k, _)| k.cmp(key))
            .ok()
            .map(|i| &self.entries[i].1)
    }

    /// All entries belonging to `doc_id`, in ordinal order.
    pub fn document_entries(&self, doc_id: &str) -> &[(ParagraphKey, EmbeddingVector)] {
        let start = self.entries.partition_point(|(k, _)| k.doc_id.as_str() < doc_id);
        let end = start + self.entries[start..].partition_point(|(k, _)| k.doc_id == doc_id);
        &self.entries[start..end]
    }

    fn check(&self, query: &EmbeddingVector) -> Result<()> {
        if query.dimension() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                actual: query.dimension(),
            });
        }
        Ok(())
    }

    /// Cosine of `query` against every entry, aligned with [`Self::entries`].
    pub fn cosines(&self, query: &EmbeddingVector) -> Result<Vec<f64>> {
        self.check(query)?;
        Ok(self.entries.iter().map(|(_, v)| v.cosine(query)).collect())
    }

    /// Top `top_k` entries by descending cosine, ties by ascending key.
    pub fn nn_search(&self, query: &EmbeddingVector, top_k: usize) -> Result<Vec<(ParagraphKey, f64)>> {
        if top_k == 0 {
            return Err(Error::InvalidConfig("top_k must be at least 1".into()));
        }
        let cosines = self.cosines(query)?;
        let mut order: Vec<usize> = (0..self.entries.len()).collect();
        let cmp = |a: &usize, b: &usize| -> Ordering {
            cosines[*b]
                .total_cmp(&cosines[*a])
                .then_with(|| self.entries[*a].0.cmp(&self.entries[*b].0))
        };
        if top_k < order.len() {
            order.select_nth_unstable_by(top_k - 1, cmp);
            order.truncate(top_k);
        }
        order.sort_unstable_by(cmp);
        Ok(order
            .into_iter()
            .map(|i| (self.entries[i].0.clone(), cosines[i]))
            .collect())
    }
}
