//! Retrieval: linear dense + TF-IDF combination, then reciprocal rank fusion
//! with the BM25 ranking.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{Bm25Params, Embedder, EmbeddingVector};
use crate::store::SearchIndex;
use crate::text::tokenize;

/// How the TF-IDF term enters the linear combination.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TfidfScaling {
    /// Divide by the best TF-IDF score for the query, mapping into [0, 1].
    #[default]
    Max,
    /// Use cosine TF-IDF scores unchanged.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    /// Weight of the dense term in the linear combination.
    pub mu: f64,
    pub rrf_k: f64,
    /// Candidates taken from each scorer, and the cap on the fused list.
    pub pool_size: usize,
    #[serde(default)]
    pub tfidf_scaling: TfidfScaling,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            mu: 0.7,
            rrf_k: 60.0,
            pool_size: 1000,
            tfidf_scaling: TfidfScaling::Max,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.mu) {
            return Err(Error::InvalidConfig(format!("mu must be in [0, 1], got {}", self.mu)));
        }
        if !(self.rrf_k > 0.0 && self.rrf_k.is_finite()) {
            return Err(Error::InvalidConfig(format!("rrf k must be > 0, got {}", self.rrf_k)));
        }
        if self.pool_size == 0 {
            return Err(Error::InvalidConfig("pool size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Documents ordered by non-increasing score with unique ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RankedList {
    entries: Vec<(String, f64)>,
    rank_of: HashMap<String, usize>,
}

impl RankedList {
    /// Sorts by score descending, ties by ascending id. Later duplicates are dropped.
    pub fn from_scores(mut scores: Vec<(String, f64)>) -> Self {
        scores.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut rank_of = HashMap::with_capacity(scores.len());
        let mut entries = Vec::with_capacity(scores.len());
        for (id, score) in scores {
            if rank_of.contains_key(&id) {
                continue;
            }
            rank_of.insert(id.clone(), entries.len() + 1);
            entries.push((id, score));
        }
        RankedList { entries, rank_of }
    }

    /// Accepts an already ordered list; rejects increasing scores or repeated ids.
    pub fn from_ordered(entries: Vec<(String, f64)>) -> Result<Self> {
        if let Some(w) = entries.windows(2).find(|w| w[1].1 > w[0].1) {
            return Err(Error::InvalidConfig(format!(
                "ranked list scores increase at `{}`",
                w[1].0
            )));
        }
        let mut rank_of = HashMap::with_capacity(entries.len());
        for (i, (id, _)) in entries.iter().enumerate() {
            if rank_of.insert(id.clone(), i + 1).is_some() {
                return Err(Error::InvalidConfig(format!("duplicate document `{id}` in ranked list")));
            }
        }
        Ok(RankedList { entries, rank_of })
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// 1-based rank.
    pub fn rank_of(&self, doc_id: &str) -> Option<usize> {
        self.rank_of.get(doc_id).copied()
    }

    pub fn score_of(&self, doc_id: &str) -> Option<f64> {
        self.rank_of(doc_id).map(|r| self.entries[r - 1].1)
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(id, _)| id.as_str())
    }

    pub fn truncate(&mut self, len: usize) {
        for (id, _) in self.entries.drain(len.min(self.entries.len())..) {
            self.rank_of.remove(&id);
        }
    }
}

/// `mu · max_cos + (1 − mu) · tfidf`.
pub fn combine_scores(max_cosine: f64, tfidf: f64, mu: f64) -> f64 {
    mu * max_cosine + (1.0 - mu) * tfidf
}

/// Sums `1/(k + rank)` over both lists; a document absent from a list gets no
/// term from it. Sorted by fused score, ties by ascending id.
pub fn rrf_fuse(list_c: &RankedList, list_b: &RankedList, k: f64) -> RankedList {
    let ids: BTreeSet<&str> = list_c.doc_ids().chain(list_b.doc_ids()).collect();
    let term = |list: &RankedList, id: &str| list.rank_of(id).map_or(0.0, |r| 1.0 / (k + r as f64));
    RankedList::from_scores(
        ids.into_iter()
            .map(|id| (id.to_string(), term(list_c, id) + term(list_b, id)))
            .collect(),
    )
}

/// Everything scored for one query; rankings are built from it on demand.
#[derive(Debug, Clone)]
pub struct QueryScores {
    pub query_embedding: EmbeddingVector,
    /// Cosine of every dense entry, aligned with the index's paragraphs.
    pub paragraph_cosines: Vec<f64>,
    /// Best paragraph cosine per document number, `None` for documents with no paragraphs.
    pub max_cosine: Vec<Option<f64>>,
    /// Entry index of the best paragraph per document number.
    pub best_paragraph: Vec<Option<usize>>,
    pub tfidf: Vec<f64>,
    pub bm25: Vec<f64>,
}

impl QueryScores {
    pub fn compute(index: &SearchIndex, embedder: &dyn Embedder, bm25: &Bm25Params, query: &str) -> Result<Self> {
        let tokens = tokenize(query);
        if tokens.is_empty() {
            return Err(Error::EmptyQuery);
        }
        let query_embedding = embedder.embed(query);
        let paragraph_cosines = index.dense().cosines(&query_embedding)?;
        let m = index.documents().len();
        let mut max_cosine: Vec<Option<f64>> = vec![None; m];
        let mut best_paragraph = vec![None; m];
        for (entry, (&doc, &cos)) in index.entry_docs().iter().zip(&paragraph_cosines).enumerate() {
            let slot = &mut max_cosine[doc as usize];
            // Strict comparison keeps the lowest ordinal on ties.
            if slot.is_none_or(|best| cos > best) {
                *slot = Some(cos);
                best_paragraph[doc as usize] = Some(entry);
            }
        }
        Ok(QueryScores {
            query_embedding,
            paragraph_cosines,
            max_cosine,
            best_paragraph,
            tfidf: index.inverted().tfidf_scores(&tokens),
            bm25: index.inverted().bm25_scores(bm25, &tokens),
        })
    }

    /// TF-IDF term as it enters the combination.
    pub fn scaled_tfidf(&self, scaling: TfidfScaling) -> Vec<f64> {
        match scaling {
            TfidfScaling::Raw => self.tfidf.clone(),
            TfidfScaling::Max => {
                let max = self.tfidf.iter().copied().fold(0.0, f64::max);
                if max > 0.0 {
                    self.tfidf.iter().map(|t| t / max).collect()
                } else {
                    vec![0.0; self.tfidf.len()]
                }
            }
        }
    }
}

/// Document numbers of the top `n` by `score`, ties by ascending number
/// (= ascending id).
fn top_numbers(scores: impl Iterator<Item = (usize, f64)>, n: usize) -> Vec<usize> {
    let mut v: Vec<(usize, f64)> = scores.collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    v.truncate(n);
    v.into_iter().map(|(i, _)| i).collect()
}

#[derive(Debug, Clone)]
pub struct Retrieval {
    pub scores: QueryScores,
    /// Ranking by the linear combination over the candidate pool.
    pub combined: RankedList,
    /// BM25 ranking of matching documents.
    pub bm25: RankedList,
    /// Reciprocal rank fusion of the two, capped at the pool size.
    pub fused: RankedList,
}

/// Dense candidates (best paragraph per document) and TF-IDF candidates are
/// pooled, scored by [`combine_scores`] and fused with the BM25 ranking.
pub fn retrieve(
    index: &SearchIndex,
    embedder: &dyn Embedder,
    bm25: &Bm25Params,
    query: &str,
    cfg: &FusionConfig,
) -> Result<Retrieval> {
    cfg.validate()?;
    let scores = QueryScores::compute(index, embedder, bm25, query)?;
    let ids = index.inverted().doc_ids();

    let dense_top = top_numbers(
        scores
            .max_cosine
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.map(|c| (i, c))),
        cfg.pool_size,
    );
    let tfidf_top = top_numbers(
        scores.tfidf.iter().copied().enumerate().filter(|&(_, t)| t > 0.0),
        cfg.pool_size,
    );
    let pool: BTreeSet<usize> = dense_top.into_iter().chain(tfidf_top).collect();
    let tfidf = scores.scaled_tfidf(cfg.tfidf_scaling);
    let combined = RankedList::from_scores(
        pool.into_iter()
            .map(|i| {
                let cos = scores.max_cosine[i].unwrap_or(0.0);
                (ids[i].clone(), combine_scores(cos, tfidf[i], cfg.mu))
            })
            .collect(),
    );

    let bm25_top = top_numbers(
        scores.bm25.iter().copied().enumerate().filter(|&(_, b)| b > 0.0),
        cfg.pool_size,
    );
    let bm25_list = RankedList::from_scores(
        bm25_top
            .into_iter()
            .map(|i| (ids[i].clone(), scores.bm25[i]))
            .collect(),
    );

    let mut fused = rrf_fuse(&combined, &bm25_list, cfg.rrf_k);
    fused.truncate(cfg.pool_size);
    Ok(Retrieval {
        scores,
        combined,
        bm25: bm25_list,
        fused,
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    fn list(ids: &[&str]) -> RankedList {
        RankedList::from_ordered(
            ids.iter()
                .enumerate()
                .map(|(i, id)| (id.to_string(), (ids.len() - i) as f64))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn combine_examples() {
        assert_relative_eq!(combine_scores(0.5, 1.0, 0.7), 0.65, epsilon = 1e-12);
        assert_eq!(combine_scores(0.37, 0.9, 1.0), 0.37);
        assert_eq!(combine_scores(0.37, 0.9, 0.0), 0.9);
    }

    #[test]
    fn rrf_examples() {
        let fused = rrf_fuse(&list(&["a", "b"]), &list(&["a", "c"]), 60.0);
        assert_relative_eq!(fused.score_of("a").unwrap(), 2.0 / 61.0, epsilon = 1e-12);
        assert_eq!(fused.rank_of("a"), Some(1));

        let only_c = rrf_fuse(&list(&["x"]), &list(&[]), 60.0);
        assert_relative_eq!(only_c.score_of("x").unwrap(), 1.0 / 61.0, epsilon = 1e-15);

        let same = list(&["q", "p", "r"]);
        let fused = rrf_fuse(&same, &same, 60.0);
        assert_eq!(fused.doc_ids().collect::<Vec<_>>(), ["q", "p", "r"]);
    }

    #[test]
    fn rrf_ties_by_id() {
        // b is 1st in one list, a is 1st in the other: equal fused scores.
        let fused = rrf_fuse(&list(&["b"]), &list(&["a"]), 60.0);
        assert_eq!(fused.doc_ids().collect::<Vec<_>>(), ["a", "b"]);
    }

    #[test]
    fn ranked_list_validation_and_truncate() {
        assert!(RankedList::from_ordered(vec![("a".into(), 1.0), ("b".into(), 2.0)]).is_err());
        assert!(RankedList::from_ordered(vec![("a".into(), 1.0), ("a".into(), 0.5)]).is_err());
        let mut l = list(&["a", "b", "c"]);
        l.truncate(2);
        assert_eq!(l.len(), 2);
        assert_eq!(l.rank_of("c"), None);
        assert_eq!(l.rank_of("b"), Some(2));
    }

    #[test]
    fn config_validation() {
        assert!(FusionConfig::default().validate().is_ok());
        assert!(FusionConfig { mu: 1.2, ..Default::default() }.validate().is_err());
        assert!(FusionConfig { rrf_k: 0.0, ..Default::default() }.validate().is_err());
        assert!(FusionConfig { pool_size: 0, ..Default::default() }.validate().is_err());
    }
}
