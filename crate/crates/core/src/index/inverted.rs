use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::text::{tokenize, TokenStream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 0.9, b: 0.4 }
    }
}

impl Bm25Params {
    pub fn validate(&self) -> Result<()> {
        if !(self.k1 > 0.0 && self.k1.is_finite()) {
            return Err(Error::InvalidConfig(format!("bm25 k1 must be > 0, got {}", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::InvalidConfig(format!("bm25 b must be in [0, 1], got {}", self.b)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    /// Position of the document in [`InvertedIndex::doc_ids`].
    pub doc: u32,
    pub tf: u32,
}

/// Document-level term statistics. Documents are numbered in ascending id
/// order, so posting lists sorted by number are also sorted by id.
#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    doc_ids: Vec<String>,
    doc_lengths: Vec<u32>,
    postings: BTreeMap<String, Vec<Posting>>,
    avg_doc_length: f64,
    tfidf_norms: Vec<f64>,
    lookup: HashMap<String, u32>,
}

/// Serializable part of an [`InvertedIndex`]; derived fields are rebuilt on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvertedIndexParts {
    pub doc_ids: Vec<String>,
    pub doc_lengths: Vec<u32>,
    pub postings: BTreeMap<String, Vec<Posting>>,
}

/// Keyword-model text of every document: title, abstract, body and captions.
pub fn build_inverted_index(corpus: &[Document]) -> Result<InvertedIndex> {
    InvertedIndex::from_texts(corpus.iter().map(|d| (d.id.clone(), d.full_text())))
}

impl InvertedIndex {
    pub fn from_texts<I>(docs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut docs: Vec<(String, String)> = docs.into_iter().collect();
        if docs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        docs.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = docs.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidConfig(format!("duplicate document id `{}`", w[0].0)));
        }

        let mut doc_lengths = Vec::with_capacity(docs.len());
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        for (num, (_, text)) in docs.iter().enumerate() {
            let tokens = tokenize(text);
            doc_lengths.push(tokens.len() as u32);
            let mut counts: BTreeMap<&str, u32> = BTreeMap::new();
            for t in tokens.iter() {
                *counts.entry(t).or_default() += 1;
            }
            for (term, tf) in counts {
                postings.entry(term.to_string()).or_default().push(Posting {
                    doc: num as u32,
                    tf,
                });
            }
        }
        Ok(Self::from_parts(InvertedIndexParts {
            doc_ids: docs.into_iter().map(|(id, _)| id).collect(),
            doc_lengths,
            postings,
        }))
    }

    pub fn from_parts(parts: InvertedIndexParts) -> Self {
        let InvertedIndexParts {
            doc_ids,
            doc_lengths,
            postings,
        } = parts;
        let m = doc_ids.len();
        let total: u64 = doc_lengths.iter().map(|&l| l as u64).sum();
        let avg_doc_length = if m == 0 { 0.0 } else { total as f64 / m as f64 };

        let mut sq = vec![0.0f64; m];
        for list in postings.values() {
            let idf = tfidf_idf(m, list.len());
            for p in list {
                let w = tf_weight(p.tf) * idf;
                sq[p.doc as usize] += w * w;
            }
        }
        let tfidf_norms = sq.into_iter().map(f64::sqrt).collect();
        let lookup = doc_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as u32))
            .collect();
        InvertedIndex {
            doc_ids,
            doc_lengths,
            postings,
            avg_doc_length,
            tfidf_norms,
            lookup,
        }
    }

    pub fn to_parts(&self) -> InvertedIndexParts {
        InvertedIndexParts {
            doc_ids: self.doc_ids.clone(),
            doc_lengths: self.doc_lengths.clone(),
            postings: self.postings.clone(),
        }
    }

    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn doc_number(&self, doc_id: &str) -> Option<u32> {
        self.lookup.get(doc_id).copied()
    }

    pub fn doc_length(&self, doc_id: &str) -> Option<u32> {
        self.doc_number(doc_id).map(|n| self.doc_lengths[n as usize])
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map_or(&[], Vec::as_slice)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&str, &[Posting])> {
        self.postings.iter().map(|(t, p)| (t.as_str(), p.as_slice()))
    }

    fn require(&self, doc_id: &str) -> Result<u32> {
        self.doc_number(doc_id)
            .ok_or_else(|| Error::UnknownDocument(doc_id.to_string()))
    }

    /// Cosine between log-tf · smoothed-idf vectors of query and document, in [0, 1].
    pub fn tfidf_score(&self, query: &TokenStream, doc_id: &str) -> Result<f64> {
        let doc = self.require(doc_id)?;
        Ok(self.tfidf_scores(query)[doc as usize])
    }

    /// TF-IDF cosine for every document, indexed by document number.
    pub fn tfidf_scores(&self, query: &TokenStream) -> Vec<f64> {
        let m = self.doc_count();
        let mut dots = vec![0.0f64; m];
        let mut query_sq = 0.0;
        for (term, qtf) in term_counts(query) {
            let list = self.postings(term);
            let idf = tfidf_idf(m, list.len());
            let qw = tf_weight(qtf) * idf;
            query_sq += qw * qw;
            for p in list {
                dots[p.doc as usize] += qw * tf_weight(p.tf) * idf;
            }
        }
        let query_norm = query_sq.sqrt();
        dots.iter()
            .zip(&self.tfidf_norms)
            .map(|(&dot, &norm)| {
                if dot <= 0.0 || norm == 0.0 || query_norm == 0.0 {
                    0.0
                } else {
                    (dot / (query_norm * norm)).min(1.0)
                }
            })
            .collect()
    }

    /// Okapi BM25 with bag semantics: a term repeated in the query counts once per occurrence.
    pub fn bm25_score(&self, params: &Bm25Params, query: &TokenStream, doc_id: &str) -> Result<f64> {
        let doc = self.require(doc_id)?;
        Ok(self.bm25_scores(params, query)[doc as usize])
    }

    /// BM25 for every document, indexed by document number.
    pub fn bm25_scores(&self, params: &Bm25Params, query: &TokenStream) -> Vec<f64> {
        let m = self.doc_count();
        let mut scores = vec![0.0f64; m];
        for (term, qtf) in term_counts(query) {
            let list = self.postings(term);
            if list.is_empty() {
                continue;
            }
            let idf = bm25_idf(m, list.len());
            for p in list {
                let tf = p.tf as f64;
                let len_ratio = if self.avg_doc_length > 0.0 {
                    self.doc_lengths[p.doc as usize] as f64 / self.avg_doc_length
                } else {
                    0.0
                };
                let denom = tf + params.k1 * (1.0 - params.b + params.b * len_ratio);
                scores[p.doc as usize] += qtf as f64 * idf * (tf * (params.k1 + 1.0)) / denom;
            }
        }
        scores
    }
}

/// Query terms with multiplicity, in first-seen order.
fn term_counts(query: &TokenStream) -> Vec<(&str, u32)> {
    let mut out: Vec<(&str, u32)> = Vec::new();
    for t in query.iter() {
        match out.iter_mut().find(|(term, _)| *term == t) {
            Some((_, c)) => *c += 1,
            None => out.push((t, 1)),
        }
    }
    out
}

fn tf_weight(tf: u32) -> f64 {
    if tf == 0 {
        0.0
    } else {
        1.0 + (tf as f64).ln()
    }
}

fn tfidf_idf(m: usize, df: usize) -> f64 {
    ((1.0 + m as f64) / (1.0 + df as f64)).ln() + 1.0
}

fn bm25_idf(m: usize, df: usize) -> f64 {
    (1.0 + (m as f64 - df as f64 + 0.5) / (df as f64 + 0.5)).ln()
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    fn index(docs: &[(&str, &str)]) -> InvertedIndex {
        InvertedIndex::from_texts(docs.iter().map(|(i, t)| (i.to_string(), t.to_string()))).unwrap()
    }

    #[test]
    fn two_doc_postings() {
        let idx = index(&[("d1", "a b"), ("d2", "a c")]);
        let ids = |term: &str| -> Vec<(String, u32)> {
            idx.postings(term)
                .iter()
                .map(|p| (idx.doc_ids()[p.doc as usize].clone(), p.tf))
                .collect()
        };
        assert_eq!(ids("a"), [("d1".to_string(), 1), ("d2".to_string(), 1)]);
        assert_eq!(ids("b"), [("d1".to_string(), 1)]);
        assert_eq!(ids("c"), [("d2".to_string(), 1)]);
        assert_eq!(idx.avg_doc_length(), 2.0);
    }

    #[test]
    fn empty_text_document() {
        let idx = index(&[("e", "")]);
        assert_eq!(idx.doc_length("e"), Some(0));
        assert_eq!(idx.terms().count(), 0);
        assert_eq!(idx.tfidf_score(&tokenize("x"), "e").unwrap(), 0.0);
    }

    #[test]
    fn empty_corpus_rejected() {
        assert!(matches!(
            InvertedIndex::from_texts(Vec::<(String, String)>::new()),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn rebuild_is_identical() {
        let docs = [("b", "x y y"), ("a", "y z")];
        assert_eq!(index(&docs), index(&docs));
    }

    #[test]
    fn tfidf_examples() {
        let idx = index(&[("d1", "a b"), ("d2", "a c")]);
        let q = tokenize("b");
        let s1 = idx.tfidf_score(&q, "d1").unwrap();
        // idf(a) = ln(3/3)+1 = 1, idf(b) = ln(3/2)+1; cos = idf_b / sqrt(1 + idf_b^2)
        let idf_b = (1.5f64).ln() + 1.0;
        assert_relative_eq!(s1, idf_b / (1.0 + idf_b * idf_b).sqrt(), epsilon = 1e-12);
        assert_eq!(idx.tfidf_score(&q, "d2").unwrap(), 0.0);

        let oov = tokenize("zzz qqq");
        assert!(idx.tfidf_scores(&oov).iter().all(|&s| s == 0.0));

        let single = index(&[("x", "virus"), ("y", "host cell")]);
        assert_relative_eq!(single.tfidf_score(&tokenize("virus"), "x").unwrap(), 1.0, epsilon = 1e-12);
        assert!(matches!(idx.tfidf_score(&q, "nope"), Err(Error::UnknownDocument(_))));
    }

    #[test]
    fn bm25_examples() {
        let idx = index(&[("d", "x")]);
        let p = Bm25Params::default();
        let s = idx.bm25_score(&p, &tokenize("x"), "d").unwrap();
        assert_relative_eq!(s, (4.0f64 / 3.0).ln(), epsilon = 1e-12);
        assert_relative_eq!(s, 0.28768, epsilon = 1e-5);
        let s2 = idx.bm25_score(&p, &tokenize("x x"), "d").unwrap();
        assert_relative_eq!(s2, 2.0 * s, epsilon = 1e-12);
        assert_eq!(idx.bm25_score(&p, &tokenize("y"), "d").unwrap(), 0.0);
        assert!(idx.bm25_score(&p, &tokenize("x"), "missing").is_err());
    }

    #[test]
    fn bm25_params_validation() {
        assert!(Bm25Params { k1: 0.0, b: 0.4 }.validate().is_err());
        assert!(Bm25Params { k1: 1.2, b: 1.5 }.validate().is_err());
        assert!(Bm25Params::default().validate().is_ok());
    }
}
