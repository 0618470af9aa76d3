//! Rank modulation: answer-match and summary-match factors scale the fused
//! retrieval score, `final = s_factor · q_factor · rrf`.

mod reference;
mod subprocess;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::fusion::RankedList;
use crate::index::{Embedder, EmbeddingVector};
use crate::store::SearchIndex;
use crate::text::{normalize_whitespace, token_count, truncate_tokens};

pub use reference::{assemble_summary_input, ReferenceExtractor, ReferenceSummarizer, SUMMARY_INPUT_TOKENS};
pub use subprocess::{serve_scorer, ScorerRequest, ScorerResponse, SubprocessScorer};

/// Summaries are kept strictly below this many tokens.
pub const SUMMARY_TOKEN_LIMIT: usize = 65;

/// Produces answer spans for a query from retrieved paragraphs.
pub trait AnswerExtractor: Send + Sync {
    fn extract_answers(&self, query: &str, paragraphs: &[&str]) -> Result<Vec<String>>;

    /// Whether concurrent calls are allowed; the pipeline serializes calls otherwise.
    fn concurrent_safe(&self) -> bool {
        true
    }
}

/// Produces one short summary of the retrieved paragraphs.
pub trait Summarizer: Send + Sync {
    fn summarize(&self, query: &str, paragraphs: &[&str]) -> Result<String>;

    fn concurrent_safe(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankConfig {
    /// Per contained answer span multiplier.
    pub answer_base: f64,
    /// Weight of the summary cosine: `S = (1 − w) + w · cos`.
    pub summary_weight: f64,
    pub max_spans: usize,
    /// Number of top retrieved documents whose paragraphs feed the extractor and summarizer.
    pub context_docs: usize,
    /// Paragraphs taken from each context document, best query match first.
    pub paragraphs_per_doc: usize,
    /// Only the first `n` retrieved documents get answer and summary factors;
    /// the rest keep neutral factors. `None` modulates the whole list.
    #[serde(default)]
    pub rerank_window: Option<usize>,
}

impl Default for RankConfig {
    fn default() -> Self {
        RankConfig {
            answer_base: 1.1,
            summary_weight: 0.5,
            max_spans: 10,
            context_docs: 10,
            paragraphs_per_doc: 2,
            rerank_window: None,
        }
    }
}

impl RankConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.answer_base >= 1.0 && self.answer_base.is_finite()) {
            return Err(Error::InvalidConfig(format!("answer base must be >= 1, got {}", self.answer_base)));
        }
        if !(self.summary_weight > 0.0 && self.summary_weight <= 0.5) {
            return Err(Error::InvalidConfig(format!(
                "summary weight must be in (0, 0.5], got {}",
                self.summary_weight
            )));
        }
        if self.max_spans == 0 || self.context_docs == 0 || self.paragraphs_per_doc == 0 {
            return Err(Error::InvalidConfig("span and context limits must be at least 1".into()));
        }
        Ok(())
    }
}

/// Deduplicated answer spans, at most `max_spans`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnswerSet {
    spans: Vec<String>,
    #[serde(skip)]
    normalized: Vec<String>,
}

impl AnswerSet {
    /// Trims spans, drops empty ones and repeats (compared case-folded with
    /// whitespace collapsed), keeps the first `max_spans`.
    pub fn new(spans: impl IntoIterator<Item = String>, max_spans: usize) -> Self {
        let mut seen = HashSet::new();
        let mut out = AnswerSet::default();
        for span in spans {
            if out.spans.len() == max_spans {
                break;
            }
            let span = span.trim().to_string();
            let norm = normalize_whitespace(&span);
            if norm.is_empty() || !seen.insert(norm.clone()) {
                continue;
            }
            out.spans.push(span);
            out.normalized.push(norm);
        }
        out
    }

    pub fn spans(&self) -> &[String] {
        &self.spans
    }

    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    /// Spans contained in `normalized_text` (output of [`normalize_whitespace`]).
    pub fn contained_in(&self, normalized_text: &str) -> usize {
        self.normalized
            .iter()
            .filter(|s| normalized_text.contains(s.as_str()))
            .count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub text: String,
    pub token_length: usize,
    pub embedding: EmbeddingVector,
}

impl Summary {
    /// Truncates `text` below [`SUMMARY_TOKEN_LIMIT`] tokens and embeds it.
    pub fn new(text: &str, embedder: &dyn Embedder) -> Self {
        let text = truncate_tokens(text.trim(), SUMMARY_TOKEN_LIMIT - 1).to_string();
        Summary {
            token_length: token_count(&text),
            embedding: embedder.embed(&text),
            text,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankScore {
    pub doc_id: String,
    pub rrf: f64,
    pub q_factor: f64,
    pub s_factor: f64,
    #[serde(rename = "final")]
    pub final_score: f64,
}

/// `base^contained`, built by repeated multiplication so that one more
/// contained span multiplies the factor by exactly `base`.
pub fn q_factor(contained: usize, base: f64) -> f64 {
    (0..contained).fold(1.0, |acc, _| acc * base)
}

/// Answer factor for a document: spans are matched against its full text,
/// case-folded with whitespace collapsed.
pub fn document_q_factor(answers: &AnswerSet, doc: &Document, base: f64) -> f64 {
    q_factor(answers.contained_in(&normalize_whitespace(&doc.full_text())), base)
}

/// `(1 − w) + w · max_cos`, clamped to [0, 1].
pub fn s_factor(max_cosine: f64, weight: f64) -> f64 {
    ((1.0 - weight) + weight * max_cosine.clamp(-1.0, 1.0)).clamp(0.0, 1.0)
}

/// Best cosine between the summary and any of the paragraph embeddings; 0
/// when there are none or the summary is empty.
pub fn best_summary_cosine<'a>(summary: &Summary, paragraphs: impl IntoIterator<Item = &'a EmbeddingVector>) -> f64 {
    if summary.token_length == 0 {
        return 0.0;
    }
    paragraphs
        .into_iter()
        .map(|p| p.cosine(&summary.embedding))
        .reduce(f64::max)
        .unwrap_or(0.0)
}

/// Modulates every retrieved document and re-sorts by the product, ties by
/// ascending id. Length is preserved.
pub fn rerank(
    retrieved: &RankedList,
    answers: &AnswerSet,
    summary: &Summary,
    index: &SearchIndex,
    cfg: &RankConfig,
) -> Result<Vec<RankScore>> {
    let window = cfg.rerank_window.unwrap_or(usize::MAX);
    let mut scores = retrieved
        .entries()
        .iter()
        .enumerate()
        .map(|(pos, (doc_id, rrf))| {
            let number = index
                .inverted()
                .doc_number(doc_id)
                .ok_or_else(|| Error::UnknownDocument(doc_id.clone()))?;
            let (q, s) = if pos < window {
                let doc = index.document(number);
                let range = index.paragraph_range(number);
                let cos = best_summary_cosine(summary, index.dense().entries()[range].iter().map(|(_, v)| v));
                (
                    document_q_factor(answers, doc, cfg.answer_base),
                    s_factor(cos, cfg.summary_weight),
                )
            } else {
                (1.0, s_factor(0.0, cfg.summary_weight))
            };
            Ok(RankScore {
                doc_id: doc_id.clone(),
                rrf: *rrf,
                q_factor: q,
                s_factor: s,
                final_score: s * q * rrf,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    sort_scores(&mut scores);
    Ok(scores)
}

pub fn sort_scores(scores: &mut [RankScore]) {
    scores.sort_by(|a, b| {
        b.final_score
            .total_cmp(&a.final_score)
            .then_with(|| a.doc_id.cmp(&b.doc_id))
    });
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;
    use crate::corpus::parse_corpus_str;
    use crate::index::{Bm25Params, HashEmbedder};

    #[test]
    fn q_factor_examples() {
        assert_eq!(q_factor(0, 1.1), 1.0);
        assert_relative_eq!(q_factor(2, 1.1), 1.21, epsilon = 1e-12);
        assert_relative_eq!(q_factor(5, 1.1), 1.61051, epsilon = 1e-12);
        for n in 0..20 {
            assert_eq!(q_factor(n + 1, 1.1), q_factor(n, 1.1) * 1.1);
        }
    }

    #[test]
    fn s_factor_examples() {
        assert_eq!(s_factor(1.0, 0.5), 1.0);
        assert_eq!(s_factor(-1.0, 0.5), 0.0);
        assert_relative_eq!(s_factor(0.2, 0.5), 0.6, epsilon = 1e-15);
        assert_eq!(s_factor(0.0, 0.5), 0.5);
        assert_eq!(s_factor(1.0 + 1e-9, 0.5), 1.0);
    }

    #[test]
    fn final_product_example() {
        let rrf = 2.0 / 61.0;
        let f = s_factor(0.2, 0.5) * q_factor(2, 1.1) * rrf;
        assert_relative_eq!(f, 0.0238033, epsilon = 1e-7);
        assert_relative_eq!(f, 0.0238053, epsilon = 1e-5);
    }

    #[test]
    fn answer_set_dedup_and_cap() {
        let a = AnswerSet::new(
            ["ACE2 is the receptor.", "ace2  is the RECEPTOR.", "", "other"].map(String::from),
            10,
        );
        assert_eq!(a.spans(), ["ACE2 is the receptor.", "other"]);
        let capped = AnswerSet::new((0..20).map(|i| format!("span {i}")), 10);
        assert_eq!(capped.len(), 10);
    }

    #[test]
    fn containment_is_normalized() {
        let docs = parse_corpus_str(
            r#"{"id":"d","title":"T","abstract":"We show that ACE2\n is   the receptor. More text."}"#,
        )
        .unwrap();
        let answers = AnswerSet::new(["ace2 is the receptor.".to_string(), "absent".into()], 10);
        assert_relative_eq!(document_q_factor(&answers, &docs[0], 1.1), 1.1);
    }

    #[test]
    fn summary_is_truncated() {
        let long: String = (0..100).map(|i| format!("w{i} ")).collect();
        let s = Summary::new(&long, &HashEmbedder::default());
        assert_eq!(s.token_length, 64);
        assert!((s.embedding.norm() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn uniform_modulation_keeps_order() {
        let docs = parse_corpus_str(
            r#"{"id":"a","title":"alpha text"}
{"id":"b","title":"beta text"}
{"id":"c","title":"gamma text"}"#,
        )
        .unwrap();
        let embedder = HashEmbedder::new(16, 1);
        let index = SearchIndex::build(docs, &embedder, Bm25Params::default()).unwrap();
        let retrieved = RankedList::from_ordered(vec![
            ("c".into(), 0.03),
            ("a".into(), 0.02),
            ("b".into(), 0.01),
        ])
        .unwrap();
        let summary = Summary {
            text: String::new(),
            token_length: 0,
            embedding: EmbeddingVector::null(16),
        };
        let cfg = RankConfig {
            rerank_window: Some(0),
            ..Default::default()
        };
        let out = rerank(&retrieved, &AnswerSet::default(), &summary, &index, &cfg).unwrap();
        assert_eq!(out.iter().map(|r| r.doc_id.as_str()).collect::<Vec<_>>(), ["c", "a", "b"]);
        for r in &out {
            assert_eq!(r.final_score, 0.5 * r.rrf);
        }

        let out = rerank(&retrieved, &AnswerSet::default(), &summary, &index, &RankConfig::default()).unwrap();
        assert_eq!(out.len(), 3);
        for r in &out {
            assert_eq!(r.final_score, r.s_factor * r.q_factor * r.rrf);
        }
    }

    #[test]
    fn unknown_document_is_an_error() {
        let docs = parse_corpus_str(r#"{"id":"a","title":"alpha"}"#).unwrap();
        let embedder = HashEmbedder::new(8, 1);
        let index = SearchIndex::build(docs, &embedder, Bm25Params::default()).unwrap();
        let retrieved = RankedList::from_ordered(vec![("zz".into(), 0.1)]).unwrap();
        let summary = Summary::new("alpha", &embedder);
        assert!(rerank(&retrieved, &AnswerSet::default(), &summary, &index, &RankConfig::default()).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(RankConfig::default().validate().is_ok());
        assert!(RankConfig { answer_base: 0.9, ..Default::default() }.validate().is_err());
        assert!(RankConfig { summary_weight: 0.7, ..Default::default() }.validate().is_err());
        assert!(RankConfig { max_spans: 0, ..Default::default() }.validate().is_err());
    }
}
