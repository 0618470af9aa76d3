//! Deterministic stand-ins for a neural reader and summarizer.

use std::collections::HashSet;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::index::Embedder;
use crate::rank::{AnswerExtractor, AnswerSet, Summarizer, SUMMARY_TOKEN_LIMIT};
use crate::text::{split_sentences, token_count, tokenize, truncate_tokens};

/// Token budget of the assembled summarizer input.
pub const SUMMARY_INPUT_TOKENS: usize = 512;
const SENTENCES_PER_PARAGRAPH: usize = 4;

/// Scores every sentence by the idf-weighted count of distinct query terms it
/// contains (idf over the sentences seen) and returns the best `max_spans`,
/// ties by first occurrence.
#[derive(Debug, Clone, Copy)]
pub struct ReferenceExtractor {
    pub max_spans: usize,
}

impl Default for ReferenceExtractor {
    fn default() -> Self {
        ReferenceExtractor { max_spans: 10 }
    }
}

impl AnswerExtractor for ReferenceExtractor {
    fn extract_answers(&self, query: &str, paragraphs: &[&str]) -> Result<Vec<String>> {
        let query_terms: Vec<String> = {
            let mut seen = HashSet::new();
            tokenize(query)
                .iter()
                .filter(|t| seen.insert(t.to_string()))
                .map(str::to_string)
                .collect()
        };
        let sentences: Vec<(&str, HashSet<String>)> = paragraphs
            .iter()
            .flat_map(|p| split_sentences(p))
            .map(|s| (s, tokenize(s).tokens().iter().cloned().collect()))
            .collect();
        let n = sentences.len() as f64;
        let idf: Vec<f64> = query_terms
            .iter()
            .map(|t| {
                let sf = sentences.iter().filter(|(_, terms)| terms.contains(t)).count() as f64;
                ((1.0 + n) / (1.0 + sf)).ln() + 1.0
            })
            .collect();

        let mut scored: Vec<(usize, f64)> = sentences
            .iter()
            .enumerate()
            .map(|(i, (_, terms))| {
                let score = query_terms
                    .iter()
                    .zip(&idf)
                    .filter(|(t, _)| terms.contains(*t))
                    .map(|(_, w)| w)
                    .sum();
                (i, score)
            })
            .filter(|&(_, s)| s > 0.0)
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

        let set = AnswerSet::new(
            scored.into_iter().map(|(i, _)| sentences[i].0.to_string()),
            self.max_spans,
        );
        Ok(set.spans().to_vec())
    }
}

/// Concatenates the first four sentences of each paragraph, in order, until
/// [`SUMMARY_INPUT_TOKENS`] is reached; the sentence crossing the budget is cut.
pub fn assemble_summary_input(paragraphs: &[&str]) -> Vec<String> {
    let mut out = Vec::new();
    let mut used = 0;
    for paragraph in paragraphs {
        for sentence in split_sentences(paragraph).into_iter().take(SENTENCES_PER_PARAGRAPH) {
            let remaining = SUMMARY_INPUT_TOKENS - used;
            let tokens = token_count(sentence);
            if tokens <= remaining {
                out.push(sentence.to_string());
                used += tokens;
            } else {
                out.push(truncate_tokens(sentence, remaining).to_string());
                return out;
            }
            if used == SUMMARY_INPUT_TOKENS {
                return out;
            }
        }
    }
    out
}

/// Extractive centroid summarizer: input sentences are ranked by cosine to the
/// mean of their embeddings and taken greedily until the next one would bring
/// the summary to [`SUMMARY_TOKEN_LIMIT`] tokens. Output keeps input order.
#[derive(Clone)]
pub struct ReferenceSummarizer {
    embedder: Arc<dyn Embedder>,
}

impl ReferenceSummarizer {
    pub fn new(embedder: Arc<dyn Embedder>) -> Self {
        ReferenceSummarizer { embedder }
    }
}

impl std::fmt::Debug for ReferenceSummarizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ReferenceSummarizer")
            .field("embedder", &self.embedder.id())
            .finish()
    }
}

impl Summarizer for ReferenceSummarizer {
    fn summarize(&self, _query: &str, paragraphs: &[&str]) -> Result<String> {
        let sentences = assemble_summary_input(paragraphs);
        if sentences.is_empty() {
            return Err(Error::NothingToSummarize);
        }
        let embeddings: Vec<_> = sentences.iter().map(|s| self.embedder.embed(s)).collect();
        let dim = self.embedder.dimension();
        let mut centroid = vec![0.0f64; dim];
        for e in &embeddings {
            for (c, &v) in centroid.iter_mut().zip(e.values()) {
                *c += v as f64;
            }
        }
        // Scores only need to be comparable, so the centroid is left unnormalized.
        let mut order: Vec<(usize, f64)> = embeddings
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let dot: f64 = e.values().iter().zip(&centroid).map(|(&a, &b)| a as f64 * b).sum();
                (i, dot)
            })
            .collect();
        order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

        let best = order[0].0;
        let mut chosen = Vec::new();
        let mut total = 0;
        for (i, _) in order {
            let tokens = token_count(&sentences[i]);
            if total + tokens >= SUMMARY_TOKEN_LIMIT {
                break;
            }
            total += tokens;
            chosen.push(i);
        }
        if chosen.is_empty() {
            // The best sentence alone is too long: keep its head.
            return Ok(truncate_tokens(&sentences[best], SUMMARY_TOKEN_LIMIT - 1).to_string());
        }
        chosen.sort_unstable();
        Ok(chosen
            .into_iter()
            .map(|i| sentences[i].as_str())
            .collect::<Vec<_>>()
            .join(" "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::HashEmbedder;

    fn summarizer() -> ReferenceSummarizer {
        ReferenceSummarizer::new(Arc::new(HashEmbedder::default()))
    }

    #[test]
    fn receptor_sentence_first() {
        // Two sentences: "ace2" and "receptor" each occur in one of them, so
        // both idfs are ln(3/2)+1 and only the first sentence scores.
        let spans = ReferenceExtractor::default()
            .extract_answers("ace2 receptor", &["ACE2 is the receptor. Masks help."])
            .unwrap();
        assert_eq!(spans, ["ACE2 is the receptor."]);
    }

    #[test]
    fn rarer_terms_rank_higher() {
        let p = "Virus enters cells. Virus uses ACE2. Virus spreads.";
        let spans = ReferenceExtractor::default().extract_answers("virus ace2", &[p]).unwrap();
        assert_eq!(spans[0], "Virus uses ACE2.");
        assert_eq!(spans.len(), 3);
        assert_eq!(spans[1], "Virus enters cells.");
    }

    #[test]
    fn no_overlap_and_dedup() {
        let e = ReferenceExtractor::default();
        assert!(e.extract_answers("zebra", &["Nothing here."]).unwrap().is_empty());
        let spans = e
            .extract_answers("spike", &["The spike binds.", "the  Spike binds."])
            .unwrap();
        assert_eq!(spans.len(), 1);
    }

    #[test]
    fn deterministic_outputs() {
        let paras = ["Alpha beta gamma. Delta epsilon.", "Beta again here. Zeta eta theta."];
        let e = ReferenceExtractor::default();
        assert_eq!(e.extract_answers("beta zeta", &paras).unwrap(), e.extract_answers("beta zeta", &paras).unwrap());
        let s = summarizer();
        assert_eq!(s.summarize("q", &paras).unwrap(), s.summarize("q", &paras).unwrap());
    }

    #[test]
    fn input_assembly_takes_four_sentences() {
        let p = "One a. Two b. Three c. Four d. Five e.";
        let input = assemble_summary_input(&[p, "Next x."]);
        assert_eq!(input, ["One a.", "Two b.", "Three c.", "Four d.", "Next x."]);
    }

    #[test]
    fn input_assembly_stops_at_budget() {
        let sentence: String = (0..100).map(|i| format!("t{i} ")).collect::<String>().trim().to_string() + ".";
        let paragraph = vec![sentence.as_str(); 4].join(" ");
        let paragraphs = vec![paragraph.as_str(); 3];
        let input = assemble_summary_input(&paragraphs);
        let total: usize = input.iter().map(|s| token_count(s)).sum();
        assert_eq!(total, SUMMARY_INPUT_TOKENS);
        assert_eq!(input.len(), 6);
    }

    #[test]
    fn single_sentence_is_the_summary() {
        let text = "Remdesivir shortened the recovery time in hospitalized adults with covid.";
        assert_eq!(token_count(text), 10);
        assert_eq!(summarizer().summarize("q", &[text]).unwrap(), text);
    }

    #[test]
    fn summary_stays_short() {
        let long: String = (0..80).map(|i| format!("w{i} ")).collect();
        let out = summarizer().summarize("q", &[long.as_str()]).unwrap();
        assert_eq!(token_count(&out), SUMMARY_TOKEN_LIMIT - 1);

        let many: Vec<String> = (0..30)
            .map(|i| format!("Sentence {i} talks about spike proteins and receptors in cells."))
            .collect();
        let refs: Vec<&str> = many.iter().map(String::as_str).collect();
        let out = summarizer().summarize("q", &refs).unwrap();
        assert!(token_count(&out) < SUMMARY_TOKEN_LIMIT);
        assert!(token_count(&out) > 0);
    }

    #[test]
    fn empty_input_errors() {
        assert!(matches!(summarizer().summarize("q", &[]), Err(Error::NothingToSummarize)));
        assert!(matches!(summarizer().summarize("q", &["  ..."]), Err(Error::NothingToSummarize)));
    }
}
