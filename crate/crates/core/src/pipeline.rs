//! End-to-end query pipeline over a loaded snapshot: retrieve, extract
//! answers, summarize, re-rank.

use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard};

use serde::{Deserialize, Serialize};

use crate::corpus::{Document, Topic};
use crate::error::{Error, Result};
use crate::eval::{RunFile, MAX_RUN_DEPTH};
use crate::fusion::{retrieve, FusionConfig, Retrieval};
use crate::index::{Bm25Params, Embedder, HashEmbedder, DEFAULT_DIMENSION, DEFAULT_EMBEDDER_SEED};
use crate::rank::{
    rerank, AnswerExtractor, AnswerSet, RankConfig, RankScore, ReferenceExtractor, ReferenceSummarizer, Summarizer,
    Summary,
};
use crate::store::SearchIndex;
use crate::text::normalize_whitespace;

const SNIPPET_CHARS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    #[serde(default)]
    pub fusion: FusionConfig,
    #[serde(default)]
    pub bm25: Bm25Params,
    #[serde(default)]
    pub rank: RankConfig,
    pub embedder_id: String,
    pub dimension: usize,
    pub run_tag: String,
    #[serde(default)]
    pub corpus_path: Option<PathBuf>,
    #[serde(default)]
    pub snapshot_path: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            fusion: FusionConfig::default(),
            bm25: Bm25Params::default(),
            rank: RankConfig::default(),
            embedder_id: HashEmbedder::new(DEFAULT_DIMENSION, DEFAULT_EMBEDDER_SEED).id(),
            dimension: DEFAULT_DIMENSION,
            run_tag: "scisearch".into(),
            corpus_path: None,
            snapshot_path: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.fusion.validate()?;
        self.bm25.validate()?;
        self.rank.validate()?;
        if self.dimension == 0 {
            return Err(Error::InvalidConfig("dimension must be positive".into()));
        }
        if self.run_tag.is_empty() || self.run_tag.contains(char::is_whitespace) {
            return Err(Error::InvalidConfig(format!("invalid run tag `{}`", self.run_tag)));
        }
        self.embedder()?;
        Ok(())
    }

    /// The embedder named by `embedder_id`.
    pub fn embedder(&self) -> Result<HashEmbedder> {
        HashEmbedder::from_id(&self.embedder_id, self.dimension)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown embedder `{}`", self.embedder_id)))
    }
}

/// Which topic fields make up the query text.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopicField {
    #[default]
    Query,
    Question,
    Narrative,
    /// Query, question and narrative joined by spaces.
    Concat,
}

impl TopicField {
    pub fn text(self, topic: &Topic) -> String {
        match self {
            TopicField::Query => topic.query.clone(),
            TopicField::Question => topic.question.clone(),
            TopicField::Narrative => topic.narrative.clone(),
            TopicField::Concat => [&topic.query, &topic.question, &topic.narrative]
                .into_iter()
                .filter(|s| !s.trim().is_empty())
                .map(String::as_str)
                .collect::<Vec<_>>()
                .join(" "),
        }
    }
}

impl std::str::FromStr for TopicField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "query" => Ok(TopicField::Query),
            "question" => Ok(TopicField::Question),
            "narrative" => Ok(TopicField::Narrative),
            "concat" => Ok(TopicField::Concat),
            other => Err(Error::InvalidConfig(format!("unknown topic field `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub doc_id: String,
    pub title: String,
    pub snippet: String,
    #[serde(rename = "final")]
    pub final_score: f64,
    pub rrf: f64,
    pub q_factor: f64,
    pub s_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    pub query: String,
    pub results: Vec<SearchHit>,
    pub summary: String,
    pub answers: Vec<String>,
}

/// Full outcome of one query before truncation.
#[derive(Debug, Clone)]
pub struct Ranking {
    pub retrieval: Retrieval,
    pub answers: AnswerSet,
    pub summary: Summary,
    pub scores: Vec<RankScore>,
}

pub struct Engine {
    index: SearchIndex,
    embedder: Arc<dyn Embedder>,
    extractor: Arc<dyn AnswerExtractor>,
    summarizer: Arc<dyn Summarizer>,
    config: PipelineConfig,
    scorer_lock: Mutex<()>,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine")
            .field("embedder", &self.embedder.id())
            .field("documents", &self.index.documents().len())
            .field("config", &self.config)
            .finish()
    }
}

impl Engine {
    /// Engine with the reference scorers. The embedder is taken from the
    /// snapshot manifest; `config.embedder_id` and `dimension` are overwritten
    /// to match it.
    pub fn new(index: SearchIndex, mut config: PipelineConfig) -> Result<Self> {
        let manifest = index.manifest();
        config.embedder_id = manifest.embedder_id.clone();
        config.dimension = manifest.dimension;
        config.bm25 = manifest.bm25;
        config.validate()?;
        let embedder: Arc<dyn Embedder> = Arc::new(config.embedder()?);
        Ok(Engine {
            extractor: Arc::new(ReferenceExtractor {
                max_spans: config.rank.max_spans,
            }),
            summarizer: Arc::new(ReferenceSummarizer::new(embedder.clone())),
            embedder,
            index,
            config,
            scorer_lock: Mutex::new(()),
        })
    }

    pub fn with_scorers(mut self, extractor: Arc<dyn AnswerExtractor>, summarizer: Arc<dyn Summarizer>) -> Self {
        self.extractor = extractor;
        self.summarizer = summarizer;
        self
    }

    pub fn index(&self) -> &SearchIndex {
        &self.index
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn embedder(&self) -> &dyn Embedder {
        self.embedder.as_ref()
    }

    fn lock_if(&self, needed: bool) -> Option<MutexGuard<'_, ()>> {
        needed.then(|| self.scorer_lock.lock().unwrap_or_else(|e| e.into_inner()))
    }

    /// Paragraph texts handed to the scorers: for each of the top
    /// `context_docs` fused documents, its best `paragraphs_per_doc`
    /// paragraphs by query cosine.
    fn context(&self, retrieval: &Retrieval) -> Vec<&str> {
        let cfg = &self.config.rank;
        let mut out = Vec::new();
        for (doc_id, _) in retrieval.fused.entries().iter().take(cfg.context_docs) {
            let Some(number) = self.index.inverted().doc_number(doc_id) else {
                continue;
            };
            let mut entries: Vec<usize> = self.index.paragraph_range(number).collect();
            let cos = &retrieval.scores.paragraph_cosines;
            entries.sort_by(|&a, &b| cos[b].total_cmp(&cos[a]).then(a.cmp(&b)));
            out.extend(
                entries
                    .into_iter()
                    .take(cfg.paragraphs_per_doc)
                    .map(|e| self.index.paragraphs()[e].text.as_str()),
            );
        }
        out
    }

    pub fn rank_with(&self, query: &str, fusion: &FusionConfig) -> Result<Ranking> {
        let retrieval = retrieve(&self.index, self.embedder.as_ref(), &self.config.bm25, query, fusion)?;
        let context = self.context(&retrieval);
        let (answers, summary_text) = if context.is_empty() {
            (AnswerSet::new(Vec::new(), self.config.rank.max_spans), String::new())
        } else {
            let spans = {
                let _guard = self.lock_if(!self.extractor.concurrent_safe());
                self.extractor.extract_answers(query, &context)?
            };
            let text = {
                let _guard = self.lock_if(!self.summarizer.concurrent_safe());
                self.summarizer.summarize(query, &context)?
            };
            (AnswerSet::new(spans, self.config.rank.max_spans), text)
        };
        let summary = Summary::new(&summary_text, self.embedder.as_ref());
        let scores = rerank(&retrieval.fused, &answers, &summary, &self.index, &self.config.rank)?;
        Ok(Ranking {
            retrieval,
            answers,
            summary,
            scores,
        })
    }

    pub fn search(&self, query: &str, n: usize) -> Result<SearchResponse> {
        self.search_with(query, n, &self.config.fusion)
    }

    pub fn search_with(&self, query: &str, n: usize, fusion: &FusionConfig) -> Result<SearchResponse> {
        let ranking = self.rank_with(query, fusion)?;
        let results = ranking
            .scores
            .iter()
            .take(n)
            .map(|s| {
                let number = self
                    .index
                    .inverted()
                    .doc_number(&s.doc_id)
                    .ok_or_else(|| Error::UnknownDocument(s.doc_id.clone()))?;
                let doc = self.index.document(number);
                Ok(SearchHit {
                    doc_id: s.doc_id.clone(),
                    title: doc.title.clone(),
                    snippet: self.snippet(doc, number, &ranking),
                    final_score: s.final_score,
                    rrf: s.rrf,
                    q_factor: s.q_factor,
                    s_factor: s.s_factor,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SearchResponse {
            query: query.to_string(),
            results,
            summary: ranking.summary.text,
            answers: ranking.answers.spans().to_vec(),
        })
    }

    /// First answer span found in the document, else the start of its best
    /// paragraph.
    fn snippet(&self, doc: &Document, number: u32, ranking: &Ranking) -> String {
        let text = normalize_whitespace(&doc.full_text());
        if let Some(span) = ranking
            .answers
            .spans()
            .iter()
            .find(|s| text.contains(&normalize_whitespace(s)))
        {
            return span.clone();
        }
        let paragraph = ranking.retrieval.scores.best_paragraph[number as usize]
            .map(|e| self.index.paragraphs()[e].text.as_str())
            .unwrap_or(&doc.title);
        paragraph.chars().take(SNIPPET_CHARS).collect()
    }

    /// One run block per topic (ascending id), up to [`MAX_RUN_DEPTH`]
    /// documents each, scored by the final modulated score.
    pub fn run_topics(&self, topics: &[Topic], field: TopicField) -> Result<RunFile> {
        let mut sorted: Vec<&Topic> = topics.iter().collect();
        sorted.sort_by_key(|t| t.id);
        let mut run = RunFile::new();
        for topic in sorted {
            let ranking = self.rank_with(&field.text(topic), &self.config.fusion)?;
            let ranked: Vec<(String, f64)> = ranking
                .scores
                .into_iter()
                .take(MAX_RUN_DEPTH)
                .map(|s| (s.doc_id, s.final_score))
                .collect();
            run.push_topic(topic.id, &ranked, &self.config.run_tag)?;
        }
        run.validate()?;
        Ok(run)
    }
}

/// Builds a snapshot index from documents with the configured embedder.
pub fn build_index(documents: Vec<Document>, config: &PipelineConfig) -> Result<SearchIndex> {
    config.validate()?;
    SearchIndex::build(documents, &config.embedder()?, config.bm25)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, SynthConfig};

    fn engine() -> (Engine, crate::synth::SyntheticCorpus) {
        let corpus = generate(&SynthConfig {
            documents: 40,
            topics: 4,
            ..Default::default()
        });
        let index = build_index(corpus.documents.clone(), &PipelineConfig::default()).unwrap();
        (Engine::new(index, PipelineConfig::default()).unwrap(), corpus)
    }

    #[test]
    fn config_round_trips() {
        let cfg = PipelineConfig {
            snapshot_path: Some("snap".into()),
            ..Default::default()
        };
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<PipelineConfig>(&json).unwrap(), cfg);
        cfg.validate().unwrap();
        let bad = PipelineConfig {
            embedder_id: "bert".into(),
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn topic_fields() {
        let t = Topic {
            id: 1,
            query: "q".into(),
            question: "why?".into(),
            narrative: "".into(),
        };
        assert_eq!(TopicField::Query.text(&t), "q");
        assert_eq!(TopicField::Concat.text(&t), "q why?");
        assert_eq!("narrative".parse::<TopicField>().unwrap(), TopicField::Narrative);
        assert!("abstract".parse::<TopicField>().is_err());
    }

    #[test]
    fn search_is_deterministic_and_bounded() {
        let (engine, corpus) = engine();
        let q = &corpus.topics[0].query;
        let a = engine.search(q, 5).unwrap();
        let b = engine.search(q, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.results.len(), 5);
        assert_eq!(a.results[0].doc_id, corpus.planted[&1]);
        for h in &a.results {
            assert_eq!(h.final_score, h.s_factor * h.q_factor * h.rrf);
            assert!(h.snippet.chars().count() <= SNIPPET_CHARS || a.answers.contains(&h.snippet));
        }
        assert!(engine.search(q, 0).unwrap().results.is_empty());
        assert!(matches!(engine.search("  ", 5), Err(Error::EmptyQuery)));
    }

    #[test]
    fn run_topics_is_valid() {
        let (engine, corpus) = engine();
        let run = engine.run_topics(&corpus.topics, TopicField::Concat).unwrap();
        assert_eq!(run.topic_ids().collect::<Vec<_>>(), vec![1, 2, 3, 4]);
        for (_, entries) in run.topics() {
            assert!(entries.len() <= MAX_RUN_DEPTH);
            assert!(entries.iter().all(|e| e.tag == "scisearch"));
        }
    }

    struct Fixed;

    impl AnswerExtractor for Fixed {
        fn extract_answers(&self, _: &str, _: &[&str]) -> Result<Vec<String>> {
            Ok(vec![])
        }

        fn concurrent_safe(&self) -> bool {
            false
        }
    }

    impl Summarizer for Fixed {
        fn summarize(&self, _: &str, _: &[&str]) -> Result<String> {
            Ok(String::new())
        }
    }

    #[test]
    fn neutral_scorers_keep_fused_order() {
        let (engine, corpus) = engine();
        let engine = engine.with_scorers(Arc::new(Fixed), Arc::new(Fixed));
        let ranking = engine.rank_with(&corpus.topics[1].query, &FusionConfig::default()).unwrap();
        let fused: Vec<&str> = ranking.retrieval.fused.doc_ids().collect();
        let final_order: Vec<&str> = ranking.scores.iter().map(|s| s.doc_id.as_str()).collect();
        assert_eq!(fused, final_order);
        assert!(ranking.scores.iter().all(|s| s.s_factor == 0.5 && s.q_factor == 1.0));
    }
}
