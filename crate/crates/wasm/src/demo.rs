//! The demo operations with plain Rust types; `lib.rs` only wraps them for JS.

use serde::Serialize;

use scisearch_core::corpus::parse_corpus_str;
use scisearch_core::eval::{evaluate_run, parse_qrels, parse_run, BprefVariant, EvalConfig, MetricReport, NdcgVariant};
use scisearch_core::fusion::{rrf_fuse, FusionConfig, RankedList};
use scisearch_core::pipeline::{build_index, Engine, PipelineConfig, SearchResponse};
use scisearch_core::{Error, Result};

pub const DEMO_CORPUS: &str = include_str!("../data/demo_corpus.jsonl");

pub struct Demo {
    engine: Engine,
}

impl Demo {
    pub fn from_jsonl(corpus: &str) -> Result<Self> {
        let config = PipelineConfig::default();
        let index = build_index(parse_corpus_str(corpus)?, &config)?;
        Ok(Demo {
            engine: Engine::new(index, config)?,
        })
    }

    pub fn bundled() -> Result<Self> {
        Self::from_jsonl(DEMO_CORPUS)
    }

    pub fn documents(&self) -> usize {
        self.engine.index().documents().len()
    }

    pub fn search(&self, query: &str, n: usize, mu: f64, rrf_k: f64) -> Result<SearchResponse> {
        let fusion = FusionConfig {
            mu,
            rrf_k,
            ..self.engine.config().fusion
        };
        self.engine.search_with(query, n, &fusion)
    }
}

pub fn evaluate(qrels: &str, run: &str, ndcg: &str, bpref: &str) -> Result<MetricReport> {
    let ndcg_variant = match ndcg {
        "paper" => NdcgVariant::Paper,
        "standard" => NdcgVariant::Standard,
        other => return Err(Error::InvalidConfig(format!("unknown nDCG variant `{other}`"))),
    };
    let bpref_variant = match bpref {
        "paper" => BprefVariant::Paper,
        "trec" => BprefVariant::Trec,
        other => return Err(Error::InvalidConfig(format!("unknown Bpref variant `{other}`"))),
    };
    let cfg = EvalConfig {
        ndcg_variant,
        bpref_variant,
        ..EvalConfig::default()
    };
    evaluate_run(&parse_run(run)?, &parse_qrels(qrels)?, &cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FusedRow {
    pub doc_id: String,
    pub score: f64,
    pub rank_c: Option<usize>,
    pub rank_b: Option<usize>,
}

/// Each list is whitespace separated document ids, best first.
pub fn fuse(list_c: &str, list_b: &str, k: f64) -> Result<Vec<FusedRow>> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidConfig(format!("rrf k must be positive, got {k}")));
    }
    let parse = |text: &str| {
        let ids: Vec<&str> = text.split_whitespace().collect();
        let n = ids.len() as f64;
        RankedList::from_ordered(ids.iter().enumerate().map(|(i, id)| (id.to_string(), n - i as f64)).collect())
    };
    let (c, b) = (parse(list_c)?, parse(list_b)?);
    Ok(rrf_fuse(&c, &b, k)
        .entries()
        .iter()
        .map(|(id, score)| FusedRow {
            doc_id: id.clone(),
            score: *score,
            rank_c: c.rank_of(id),
            rank_b: b.rank_of(id),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_corpus_answers_demo_queries() {
        let demo = Demo::bundled().unwrap();
        assert_eq!(demo.documents(), 20);
        // Answer-span boosts may reorder the top, but fusion puts the match first.
        for (query, expected) in [
            ("remdesivir shortened recovery in hospitalized adults", "demo02"),
            ("ACE2 receptor spike", "demo04"),
        ] {
            let r = demo.search(query, 5, 0.7, 60.0).unwrap();
            let best_fused = r.results.iter().max_by(|a, b| a.rrf.total_cmp(&b.rrf)).unwrap();
            assert_eq!(best_fused.doc_id, expected, "{query}");
        }
        assert!(demo.search("masks", 5, 1.5, 60.0).is_err());
        assert!(demo.search("", 5, 0.7, 60.0).is_err());
    }

    #[test]
    fn sliders_change_scores() {
        let demo = Demo::bundled().unwrap();
        let a = demo.search("coronavirus drug repurposing", 5, 0.7, 60.0).unwrap();
        let b = demo.search("coronavirus drug repurposing", 5, 0.7, 1.0).unwrap();
        assert!(b.results[0].rrf > a.results[0].rrf);
    }

    #[test]
    fn evaluate_reports_means() {
        let report = evaluate("1 0 a 1\n1 0 b 0\n1 0 c 2\n", "1 Q0 a 1 3 t\n1 Q0 b 2 2 t\n1 Q0 c 3 1 t\n", "paper", "trec").unwrap();
        assert_eq!(report.mean.bpref, 0.5);
        assert_eq!(report.mean.p_at_5, 0.4);
        assert!(evaluate("", "", "other", "paper").is_err());
        assert!(evaluate("1 0 a 1\n", "1 Q0 a x 3 t\n", "paper", "paper").is_err());
    }

    #[test]
    fn fuse_matches_reciprocal_ranks() {
        let rows = fuse("a b c", "c a", 60.0).unwrap();
        assert_eq!(rows[0].doc_id, "a");
        assert_eq!(rows[0].score, 1.0 / 61.0 + 1.0 / 62.0);
        assert_eq!(rows[1].doc_id, "c");
        assert_eq!(rows[2], FusedRow { doc_id: "b".into(), score: 1.0 / 62.0, rank_c: Some(2), rank_b: None });
        assert!(fuse("a a", "", 60.0).is_err());
        assert!(fuse("a", "b", 0.0).is_err());
    }
}
