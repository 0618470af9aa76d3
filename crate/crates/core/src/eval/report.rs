use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::metrics::{
    average_precision, bpref, judged_at_n, ndcg_at_n, precision_at_n, BprefVariant, Judgements, NdcgVariant,
};
use crate::eval::trec::{Qrels, RunFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Minimum grade that counts as relevant for P@n, AP and Bpref.
    pub rel_threshold: u8,
    pub ndcg_variant: NdcgVariant,
    pub bpref_variant: BprefVariant,
    /// Drop unjudged documents from each ranking before P@n, nDCG and AP.
    pub judged_only: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            rel_threshold: 1,
            ndcg_variant: NdcgVariant::Paper,
            bpref_variant: BprefVariant::Paper,
            judged_only: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TopicMetrics {
    pub p_at_5: f64,
    pub p_at_10: f64,
    pub ndcg_at_10: f64,
    /// Average precision; its mean over topics is MAP.
    pub map: f64,
    pub bpref: f64,
    pub judged_at_5: f64,
    pub judged_at_10: f64,
}

impl TopicMetrics {
    fn values(&self) -> [f64; 7] {
        [
            self.bpref,
            self.map,
            self.p_at_5,
            self.p_at_10,
            self.ndcg_at_10,
            self.judged_at_5,
            self.judged_at_10,
        ]
    }

    fn from_values(v: [f64; 7]) -> Self {
        TopicMetrics {
            bpref: v[0],
            map: v[1],
            p_at_5: v[2],
            p_at_10: v[3],
            ndcg_at_10: v[4],
            judged_at_5: v[5],
            judged_at_10: v[6],
        }
    }
}

const COLUMNS: [&str; 7] = ["Bpref", "MAP", "P@5", "P@10", "nDCG@10", "Judged@5", "Judged@10"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub config: EvalConfig,
    pub per_topic: BTreeMap<u32, TopicMetrics>,
    pub mean: TopicMetrics,
}

pub fn evaluate_topic(ranking: &[&str], judgements: &Judgements, cfg: &EvalConfig) -> TopicMetrics {
    let filtered: Vec<&str>;
    let scored = if cfg.judged_only {
        filtered = ranking.iter().copied().filter(|d| judgements.contains_key(*d)).collect();
        &filtered[..]
    } else {
        ranking
    };
    let t = cfg.rel_threshold;
    TopicMetrics {
        p_at_5: precision_at_n(scored, judgements, 5, t),
        p_at_10: precision_at_n(scored, judgements, 10, t),
        ndcg_at_10: ndcg_at_n(scored, judgements, 10, cfg.ndcg_variant),
        map: average_precision(scored, judgements, t),
        bpref: bpref(ranking, judgements, t, cfg.bpref_variant),
        judged_at_5: judged_at_n(ranking, judgements, 5),
        judged_at_10: judged_at_n(ranking, judgements, 10),
    }
}

/// Scores every qrels topic (missing run topics score 0) and averages them
/// without weighting.
pub fn evaluate_run(run: &RunFile, qrels: &Qrels, cfg: &EvalConfig) -> Result<MetricReport> {
    if !qrels.topic_ids().any(|t| run.topic(t).is_some()) {
        return Err(Error::DisjointTopics);
    }
    let per_topic: BTreeMap<u32, TopicMetrics> = qrels
        .topics()
        .map(|(topic, judgements)| (topic, evaluate_topic(&run.ranking(topic), judgements, cfg)))
        .collect();
    let n = per_topic.len() as f64;
    let mut sums = [0.0; 7];
    for m in per_topic.values() {
        for (s, v) in sums.iter_mut().zip(m.values()) {
            *s += v;
        }
    }
    Ok(MetricReport {
        config: *cfg,
        mean: TopicMetrics::from_values(sums.map(|s| s / n)),
        per_topic,
    })
}

impl MetricReport {
    pub fn column_names() -> [&'static str; 7] {
        COLUMNS
    }

    /// Plain-text table: one row per topic, then the mean.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:<8}", "topic");
        for c in COLUMNS {
            let _ = write!(out, " {c:>10}");
        }
        out.push('\n');
        let mut row = |label: &str, m: &TopicMetrics| {
            let _ = write!(out, "{label:<8}");
            for v in m.values() {
                let _ = write!(out, " {v:>10.4}");
            }
            out.push('\n');
        };
        for (topic, m) in &self.per_topic {
            row(&topic.to_string(), m);
        }
        row("all", &self.mean);
        out
    }
}
