//! Rank-only effectiveness metrics over one topic's ranking and judgements.
//! Unjudged documents count as non-relevant everywhere except Bpref and
//! Judged@n.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::trec::{Qrels, RunFile};

pub type Judgements = BTreeMap<String, u8>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NdcgVariant {
    /// `rel_1 + Σ_{i≥2} rel_i / log2(i)`.
    #[default]
    Paper,
    /// `Σ_{i≥1} rel_i / log2(i + 1)`.
    Standard,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BprefVariant {
    /// Non-relevant count capped at R and divided by R.
    #[default]
    Paper,
    /// trec_eval: divided by min(R, number of judged non-relevant).
    Trec,
}

fn grade(judgements: &Judgements, doc: &str) -> Option<u8> {
    judgements.get(doc).copied()
}

fn relevant_total(judgements: &Judgements, threshold: u8) -> usize {
    judgements.values().filter(|&&g| g >= threshold).count()
}

/// Relevant documents in the top `n` divided by `n`; missing positions count
/// as non-relevant.
pub fn precision_at_n(ranking: &[&str], judgements: &Judgements, n: usize, threshold: u8) -> f64 {
    assert!(n >= 1, "precision cutoff must be at least 1");
    let hits = ranking
        .iter()
        .take(n)
        .filter(|d| grade(judgements, d).is_some_and(|g| g >= threshold))
        .count();
    hits as f64 / n as f64
}

fn discount(position: usize, variant: NdcgVariant) -> f64 {
    match variant {
        NdcgVariant::Paper if position == 1 => 1.0,
        NdcgVariant::Paper => (position as f64).log2(),
        NdcgVariant::Standard => (position as f64 + 1.0).log2(),
    }
}

fn dcg(gains: impl Iterator<Item = f64>, variant: NdcgVariant) -> f64 {
    gains
        .enumerate()
        .map(|(i, g)| g / discount(i + 1, variant))
        .sum()
}

/// DCG of the top `n` over the ideal DCG from all judgements; 0 when the
/// topic has no positive grade.
pub fn ndcg_at_n(ranking: &[&str], judgements: &Judgements, n: usize, variant: NdcgVariant) -> f64 {
    assert!(n >= 1, "nDCG cutoff must be at least 1");
    let actual = dcg(
        ranking
            .iter()
            .take(n)
            .map(|d| grade(judgements, d).unwrap_or(0) as f64),
        variant,
    );
    let mut ideal: Vec<u8> = judgements.values().copied().collect();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let ideal = dcg(ideal.into_iter().take(n).map(f64::from), variant);
    if ideal == 0.0 {
        0.0
    } else {
        actual / ideal
    }
}

/// Mean of precision at each relevant retrieved rank over all judged-relevant
/// documents of the topic.
pub fn average_precision(ranking: &[&str], judgements: &Judgements, threshold: u8) -> f64 {
    let total = relevant_total(judgements, threshold);
    if total == 0 {
        return 0.0;
    }
    let mut hits = 0;
    let mut sum = 0.0;
    for (i, d) in ranking.iter().enumerate() {
        if grade(judgements, d).is_some_and(|g| g >= threshold) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / total as f64
}

/// Binary preference over judged documents only: each relevant retrieved
/// document is penalized by the judged non-relevant documents ranked above it
/// (at most R of them).
pub fn bpref(ranking: &[&str], judgements: &Judgements, threshold: u8, variant: BprefVariant) -> f64 {
    let r = relevant_total(judgements, threshold);
    if r == 0 {
        return 0.0;
    }
    let judged_nonrel = judgements.len() - r;
    let denom = match variant {
        BprefVariant::Paper => r,
        BprefVariant::Trec => r.min(judged_nonrel),
    };
    let mut nonrel_seen = 0usize;
    let mut sum = 0.0;
    for d in ranking {
        match grade(judgements, d) {
            None => {}
            Some(g) if g >= threshold => {
                let before = nonrel_seen.min(r);
                sum += if before == 0 {
                    1.0
                } else {
                    1.0 - before as f64 / denom as f64
                };
            }
            Some(_) => nonrel_seen += 1,
        }
    }
    sum / r as f64
}

/// Fraction of the top `n` that carry any judgement.
pub fn judged_at_n(ranking: &[&str], judgements: &Judgements, n: usize) -> f64 {
    assert!(n >= 1, "judged cutoff must be at least 1");
    let judged = ranking.iter().take(n).filter(|d| judgements.contains_key(**d)).count();
    judged as f64 / n as f64
}

/// Unweighted mean of average precision over the qrels topics; topics absent
/// from the run score 0.
pub fn mean_average_precision(run: &RunFile, qrels: &Qrels, threshold: u8) -> Result<f64> {
    if !qrels.topic_ids().any(|t| run.topic(t).is_some()) {
        return Err(Error::DisjointTopics);
    }
    let (sum, count) = qrels.topics().fold((0.0, 0usize), |(s, c), (t, judgements)| {
        (s + average_precision(&run.ranking(t), judgements, threshold), c + 1)
    });
    Ok(sum / count as f64)
}
