//! Brute-force metric transliterations and random fixtures shared by the
//! integration tests. Written independently of `scisearch_core::eval`.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use scisearch_core::eval::{Judgements, Qrels, RunFile};

fn is_rel(j: &Judgements, d: &str) -> bool {
    j.get(d).is_some_and(|&g| g >= 1)
}

pub fn oracle_precision(ranking: &[&str], j: &Judgements, n: usize) -> f64 {
    let mut hits = 0.0;
    for i in 0..n {
        if i < ranking.len() && is_rel(j, ranking[i]) {
            hits += 1.0;
        }
    }
    hits / n as f64
}

pub fn oracle_ndcg(ranking: &[&str], j: &Judgements, n: usize) -> f64 {
    let rel = |i: usize, grades: &[f64]| if i < grades.len() { grades[i] } else { 0.0 };
    let dcg_of = |grades: &[f64]| {
        let mut total = rel(0, grades);
        for i in 2..=n {
            total += rel(i - 1, grades) / (i as f64).log2();
        }
        total
    };
    let got: Vec<f64> = ranking
        .iter()
        .map(|d| j.get(*d).copied().unwrap_or(0) as f64)
        .collect();
    let mut ideal: Vec<f64> = j.values().map(|&g| g as f64).collect();
    ideal.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let idcg = dcg_of(&ideal);
    if idcg == 0.0 {
        0.0
    } else {
        dcg_of(&got) / idcg
    }
}

pub fn oracle_ap(ranking: &[&str], j: &Judgements) -> f64 {
    let r = j.values().filter(|&&g| g >= 1).count();
    if r == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for k in 1..=ranking.len() {
        if is_rel(j, ranking[k - 1]) {
            total += oracle_precision(ranking, j, k);
        }
    }
    total / r as f64
}

pub fn oracle_bpref(ranking: &[&str], j: &Judgements) -> f64 {
    let r = j.values().filter(|&&g| g >= 1).count();
    if r == 0 {
        return 0.0;
    }
    // The first R judged non-relevant documents in the ranking.
    let first_nonrel: Vec<usize> = ranking
        .iter()
        .enumerate()
        .filter(|(_, d)| j.get(**d) == Some(&0))
        .map(|(i, _)| i)
        .take(r)
        .collect();
    let mut total = 0.0;
    for (pos, d) in ranking.iter().enumerate() {
        if is_rel(j, d) {
            let above = first_nonrel.iter().filter(|&&i| i < pos).count();
            total += 1.0 - above as f64 / r as f64;
        }
    }
    total / r as f64
}

/// A random topic: judgements over a subset of `docs` documents and a
/// ranking mixing judged and unjudged ids.
pub fn random_topic(rng: &mut ChaCha8Rng, max_docs: usize) -> (Vec<String>, Judgements) {
    let docs = rng.random_range(1..=max_docs);
    let mut pool: Vec<String> = (0..docs).map(|i| format!("d{i}")).collect();
    pool.shuffle(rng);
    let mut judgements = BTreeMap::new();
    for d in &pool {
        if rng.random_bool(0.7) {
            judgements.insert(d.clone(), rng.random_range(0..=2u8));
        }
    }
    let len = rng.random_range(0..=docs);
    pool.truncate(len);
    (pool, judgements)
}

pub fn random_instance(rng: &mut ChaCha8Rng) -> (RunFile, Qrels) {
    let topics = rng.random_range(1..=3u32);
    let mut run = RunFile::new();
    let mut qrels = Qrels::new();
    for t in 1..=topics {
        let (ranking, judgements) = random_topic(rng, 20);
        for (d, g) in &judgements {
            qrels.insert(t, d.clone(), *g).unwrap();
        }
        let ranked: Vec<(String, f64)> = ranking
            .into_iter()
            .enumerate()
            .map(|(i, d)| (d, 100.0 - i as f64))
            .collect();
        run.push_topic(t, &ranked, "rnd").unwrap();
    }
    (run, qrels)
}
