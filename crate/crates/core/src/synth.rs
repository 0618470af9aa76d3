//! Seeded synthetic corpora with planted relevant documents, for tests,
//! fixtures and demos.

use std::collections::BTreeMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{parse_corpus_str, Document, Topic};

const SYLLABLES: [&str; 32] = [
    "ka", "lo", "mi", "nu", "ter", "vis", "pro", "zen", "dal", "bri", "cor", "fen", "gal", "hex", "jor", "lum",
    "mor", "nax", "pel", "quo", "ras", "sul", "tav", "ulm", "vor", "wex", "yel", "zor", "bi", "do", "ge", "ix",
];

#[derive(Debug, Clone, Copy)]
pub struct SynthConfig {
    pub documents: usize,
    pub topics: usize,
    pub query_terms: usize,
    /// How many query terms the planted document contains.
    pub planted_terms: usize,
    pub citation_pool: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            documents: 100,
            topics: 10,
            query_terms: 5,
            planted_terms: 4,
            citation_pool: 40,
            seed: 17,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub documents: Vec<Document>,
    pub topics: Vec<Topic>,
    /// Topic id → planted document id.
    pub planted: BTreeMap<u32, String>,
}

impl SyntheticCorpus {
    pub fn to_jsonl(&self) -> String {
        self.documents
            .iter()
            .map(|d| d.to_record_line() + "\n")
            .collect()
    }

    pub fn topics_jsonl(&self) -> String {
        self.topics
            .iter()
            .map(|t| serde_json::to_string(t).expect("topic serializes") + "\n")
            .collect()
    }
}

fn vocabulary(rng: &mut ChaCha8Rng, size: usize) -> Vec<String> {
    let mut words = std::collections::BTreeSet::new();
    while words.len() < size {
        let syllables = rng.random_range(2..=3);
        let w: String = (0..syllables).map(|_| *SYLLABLES.choose(rng).unwrap()).collect();
        words.insert(w);
    }
    let mut words: Vec<String> = words.into_iter().collect();
    words.shuffle(rng);
    words
}

/// Text of `n` words drawn from `pool` with a skew towards the front,
/// punctuated into sentences of 6–10 words.
fn prose(rng: &mut ChaCha8Rng, pool: &[String], n: usize, inserts: &[&str]) -> String {
    let mut words: Vec<&str> = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            pool[((u * u) * pool.len() as f64) as usize].as_str()
        })
        .collect();
    for w in inserts {
        let at = rng.random_range(0..=words.len());
        words.insert(at, w);
    }
    let mut out = String::new();
    let mut since = 0;
    let mut next_stop = rng.random_range(6..=10);
    for (i, w) in words.iter().enumerate() {
        if since == 0 {
            let mut c = w.chars();
            out.extend(c.next().map(|f| f.to_ascii_uppercase()));
            out.push_str(c.as_str());
        } else {
            out.push_str(w);
        }
        since += 1;
        if since == next_stop || i + 1 == words.len() {
            out.push('.');
            since = 0;
            next_stop = rng.random_range(6..=10);
        }
        if i + 1 != words.len() {
            out.push(' ');
        }
    }
    out
}

/// Generates documents over a shared background vocabulary. Each topic owns
/// `query_terms` words that appear nowhere else except: the planted document
/// (which gets `planted_terms` of them, several times) and a few distractor
/// documents that get a single one.
pub fn generate(cfg: &SynthConfig) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let topic_words = cfg.topics * cfg.query_terms;
    let vocab = vocabulary(&mut rng, 400 + topic_words);
    let (reserved, background) = vocab.split_at(topic_words);
    let citation_titles: Vec<String> = (0..cfg.citation_pool)
        .map(|i| format!("Study {i} of {} {}", background[i % background.len()], background[(i * 7) % background.len()]))
        .collect();

    let mut inserts: Vec<Vec<&str>> = vec![Vec::new(); cfg.documents];
    let mut topics = Vec::new();
    let mut planted = BTreeMap::new();
    let mut doc_order: Vec<usize> = (0..cfg.documents).collect();
    doc_order.shuffle(&mut rng);
    for t in 0..cfg.topics {
        let words: Vec<&str> = reserved[t * cfg.query_terms..(t + 1) * cfg.query_terms]
            .iter()
            .map(String::as_str)
            .collect();
        let target = doc_order[t % cfg.documents];
        for w in words.iter().take(cfg.planted_terms) {
            for _ in 0..3 {
                inserts[target].push(w);
            }
        }
        for _ in 0..3 {
            let distractor = rng.random_range(0..cfg.documents);
            if distractor != target {
                inserts[distractor].push(words.choose(&mut rng).unwrap());
            }
        }
        let id = t as u32 + 1;
        planted.insert(id, format!("doc{target:04}"));
        topics.push(Topic {
            id,
            query: words.join(" "),
            question: format!("what is known about {}?", words[..2].join(" and ")),
            narrative: format!("Documents discussing {}.", words.join(", ")),
        });
    }

    let mut lines = String::new();
    for (d, extra) in inserts.iter().enumerate() {
        let (head, tail) = extra.split_at(extra.len() / 2);
        let title = prose(&mut rng, background, 4, &[]).trim_end_matches('.').to_string();
        let abstract_text = prose(&mut rng, background, 30, head);
        let body = vec![
            format!(
                "{}\n\n{}",
                prose(&mut rng, background, 40, tail),
                prose(&mut rng, background, 40, &[])
            ),
            prose(&mut rng, background, 35, &[]),
        ];
        let captions = vec![format!("Figure 1: {}", prose(&mut rng, background, 8, &[]))];
        let cites: Vec<serde_json::Value> = citation_titles
            .choose_multiple(&mut rng, 3)
            .enumerate()
            .map(|(i, title)| {
                serde_json::json!({ "raw": format!("[{}]", i + 1), "title": title, "paragraph": rng.random_range(0..4u32) })
            })
            .collect();
        let record = serde_json::json!({
            "id": format!("doc{d:04}"),
            "title": title,
            "abstract": abstract_text,
            "body": body,
            "captions": captions,
            "citations": cites,
        });
        lines.push_str(&record.to_string());
        lines.push('\n');
    }
    let documents = parse_corpus_str(&lines).expect("synthetic records are well formed");
    SyntheticCorpus {
        documents,
        topics,
        planted,
    }
}
