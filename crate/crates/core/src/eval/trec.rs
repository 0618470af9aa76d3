//! TREC interchange formats.
//!
//! qrels: `topic_id iteration doc_id grade` (iteration ignored on read, written as 0)
//! run:   `topic_id Q0 doc_id rank score tag`

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const MAX_RUN_DEPTH: usize = 1000;

/// Graded judgements per topic: doc id → grade in {0, 1, 2}.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    topics: BTreeMap<u32, BTreeMap<String, u8>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, topic: u32, doc_id: impl Into<String>, grade: u8) -> Result<()> {
        if grade > 2 {
            return Err(Error::InvalidConfig(format!("grade {grade} outside 0..=2")));
        }
        let doc_id = doc_id.into();
        let docs = self.topics.entry(topic).or_default();
        if docs.contains_key(&doc_id) {
            return Err(Error::InvalidConfig(format!("duplicate judgement ({topic}, {doc_id})")));
        }
        docs.insert(doc_id, grade);
        Ok(())
    }

    pub fn topic(&self, topic: u32) -> Option<&BTreeMap<String, u8>> {
        self.topics.get(&topic)
    }

    pub fn topics(&self) -> impl Iterator<Item = (u32, &BTreeMap<String, u8>)> {
        self.topics.iter().map(|(&t, d)| (t, d))
    }

    pub fn topic_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.topics.keys().copied()
    }

    pub fn grade(&self, topic: u32, doc_id: &str) -> Option<u8> {
        self.topics.get(&topic)?.get(doc_id).copied()
    }

    pub fn len(&self) -> usize {
        self.topics.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunEntry {
    pub doc_id: String,
    pub rank: usize,
    pub score: f64,
    pub tag: String,
}

/// Ranked documents per topic. Each topic list has contiguous ranks from 1,
/// non-increasing scores, unique docs and at most [`MAX_RUN_DEPTH`] entries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunFile {
    topics: BTreeMap<u32, Vec<RunEntry>>,
}

impl RunFile {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a topic from `(doc_id, score)` pairs already in rank order. An
    /// empty ranking adds nothing, since the text format has no way to show it.
    pub fn push_topic(&mut self, topic: u32, ranked: &[(String, f64)], tag: &str) -> Result<()> {
        if ranked.is_empty() {
            return Ok(());
        }
        let entries = ranked
            .iter()
            .enumerate()
            .map(|(i, (doc_id, score))| RunEntry {
                doc_id: doc_id.clone(),
                rank: i + 1,
                score: *score,
                tag: tag.to_string(),
            })
            .collect::<Vec<_>>();
        check_topic(topic, &entries)?;
        if self.topics.insert(topic, entries).is_some() {
            return Err(Error::InvalidRun(format!("topic {topic} added twice")));
        }
        Ok(())
    }

    pub fn topic(&self, topic: u32) -> Option<&[RunEntry]> {
        self.topics.get(&topic).map(Vec::as_slice)
    }

    pub fn topics(&self) -> impl Iterator<Item = (u32, &[RunEntry])> {
        self.topics.iter().map(|(&t, e)| (t, e.as_slice()))
    }

    pub fn topic_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.topics.keys().copied()
    }

    /// Doc ids of one topic in rank order; empty for unknown topics.
    pub fn ranking(&self, topic: u32) -> Vec<&str> {
        self.topic(topic)
            .map(|e| e.iter().map(|r| r.doc_id.as_str()).collect())
            .unwrap_or_default()
    }

    pub fn validate(&self) -> Result<()> {
        self.topics.iter().try_for_each(|(&t, e)| check_topic(t, e))
    }
}

fn check_topic(topic: u32, entries: &[RunEntry]) -> Result<()> {
    if entries.len() > MAX_RUN_DEPTH {
        return Err(Error::InvalidRun(format!(
            "topic {topic} has {} documents, limit is {MAX_RUN_DEPTH}",
            entries.len()
        )));
    }
    let mut seen = std::collections::HashSet::new();
    for (i, e) in entries.iter().enumerate() {
        if e.rank != i + 1 {
            return Err(Error::InvalidRun(format!("topic {topic}: expected rank {}, found {}", i + 1, e.rank)));
        }
        if !e.score.is_finite() {
            return Err(Error::InvalidRun(format!("topic {topic}: non-finite score at rank {}", e.rank)));
        }
        if i > 0 && e.score > entries[i - 1].score {
            return Err(Error::InvalidRun(format!("topic {topic}: score increases at rank {}", e.rank)));
        }
        if !seen.insert(e.doc_id.as_str()) {
            return Err(Error::InvalidRun(format!("topic {topic}: duplicate document {}", e.doc_id)));
        }
        if e.doc_id.is_empty() || e.doc_id.contains(char::is_whitespace) {
            return Err(Error::InvalidRun(format!("topic {topic}: invalid document id `{}`", e.doc_id)));
        }
        if e.tag.is_empty() || e.tag.contains(char::is_whitespace) {
            return Err(Error::InvalidRun(format!("topic {topic}: invalid run tag `{}`", e.tag)));
        }
    }
    Ok(())
}

pub fn parse_qrels(data: &str) -> Result<Qrels> {
    let mut qrels = Qrels::new();
    for (idx, line) in data.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [topic, _iteration, doc_id, grade] = fields[..] else {
            return Err(Error::parse("qrels", lineno, format!("expected 4 fields, found {}", fields.len())));
        };
        let topic: u32 = topic
            .parse()
            .map_err(|_| Error::parse("qrels", lineno, format!("bad topic id `{topic}`")))?;
        let grade: u8 = match grade {
            "0" => 0,
            "1" => 1,
            "2" => 2,
            other => return Err(Error::parse("qrels", lineno, format!("grade `{other}` not in {{0,1,2}}"))),
        };
        qrels
            .insert(topic, doc_id, grade)
            .map_err(|e| Error::parse("qrels", lineno, e.to_string()))?;
    }
    Ok(qrels)
}

pub fn write_qrels(qrels: &Qrels) -> String {
    let mut out = String::new();
    for (topic, docs) in qrels.topics() {
        for (doc, grade) in docs {
            let _ = writeln!(out, "{topic} 0 {doc} {grade}");
        }
    }
    out
}

/// Lines must be grouped by topic and in rank order within a topic.
pub fn parse_run(data: &str) -> Result<RunFile> {
    let mut run = RunFile::new();
    for (idx, line) in data.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [topic, q0, doc_id, rank, score, tag] = fields[..] else {
            return Err(Error::parse("run", lineno, format!("expected 6 fields, found {}", fields.len())));
        };
        if q0 != "Q0" {
            return Err(Error::parse("run", lineno, format!("second field must be Q0, found `{q0}`")));
        }
        let topic: u32 = topic
            .parse()
            .map_err(|_| Error::parse("run", lineno, format!("bad topic id `{topic}`")))?;
        let rank: usize = rank
            .parse()
            .map_err(|_| Error::parse("run", lineno, format!("bad rank `{rank}`")))?;
        let score: f64 = score
            .parse()
            .ok()
            .filter(|s: &f64| s.is_finite())
            .ok_or_else(|| Error::parse("run", lineno, format!("bad score `{score}`")))?;
        if run.topics.keys().next_back().is_some_and(|&last| last > topic) {
            return Err(Error::parse("run", lineno, format!("topic {topic} out of order")));
        }
        let entries = run.topics.entry(topic).or_default();
        entries.push(RunEntry {
            doc_id: doc_id.to_string(),
            rank,
            score,
            tag: tag.to_string(),
        });
        check_topic(topic, entries).map_err(|e| Error::parse("run", lineno, e.to_string()))?;
    }
    Ok(run)
}

/// Topics ascending, ranks ascending. Scores use the shortest representation
/// that parses back to the same value.
pub fn write_run(run: &RunFile) -> Result<String> {
    run.validate()?;
    let mut out = String::new();
    for (topic, entries) in run.topics() {
        for e in entries {
            let _ = writeln!(out, "{topic} Q0 {} {} {} {}", e.doc_id, e.rank, e.score, e.tag);
        }
    }
    Ok(out)
}

pub fn read_qrels(path: &Path) -> Result<Qrels> {
    parse_qrels(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

pub fn read_run(path: &Path) -> Result<RunFile> {
    parse_run(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

pub fn save_run(run: &RunFile, path: &Path) -> Result<()> {
    fs::write(path, write_run(run)?).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qrels_line() {
        let q = parse_qrels("1 0 doc42 2\n").unwrap();
        assert_eq!(q.grade(1, "doc42"), Some(2));
        assert_eq!(write_qrels(&q), "1 0 doc42 2\n");
        let q = parse_qrels("3 7 d 1").unwrap();
        assert_eq!(write_qrels(&q), "3 0 d 1\n");
    }

    #[test]
    fn run_line() {
        let r = parse_run("1 Q0 doc42 1 12.5 cosearch\n").unwrap();
        let e = &r.topic(1).unwrap()[0];
        assert_eq!((e.doc_id.as_str(), e.rank, e.score, e.tag.as_str()), ("doc42", 1, 12.5, "cosearch"));
        assert_eq!(write_run(&r).unwrap(), "1 Q0 doc42 1 12.5 cosearch\n");
    }

    #[test]
    fn run_scores_round_trip_exactly() {
        let mut run = RunFile::new();
        let ranked: Vec<(String, f64)> = vec![
            ("a".into(), 0.1 + 0.2),
            ("b".into(), 1.0 / 3.0),
            ("c".into(), 1e-300),
        ];
        let mut ranked = ranked;
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
        run.push_topic(4, &ranked, "t").unwrap();
        assert_eq!(parse_run(&write_run(&run).unwrap()).unwrap(), run);
    }

    #[test]
    fn rejects_bad_grades_and_duplicates() {
        let err = parse_qrels("1 0 a 1\n1 0 b 3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse_qrels("1 0 a 1\n1 0 a 2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn run_depth_cap() {
        let ranked: Vec<(String, f64)> = (0..=MAX_RUN_DEPTH).map(|i| (format!("d{i}"), -(i as f64))).collect();
        let mut run = RunFile::new();
        assert!(run.push_topic(1, &ranked, "t").is_err());
        assert!(run.push_topic(1, &ranked[..MAX_RUN_DEPTH], "t").is_ok());
    }
}
