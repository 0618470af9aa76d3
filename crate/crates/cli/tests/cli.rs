use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use scisearch_core::eval::parse_run;
use scisearch_core::rank::{AnswerExtractor, ReferenceExtractor, ReferenceSummarizer, SubprocessScorer, Summarizer};
use scisearch_core::index::HashEmbedder;
use scisearch_core::synth::{generate, SynthConfig, SyntheticCorpus};

const BIN: &str = env!("CARGO_BIN_EXE_scisearch");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

struct Fixture {
    dir: tempfile::TempDir,
    corpus: SyntheticCorpus,
}

impl Fixture {
    fn new(topics: usize) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let corpus = generate(&SynthConfig {
            documents: 100,
            topics,
            ..Default::default()
        });
        fs::write(dir.path().join("corpus.jsonl"), corpus.to_jsonl()).unwrap();
        fs::write(dir.path().join("topics.jsonl"), corpus.topics_jsonl()).unwrap();
        Fixture { dir, corpus }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn p(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }

    fn index(&self, out: &str) -> Output {
        let o = run(&["index", "--corpus", &self.p("corpus.jsonl"), "--out", &self.p(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        o
    }
}

fn checksum(snapshot: &Path) -> String {
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(snapshot.join("manifest.json")).unwrap()).unwrap();
    manifest["checksum"].as_str().unwrap().to_string()
}

#[test]
fn index_reports_counts_and_is_deterministic() {
    let f = Fixture::new(10);
    let out = stdout(&f.index("snap"));
    let counts: Vec<usize> = out
        .split_whitespace()
        .filter_map(|w| w.parse().ok())
        .collect();
    assert_eq!(counts[0], 100);
    assert!(counts[1] >= 100, "{out}");
    f.index("snap2");
    assert_eq!(checksum(&f.path("snap")), checksum(&f.path("snap2")));
}

#[test]
fn empty_corpus_fails() {
    let f = Fixture::new(1);
    fs::write(f.path("empty.jsonl"), "").unwrap();
    let o = run(&["index", "--corpus", &f.p("empty.jsonl"), "--out", &f.p("snap")]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("empty corpus"));
}

#[test]
fn search_formats() {
    let f = Fixture::new(10);
    f.index("snap");
    let snap = f.p("snap");
    let query = &f.corpus.topics[0].query;

    let o = run(&["search", "--snapshot", &snap, "--format", "json", "-n", "5", query]);
    assert!(o.status.success());
    let json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(json["results"][0]["doc_id"], f.corpus.planted[&1].as_str());
    assert_eq!(json["results"].as_array().unwrap().len(), 5);
    for key in ["doc_id", "title", "snippet", "final", "rrf", "q_factor", "s_factor"] {
        assert!(!json["results"][0][key].is_null(), "missing {key}");
    }

    let table = stdout(&run(&["search", "--snapshot", &snap, query]));
    assert!(table.lines().nth(1).unwrap().contains(&f.corpus.planted[&1]));

    let o = run(&["search", "--snapshot", &snap, "-n", "0", query]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());

    let trec = stdout(&run(&["search", "--snapshot", &snap, "--format", "trec", "--topic-id", "7", "-n", "20", query]));
    assert_eq!(trec.lines().count(), 20);
    for (i, line) in trec.lines().enumerate() {
        let f: Vec<&str> = line.split(' ').collect();
        assert_eq!(f.len(), 6);
        assert_eq!((f[0], f[1], f[5]), ("7", "Q0", "scisearch"));
        assert_eq!(f[3], (i + 1).to_string());
        f[4].parse::<f64>().unwrap();
    }
    parse_run(&trec).unwrap();

    let again = stdout(&run(&["search", "--snapshot", &snap, "--format", "json", "-n", "5", query]));
    assert_eq!(again.as_bytes(), &o_json(&snap, query)[..]);
}

fn o_json(snap: &str, query: &str) -> Vec<u8> {
    run(&["search", "--snapshot", snap, "--format", "json", "-n", "5", query]).stdout
}

#[test]
fn search_without_snapshot_fails() {
    let o = run(&["search", "--snapshot", "/nonexistent/snap", "anything"]);
    assert!(!o.status.success());
    assert!(!o.stderr.is_empty());
}

#[test]
fn fusion_flags_are_validated() {
    let f = Fixture::new(1);
    f.index("snap");
    let o = run(&["search", "--snapshot", &f.p("snap"), "--mu", "1.5", "query"]);
    assert!(!o.status.success());
    let o = run(&["search", "--snapshot", &f.p("snap"), "--mu", "1", "--rrf-k", "10", "--pool-size", "50", "--format", "json", "-n", "100", "virus"]);
    assert!(o.status.success());
    let json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(json["results"].as_array().unwrap().len() <= 50);
}

#[test]
fn run_topics_writes_thirty_blocks_deterministically() {
    let f = Fixture::new(30);
    f.index("snap");
    let go = |topics: &str, out: &str, field: &str| {
        let o = run(&["run-topics", "--snapshot", &f.p("snap"), "--topics", &f.p(topics), "--out", &f.p(out), "--field", field]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read_to_string(f.path(out)).unwrap()
    };
    let a = go("topics.jsonl", "a.run", "query");
    let b = go("topics.jsonl", "b.run", "query");
    assert_eq!(a, b);
    let run = parse_run(&a).unwrap();
    assert_eq!(run.topic_ids().count(), 30);
    assert!(run.topics().all(|(_, e)| !e.is_empty() && e.len() <= 1000));

    // Only the query field feeds the engine under --field query.
    let altered: String = f
        .corpus
        .topics
        .iter()
        .map(|t| {
            let mut t = t.clone();
            t.question = "unrelated words entirely".into();
            t.narrative = "more unrelated text".into();
            serde_json::to_string(&t).unwrap() + "\n"
        })
        .collect();
    fs::write(f.path("altered.jsonl"), altered).unwrap();
    assert_eq!(go("altered.jsonl", "c.run", "query"), a);
    assert_ne!(go("altered.jsonl", "d.run", "concat"), go("topics.jsonl", "e.run", "concat"));
}

#[test]
fn tuples_are_balanced_tsv() {
    let f = Fixture::new(1);
    let o = run(&["tuples", "--corpus", &f.p("corpus.jsonl"), "--out", &f.p("t.tsv"), "--seed", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(f.path("t.tsv")).unwrap();
    let labels: Vec<&str> = text.lines().map(|l| l.split('\t').next().unwrap()).collect();
    assert!(text.lines().all(|l| l.split('\t').count() == 3));
    let pos = labels.iter().filter(|l| **l == "1").count();
    assert_eq!(pos * 2, labels.len());
    run(&["tuples", "--corpus", &f.p("corpus.jsonl"), "--out", &f.p("t2.tsv"), "--seed", "3"]);
    assert_eq!(fs::read_to_string(f.path("t2.tsv")).unwrap(), text);
}

#[test]
fn evaluate_prints_table_and_json() {
    let f = Fixture::new(1);
    fs::write(f.path("q.txt"), "1 0 d1 1\n1 0 d2 0\n1 0 d3 2\n").unwrap();
    fs::write(f.path("r.txt"), "1 Q0 d1 1 3 t\n1 Q0 d2 2 2 t\n1 Q0 d3 3 1 t\n").unwrap();
    let o = run(&["evaluate", "--qrels", &f.p("q.txt"), "--run", &f.p("r.txt"), "--out", &f.p("report.json")]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = stdout(&o);
    assert!(table.starts_with("topic"));
    assert!(table.contains("Bpref") && table.contains("Judged@10"));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(f.path("report.json")).unwrap()).unwrap();
    assert_eq!(report["mean"]["bpref"], 0.75);
    let o = run(&["evaluate", "--qrels", &f.p("q.txt"), "--run", &f.p("r.txt"), "--format", "json", "--bpref-variant", "trec"]);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["mean"]["bpref"], 0.5);

    let o = run(&["evaluate", "--qrels", &f.p("q.txt"), "--run", &f.p("r.txt"), "--format", "json", "--bpref-variant", "trec", "--ndcg-variant", "standard", "--judged-only", "--rel-threshold", "2"]);
    assert!(o.status.success());
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["config"]["rel_threshold"], 2);
    assert_eq!(report["config"]["bpref_variant"], "trec");

    fs::write(f.path("bad.txt"), "1 Q0 d1 1 3 t\n1 Q0 d2 x 2 t\n").unwrap();
    let o = run(&["evaluate", "--qrels", &f.p("q.txt"), "--run", &f.p("bad.txt")]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn subprocess_scorer_matches_in_process_reference() {
    let scorer = SubprocessScorer::spawn(BIN, &["scorer".to_string()]).unwrap();
    let paragraphs = [
        "ACE2 is the receptor. The spike protein binds it.",
        "Remdesivir shortened recovery. Masks reduce spread in households.",
    ];
    let embedder = std::sync::Arc::new(HashEmbedder::default());
    let reference = ReferenceExtractor::default();
    assert_eq!(
        scorer.extract_answers("ace2 receptor", &paragraphs).unwrap(),
        reference.extract_answers("ace2 receptor", &paragraphs).unwrap()
    );
    assert_eq!(
        scorer.summarize("q", &paragraphs).unwrap(),
        ReferenceSummarizer::new(embedder).summarize("q", &paragraphs).unwrap()
    );
    assert!(scorer.summarize("q", &[]).is_err());
}

#[test]
fn search_through_subprocess_scorer_is_identical() {
    let f = Fixture::new(2);
    f.index("snap");
    let q = &f.corpus.topics[1].query;
    let plain = run(&["search", "--snapshot", &f.p("snap"), "--format", "json", q]);
    let piped = run(&["search", "--snapshot", &f.p("snap"), "--format", "json", "--scorer", BIN, "--scorer-arg", "scorer", q]);
    assert!(piped.status.success(), "{}", String::from_utf8_lossy(&piped.stderr));
    assert_eq!(plain.stdout, piped.stdout);
}
