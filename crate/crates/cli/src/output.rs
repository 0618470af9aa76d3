use std::fmt::Write as _;

use scisearch_core::eval::{write_run, RunFile};
use scisearch_core::pipeline::SearchResponse;
use scisearch_core::Result;

pub fn table(response: &SearchResponse) -> String {
    let mut out = String::new();
    if response.results.is_empty() {
        return out;
    }
    let _ = writeln!(
        out,
        "{:>4}  {:<16} {:>12} {:>12} {:>9} {:>9}  title",
        "rank", "doc_id", "final", "rrf", "q_factor", "s_factor"
    );
    for (i, hit) in response.results.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:>4}  {:<16} {:>12.8} {:>12.8} {:>9.4} {:>9.4}  {}",
            i + 1,
            hit.doc_id,
            hit.final_score,
            hit.rrf,
            hit.q_factor,
            hit.s_factor,
            hit.title
        );
    }
    if !response.summary.is_empty() {
        let _ = writeln!(out, "\nsummary: {}", response.summary);
    }
    out
}

pub fn json(response: &SearchResponse) -> String {
    serde_json::to_string_pretty(response).expect("response serializes") + "\n"
}

/// The hits as one run-file topic block scored by the final score.
pub fn trec(response: &SearchResponse, topic: u32, tag: &str) -> Result<String> {
    let mut run = RunFile::new();
    let ranked: Vec<(String, f64)> = response
        .results
        .iter()
        .map(|h| (h.doc_id.clone(), h.final_score))
        .collect();
    run.push_topic(topic, &ranked, tag)?;
    write_run(&run)
}
