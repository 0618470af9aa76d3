//! Paragraph–citation bipartite graph and the balanced (paragraph, title)
//! training tuples derived from it.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{index_paragraphs, Document, ParagraphKey};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BipartiteGraph {
    /// Paragraph node → paragraph text.
    pub paragraph_nodes: BTreeMap<ParagraphKey, String>,
    /// Normalized title → first display title seen for it.
    pub citation_nodes: BTreeMap<String, String>,
    pub edges: BTreeSet<(ParagraphKey, String)>,
}

impl BipartiteGraph {
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains_edge(&self, paragraph: &ParagraphKey, citation: &str) -> bool {
        // BTreeSet<(K, String)> can't be probed with borrowed parts.
        self.edges
            .range((paragraph.clone(), citation.to_string())..)
            .next()
            .is_some_and(|(p, c)| p == paragraph && c == citation)
    }

    /// Inserts an edge, creating missing nodes. Returns false for duplicates.
    pub fn add_edge(&mut self, paragraph: ParagraphKey, paragraph_text: &str, title: &str, normalized: &str) -> bool {
        self.paragraph_nodes
            .entry(paragraph.clone())
            .or_insert_with(|| paragraph_text.to_string());
        self.citation_nodes
            .entry(normalized.to_string())
            .or_insert_with(|| title.to_string());
        self.edges.insert((paragraph, normalized.to_string()))
    }
}

/// One edge per (source paragraph, normalized citation title). Only paragraphs
/// that cite something become nodes.
pub fn build_bipartite_graph(corpus: &[Document]) -> BipartiteGraph {
    let mut graph = BipartiteGraph::default();
    for doc in corpus {
        if doc.citations.is_empty() {
            continue;
        }
        let paragraphs = index_paragraphs(doc);
        for cite in &doc.citations {
            let Some(paragraph) = paragraphs
                .iter()
                .find(|p| p.ordinal == cite.source_paragraph.ordinal)
            else {
                continue;
            };
            graph.add_edge(
                cite.source_paragraph.clone(),
                &paragraph.text,
                &cite.title,
                &cite.normalized_title,
            );
        }
    }
    graph
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingTuple {
    pub paragraph: ParagraphKey,
    pub paragraph_text: String,
    pub citation_title: String,
    pub normalized_title: String,
    pub label: Label,
}

/// One positive per edge plus the same number of negatives drawn uniformly,
/// without replacement, from (paragraph, citation) pairs that are not edges.
/// The combined list is shuffled; output depends only on the graph and `seed`.
pub fn generate_tuples(graph: &BipartiteGraph, seed: u64) -> Result<Vec<TrainingTuple>> {
    if graph.edges.is_empty() {
        return Err(Error::InsufficientNegatives("graph has no edges".into()));
    }
    if graph.citation_nodes.len() < 2 {
        return Err(Error::InsufficientNegatives(format!(
            "graph has {} citation node(s), need at least 2",
            graph.citation_nodes.len()
        )));
    }

    let paragraphs: Vec<&ParagraphKey> = graph.paragraph_nodes.keys().collect();
    let citations: Vec<&String> = graph.citation_nodes.keys().collect();
    let total_pairs = paragraphs.len() * citations.len();
    let wanted = graph.edges.len();
    let available = total_pairs - wanted;
    if available < wanted {
        return Err(Error::InsufficientNegatives(format!(
            "{available} non-edges available for {wanted} positives"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let negatives: Vec<(usize, usize)> = if available <= 4 * wanted {
        // Dense graph: enumerate the pool and take a random subset.
        let mut pool: Vec<(usize, usize)> = (0..paragraphs.len())
            .flat_map(|p| (0..citations.len()).map(move |c| (p, c)))
            .filter(|&(p, c)| !graph.contains_edge(paragraphs[p], citations[c]))
            .collect();
        pool.shuffle(&mut rng);
        pool.truncate(wanted);
        pool
    } else {
        let mut chosen = HashSet::with_capacity(wanted);
        let mut picked = Vec::with_capacity(wanted);
        while picked.len() < wanted {
            let pair = (
                rng.random_range(0..paragraphs.len()),
                rng.random_range(0..citations.len()),
            );
            if graph.contains_edge(paragraphs[pair.0], citations[pair.1]) || !chosen.insert(pair) {
                continue;
            }
            picked.push(pair);
        }
        picked
    };

    let tuple = |key: &ParagraphKey, normalized: &String, label| TrainingTuple {
        paragraph: key.clone(),
        paragraph_text: graph.paragraph_nodes[key].clone(),
        citation_title: graph.citation_nodes[normalized].clone(),
        normalized_title: normalized.clone(),
        label,
    };
    let mut tuples: Vec<TrainingTuple> = graph
        .edges
        .iter()
        .map(|(p, c)| tuple(p, c, Label::Positive))
        .chain(
            negatives
                .into_iter()
                .map(|(p, c)| tuple(paragraphs[p], citations[c], Label::Negative)),
        )
        .collect();
    tuples.shuffle(&mut rng);
    Ok(tuples)
}

fn escape_field(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out
}

/// Writes `label TAB paragraph_text TAB citation_title` lines, label 1 or 0.
/// Backslash, newline, carriage return and tab are escaped as `\\`, `\n`, `\r`, `\t`.
pub fn write_tuples<W: Write>(tuples: &[TrainingTuple], mut out: W) -> std::io::Result<()> {
    for t in tuples {
        let label = match t.label {
            Label::Positive => 1,
            Label::Negative => 0,
        };
        writeln!(
            out,
            "{label}\t{}\t{}",
            escape_field(&t.paragraph_text),
            escape_field(&t.citation_title)
        )?;
    }
    Ok(())
}
