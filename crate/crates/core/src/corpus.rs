//! Document ingestion, paragraph splitting and topic files.
//!
//! Corpus files hold one JSON object per line:
//!
//! ```text
//! {"id":"d1","title":"T","abstract":"A.","body":["B1."],"captions":[],"citations":[{"raw":"[1]","title":"Cited work","paragraph":1}]}
//! ```
//!
//! `paragraph` on a citation is optional and refers to the ordinal produced by
//! [`split_paragraphs`]. Without it the citation is attributed to the first
//! paragraph whose text contains `raw`, falling back to ordinal 0.

use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::EmbeddingVector;
use crate::text::{normalize_title, token_count};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParagraphKind {
    Abstract,
    Body,
    Caption,
}

/// Identifies one paragraph: owning document plus its ordinal.
/// Ordering is by `doc_id`, then `ordinal`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ParagraphKey {
    pub doc_id: String,
    pub ordinal: u32,
}

impl ParagraphKey {
    pub fn new(doc_id: impl Into<String>, ordinal: u32) -> Self {
        ParagraphKey {
            doc_id: doc_id.into(),
            ordinal,
        }
    }
}

impl std::fmt::Display for ParagraphKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}#{}", self.doc_id, self.ordinal)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Paragraph {
    pub doc_id: String,
    pub ordinal: u32,
    pub kind: ParagraphKind,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<EmbeddingVector>,
}

impl Paragraph {
    pub fn key(&self) -> ParagraphKey {
        ParagraphKey::new(self.doc_id.clone(), self.ordinal)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitationRef {
    pub raw: String,
    pub normalized_title: String,
    /// Title as it appeared in the record, kept for export.
    pub title: String,
    pub source_paragraph: ParagraphKey,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub body: Vec<String>,
    pub captions: Vec<String>,
    pub citations: Vec<CitationRef>,
    #[serde(default)]
    pub source_path: String,
}

impl Document {
    /// Title, abstract, body sections and captions joined by newlines; the
    /// text keyword models and answer containment operate on.
    pub fn full_text(&self) -> String {
        let mut parts: Vec<&str> = Vec::with_capacity(2 + self.body.len() + self.captions.len());
        parts.push(&self.title);
        parts.push(&self.abstract_text);
        parts.extend(self.body.iter().map(String::as_str));
        parts.extend(self.captions.iter().map(String::as_str));
        parts.retain(|p| !p.trim().is_empty());
        parts.join("\n")
    }

    /// The document as a corpus-file record line (no trailing newline).
    pub fn to_record_line(&self) -> String {
        let citations: Vec<serde_json::Value> = self
            .citations
            .iter()
            .map(|c| {
                serde_json::json!({
                    "raw": c.raw,
                    "title": c.title,
                    "paragraph": c.source_paragraph.ordinal,
                })
            })
            .collect();
        serde_json::json!({
            "id": self.id,
            "title": self.title,
            "abstract": self.abstract_text,
            "body": self.body,
            "captions": self.captions,
            "citations": citations,
        })
        .to_string()
    }
}

/// Raw line record of a corpus file.
#[derive(Debug, Clone, Deserialize)]
struct DocumentRecord {
    id: String,
    #[serde(default)]
    title: String,
    #[serde(default, rename = "abstract")]
    abstract_text: String,
    #[serde(default)]
    body: Vec<String>,
    #[serde(default)]
    captions: Vec<String>,
    #[serde(default)]
    citations: Vec<CitationRecord>,
}

#[derive(Debug, Clone, Deserialize)]
struct CitationRecord {
    #[serde(default)]
    raw: String,
    #[serde(default)]
    title: String,
    #[serde(default)]
    paragraph: Option<u32>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Fail on the first malformed record instead of skipping it.
    pub strict: bool,
}

#[derive(Debug, Clone, Default)]
pub struct LoadedCorpus {
    pub documents: Vec<Document>,
    pub skipped: usize,
}

/// Loads every `*.jsonl` file under `path` (sorted by name) or the single file
/// at `path`.
pub fn load_corpus(path: &Path, options: LoadOptions) -> Result<LoadedCorpus> {
    let files = collect_files(path)?;
    let mut out = LoadedCorpus::default();
    let mut seen = HashSet::new();
    for file in files {
        let handle = fs::File::open(&file).map_err(|e| Error::io(&file, e))?;
        let source = file.display().to_string();
        for (idx, line) in BufReader::new(handle).lines().enumerate() {
            let line = line.map_err(|e| Error::io(&file, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let lineno = idx + 1;
            match parse_document(&line, &source).and_then(|doc| {
                if seen.contains(&doc.id) {
                    Err(format!("duplicate document id `{}`", doc.id))
                } else {
                    Ok(doc)
                }
            }) {
                Ok(doc) => {
                    seen.insert(doc.id.clone());
                    out.documents.push(doc);
                }
                Err(message) if options.strict => {
                    return Err(Error::parse("corpus", lineno, format!("{source}: {message}")));
                }
                Err(message) => {
                    warn!("{source}:{lineno}: skipping malformed record: {message}");
                    out.skipped += 1;
                }
            }
        }
    }
    Ok(out)
}

/// Parses corpus records from an in-memory JSONL string; any malformed line is an error.
pub fn parse_corpus_str(data: &str) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in data.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let doc = parse_document(line, "").map_err(|m| Error::parse("corpus", idx + 1, m))?;
        if !seen.insert(doc.id.clone()) {
            return Err(Error::parse("corpus", idx + 1, format!("duplicate document id `{}`", doc.id)));
        }
        docs.push(doc);
    }
    Ok(docs)
}

fn collect_files(path: &Path) -> Result<Vec<std::path::PathBuf>> {
    let meta = fs::metadata(path).map_err(|e| Error::io(path, e))?;
    if meta.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<_> = fs::read_dir(path)
        .map_err(|e| Error::io(path, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|ext| ext == "jsonl"))
        .collect();
    files.sort();
    Ok(files)
}

fn parse_document(line: &str, source: &str) -> std::result::Result<Document, String> {
    let record: DocumentRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if record.id.trim().is_empty() {
        return Err("empty document id".into());
    }
    let has_text = [&record.title, &record.abstract_text]
        .into_iter()
        .chain(record.body.iter())
        .chain(record.captions.iter())
        .any(|t| token_count(t) > 0);
    if !has_text {
        return Err(format!("document `{}` has no text", record.id));
    }
    if record.title.trim().is_empty()
        && record.abstract_text.trim().is_empty()
        && record.body.iter().all(|b| b.trim().is_empty())
    {
        return Err(format!("document `{}` has neither title, abstract nor body", record.id));
    }

    let mut doc = Document {
        id: record.id,
        title: record.title,
        abstract_text: record.abstract_text,
        body: record.body,
        captions: record.captions,
        citations: Vec::new(),
        source_path: source.to_string(),
    };
    let paragraphs = split_paragraphs(&doc);
    for cite in record.citations {
        let title_source = if cite.title.trim().is_empty() {
            cite.raw.clone()
        } else {
            cite.title
        };
        let normalized_title = normalize_title(&title_source);
        if normalized_title.is_empty() {
            warn!("document `{}`: dropping citation with empty title", doc.id);
            continue;
        }
        let ordinal = match cite.paragraph {
            Some(ord) if (ord as usize) < paragraphs.len().max(1) => ord,
            Some(ord) => {
                return Err(format!(
                    "citation `{}` points at paragraph {ord}, document has {}",
                    cite.raw,
                    paragraphs.len()
                ))
            }
            None => paragraphs
                .iter()
                .find(|p| !cite.raw.is_empty() && p.text.contains(cite.raw.as_str()))
                .map_or(0, |p| p.ordinal),
        };
        doc.citations.push(CitationRef {
            raw: cite.raw,
            normalized_title,
            title: title_source.trim().to_string(),
            source_paragraph: ParagraphKey::new(doc.id.clone(), ordinal),
        });
    }
    Ok(doc)
}

/// Abstract becomes one paragraph, each body section is split on blank lines,
/// each caption becomes one paragraph. Ordinals follow document order from 0;
/// fragments without tokens are dropped.
pub fn split_paragraphs(doc: &Document) -> Vec<Paragraph> {
    let mut out = Vec::new();
    let mut push = |kind: ParagraphKind, text: &str| {
        let text = text.trim();
        if token_count(text) == 0 {
            return;
        }
        out.push(Paragraph {
            doc_id: doc.id.clone(),
            ordinal: out.len() as u32,
            kind,
            text: text.to_string(),
            embedding: None,
        });
    };

    push(ParagraphKind::Abstract, &doc.abstract_text);
    for section in &doc.body {
        for fragment in split_blank_lines(section) {
            push(ParagraphKind::Body, fragment);
        }
    }
    for caption in &doc.captions {
        push(ParagraphKind::Caption, caption);
    }
    out
}

/// Splits on lines that are empty or whitespace-only.
fn split_blank_lines(section: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    let mut end = 0;
    let mut offset = 0;
    for line in section.split_inclusive('\n') {
        if line.trim().is_empty() {
            if let Some(s) = start.take() {
                out.push(&section[s..end]);
            }
        } else {
            start.get_or_insert(offset);
            end = offset + line.len();
        }
        offset += line.len();
    }
    if let Some(s) = start {
        out.push(&section[s..end]);
    }
    out
}

/// Paragraphs used for dense indexing: [`split_paragraphs`], or the full text
/// as a single body paragraph when splitting yields nothing (title-only documents).
pub fn index_paragraphs(doc: &Document) -> Vec<Paragraph> {
    let paragraphs = split_paragraphs(doc);
    if !paragraphs.is_empty() {
        return paragraphs;
    }
    let text = doc.full_text();
    if token_count(&text) == 0 {
        return Vec::new();
    }
    vec![Paragraph {
        doc_id: doc.id.clone(),
        ordinal: 0,
        kind: ParagraphKind::Body,
        text,
        embedding: None,
    }]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topic {
    pub id: u32,
    pub query: String,
    #[serde(default)]
    pub question: String,
    #[serde(default)]
    pub narrative: String,
}

#[derive(Debug, Deserialize)]
struct TopicRecord {
    id: u32,
    query: Option<String>,
    #[serde(default)]
    question: Option<String>,
    #[serde(default)]
    narrative: Option<String>,
}

/// Reads one topic record per line.
pub fn load_topics(path: &Path) -> Result<Vec<Topic>> {
    let data = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_topics(&data)
}

pub fn parse_topics(data: &str) -> Result<Vec<Topic>> {
    let mut topics = Vec::new();
    let mut ids = HashSet::new();
    for (idx, line) in data.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: TopicRecord =
            serde_json::from_str(line).map_err(|e| Error::parse("topics", lineno, e.to_string()))?;
        let query = record
            .query
            .filter(|q| !q.trim().is_empty())
            .ok_or_else(|| Error::parse("topics", lineno, "missing query field"))?;
        if record.id == 0 {
            return Err(Error::parse("topics", lineno, "topic id must be positive"));
        }
        if !ids.insert(record.id) {
            return Err(Error::parse("topics", lineno, format!("duplicate topic id {}", record.id)));
        }
        topics.push(Topic {
            id: record.id,
            query,
            question: record.question.unwrap_or_default(),
            narrative: record.narrative.unwrap_or_default(),
        });
    }
    Ok(topics)
}
