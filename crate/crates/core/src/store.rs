//! The built search index (documents, keyword index, dense paragraph index)
//! and its on-disk snapshot.
//!
//! A snapshot is a directory:
//!
//! ```text
//! manifest.json      format/tokenizer versions, embedder id, D, k1, b, counts, checksum
//! documents.jsonl    one Document per line, ascending id
//! paragraphs.jsonl   one Paragraph (with embedding) per line, ascending key
//! inverted.json      doc ids, lengths and posting lists
//! ```

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{index_paragraphs, Document, Paragraph};
use crate::error::{Error, Result};
use crate::index::{Bm25Params, DenseIndex, Embedder, InvertedIndex, InvertedIndexParts};
use crate::text::TOKENIZER_VERSION;

pub const SNAPSHOT_FORMAT_VERSION: u32 = 1;

const MANIFEST: &str = "manifest.json";
const DOCUMENTS: &str = "documents.jsonl";
const PARAGRAPHS: &str = "paragraphs.jsonl";
const INVERTED: &str = "inverted.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub tokenizer_version: u32,
    pub embedder_id: String,
    pub dimension: usize,
    pub bm25: Bm25Params,
    pub document_count: usize,
    pub paragraph_count: usize,
    /// SHA-256 over the data files, hex encoded.
    pub checksum: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchIndex {
    documents: Vec<Document>,
    paragraphs: Vec<Paragraph>,
    inverted: InvertedIndex,
    dense: DenseIndex,
    /// Document number of each dense entry.
    entry_docs: Vec<u32>,
    manifest: Manifest,
}

impl SearchIndex {
    /// Splits, embeds and indexes `documents`.
    pub fn build(mut documents: Vec<Document>, embedder: &dyn Embedder, bm25: Bm25Params) -> Result<Self> {
        if documents.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        bm25.validate()?;
        documents.sort_by(|a, b| a.id.cmp(&b.id));
        let inverted = InvertedIndex::from_texts(documents.iter().map(|d| (d.id.clone(), d.full_text())))?;
        let paragraphs: Vec<Paragraph> = documents
            .iter()
            .flat_map(index_paragraphs)
            .map(|mut p| {
                p.embedding = Some(embedder.embed(&p.text));
                p
            })
            .collect();
        let manifest = Manifest {
            format_version: SNAPSHOT_FORMAT_VERSION,
            tokenizer_version: TOKENIZER_VERSION,
            embedder_id: embedder.id(),
            dimension: embedder.dimension(),
            bm25,
            document_count: documents.len(),
            paragraph_count: paragraphs.len(),
            checksum: String::new(),
        };
        let mut index = Self::assemble(documents, paragraphs, inverted, manifest)?;
        index.manifest.checksum = index.compute_checksum()?;
        Ok(index)
    }

    fn assemble(
        documents: Vec<Document>,
        paragraphs: Vec<Paragraph>,
        inverted: InvertedIndex,
        manifest: Manifest,
    ) -> Result<Self> {
        let entries = paragraphs
            .iter()
            .map(|p| {
                let v = p
                    .embedding
                    .clone()
                    .ok_or_else(|| Error::Snapshot(format!("paragraph {} has no embedding", p.key())))?;
                Ok((p.key(), v))
            })
            .collect::<Result<Vec<_>>>()?;
        let dense = DenseIndex::from_entries(manifest.dimension, entries)?;
        let entry_docs = dense
            .entries()
            .iter()
            .map(|(k, _)| {
                inverted
                    .doc_number(&k.doc_id)
                    .ok_or_else(|| Error::UnknownDocument(k.doc_id.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        if inverted.doc_ids().len() != documents.len()
            || inverted.doc_ids().iter().zip(&documents).any(|(a, d)| *a != d.id)
        {
            return Err(Error::Snapshot("keyword index and documents disagree".into()));
        }
        Ok(SearchIndex {
            documents,
            paragraphs,
            inverted,
            dense,
            entry_docs,
            manifest,
        })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    /// Document by number (position in ascending-id order).
    pub fn document(&self, number: u32) -> &Document {
        &self.documents[number as usize]
    }

    pub fn document_by_id(&self, id: &str) -> Option<&Document> {
        self.inverted.doc_number(id).map(|n| self.document(n))
    }

    /// Paragraphs aligned with [`DenseIndex::entries`].
    pub fn paragraphs(&self) -> &[Paragraph] {
        &self.paragraphs
    }

    pub fn inverted(&self) -> &InvertedIndex {
        &self.inverted
    }

    pub fn dense(&self) -> &DenseIndex {
        &self.dense
    }

    pub fn entry_docs(&self) -> &[u32] {
        &self.entry_docs
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    /// Range of dense entries / paragraphs belonging to document `number`.
    pub fn paragraph_range(&self, number: u32) -> std::ops::Range<usize> {
        let start = self.entry_docs.partition_point(|&d| d < number);
        let end = self.entry_docs.partition_point(|&d| d <= number);
        start..end
    }

    fn data_files(&self) -> Result<[(&'static str, Vec<u8>); 3]> {
        let mut documents = Vec::new();
        for d in &self.documents {
            serde_json::to_writer(&mut documents, d).map_err(|e| Error::Snapshot(e.to_string()))?;
            documents.push(b'\n');
        }
        let mut paragraphs = Vec::new();
        for p in &self.paragraphs {
            serde_json::to_writer(&mut paragraphs, p).map_err(|e| Error::Snapshot(e.to_string()))?;
            paragraphs.push(b'\n');
        }
        let inverted =
            serde_json::to_vec(&self.inverted.to_parts()).map_err(|e| Error::Snapshot(e.to_string()))?;
        Ok([(DOCUMENTS, documents), (PARAGRAPHS, paragraphs), (INVERTED, inverted)])
    }

    fn compute_checksum(&self) -> Result<String> {
        Ok(checksum(&self.manifest, &self.data_files()?))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, bytes) in self.data_files()? {
            let path = dir.join(name);
            let mut w = BufWriter::new(fs::File::create(&path).map_err(|e| Error::io(&path, e))?);
            w.write_all(&bytes).map_err(|e| Error::io(&path, e))?;
            w.flush().map_err(|e| Error::io(&path, e))?;
        }
        // Manifest last: a directory without one is not a snapshot.
        let path = dir.join(MANIFEST);
        let json = serde_json::to_vec_pretty(&self.manifest).map_err(|e| Error::Snapshot(e.to_string()))?;
        fs::write(&path, json).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let read = |name: &str| -> Result<Vec<u8>> {
            let path = dir.join(name);
            fs::read(&path).map_err(|e| Error::io(&path, e))
        };
        let manifest: Manifest =
            serde_json::from_slice(&read(MANIFEST)?).map_err(|e| Error::Snapshot(format!("manifest: {e}")))?;
        if manifest.format_version != SNAPSHOT_FORMAT_VERSION {
            return Err(Error::Snapshot(format!(
                "unsupported format version {}",
                manifest.format_version
            )));
        }
        if manifest.tokenizer_version != TOKENIZER_VERSION {
            return Err(Error::Snapshot(format!(
                "snapshot built with tokenizer v{}, this build uses v{}",
                manifest.tokenizer_version, TOKENIZER_VERSION
            )));
        }
        let files = [
            (DOCUMENTS, read(DOCUMENTS)?),
            (PARAGRAPHS, read(PARAGRAPHS)?),
            (INVERTED, read(INVERTED)?),
        ];
        let actual = checksum(&manifest, &files);
        if actual != manifest.checksum {
            return Err(Error::Snapshot(format!(
                "checksum mismatch: manifest {}, data {}",
                manifest.checksum, actual
            )));
        }
        let [(_, documents), (_, paragraphs), (_, inverted)] = files;
        let documents = parse_lines::<Document>(&documents, DOCUMENTS)?;
        let paragraphs = parse_lines::<Paragraph>(&paragraphs, PARAGRAPHS)?;
        let parts: InvertedIndexParts =
            serde_json::from_slice(&inverted).map_err(|e| Error::Snapshot(format!("{INVERTED}: {e}")))?;
        if documents.len() != manifest.document_count || paragraphs.len() != manifest.paragraph_count {
            return Err(Error::Snapshot("manifest counts do not match data".into()));
        }
        Self::assemble(documents, paragraphs, InvertedIndex::from_parts(parts), manifest)
    }
}

fn parse_lines<T: serde::de::DeserializeOwned>(bytes: &[u8], name: &str) -> Result<Vec<T>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Snapshot(format!("{name}: {e}")))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::Snapshot(format!("{name}:{}: {e}", i + 1))))
        .collect()
}

fn checksum(manifest: &Manifest, files: &[(&'static str, Vec<u8>)]) -> String {
    let mut hasher = Sha256::new();
    let header = format!(
        "v{} t{} {} d{} k1={} b={} n{} p{}\n",
        manifest.format_version,
        manifest.tokenizer_version,
        manifest.embedder_id,
        manifest.dimension,
        manifest.bm25.k1,
        manifest.bm25.b,
        manifest.document_count,
        manifest.paragraph_count
    );
    hasher.update(header.as_bytes());
    for (name, bytes) in files {
        hasher.update(name.as_bytes());
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(bytes);
    }
    hex::encode(hasher.finalize())
}
