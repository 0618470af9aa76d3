//! Command line and HTTP front end for the scisearch engine.

pub mod output;
pub mod server;

use std::path::Path;
use std::sync::Arc;

use scisearch_core::pipeline::{Engine, PipelineConfig};
use scisearch_core::rank::SubprocessScorer;
use scisearch_core::store::SearchIndex;
use scisearch_core::Result;

/// External scorer process: program plus arguments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScorerCommand {
    pub program: String,
    pub args: Vec<String>,
}

/// Loads a snapshot and wires the scorers: reference ones by default, or a
/// subprocess that serves both answer extraction and summarization.
pub fn open_engine(snapshot: &Path, config: PipelineConfig, scorer: Option<&ScorerCommand>) -> Result<Engine> {
    let index = SearchIndex::load(snapshot)?;
    let engine = Engine::new(index, config)?;
    Ok(match scorer {
        Some(cmd) => {
            let scorer = Arc::new(SubprocessScorer::spawn(&cmd.program, &cmd.args)?);
            engine.with_scorers(scorer.clone(), scorer)
        }
        None => engine,
    })
}
