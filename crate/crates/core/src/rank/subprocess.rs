//! Line-delimited JSON protocol for attaching external answer extractors and
//! summarizers. One request object per line on the child's stdin, one
//! response object per line on its stdout:
//!
//! ```text
//! > {"op":"extract_answers","query":"...","paragraphs":["...", "..."]}
//! < {"spans":["..."]}
//! > {"op":"summarize","query":"...","paragraphs":["..."]}
//! < {"summary":"..."}
//! < {"error":"..."}
//! ```

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rank::{AnswerExtractor, Summarizer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum ScorerRequest {
    ExtractAnswers { query: String, paragraphs: Vec<String> },
    Summarize { query: String, paragraphs: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScorerResponse {
    Spans { spans: Vec<String> },
    Summary { summary: String },
    Error { error: String },
}

struct Channel {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

/// A scorer process speaking the protocol above. Calls are serialized.
pub struct SubprocessScorer {
    program: String,
    channel: Mutex<Channel>,
}

impl SubprocessScorer {
    pub fn spawn(program: &str, args: &[String]) -> Result<Self> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| Error::Scorer(format!("cannot start `{program}`: {e}")))?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = BufReader::new(child.stdout.take().expect("stdout is piped"));
        Ok(SubprocessScorer {
            program: program.to_string(),
            channel: Mutex::new(Channel { child, stdin, stdout }),
        })
    }

    pub fn call(&self, request: &ScorerRequest) -> Result<ScorerResponse> {
        let mut channel = self
            .channel
            .lock()
            .map_err(|_| Error::Scorer("scorer channel poisoned".into()))?;
        let mut line = serde_json::to_string(request).map_err(|e| Error::Scorer(e.to_string()))?;
        line.push('\n');
        let io_err = |e: std::io::Error| Error::Scorer(format!("`{}`: {e}", self.program));
        channel.stdin.write_all(line.as_bytes()).map_err(io_err)?;
        channel.stdin.flush().map_err(io_err)?;
        let mut response = String::new();
        if channel.stdout.read_line(&mut response).map_err(io_err)? == 0 {
            return Err(Error::Scorer(format!("`{}` closed its output", self.program)));
        }
        match serde_json::from_str(&response) {
            Ok(ScorerResponse::Error { error }) => Err(Error::Scorer(error)),
            Ok(r) => Ok(r),
            Err(e) => Err(Error::Scorer(format!("bad response from `{}`: {e}", self.program))),
        }
    }
}

impl Drop for SubprocessScorer {
    fn drop(&mut self) {
        if let Ok(channel) = self.channel.get_mut() {
            let _ = channel.child.kill();
            let _ = channel.child.wait();
        }
    }
}

impl AnswerExtractor for SubprocessScorer {
    fn extract_answers(&self, query: &str, paragraphs: &[&str]) -> Result<Vec<String>> {
        match self.call(&ScorerRequest::ExtractAnswers {
            query: query.to_string(),
            paragraphs: paragraphs.iter().map(|p| p.to_string()).collect(),
        })? {
            ScorerResponse::Spans { spans } => Ok(spans),
            other => Err(Error::Scorer(format!("expected spans, got {other:?}"))),
        }
    }

    fn concurrent_safe(&self) -> bool {
        false
    }
}

impl Summarizer for SubprocessScorer {
    fn summarize(&self, query: &str, paragraphs: &[&str]) -> Result<String> {
        match self.call(&ScorerRequest::Summarize {
            query: query.to_string(),
            paragraphs: paragraphs.iter().map(|p| p.to_string()).collect(),
        })? {
            ScorerResponse::Summary { summary } => Ok(summary),
            other => Err(Error::Scorer(format!("expected summary, got {other:?}"))),
        }
    }

    fn concurrent_safe(&self) -> bool {
        false
    }
}

/// Server side of the protocol: answers requests from `input` until EOF.
/// Malformed requests get an error response and the loop continues.
pub fn serve_scorer<R: BufRead, W: Write>(
    extractor: &dyn AnswerExtractor,
    summarizer: &dyn Summarizer,
    input: R,
    mut output: W,
) -> std::io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let response = match serde_json::from_str::<ScorerRequest>(&line) {
            Ok(ScorerRequest::ExtractAnswers { query, paragraphs }) => {
                let refs: Vec<&str> = paragraphs.iter().map(String::as_str).collect();
                match extractor.extract_answers(&query, &refs) {
                    Ok(spans) => ScorerResponse::Spans { spans },
                    Err(e) => ScorerResponse::Error { error: e.to_string() },
                }
            }
            Ok(ScorerRequest::Summarize { query, paragraphs }) => {
                let refs: Vec<&str> = paragraphs.iter().map(String::as_str).collect();
                match summarizer.summarize(&query, &refs) {
                    Ok(summary) => ScorerResponse::Summary { summary },
                    Err(e) => ScorerResponse::Error { error: e.to_string() },
                }
            }
            Err(e) => ScorerResponse::Error {
                error: format!("bad request: {e}"),
            },
        };
        serde_json::to_writer(&mut output, &response)?;
        output.write_all(b"\n")?;
        output.flush()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::index::HashEmbedder;
    use crate::rank::{ReferenceExtractor, ReferenceSummarizer};

    #[test]
    fn wire_format() {
        let req = ScorerRequest::Summarize {
            query: "q".into(),
            paragraphs: vec!["p".into()],
        };
        assert_eq!(
            serde_json::to_string(&req).unwrap(),
            r#"{"op":"summarize","query":"q","paragraphs":["p"]}"#
        );
        let resp: ScorerResponse = serde_json::from_str(r#"{"spans":["a"]}"#).unwrap();
        assert_eq!(resp, ScorerResponse::Spans { spans: vec!["a".into()] });
        let resp: ScorerResponse = serde_json::from_str(r#"{"error":"boom"}"#).unwrap();
        assert_eq!(resp, ScorerResponse::Error { error: "boom".into() });
    }

    #[test]
    fn server_loop() {
        let extractor = ReferenceExtractor::default();
        let summarizer = ReferenceSummarizer::new(Arc::new(HashEmbedder::new(16, 1)));
        let input = concat!(
            r#"{"op":"extract_answers","query":"ace2 receptor","paragraphs":["ACE2 is the receptor. Other."]}"#,
            "\n",
            "garbage\n",
            r#"{"op":"summarize","query":"x","paragraphs":[]}"#,
            "\n",
        );
        let mut out = Vec::new();
        serve_scorer(&extractor, &summarizer, input.as_bytes(), &mut out).unwrap();
        let lines: Vec<ScorerResponse> = String::from_utf8(out)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(lines[0], ScorerResponse::Spans { spans: vec!["ACE2 is the receptor.".into()] });
        assert!(matches!(&lines[1], ScorerResponse::Error { error } if error.starts_with("bad request")));
        assert_eq!(lines[2], ScorerResponse::Error { error: "nothing to summarize".into() });
    }

    #[test]
    fn spawn_failure() {
        assert!(SubprocessScorer::spawn("/definitely/not/a/program", &[]).is_err());
    }
}
