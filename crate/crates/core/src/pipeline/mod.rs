//! Corpus-level verification protocol: dedup, automated verification, batch
//! audit, and the deterministic-vs-semantic confusion analysis.

mod audit;
mod dedup;
mod protocol;
mod stats;

use std::fmt;
use std::io::{self, BufRead, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub use audit::{
    audit_batch, draw_audit_sample, error_pattern_summary, Annotation, AuditConfig, AuditDecision, AuditError,
    AuditVerdict, Decision, ErrorPatternSummary,
};
pub use dedup::{dedup, trigram_counts, DedupResult, DroppedPair, Similarity, TrigramCosine, TrigramVector, DEFAULT_UPSILON};
pub use protocol::{run_protocol, ProtocolConfig, Verdict, VerificationRecord};
pub use stats::{confusion_matrix, corpus_stats, ConfusionMatrix, CorpusStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskType {
    ShortAnswer,
    FillBlank,
    TrueFalse,
    MultipleChoice,
    ProblemSolving,
}

impl TaskType {
    pub const ALL: [TaskType; 5] = [
        TaskType::ShortAnswer,
        TaskType::FillBlank,
        TaskType::TrueFalse,
        TaskType::MultipleChoice,
        TaskType::ProblemSolving,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for TaskType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("enum serializes");
        f.write_str(s.as_str().unwrap_or_default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
}

/// One corpus entry. Answers carry `@claim{…}` annotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    pub task_type: TaskType,
    #[serde(default)]
    pub topic: String,
    pub difficulty: Difficulty,
    pub question: String,
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_answer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub think_trace: Option<String>,
}

impl SampleRecord {
    /// A bare record for scoring a single (question, answer) pair.
    pub fn adhoc(question: impl Into<String>, answer: impl Into<String>) -> Self {
        Self {
            id: String::new(),
            task_type: TaskType::ProblemSolving,
            topic: String::new(),
            difficulty: Difficulty::Medium,
            question: question.into(),
            answer: answer.into(),
            reference_answer: None,
            think_trace: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum JsonlError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
}

/// Reads one JSON value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned>(reader: impl BufRead) -> Result<Vec<T>, JsonlError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| JsonlError::Parse { line: i + 1, source })?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(mut writer: impl Write, items: &[T]) -> Result<(), JsonlError> {
    for item in items {
        serde_json::to_writer(&mut writer, item).map_err(io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_jsonl_file<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, JsonlError> {
    read_jsonl(io::BufReader::new(std::fs::File::open(path)?))
}

pub fn write_jsonl_file<T: Serialize>(path: &Path, items: &[T]) -> Result<(), JsonlError> {
    write_jsonl(io::BufWriter::new(std::fs::File::create(path)?), items)
}

/// Reads a corpus and rejects duplicate ids.
pub fn read_corpus(path: &Path) -> Result<Vec<SampleRecord>, JsonlError> {
    let records: Vec<SampleRecord> = read_jsonl_file(path)?;
    let mut seen = std::collections::HashSet::new();
    for r in &records {
        if !seen.insert(r.id.as_str()) {
            return Err(JsonlError::DuplicateId(r.id.clone()));
        }
    }
    Ok(records)
}
