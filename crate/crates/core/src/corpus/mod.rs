//! Corpus records, filtering, vocabularies, splits and batching.

mod filter;
mod split;
mod vocab;

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::ast::{ast_stats, from_json_value, to_json_value, Ast, AstError, AstStats};

pub use filter::{
    filter_record, filter_sample, first_sentence, tokenize_comment, DropReason, FilterConfig, MethodInfo,
    MAX_AST_NODES,
};
pub use split::{make_batches, split_dataset, SplitRatios};
pub use vocab::{
    build_vocab, Vocab, VocabLimits, VocabSide, BOS, BOS_ID, CLOSE, EOS, EOS_ID, OPEN, PAD, PAD_ID, UNK, UNK_ID,
    UNK_NUM, UNK_STR,
};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("line {line}: {reason}")]
    Record { line: usize, reason: String },
    #[error("line {line}: {source}")]
    Ast {
        line: usize,
        #[source]
        source: AstError,
    },
    #[error("vocab line {line}: {reason}")]
    VocabLine { line: usize, reason: String },
    #[error("split ratios must be non-negative and sum to 1, got {0:?}")]
    BadRatios([f64; 3]),
    #[error("batch size must be at least 1")]
    BadBatchSize,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One (tree, comment) training pair.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub id: String,
    pub ast: Ast,
    /// Comment tokens, already lowercased and punctuation-split.
    pub comment: Vec<String>,
    pub stats: AstStats,
}

impl Sample {
    pub fn new(id: impl Into<String>, ast: Ast, comment: Vec<String>) -> Self {
        let stats = ast_stats(&ast);
        Self {
            id: id.into(),
            ast,
            comment,
            stats,
        }
    }

    /// JSON-lines form with the comment joined by single spaces.
    pub fn to_record(&self) -> RawRecord {
        RawRecord {
            id: self.id.clone(),
            method_name: String::new(),
            comment: self.comment.join(" "),
            ast: self.ast.clone(),
            type_name: None,
            statements: None,
        }
    }
}

/// A corpus line as it appears on disk.
#[derive(Clone, Debug, PartialEq)]
pub struct RawRecord {
    pub id: String,
    pub method_name: String,
    pub comment: String,
    pub ast: Ast,
    /// Enclosing type, used to recognise constructors.
    pub type_name: Option<String>,
    /// Body statement count, used to recognise accessors.
    pub statements: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct WireRecord {
    id: String,
    #[serde(default)]
    method_name: String,
    comment: String,
    ast: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    type_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    statements: Option<usize>,
}

impl RawRecord {
    pub fn from_json_line(line: &str, line_no: usize) -> Result<Self, CorpusError> {
        let w: WireRecord = serde_json::from_str(line).map_err(|e| CorpusError::Record {
            line: line_no,
            reason: e.to_string(),
        })?;
        let ast = from_json_value(&w.ast).map_err(|source| CorpusError::Ast { line: line_no, source })?;
        Ok(Self {
            id: w.id,
            method_name: w.method_name,
            comment: w.comment,
            ast,
            type_name: w.type_name,
            statements: w.statements,
        })
    }

    pub fn to_json_line(&self) -> String {
        let w = WireRecord {
            id: self.id.clone(),
            method_name: self.method_name.clone(),
            comment: self.comment.clone(),
            ast: to_json_value(&self.ast),
            type_name: self.type_name.clone(),
            statements: self.statements,
        };
        serde_json::to_string(&w).expect("record serializes")
    }
}

/// Reads every non-blank line; the first malformed line aborts with its number.
pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<RawRecord>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(RawRecord::from_json_line(&line, i + 1)?);
    }
    if out.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    Ok(out)
}

pub fn write_jsonl<W: Write>(mut writer: W, records: &[RawRecord]) -> Result<(), CorpusError> {
    for r in records {
        writeln!(writer, "{}", r.to_json_line())?;
    }
    Ok(())
}

/// Wraps already-clean records as samples, tokenizing the whole comment.
pub fn samples_unfiltered(records: &[RawRecord]) -> Vec<Sample> {
    records
        .iter()
        .map(|r| Sample::new(r.id.clone(), r.ast.clone(), tokenize_comment(&r.comment)))
        .collect()
}
