//! File helpers shared by the commands.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use treesum_core::corpus::{samples_unfiltered, RawRecord, Vocab, VocabSide};
use treesum_core::Sample;

use crate::CliError;

pub const AST_VOCAB: &str = "ast_vocab.tsv";
pub const COMMENT_VOCAB: &str = "comment_vocab.tsv";
pub const MANIFEST: &str = "manifest.json";

pub fn split_file(split: &str) -> String {
    format!("{split}.jsonl")
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Writes through a temporary sibling and renames, so readers never see a
/// partial file and an earlier version survives a failed write.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let err = |e: std::io::Error| CliError::Data(format!("{}: {e}", path.display()));
    fs::write(&tmp, bytes).map_err(err)?;
    fs::rename(&tmp, path).map_err(err)
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("serializable");
    out.push(b'\n');
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Parses every line, reporting all malformed ones before failing.
pub fn parse_records(path: &Path, text: &str) -> Result<Vec<RawRecord>, CliError> {
    let mut records = Vec::new();
    let mut errors = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match RawRecord::from_json_line(line, i + 1) {
            Ok(r) => records.push(r),
            Err(e) => errors.push(format!("{}:{e}", path.display())),
        }
    }
    if !errors.is_empty() {
        for e in &errors {
            eprintln!("{e}");
        }
        return Err(CliError::Data(format!(
            "{}: {} malformed line(s)",
            path.display(),
            errors.len()
        )));
    }
    Ok(records)
}

/// Vocabularies and splits written by `prepare`.
pub struct PreparedDir {
    pub dir: PathBuf,
    pub ast_vocab: Vocab,
    pub comment_vocab: Vocab,
}

impl PreparedDir {
    pub fn open(dir: &Path) -> Result<Self, CliError> {
        let load = |side, name: &str| -> Result<Vocab, CliError> {
            let path = dir.join(name);
            Vocab::from_tsv(side, &read_text(&path)?).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
        };
        Ok(Self {
            dir: dir.to_path_buf(),
            ast_vocab: load(VocabSide::Ast, AST_VOCAB)?,
            comment_vocab: load(VocabSide::Comment, COMMENT_VOCAB)?,
        })
    }

    /// Samples of one split; comments were cleaned by `prepare`.
    pub fn split(&self, split: &str) -> Result<Vec<Sample>, CliError> {
        let path = self.dir.join(split_file(split));
        let text = read_text(&path)?;
        if text.trim().is_empty() {
            return Ok(Vec::new());
        }
        Ok(samples_unfiltered(&parse_records(&path, &text)?))
    }

    pub fn manifest_sha256(&self) -> Result<String, CliError> {
        Ok(sha256_hex(&read_bytes(&self.dir.join(MANIFEST))?))
    }
}
