//! Binary checkpoint archive.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic "TSUMCKPT" | version u32 | manifest length u64 | manifest JSON
//! | payload: every tensor's f64 values, in manifest order
//! ```
//!
//! The manifest records the model config (seed included), both vocabularies
//! with their SHA-256 fingerprints, and the name and shape of every
//! parameter. Output bytes depend only on the model, so equal models give
//! byte-identical files.

use serde::{Deserialize, Serialize};

use super::network::Summarizer;
use super::{ModelConfig, ModelError};
use crate::autodiff::Tensor;
use crate::corpus::{Vocab, VocabSide};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"TSUMCKPT";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VocabEntry {
    pub sha256: String,
    /// The `symbol<TAB>frequency` vocabulary file contents.
    pub tsv: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub config: ModelConfig,
    /// Epoch the parameters were taken from, when produced by training.
    pub epoch: Option<usize>,
    pub ast_vocab: VocabEntry,
    pub comment_vocab: VocabEntry,
    pub params: Vec<ParamEntry>,
}

fn vocab_entry(v: &Vocab) -> VocabEntry {
    VocabEntry {
        sha256: v.fingerprint(),
        tsv: v.to_tsv(),
    }
}

pub fn save_checkpoint(model: &Summarizer, epoch: Option<usize>) -> Vec<u8> {
    let manifest = CheckpointManifest {
        config: model.config.clone(),
        epoch,
        ast_vocab: vocab_entry(&model.ast_vocab),
        comment_vocab: vocab_entry(&model.comment_vocab),
        params: model
            .store
            .iter()
            .map(|(_, name, t)| ParamEntry {
                name: name.to_string(),
                shape: t.shape().to_vec(),
            })
            .collect(),
    };
    let json = serde_json::to_vec(&manifest).expect("manifest serializes");
    let mut out = Vec::with_capacity(json.len() + 8 * model.store.scalar_count() + 20);
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for (_, _, t) in model.store.iter() {
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| ModelError::Checkpoint("truncated file".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, ModelError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, ModelError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

/// Manifest only, without rebuilding the model.
pub fn read_manifest(bytes: &[u8]) -> Result<(CheckpointManifest, usize), ModelError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != CHECKPOINT_MAGIC {
        return Err(ModelError::Checkpoint("not a checkpoint file (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(ModelError::Checkpoint(format!("unsupported version {version}")));
    }
    let len = usize::try_from(r.u64()?).map_err(|_| ModelError::Checkpoint("manifest too large".into()))?;
    let manifest: CheckpointManifest =
        serde_json::from_slice(r.take(len)?).map_err(|e| ModelError::Checkpoint(format!("manifest: {e}")))?;
    Ok((manifest, r.pos))
}

/// Rebuilds the model described by the manifest and fills in the stored
/// values. Returns the model and the recorded epoch.
pub fn load_checkpoint(bytes: &[u8]) -> Result<(Summarizer, Option<usize>), ModelError> {
    let (m, pos) = read_manifest(bytes)?;
    let ast_vocab = Vocab::from_tsv(VocabSide::Ast, &m.ast_vocab.tsv)?;
    let comment_vocab = Vocab::from_tsv(VocabSide::Comment, &m.comment_vocab.tsv)?;
    for (side, v, e) in [("AST", &ast_vocab, &m.ast_vocab), ("comment", &comment_vocab, &m.comment_vocab)] {
        if v.fingerprint() != e.sha256 {
            return Err(ModelError::Checkpoint(format!("{side} vocabulary does not match its recorded hash")));
        }
    }
    let mut model = Summarizer::new(m.config.clone(), ast_vocab, comment_vocab)?;
    if model.store.len() != m.params.len() {
        return Err(ModelError::Checkpoint(format!(
            "expected {} parameters, file has {}",
            model.store.len(),
            m.params.len()
        )));
    }
    let mut r = Reader { bytes, pos };
    for entry in &m.params {
        let id = model
            .store
            .id(&entry.name)
            .ok_or_else(|| ModelError::Checkpoint(format!("unknown parameter {}", entry.name)))?;
        if model.store.get(id).shape() != entry.shape.as_slice() {
            return Err(ModelError::Checkpoint(format!(
                "{}: shape {:?} does not match model shape {:?}",
                entry.name,
                entry.shape,
                model.store.get(id).shape()
            )));
        }
        let n: usize = entry.shape.iter().product();
        let raw = r.take(n * 8)?;
        let data: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        *model.store.get_mut(id) = Tensor::new(entry.shape.clone(), data)?;
    }
    if r.pos != bytes.len() {
        return Err(ModelError::Checkpoint("trailing bytes after payload".into()));
    }
    Ok((model, m.epoch))
}

impl Summarizer {
    /// Errors unless `ast` and `comment` are the vocabularies this model was
    /// built with.
    pub fn check_vocab(&self, ast: &Vocab, comment: &Vocab) -> Result<(), ModelError> {
        for (side, mine, theirs) in [("AST", &self.ast_vocab, ast), ("comment", &self.comment_vocab, comment)] {
            let (e, f) = (mine.fingerprint(), theirs.fingerprint());
            if e != f {
                return Err(ModelError::VocabMismatch {
                    side,
                    expected: e,
                    found: f,
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::network::tests::tiny_model;
    use crate::tree::EncoderKind;

    #[test]
    fn round_trip_is_exact_and_deterministic() {
        for kind in EncoderKind::ALL {
            let (m, prepared) = tiny_model(kind, 2, 3);
            let bytes = save_checkpoint(&m, Some(4));
            assert_eq!(bytes, save_checkpoint(&m, Some(4)));
            let (back, epoch) = load_checkpoint(&bytes).unwrap();
            assert_eq!(epoch, Some(4));
            assert_eq!(back.store, m.store);
            assert_eq!(back.config, m.config);
            assert_eq!(back.ast_vocab, m.ast_vocab);
            let b: Vec<_> = prepared.iter().collect();
            assert_eq!(back.loss(&b).unwrap(), m.loss(&b).unwrap());
        }
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let (m, _) = tiny_model(EncoderKind::ChildSum, 1, 2);
        let bytes = save_checkpoint(&m, None);
        assert!(load_checkpoint(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(load_checkpoint(&bad).is_err());
        let mut extra = bytes;
        extra.push(0);
        assert!(load_checkpoint(&extra).is_err());
    }

    #[test]
    fn vocab_mismatch_names_both_hashes() {
        let (m, _) = tiny_model(EncoderKind::ChildSum, 1, 2);
        let other = Vocab::from_entries(VocabSide::Comment, vec![("zebra".into(), 1)]);
        let err = m.check_vocab(&m.ast_vocab, &other).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(&m.comment_vocab.fingerprint()) && msg.contains(&other.fingerprint()), "{msg}");
        m.check_vocab(&m.ast_vocab, &m.comment_vocab).unwrap();
    }
}
