use super::{Ast, NodeKind};
use crate::corpus::{Vocab, UNK_ID, UNK_NUM, UNK_STR};

/// A tree whose labels have been mapped into an AST vocabulary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexedAst {
    pub ast: Ast,
    /// Vocabulary id of each node's (possibly replaced) label, by node index.
    pub ids: Vec<usize>,
}

fn unk_for(kind: NodeKind) -> Option<&'static str> {
    match kind {
        NodeKind::Syntax => None,
        NodeKind::Identifier => Some(UNK_ID),
        NodeKind::StringLiteral => Some(UNK_STR),
        NodeKind::NumberLiteral => Some(UNK_NUM),
    }
}

/// Replaces out-of-vocabulary identifiers and literals by their class UNK.
///
/// Syntax labels are kept as they are; one missing from the vocabulary (only
/// possible with a vocabulary built on other data) is indexed as `<UNK-ID>`.
pub fn normalize_labels(ast: &Ast, vocab: &Vocab) -> IndexedAst {
    let mut out = ast.clone();
    let mut ids = Vec::with_capacity(ast.len());
    let fallback = vocab.id(UNK_ID).expect("AST vocab has <UNK-ID>");
    for i in 0..ast.len() {
        let label = ast.label(i);
        let kind = ast.kind(i);
        match (vocab.id(label), unk_for(kind)) {
            (Some(id), _) => ids.push(id),
            (None, Some(unk)) => {
                out.set_label(i, unk.to_string());
                ids.push(vocab.id(unk).expect("AST vocab has UNK classes"));
            }
            (None, None) => ids.push(fallback),
        }
    }
    IndexedAst { ast: out, ids }
}
