use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use super::{CorpusError, Sample};
use crate::ast::NodeKind;

pub const PAD: &str = "<PAD>";
pub const BOS: &str = "<BOS>";
pub const EOS: &str = "<EOS>";
pub const UNK_ID: &str = "<UNK-ID>";
pub const UNK_STR: &str = "<UNK-STR>";
pub const UNK_NUM: &str = "<UNK-NUM>";
pub const UNK: &str = "<UNK>";
/// Bracket tokens of the linearized traversal.
pub const OPEN: &str = "(";
pub const CLOSE: &str = ")";

pub const PAD_ID: usize = 0;
pub const BOS_ID: usize = 1;
pub const EOS_ID: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VocabSide {
    /// AST node labels plus the traversal brackets.
    Ast,
    /// Comment words.
    Comment,
}

impl VocabSide {
    pub fn specials(self) -> &'static [&'static str] {
        match self {
            VocabSide::Ast => &[PAD, BOS, EOS, UNK_ID, UNK_STR, UNK_NUM, OPEN, CLOSE],
            VocabSide::Comment => &[PAD, BOS, EOS, UNK],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VocabLimits {
    pub identifiers: usize,
    pub literals: usize,
    pub comment_words: usize,
}

impl Default for VocabLimits {
    fn default() -> Self {
        Self {
            identifiers: 30_000,
            literals: 1_000,
            comment_words: 30_000,
        }
    }
}

/// Dense symbol ↔ id mapping. Specials occupy the lowest ids; the remaining
/// entries are sorted by descending frequency, ties broken lexicographically.
#[derive(Clone, Debug, PartialEq)]
pub struct Vocab {
    side: VocabSide,
    symbols: Vec<String>,
    freqs: Vec<u64>,
    index: HashMap<String, usize>,
}

impl Vocab {
    /// Builds from `(symbol, frequency)` pairs already in id order.
    pub fn from_entries(side: VocabSide, entries: Vec<(String, u64)>) -> Self {
        let mut symbols: Vec<String> = side.specials().iter().map(|s| s.to_string()).collect();
        let mut freqs = vec![0; symbols.len()];
        let mut index: HashMap<String, usize> = symbols.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        for (sym, f) in entries {
            if index.contains_key(&sym) {
                continue;
            }
            index.insert(sym.clone(), symbols.len());
            symbols.push(sym);
            freqs.push(f);
        }
        Self {
            side,
            symbols,
            freqs,
            index,
        }
    }

    fn from_counts(side: VocabSide, counts: BTreeMap<String, u64>) -> Self {
        let mut entries: Vec<(String, u64)> = counts.into_iter().collect();
        sort_entries(&mut entries);
        Self::from_entries(side, entries)
    }

    pub fn side(&self) -> VocabSide {
        self.side
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn special_count(&self) -> usize {
        self.side.specials().len()
    }

    pub fn id(&self, symbol: &str) -> Option<usize> {
        self.index.get(symbol).copied()
    }

    pub fn contains(&self, symbol: &str) -> bool {
        self.index.contains_key(symbol)
    }

    pub fn symbol(&self, id: usize) -> &str {
        &self.symbols[id]
    }

    /// Non-special entries in id order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, u64)> {
        let k = self.special_count();
        self.symbols[k..].iter().map(String::as_str).zip(self.freqs[k..].iter().copied())
    }

    /// Comment-side encoding: unknown words map to `<UNK>`.
    pub fn encode_word(&self, word: &str) -> usize {
        self.id(word).unwrap_or_else(|| self.id(UNK).expect("comment vocab has <UNK>"))
    }

    /// Words for an id sequence, stopping at EOS and skipping PAD/BOS.
    pub fn decode(&self, ids: &[usize]) -> Vec<String> {
        ids.iter()
            .take_while(|&&i| i != EOS_ID)
            .filter(|&&i| i != PAD_ID && i != BOS_ID)
            .map(|&i| self.symbols[i].clone())
            .collect()
    }

    /// `symbol<TAB>frequency` per line, specials omitted.
    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        for (sym, f) in self.entries() {
            writeln!(s, "{sym}\t{f}").expect("string write");
        }
        s
    }

    pub fn from_tsv(side: VocabSide, text: &str) -> Result<Self, CorpusError> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let (sym, freq) = line.rsplit_once('\t').ok_or_else(|| CorpusError::VocabLine {
                line: n + 1,
                reason: "missing tab".into(),
            })?;
            let freq = freq.parse::<u64>().map_err(|e| CorpusError::VocabLine {
                line: n + 1,
                reason: e.to_string(),
            })?;
            entries.push((sym.to_string(), freq));
        }
        Ok(Self::from_entries(side, entries))
    }

    /// SHA-256 of the TSV rendering, used to match checkpoints to data.
    pub fn fingerprint(&self) -> String {
        let side = match self.side {
            VocabSide::Ast => "ast",
            VocabSide::Comment => "comment",
        };
        let mut h = Sha256::new();
        h.update(side.as_bytes());
        h.update(b"\n");
        h.update(self.to_tsv().as_bytes());
        hex::encode(h.finalize())
    }
}

fn sort_entries(entries: &mut [(String, u64)]) {
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
}

fn top_k(counts: &BTreeMap<String, u64>, k: usize) -> Vec<String> {
    let mut v: Vec<(String, u64)> = counts.iter().map(|(s, c)| (s.clone(), *c)).collect();
    sort_entries(&mut v);
    v.into_iter().take(k).map(|(s, _)| s).collect()
}

/// Frequency-truncated AST and comment vocabularies.
///
/// Syntax labels are always kept; identifiers and literals (strings and
/// numbers share one budget) keep their most frequent entries.
pub fn build_vocab(samples: &[Sample], limits: VocabLimits) -> Result<(Vocab, Vocab), CorpusError> {
    if samples.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let mut syntax: BTreeMap<String, u64> = BTreeMap::new();
    let mut idents: BTreeMap<String, u64> = BTreeMap::new();
    let mut literals: BTreeMap<String, u64> = BTreeMap::new();
    let mut words: BTreeMap<String, u64> = BTreeMap::new();
    for s in samples {
        for node in s.ast.nodes() {
            let bucket = match node.kind {
                NodeKind::Syntax => &mut syntax,
                NodeKind::Identifier => &mut idents,
                NodeKind::StringLiteral | NodeKind::NumberLiteral => &mut literals,
            };
            *bucket.entry(node.label.clone()).or_default() += 1;
        }
        for w in &s.comment {
            *words.entry(w.clone()).or_default() += 1;
        }
    }

    let mut keep: BTreeMap<String, u64> = BTreeMap::new();
    for sym in syntax
        .keys()
        .cloned()
        .chain(top_k(&idents, limits.identifiers))
        .chain(top_k(&literals, limits.literals))
    {
        let total = syntax.get(&sym).copied().unwrap_or(0)
            + idents.get(&sym).copied().unwrap_or(0)
            + literals.get(&sym).copied().unwrap_or(0);
        keep.insert(sym, total);
    }
    let ast_vocab = Vocab::from_counts(VocabSide::Ast, keep);

    let kept_words: BTreeMap<String, u64> = top_k(&words, limits.comment_words)
        .into_iter()
        .map(|w| {
            let c = words[&w];
            (w, c)
        })
        .collect();
    let comment_vocab = Vocab::from_counts(VocabSide::Comment, kept_words);
    Ok((ast_vocab, comment_vocab))
}
