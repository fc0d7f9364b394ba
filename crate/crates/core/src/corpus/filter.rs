use serde::{Deserialize, Serialize};

use super::{RawRecord, Sample};
use crate::ast::{ast_stats, mini, Ast};

pub const MAX_AST_NODES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DropReason {
    Constructor,
    Setter,
    Getter,
    Tester,
    ShortComment,
    TooLarge,
}

impl DropReason {
    pub const ALL: [DropReason; 6] = [
        DropReason::Constructor,
        DropReason::Setter,
        DropReason::Getter,
        DropReason::Tester,
        DropReason::ShortComment,
        DropReason::TooLarge,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::Constructor => "constructor",
            DropReason::Setter => "setter",
            DropReason::Getter => "getter",
            DropReason::Tester => "tester",
            DropReason::ShortComment => "short-comment",
            DropReason::TooLarge => "too-large",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FilterConfig {
    pub max_nodes: usize,
    pub min_comment_words: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            max_nodes: MAX_AST_NODES,
            min_comment_words: 2,
        }
    }
}

/// What the filter needs to know about the method besides its tree.
#[derive(Clone, Copy, Debug, Default)]
pub struct MethodInfo<'a> {
    pub name: &'a str,
    pub type_name: Option<&'a str>,
    /// Body statement count; derived from mini-language trees when absent.
    pub statements: Option<usize>,
}

/// `prefix` followed by an uppercase letter, digit or underscore.
fn has_camel_prefix(name: &str, prefix: &str) -> bool {
    name.strip_prefix(prefix)
        .and_then(|rest| rest.chars().next())
        .is_some_and(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_')
}

/// Text up to and including the first `.`, `!` or `?` that is followed by
/// whitespace or the end; Javadoc block tags (`@param` ...) end the text.
pub fn first_sentence(raw: &str) -> &str {
    let mut text = raw.trim();
    if let Some(at) = text
        .char_indices()
        .find(|&(i, c)| c == '@' && (i == 0 || text[..i].ends_with(char::is_whitespace)))
        .map(|(i, _)| i)
    {
        text = text[..at].trim_end();
    }
    let mut iter = text.char_indices().peekable();
    while let Some((i, c)) = iter.next() {
        if matches!(c, '.' | '!' | '?') {
            match iter.peek() {
                None => return text,
                Some(&(_, n)) if n.is_whitespace() => return &text[..i + c.len_utf8()],
                _ => {}
            }
        }
    }
    text
}

/// Lowercases and splits on whitespace, emitting each punctuation character
/// as its own token.
pub fn tokenize_comment(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        let mut cur = String::new();
        for c in word.chars() {
            if c.is_alphanumeric() || c == '_' {
                cur.extend(c.to_lowercase());
            } else {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                out.push(c.to_string());
            }
        }
        if !cur.is_empty() {
            out.push(cur);
        }
    }
    out
}

fn word_count(tokens: &[String]) -> usize {
    tokens.iter().filter(|t| t.chars().any(char::is_alphanumeric)).count()
}

/// Applies the dataset rules in a fixed order and returns the first that
/// fires, or the cleaned sample.
pub fn filter_sample(
    id: &str,
    ast: &Ast,
    method: MethodInfo<'_>,
    raw_comment: &str,
    config: FilterConfig,
) -> Result<Sample, DropReason> {
    let name = method.name;
    if method.type_name.is_some_and(|t| !t.is_empty() && t == name) {
        return Err(DropReason::Constructor);
    }
    if name.starts_with("test") || name.starts_with("Test") {
        return Err(DropReason::Tester);
    }
    let statements = method.statements.or_else(|| mini::statement_count(ast));
    let small_body = statements.is_some_and(|s| s <= 1);
    if small_body && has_camel_prefix(name, "set") {
        return Err(DropReason::Setter);
    }
    if small_body && (has_camel_prefix(name, "get") || has_camel_prefix(name, "is")) {
        return Err(DropReason::Getter);
    }
    let comment = tokenize_comment(first_sentence(raw_comment));
    if word_count(&comment) < config.min_comment_words {
        return Err(DropReason::ShortComment);
    }
    let stats = ast_stats(ast);
    if stats.node_count > config.max_nodes {
        return Err(DropReason::TooLarge);
    }
    Ok(Sample {
        id: id.to_string(),
        ast: ast.clone(),
        comment,
        stats,
    })
}

pub fn filter_record(record: &RawRecord, config: FilterConfig) -> Result<Sample, DropReason> {
    let info = MethodInfo {
        name: &record.method_name,
        type_name: record.type_name.as_deref(),
        statements: record.statements,
    };
    filter_sample(&record.id, &record.ast, info, &record.comment, config)
}
