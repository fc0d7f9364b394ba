//! Parser for the small imperative language used by the fixtures.
//!
//! Grammar (see `docs/mini-language.md`):
//!
//! ```text
//! program  := function+
//! function := "fn" IDENT "(" [IDENT ("," IDENT)*] ")" block
//! block    := "{" stmt* "}"
//! stmt     := "if" "(" expr ")" block ["else" (block | if-stmt)]
//!           | "while" "(" expr ")" block
//!           | "return" [expr] ";"
//!           | IDENT "=" expr ";"
//!           | expr ";"
//! expr     := binary expression over || && == != < <= > >= + - * / %
//!             with unary ! and -, calls IDENT "(" args ")", parentheses,
//!             integers, double-quoted strings and identifiers
//! ```
//!
//! Node labels: `FunctionDef`, `Params`, `If`, `Then`, `Else`, `While`,
//! `Body`, `Return`, `Assign`, `ExprStmt`, `Call`, `Program` (only when a
//! source holds several functions); operators are labeled by their symbol.

use thiserror::Error;

use super::{Ast, NodeKind};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{line}:{col}: {message}")]
pub struct MiniParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(String),
    Str(String),
    Kw(&'static str),
    Punct(&'static str),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier {s:?}"),
            Tok::Int(s) => format!("integer {s}"),
            Tok::Str(s) => format!("string {s}"),
            Tok::Kw(k) => format!("keyword {k:?}"),
            Tok::Punct(p) => format!("{p:?}"),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

const KEYWORDS: [&str; 5] = ["fn", "if", "else", "while", "return"];
const PUNCT: [&str; 21] = [
    "==", "!=", "<=", ">=", "&&", "||", "(", ")", "{", "}", ",", ";", "=", "<", ">", "+", "-", "*", "/", "%", "!",
];

struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Spanned>, MiniParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let err = |line, col, message: String| MiniParseError { line, col, message };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (start_line, start_col) = (line, col);
        if c.is_ascii_alphabetic() || c == '_' {
            let s: String = chars[i..]
                .iter()
                .take_while(|ch| ch.is_ascii_alphanumeric() || **ch == '_')
                .collect();
            i += s.len();
            col += s.len();
            let tok = match KEYWORDS.iter().find(|k| **k == s) {
                Some(k) => Tok::Kw(k),
                None => Tok::Ident(s),
            };
            out.push(Spanned {
                tok,
                line: start_line,
                col: start_col,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let s: String = chars[i..].iter().take_while(|ch| ch.is_ascii_digit()).collect();
            i += s.len();
            col += s.len();
            if chars.get(i).is_some_and(|ch| ch.is_ascii_alphabetic() || *ch == '_') {
                return Err(err(line, col, "identifier cannot start with a digit".into()));
            }
            out.push(Spanned {
                tok: Tok::Int(s),
                line: start_line,
                col: start_col,
            });
            continue;
        }
        if c == '"' {
            let mut s = String::from('"');
            i += 1;
            col += 1;
            loop {
                match chars.get(i) {
                    None | Some('\n') => {
                        return Err(err(start_line, start_col, "unterminated string literal".into()));
                    }
                    Some('\\') => {
                        let Some(&next) = chars.get(i + 1) else {
                            return Err(err(start_line, start_col, "unterminated string literal".into()));
                        };
                        s.push('\\');
                        s.push(next);
                        i += 2;
                        col += 2;
                    }
                    Some('"') => {
                        s.push('"');
                        i += 1;
                        col += 1;
                        break;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                        col += 1;
                    }
                }
            }
            out.push(Spanned {
                tok: Tok::Str(s),
                line: start_line,
                col: start_col,
            });
            continue;
        }
        let rest: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let Some(p) = PUNCT.iter().find(|p| rest.starts_with(**p)) else {
            return Err(err(line, col, format!("unexpected character {c:?}")));
        };
        i += p.len();
        col += p.len();
        out.push(Spanned {
            tok: Tok::Punct(p),
            line: start_line,
            col: start_col,
        });
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

/// Binary operators by precedence level, loosest first.
const LEVELS: [&[&str]; 6] = [
    &["||"],
    &["&&"],
    &["==", "!="],
    &["<", "<=", ">", ">="],
    &["+", "-"],
    &["*", "/", "%"],
];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn error<T>(&self, message: String) -> Result<T, MiniParseError> {
        let t = &self.toks[self.pos];
        Err(MiniParseError {
            line: t.line,
            col: t.col,
            message,
        })
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Kw(q) if *q == k)
    }

    fn expect_punct(&mut self, p: &'static str) -> Result<(), MiniParseError> {
        if self.is_punct(p) {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected {p:?}, found {}", self.peek().describe()))
        }
    }

    fn expect_kw(&mut self, k: &'static str) -> Result<(), MiniParseError> {
        if self.is_kw(k) {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected keyword {k:?}, found {}", self.peek().describe()))
        }
    }

    fn ident(&mut self) -> Result<String, MiniParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => self.error(format!("expected identifier, found {}", other.describe())),
        }
    }

    fn program(&mut self) -> Result<Ast, MiniParseError> {
        let mut fns = Vec::new();
        while *self.peek() != Tok::Eof {
            fns.push(self.function()?);
        }
        match fns.len() {
            0 => self.error("expected at least one function".into()),
            1 => Ok(fns.pop().expect("one")),
            _ => Ok(Ast::syntax("Program", fns)),
        }
    }

    fn function(&mut self) -> Result<Ast, MiniParseError> {
        self.expect_kw("fn")?;
        let name = self.ident()?;
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if !self.is_punct(")") {
            loop {
                params.push(Ast::leaf(self.ident()?, NodeKind::Identifier));
                if self.is_punct(",") {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        let body = self.block()?;
        let mut children = vec![Ast::leaf(name, NodeKind::Identifier), Ast::syntax("Params", params)];
        children.extend(body);
        Ok(Ast::syntax("FunctionDef", children))
    }

    fn block(&mut self) -> Result<Vec<Ast>, MiniParseError> {
        self.expect_punct("{")?;
        let mut stmts = Vec::new();
        while !self.is_punct("}") {
            if *self.peek() == Tok::Eof {
                return self.error("expected \"}\", found end of input".into());
            }
            stmts.push(self.statement()?);
        }
        self.bump();
        Ok(stmts)
    }

    fn statement(&mut self) -> Result<Ast, MiniParseError> {
        if self.is_kw("if") {
            return self.if_statement();
        }
        if self.is_kw("while") {
            self.bump();
            self.expect_punct("(")?;
            let cond = self.expr()?;
            self.expect_punct(")")?;
            let body = self.block()?;
            return Ok(Ast::syntax("While", vec![cond, Ast::syntax("Body", body)]));
        }
        if self.is_kw("return") {
            self.bump();
            let mut children = Vec::new();
            if !self.is_punct(";") {
                children.push(self.expr()?);
            }
            self.expect_punct(";")?;
            return Ok(Ast::syntax("Return", children));
        }
        if matches!(self.peek(), Tok::Ident(_)) && matches!(self.peek_at(1), Tok::Punct("=")) {
            let name = self.ident()?;
            self.bump();
            let value = self.expr()?;
            self.expect_punct(";")?;
            return Ok(Ast::syntax(
                "Assign",
                vec![Ast::leaf(name, NodeKind::Identifier), value],
            ));
        }
        let e = self.expr()?;
        self.expect_punct(";")?;
        Ok(Ast::syntax("ExprStmt", vec![e]))
    }

    fn if_statement(&mut self) -> Result<Ast, MiniParseError> {
        self.expect_kw("if")?;
        self.expect_punct("(")?;
        let cond = self.expr()?;
        self.expect_punct(")")?;
        let then = self.block()?;
        let mut children = vec![cond, Ast::syntax("Then", then)];
        if self.is_kw("else") {
            self.bump();
            let other = if self.is_kw("if") {
                vec![self.if_statement()?]
            } else {
                self.block()?
            };
            children.push(Ast::syntax("Else", other));
        }
        Ok(Ast::syntax("If", children))
    }

    fn expr(&mut self) -> Result<Ast, MiniParseError> {
        self.binary(0)
    }

    fn binary(&mut self, level: usize) -> Result<Ast, MiniParseError> {
        if level == LEVELS.len() {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        loop {
            let op = match self.peek() {
                Tok::Punct(p) if LEVELS[level].contains(p) => *p,
                _ => break,
            };
            self.bump();
            let rhs = self.binary(level + 1)?;
            lhs = Ast::syntax(op, vec![lhs, rhs]);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Ast, MiniParseError> {
        for op in ["!", "-"] {
            if self.is_punct(op) {
                self.bump();
                let operand = self.unary()?;
                return Ok(Ast::syntax(op, vec![operand]));
            }
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Ast, MiniParseError> {
        match self.peek().clone() {
            Tok::Int(s) => {
                self.bump();
                Ok(Ast::leaf(s, NodeKind::NumberLiteral))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Ast::leaf(s, NodeKind::StringLiteral))
            }
            Tok::Ident(name) => {
                self.bump();
                if !self.is_punct("(") {
                    return Ok(Ast::leaf(name, NodeKind::Identifier));
                }
                self.bump();
                let mut children = vec![Ast::leaf(name, NodeKind::Identifier)];
                if !self.is_punct(")") {
                    loop {
                        children.push(self.expr()?);
                        if self.is_punct(",") {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                }
                self.expect_punct(")")?;
                Ok(Ast::syntax("Call", children))
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            other => self.error(format!("expected expression, found {}", other.describe())),
        }
    }
}

pub fn parse_mini_source(src: &str) -> Result<Ast, MiniParseError> {
    let toks = lex(src)?;
    Parser { toks, pos: 0 }.program()
}

/// Number of top-level statements in a parsed function (`None` for a
/// multi-function program or a tree not produced by this parser).
pub fn statement_count(ast: &Ast) -> Option<usize> {
    (ast.label(0) == "FunctionDef" && ast.children(0).len() >= 2).then(|| ast.children(0).len() - 2)
}
