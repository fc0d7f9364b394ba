use std::fmt;

use super::{Ast, AstError, AstNode, NodeKind};

/// One token of a bracketed pre-order traversal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum LinearToken {
    Open,
    Close,
    Label { label: String, kind: NodeKind, node: usize },
}

impl LinearToken {
    pub fn text(&self) -> &str {
        match self {
            LinearToken::Open => "(",
            LinearToken::Close => ")",
            LinearToken::Label { label, .. } => label,
        }
    }
}

impl fmt::Display for LinearToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.text())
    }
}

/// `( label child* )` for every node, in pre-order.
///
/// A label always follows an opening bracket, so labels that are themselves
/// brackets remain unambiguous.
pub fn linearize(ast: &Ast) -> Vec<LinearToken> {
    let mut out = Vec::with_capacity(ast.len() * 3);
    let mut stack = vec![(ast.root(), false)];
    while let Some((i, closing)) = stack.pop() {
        if closing {
            out.push(LinearToken::Close);
            continue;
        }
        out.push(LinearToken::Open);
        out.push(LinearToken::Label {
            label: ast.label(i).to_string(),
            kind: ast.kind(i),
            node: i,
        });
        stack.push((i, true));
        stack.extend(ast.children(i).iter().rev().map(|&c| (c, false)));
    }
    out
}

pub fn delinearize(tokens: &[LinearToken]) -> Result<Ast, AstError> {
    let bad = |position, reason| AstError::BadLinearization { position, reason };
    let mut nodes: Vec<AstNode> = Vec::new();
    let mut open: Vec<usize> = Vec::new();
    let mut pos = 0;
    while pos < tokens.len() {
        match &tokens[pos] {
            LinearToken::Open => {
                if nodes.len() > 0 && open.is_empty() {
                    return Err(bad(pos, "content after the root closed"));
                }
                let Some(LinearToken::Label { label, kind, .. }) = tokens.get(pos + 1) else {
                    return Err(bad(pos + 1, "expected a label after '('"));
                };
                let id = nodes.len();
                nodes.push(AstNode {
                    label: label.clone(),
                    kind: *kind,
                    children: Vec::new(),
                });
                if let Some(&p) = open.last() {
                    nodes[p].children.push(id);
                }
                open.push(id);
                pos += 2;
            }
            LinearToken::Close => {
                if open.pop().is_none() {
                    return Err(bad(pos, "unbalanced ')'"));
                }
                pos += 1;
            }
            LinearToken::Label { .. } => return Err(bad(pos, "label without '('")),
        }
    }
    if !open.is_empty() {
        return Err(bad(tokens.len(), "unclosed '('"));
    }
    Ast::from_nodes(nodes, 0)
}
