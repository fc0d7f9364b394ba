//! Ordered abstract syntax trees and the transformations the encoders need.
//!
//! Node order among siblings is significant and is preserved by every
//! operation here. An [`Ast`] always stores its nodes in pre-order with the
//! root at index 0, so two trees are structurally equal exactly when their
//! node arrays are equal.

mod binarize;
mod json;
mod linearize;
pub mod mini;
mod normalize;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use binarize::{binarize, debinarize, BinaryAst, BinaryNode};
pub use json::{emit_json, from_json_value, parse_json_ast, to_json_value};
pub use linearize::{delinearize, linearize, LinearToken};
pub use mini::{parse_mini_source, MiniParseError};
pub use normalize::{normalize_labels, IndexedAst};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    Syntax,
    Identifier,
    StringLiteral,
    NumberLiteral,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Syntax => "syntax",
            NodeKind::Identifier => "identifier",
            NodeKind::StringLiteral => "string-literal",
            NodeKind::NumberLiteral => "number-literal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "syntax" => NodeKind::Syntax,
            "identifier" => NodeKind::Identifier,
            "string-literal" => NodeKind::StringLiteral,
            "number-literal" => NodeKind::NumberLiteral,
            _ => return None,
        })
    }

    pub fn is_literal(self) -> bool {
        matches!(self, NodeKind::StringLiteral | NodeKind::NumberLiteral)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AstNode {
    pub label: String,
    pub kind: NodeKind,
    pub children: Vec<usize>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AstError {
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("AST node at {path} is not a JSON object")]
    NotAnObject { path: String },
    #[error("AST node at {path} is missing field {field:?}")]
    MissingField { path: String, field: &'static str },
    #[error("AST node at {path} has field {field:?} of the wrong type")]
    WrongType { path: String, field: &'static str },
    #[error("AST node at {path} has unknown kind {kind:?}")]
    UnknownKind { path: String, kind: String },
    #[error("tree has no nodes")]
    Empty,
    #[error("child index {index} out of range ({len} nodes)")]
    BadIndex { index: usize, len: usize },
    #[error("node {node} has more than one parent")]
    MultipleParents { node: usize },
    #[error("root {root} has a parent")]
    RootHasParent { root: usize },
    #[error("node {node} is unreachable from the root (cycle or forest)")]
    Unreachable { node: usize },
    #[error("binary tree root has a right sibling")]
    RootSibling,
    #[error("linearized sequence is malformed at token {position}: {reason}")]
    BadLinearization { position: usize, reason: &'static str },
}

/// Ordered rooted tree stored in pre-order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Ast {
    nodes: Vec<AstNode>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AstStats {
    pub node_count: usize,
    pub max_degree: usize,
    pub depth: usize,
}

impl Ast {
    pub fn leaf(label: impl Into<String>, kind: NodeKind) -> Self {
        Self {
            nodes: vec![AstNode {
                label: label.into(),
                kind,
                children: Vec::new(),
            }],
        }
    }

    /// Builds a node over already-built subtrees, in order.
    pub fn node(label: impl Into<String>, kind: NodeKind, children: Vec<Ast>) -> Self {
        let total = 1 + children.iter().map(Ast::len).sum::<usize>();
        let mut nodes = Vec::with_capacity(total);
        nodes.push(AstNode {
            label: label.into(),
            kind,
            children: Vec::with_capacity(children.len()),
        });
        for child in children {
            let offset = nodes.len();
            nodes[0].children.push(offset);
            nodes.extend(child.nodes.into_iter().map(|mut n| {
                n.children.iter_mut().for_each(|c| *c += offset);
                n
            }));
        }
        Self { nodes }
    }

    pub fn syntax(label: impl Into<String>, children: Vec<Ast>) -> Self {
        Self::node(label, NodeKind::Syntax, children)
    }

    /// Validates an arbitrary node table and re-indexes it into pre-order.
    pub fn from_nodes(nodes: Vec<AstNode>, root: usize) -> Result<Self, AstError> {
        let n = nodes.len();
        if n == 0 {
            return Err(AstError::Empty);
        }
        if root >= n {
            return Err(AstError::BadIndex { index: root, len: n });
        }
        let mut parent = vec![None; n];
        for (i, node) in nodes.iter().enumerate() {
            for &c in &node.children {
                if c >= n {
                    return Err(AstError::BadIndex { index: c, len: n });
                }
                if parent[c].is_some() {
                    return Err(AstError::MultipleParents { node: c });
                }
                parent[c] = Some(i);
            }
        }
        if parent[root].is_some() {
            return Err(AstError::RootHasParent { root });
        }
        let mut order = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        let mut stack = vec![root];
        while let Some(i) = stack.pop() {
            seen[i] = true;
            order.push(i);
            stack.extend(nodes[i].children.iter().rev());
        }
        if let Some(node) = seen.iter().position(|s| !s) {
            return Err(AstError::Unreachable { node });
        }
        let mut new_index = vec![0; n];
        for (new, &old) in order.iter().enumerate() {
            new_index[old] = new;
        }
        let mut slots: Vec<Option<AstNode>> = nodes.into_iter().map(Some).collect();
        let nodes = order
            .iter()
            .map(|&old| {
                let mut node = slots[old].take().expect("visited once");
                node.children.iter_mut().for_each(|c| *c = new_index[*c]);
                node
            })
            .collect();
        Ok(Self { nodes })
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[AstNode] {
        &self.nodes
    }

    pub fn node_at(&self, i: usize) -> &AstNode {
        &self.nodes[i]
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.nodes[i].children
    }

    pub fn label(&self, i: usize) -> &str {
        &self.nodes[i].label
    }

    pub fn kind(&self, i: usize) -> NodeKind {
        self.nodes[i].kind
    }

    pub(crate) fn set_label(&mut self, i: usize, label: String) {
        self.nodes[i].label = label;
    }

    /// Children-before-parent order; the root comes last.
    pub fn post_order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![(0usize, false)];
        while let Some((i, expanded)) = stack.pop() {
            if expanded {
                out.push(i);
            } else {
                stack.push((i, true));
                stack.extend(self.nodes[i].children.iter().rev().map(|&c| (c, false)));
            }
        }
        out
    }

    pub fn parents(&self) -> Vec<Option<usize>> {
        let mut parent = vec![None; self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            for &c in &n.children {
                parent[c] = Some(i);
            }
        }
        parent
    }

    /// Number of nodes in the subtree rooted at `i` (pre-order makes the
    /// subtree a contiguous range starting at `i`).
    pub fn subtree_len(&self, i: usize) -> usize {
        let mut end = i;
        let mut stack = vec![i];
        while let Some(j) = stack.pop() {
            end = end.max(j);
            stack.extend(&self.nodes[j].children);
        }
        end - i + 1
    }

    pub fn subtree(&self, i: usize) -> Ast {
        let len = self.subtree_len(i);
        let nodes = self.nodes[i..i + len]
            .iter()
            .map(|n| AstNode {
                label: n.label.clone(),
                kind: n.kind,
                children: n.children.iter().map(|c| c - i).collect(),
            })
            .collect();
        Ast { nodes }
    }

    pub fn stats(&self) -> AstStats {
        ast_stats(self)
    }
}

pub fn ast_stats(ast: &Ast) -> AstStats {
    let mut depth = vec![1usize; ast.len()];
    // Pre-order: a parent is always visited before its children.
    for i in 0..ast.len() {
        for &c in ast.children(i) {
            depth[c] = depth[i] + 1;
        }
    }
    AstStats {
        node_count: ast.len(),
        max_degree: ast.nodes.iter().map(|n| n.children.len()).max().unwrap_or(0),
        depth: depth.into_iter().max().unwrap_or(1),
    }
}

#[cfg(test)]
pub(crate) mod gen {
    //! Random tree generator for round-trip properties.
    use super::*;
    use rand::Rng;

    const LABELS: [&str; 6] = ["If", "Call", "x", "y", "Block", "+"];

    pub fn random_tree<R: Rng>(rng: &mut R, max_nodes: usize) -> Ast {
        let n = rng.gen_range(1..=max_nodes);
        let mut nodes: Vec<AstNode> = (0..n)
            .map(|_| {
                let kind = match rng.gen_range(0..4) {
                    0 => NodeKind::Syntax,
                    1 => NodeKind::Identifier,
                    2 => NodeKind::StringLiteral,
                    _ => NodeKind::NumberLiteral,
                };
                AstNode {
                    label: LABELS[rng.gen_range(0..LABELS.len())].to_string(),
                    kind,
                    children: Vec::new(),
                }
            })
            .collect();
        // Random recursive tree: node i attaches to a uniformly chosen earlier node.
        for i in 1..n {
            let p = rng.gen_range(0..i);
            nodes[p].children.push(i);
        }
        // Shuffle sibling order to exercise ordering.
        for node in &mut nodes {
            let k = node.children.len();
            for a in (1..k).rev() {
                let b = rng.gen_range(0..=a);
                node.children.swap(a, b);
            }
        }
        Ast::from_nodes(nodes, 0).expect("generated tree is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(l: &str) -> Ast {
        Ast::leaf(l, NodeKind::Identifier)
    }

    #[test]
    fn stats_of_small_trees() {
        let l = leaf("x");
        assert_eq!(
            l.stats(),
            AstStats {
                node_count: 1,
                max_degree: 0,
                depth: 1
            }
        );
        let wide = Ast::syntax("R", (0..5).map(|i| leaf(&i.to_string())).collect());
        assert_eq!(
            wide.stats(),
            AstStats {
                node_count: 6,
                max_degree: 5,
                depth: 2
            }
        );
    }

    #[test]
    fn from_nodes_reindexes_to_preorder() {
        let nodes = vec![
            AstNode {
                label: "b".into(),
                kind: NodeKind::Identifier,
                children: vec![],
            },
            AstNode {
                label: "R".into(),
                kind: NodeKind::Syntax,
                children: vec![2, 0],
            },
            AstNode {
                label: "a".into(),
                kind: NodeKind::Identifier,
                children: vec![],
            },
        ];
        let t = Ast::from_nodes(nodes, 1).unwrap();
        assert_eq!(t, Ast::syntax("R", vec![leaf("a"), leaf("b")]));
    }

    #[test]
    fn from_nodes_rejects_cycles_and_sharing() {
        let mk = |children: Vec<usize>| AstNode {
            label: "n".into(),
            kind: NodeKind::Syntax,
            children,
        };
        // 1 -> 2 -> 1 is a cycle disconnected from root 0.
        let err = Ast::from_nodes(vec![mk(vec![]), mk(vec![2]), mk(vec![1])], 0).unwrap_err();
        assert!(matches!(err, AstError::Unreachable { .. }));
        let err = Ast::from_nodes(vec![mk(vec![1]), mk(vec![0])], 0).unwrap_err();
        assert!(matches!(err, AstError::RootHasParent { .. }));
        let err = Ast::from_nodes(vec![mk(vec![1, 2]), mk(vec![2]), mk(vec![])], 0).unwrap_err();
        assert!(matches!(err, AstError::MultipleParents { node: 2 }));
        let err = Ast::from_nodes(vec![mk(vec![5])], 0).unwrap_err();
        assert!(matches!(err, AstError::BadIndex { .. }));
    }

    #[test]
    fn post_order_children_first() {
        let t = Ast::syntax("R", vec![Ast::syntax("A", vec![leaf("x")]), leaf("y")]);
        let order = t.post_order();
        assert_eq!(order, vec![2, 1, 3, 0]);
        assert_eq!(t.subtree_len(1), 2);
        assert_eq!(t.subtree(1), Ast::syntax("A", vec![leaf("x")]));
    }
}
