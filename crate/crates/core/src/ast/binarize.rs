//! Left-child/right-sibling binarization.
//!
//! Node `i` of the binary tree is node `i` of the source tree: its left slot
//! holds its first child and its right slot its next sibling. The pre-order
//! of the binary tree therefore equals the source pre-order, so node ids
//! (and attention columns) carry over unchanged.

use super::{Ast, AstError, AstNode, NodeKind};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryNode {
    pub label: String,
    pub kind: NodeKind,
    pub left: Option<usize>,
    pub right: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryAst {
    nodes: Vec<BinaryNode>,
}

impl BinaryAst {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_at(&self, i: usize) -> &BinaryNode {
        &self.nodes[i]
    }

    pub fn nodes(&self) -> &[BinaryNode] {
        &self.nodes
    }

    /// `[left, right]`, absent slots as `None`.
    pub fn slots(&self, i: usize) -> [Option<usize>; 2] {
        [self.nodes[i].left, self.nodes[i].right]
    }

    /// Children-before-parent order over the binary structure.
    pub fn post_order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![(0usize, false)];
        while let Some((i, expanded)) = stack.pop() {
            if expanded {
                out.push(i);
                continue;
            }
            stack.push((i, true));
            if let Some(r) = self.nodes[i].right {
                stack.push((r, false));
            }
            if let Some(l) = self.nodes[i].left {
                stack.push((l, false));
            }
        }
        out
    }

    /// Maximum number of occupied slots at any node (at most 2).
    pub fn max_degree(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| n.left.is_some() as usize + n.right.is_some() as usize)
            .max()
            .unwrap_or(0)
    }
}

pub fn binarize(ast: &Ast) -> BinaryAst {
    let mut nodes: Vec<BinaryNode> = ast
        .nodes()
        .iter()
        .map(|n| BinaryNode {
            label: n.label.clone(),
            kind: n.kind,
            left: n.children.first().copied(),
            right: None,
        })
        .collect();
    for n in ast.nodes() {
        for pair in n.children.windows(2) {
            nodes[pair[0]].right = Some(pair[1]);
        }
    }
    BinaryAst { nodes }
}

pub fn debinarize(bin: &BinaryAst) -> Result<Ast, AstError> {
    if bin.nodes.is_empty() {
        return Err(AstError::Empty);
    }
    if bin.nodes[0].right.is_some() {
        return Err(AstError::RootSibling);
    }
    let n = bin.nodes.len();
    let mut nodes: Vec<AstNode> = bin
        .nodes
        .iter()
        .map(|b| AstNode {
            label: b.label.clone(),
            kind: b.kind,
            children: Vec::new(),
        })
        .collect();
    for (i, b) in bin.nodes.iter().enumerate() {
        let mut next = b.left;
        let mut guard = 0;
        while let Some(c) = next {
            if c >= n {
                return Err(AstError::BadIndex { index: c, len: n });
            }
            nodes[i].children.push(c);
            next = bin.nodes[c].right;
            guard += 1;
            if guard > n {
                return Err(AstError::Unreachable { node: c });
            }
        }
    }
    Ast::from_nodes(nodes, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(l: &str) -> Ast {
        Ast::leaf(l, NodeKind::Identifier)
    }

    #[test]
    fn leaf_stays_leaf() {
        let b = binarize(&leaf("x"));
        assert_eq!(b.len(), 1);
        assert_eq!(b.slots(0), [None, None]);
    }

    #[test]
    fn siblings_become_right_chain() {
        let t = Ast::syntax("R", vec![leaf("a"), leaf("b"), leaf("c")]);
        let b = binarize(&t);
        assert_eq!(b.slots(0), [Some(1), None]);
        assert_eq!(b.node_at(1).label, "a");
        assert_eq!(b.slots(1), [None, Some(2)]);
        assert_eq!(b.slots(2), [None, Some(3)]);
        assert_eq!(b.slots(3), [None, None]);
        assert!(b.max_degree() <= 2);
        assert_eq!(debinarize(&b).unwrap(), t);
    }

    #[test]
    fn post_order_visits_slots_first() {
        let t = Ast::syntax("R", vec![Ast::syntax("A", vec![leaf("x")]), leaf("b")]);
        let b = binarize(&t);
        // A's left is x, A's right is b.
        assert_eq!(b.post_order(), vec![2, 3, 1, 0]);
    }

    #[test]
    fn roundtrip_random_trees() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let t = crate::ast::gen::random_tree(&mut rng, 100);
            let b = binarize(&t);
            assert!(b.max_degree() <= 2);
            assert_eq!(debinarize(&b).unwrap(), t);
        }
    }
}
