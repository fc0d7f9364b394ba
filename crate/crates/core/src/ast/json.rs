use serde_json::{json, Map, Value};

use super::{Ast, AstError, AstNode, NodeKind};

/// Parses the recursive `{"label", "kind", "children"}` document.
pub fn parse_json_ast(text: &str) -> Result<Ast, AstError> {
    let value: Value = serde_json::from_str(text).map_err(|e| AstError::Json(e.to_string()))?;
    from_json_value(&value)
}

pub fn from_json_value(value: &Value) -> Result<Ast, AstError> {
    let mut nodes: Vec<AstNode> = Vec::new();
    // (value, path, parent slot)
    let mut stack: Vec<(&Value, String, Option<usize>)> = vec![(value, "$".to_string(), None)];
    while let Some((v, path, parent)) = stack.pop() {
        let obj = v.as_object().ok_or_else(|| AstError::NotAnObject { path: path.clone() })?;
        let label = field(obj, "label", &path)?
            .as_str()
            .ok_or_else(|| AstError::WrongType {
                path: path.clone(),
                field: "label",
            })?
            .to_string();
        let kind_str = field(obj, "kind", &path)?.as_str().ok_or_else(|| AstError::WrongType {
            path: path.clone(),
            field: "kind",
        })?;
        let kind = NodeKind::parse(kind_str).ok_or_else(|| AstError::UnknownKind {
            path: path.clone(),
            kind: kind_str.to_string(),
        })?;
        let children = match obj.get("children") {
            None | Some(Value::Null) => &[][..],
            Some(Value::Array(a)) => a.as_slice(),
            Some(_) => {
                return Err(AstError::WrongType {
                    path,
                    field: "children",
                })
            }
        };
        let id = nodes.len();
        nodes.push(AstNode {
            label,
            kind,
            children: Vec::with_capacity(children.len()),
        });
        if let Some(p) = parent {
            nodes[p].children.push(id);
        }
        // Push in reverse so children are visited (and appended) in order.
        for (k, c) in children.iter().enumerate().rev() {
            stack.push((c, format!("{path}.children[{k}]"), Some(id)));
        }
    }
    Ast::from_nodes(nodes, 0)
}

fn field<'a>(obj: &'a Map<String, Value>, name: &'static str, path: &str) -> Result<&'a Value, AstError> {
    obj.get(name).ok_or_else(|| AstError::MissingField {
        path: path.to_string(),
        field: name,
    })
}

pub fn to_json_value(ast: &Ast) -> Value {
    fn build(ast: &Ast, i: usize) -> Value {
        let children: Vec<Value> = ast.children(i).iter().map(|&c| build(ast, c)).collect();
        json!({
            "label": ast.label(i),
            "kind": ast.kind(i).as_str(),
            "children": children,
        })
    }
    build(ast, ast.root())
}

pub fn emit_json(ast: &Ast) -> String {
    to_json_value(ast).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_node_document() {
        let t = parse_json_ast(r#"{"label":"ReturnStatement","kind":"syntax","children":[]}"#).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.label(0), "ReturnStatement");
        assert_eq!(t.kind(0), NodeKind::Syntax);
    }

    #[test]
    fn nested_if_document_preserves_order() {
        // if (a < 10) { return "x"; } else { b(); }
        let doc = r#"{"label":"If","kind":"syntax","children":[
            {"label":"<","kind":"syntax","children":[
                {"label":"a","kind":"identifier","children":[]},
                {"label":"10","kind":"number-literal","children":[]}]},
            {"label":"Return","kind":"syntax","children":[
                {"label":"\"x\"","kind":"string-literal","children":[]}]},
            {"label":"b","kind":"identifier"}
        ]}"#;
        let t = parse_json_ast(doc).unwrap();
        assert_eq!(t.stats().node_count, 7);
        let labels: Vec<&str> = (0..t.len()).map(|i| t.label(i)).collect();
        assert_eq!(labels, ["If", "<", "a", "10", "Return", "\"x\"", "b"]);
        assert_eq!(t.children(0), &[1, 4, 6]);
        assert_eq!(t.children(1), &[2, 3]);
        assert_eq!(t.kind(3), NodeKind::NumberLiteral);
        let again = parse_json_ast(&emit_json(&t)).unwrap();
        assert_eq!(again, t);
    }

    #[test]
    fn errors_are_specific() {
        assert!(matches!(parse_json_ast("{"), Err(AstError::Json(_))));
        assert!(matches!(parse_json_ast("[]"), Err(AstError::NotAnObject { .. })));
        assert!(matches!(
            parse_json_ast(r#"{"label":"x","kind":"keyword"}"#),
            Err(AstError::UnknownKind { .. })
        ));
        assert!(matches!(
            parse_json_ast(r#"{"kind":"syntax"}"#),
            Err(AstError::MissingField { field: "label", .. })
        ));
        let err = parse_json_ast(r#"{"label":"x","kind":"syntax","children":[{"label":"y"}]}"#).unwrap_err();
        assert_eq!(
            err,
            AstError::MissingField {
                path: "$.children[0]".into(),
                field: "kind"
            }
        );
    }

    #[test]
    fn roundtrip_random_trees() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let t = crate::ast::gen::random_tree(&mut rng, 60);
            assert_eq!(parse_json_ast(&emit_json(&t)).unwrap(), t);
        }
    }
}
