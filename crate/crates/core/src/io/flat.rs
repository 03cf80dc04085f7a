//! Flat JSON dialect: named nodes and flows with `Type.Label` strings.
//!
//! ```json
//! {"nodes": [{"name": "User", "type": "external", "labels": ["Role.Customer"]}],
//!  "flows": [{"from": "User", "to": "Shop", "data": "order", "labels": []}]}
//! ```
//!
//! An optional `"labelTypes": {"Encryption": ["Encrypted"]}` declares labels
//! that no element uses yet, so constraints can refer to them.

use std::collections::BTreeMap;

use serde::Deserialize;

use super::simple::{build_model_with_labels, SimpleEdge, SimpleNode};
use super::IoError;
use crate::model::{LabelRef, Model, NodeKind};
use crate::validate::validate_model;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(rename_all = "camelCase")]
struct FlatDocument {
    #[serde(default)]
    label_types: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    nodes: Vec<FlatNode>,
    #[serde(default)]
    flows: Vec<FlatFlow>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlatNode {
    name: String,
    #[serde(rename = "type")]
    kind: String,
    #[serde(default)]
    labels: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlatFlow {
    from: String,
    to: String,
    data: String,
    #[serde(default)]
    labels: Vec<String>,
}

fn parse_label(text: &str, path: &str) -> Result<LabelRef, IoError> {
    match text.split_once('.') {
        Some((t, l)) if !t.is_empty() && !l.is_empty() => Ok(LabelRef::new(t, l)),
        _ => Err(IoError::Format {
            path: path.to_string(),
            message: format!("label `{text}` is not of the form `Type.Label`"),
        }),
    }
}

pub fn load_flat(bytes: &[u8]) -> Result<Model, IoError> {
    let value: serde_json::Value = serde_json::from_slice(bytes).map_err(IoError::json)?;
    load_flat_value(value)
}

pub(crate) fn load_flat_value(value: serde_json::Value) -> Result<Model, IoError> {
    let doc: FlatDocument = serde_json::from_value(value).map_err(IoError::json)?;
    let mut nodes = Vec::new();
    for (i, n) in doc.nodes.iter().enumerate() {
        let kind = NodeKind::parse(&n.kind).ok_or_else(|| IoError::Format {
            path: format!("nodes[{i}].type"),
            message: format!("unknown node type `{}`", n.kind),
        })?;
        if nodes.iter().any(|m: &SimpleNode| m.key == n.name) {
            return Err(IoError::Format {
                path: format!("nodes[{i}].name"),
                message: format!("duplicate node `{}`", n.name),
            });
        }
        let labels = n
            .labels
            .iter()
            .enumerate()
            .map(|(j, l)| parse_label(l, &format!("nodes[{i}].labels[{j}]")))
            .collect::<Result<_, _>>()?;
        nodes.push(SimpleNode {
            key: n.name.clone(),
            name: n.name.clone(),
            kind,
            labels,
        });
    }
    let mut edges = Vec::new();
    for (i, f) in doc.flows.iter().enumerate() {
        for (field, name) in [("from", &f.from), ("to", &f.to)] {
            if !nodes.iter().any(|n| &n.key == name) {
                return Err(IoError::UnresolvedReference {
                    path: format!("flows[{i}].{field}"),
                    id: name.clone(),
                });
            }
        }
        let labels = f
            .labels
            .iter()
            .enumerate()
            .map(|(j, l)| parse_label(l, &format!("flows[{i}].labels[{j}]")))
            .collect::<Result<_, _>>()?;
        edges.push(SimpleEdge {
            from: f.from.clone(),
            to: f.to.clone(),
            name: f.data.clone(),
            labels,
        });
    }
    let declared: Vec<LabelRef> = doc
        .label_types
        .iter()
        .flat_map(|(t, labels)| labels.iter().map(move |l| LabelRef::new(t, l)))
        .collect();
    let model = build_model_with_labels(&declared, &nodes, &edges);
    let report = validate_model(&model.dictionary, &model.diagram);
    if report.has_errors() {
        return Err(IoError::Invalid(report));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_small_document() {
        let text = r#"{"nodes": [{"name": "User", "type": "external", "labels": ["Role.Customer"]},
                                 {"name": "Shop", "type": "process"}],
                       "flows": [{"from": "User", "to": "Shop", "data": "order", "labels": ["Sensitivity.Personal"]}]}"#;
        let model = load_flat(text.as_bytes()).unwrap();
        assert_eq!(model.diagram.nodes.len(), 2);
        assert_eq!(model.diagram.flows[0].name, "order");
        assert!(model.dictionary.contains_label(&LabelRef::new("Sensitivity", "Personal")));
    }

    #[test]
    fn rejects_unknown_endpoint_and_bad_label() {
        let text = r#"{"nodes": [{"name": "A", "type": "store"}], "flows": [{"from": "A", "to": "B", "data": "x"}]}"#;
        assert!(matches!(load_flat(text.as_bytes()), Err(IoError::UnresolvedReference { .. })));
        let text = r#"{"nodes": [{"name": "A", "type": "store", "labels": ["nodot"]}]}"#;
        assert!(matches!(load_flat(text.as_bytes()), Err(IoError::Format { .. })));
    }

    #[test]
    fn declared_label_types_reach_the_dictionary() {
        let text = r#"{"labelTypes": {"Encryption": ["Encrypted"]}, "nodes": [{"name": "A", "type": "store"}]}"#;
        let model = load_flat(text.as_bytes()).unwrap();
        assert!(model.dictionary.contains_label(&LabelRef::new("Encryption", "Encrypted")));
    }
}
