//! Builds a full model from a plain list of named nodes and edges.
//!
//! Used by the importers whose source formats have no behaviors or pins.
//! Every node gets one input pin `in` when something flows into it and one
//! output pin per outgoing edge. Output pins forward `in` and add the edge's
//! labels unconditionally.

use std::collections::HashMap;

use crate::model::{
    Assignment, Behavior, DataFlowDiagram, DictionaryBuilder, Flow, LabelRef, LabelSet, Model, Node, NodeKind, Pin,
    Term,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimpleNode {
    pub key: String,
    pub name: String,
    pub kind: NodeKind,
    pub labels: Vec<LabelRef>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimpleEdge {
    pub from: String,
    pub to: String,
    pub name: String,
    pub labels: Vec<LabelRef>,
}

fn slug(text: &str) -> String {
    let s: String = text
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '-' })
        .collect();
    let s = s.trim_matches('-').to_string();
    if s.is_empty() {
        "x".to_string()
    } else {
        s
    }
}

/// Edges must reference node keys. Node ids are derived from keys.
pub fn build_model(nodes: &[SimpleNode], edges: &[SimpleEdge]) -> Model {
    build_model_with_labels(&[], nodes, edges)
}

/// Like [`build_model`], also declaring `labels` in the dictionary whether
/// used or not.
pub fn build_model_with_labels(labels: &[LabelRef], nodes: &[SimpleNode], edges: &[SimpleEdge]) -> Model {
    let mut dict = DictionaryBuilder::new();
    for l in labels {
        dict.ensure_label(l);
    }
    let mut ids: HashMap<&str, String> = HashMap::new();
    let mut used = std::collections::HashSet::new();
    for n in nodes {
        let base = format!("n-{}", slug(&n.key));
        let mut id = base.clone();
        let mut k = 2;
        while !used.insert(id.clone()) {
            id = format!("{base}-{k}");
            k += 1;
        }
        ids.insert(&n.key, id);
    }

    let mut diagram = DataFlowDiagram::default();
    for n in nodes {
        let id = &ids[n.key.as_str()];
        let mut behavior = Behavior::new(format!("b-{}", &id[2..]), format!("{} behavior", n.name));
        let has_input = edges.iter().any(|e| e.to == n.key);
        let in_pin = format!("{id}:in");
        if has_input {
            behavior.in_pins.push(Pin::new(&in_pin, "in"));
        }
        for (i, e) in edges.iter().enumerate().filter(|(_, e)| e.from == n.key) {
            let pin = format!("{id}:out{}", i + 1);
            behavior.out_pins.push(Pin::new(&pin, &e.name));
            if has_input {
                behavior.assignments.push(Assignment::forward(&[&in_pin], &pin));
            }
            if !e.labels.is_empty() {
                for l in &e.labels {
                    dict.ensure_label(l);
                }
                behavior
                    .assignments
                    .push(Assignment::set(&[], &pin, Term::Constant(true), e.labels.iter().cloned()));
            }
        }
        for l in &n.labels {
            dict.ensure_label(l);
        }
        diagram.nodes.push(Node {
            id: id.clone(),
            name: n.name.clone(),
            kind: n.kind,
            behavior: behavior.id.clone(),
            labels: n.labels.iter().cloned().collect::<LabelSet>(),
        });
        dict.add_behavior(behavior);
    }
    for (i, e) in edges.iter().enumerate() {
        let source = ids[e.from.as_str()].clone();
        let target = ids[e.to.as_str()].clone();
        diagram.flows.push(Flow {
            id: format!("f{:04}", i + 1),
            name: e.name.clone(),
            source_pin: format!("{source}:out{}", i + 1),
            target_pin: format!("{target}:in"),
            source,
            target,
        });
    }
    Model::new(dict.build(), diagram).canonicalized()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validate::validate_model;

    #[test]
    fn two_nodes_one_edge_validates() {
        let nodes = vec![
            SimpleNode {
                key: "A".into(),
                name: "A".into(),
                kind: NodeKind::External,
                labels: vec![],
            },
            SimpleNode {
                key: "B".into(),
                name: "B".into(),
                kind: NodeKind::Process,
                labels: vec![LabelRef::new("Stereotype", "internal")],
            },
        ];
        let edges = vec![SimpleEdge {
            from: "A".into(),
            to: "B".into(),
            name: "userData".into(),
            labels: vec![LabelRef::new("Stereotype", "https")],
        }];
        let model = build_model(&nodes, &edges);
        assert!(validate_model(&model.dictionary, &model.diagram).is_empty());
        assert_eq!(model.diagram.flows[0].name, "userData");
    }

    #[test]
    fn colliding_slugs_get_suffixes() {
        let nodes: Vec<_> = ["a b", "a-b"]
            .iter()
            .map(|k| SimpleNode {
                key: k.to_string(),
                name: k.to_string(),
                kind: NodeKind::Process,
                labels: vec![],
            })
            .collect();
        let model = build_model(&nodes, &[]);
        let ids: Vec<_> = model.diagram.nodes.iter().map(|n| n.id.as_str()).collect();
        assert_eq!(ids, ["n-a-b", "n-a-b-2"]);
    }
}
