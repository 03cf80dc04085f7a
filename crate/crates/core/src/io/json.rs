//! Canonical `dfd/1` JSON documents.
//!
//! Node labels and assignment labels are written as label ids; label
//! references inside terms use type and label names. Saving sorts every
//! id-addressed collection by id, so output is stable across runs.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::IoError;
use crate::model::{
    Assignment, Behavior, DataDictionary, DataFlowDiagram, Flow, Label, LabelRef, LabelSet, LabelType, Model, Node,
    NodeKind, Pin, Term,
};
use crate::validate::validate_model;

pub const FORMAT_VERSION: &str = "dfd/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ModelDocument {
    pub version: String,
    pub data_dictionary: DictionaryDoc,
    pub dfd: DiagramDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DictionaryDoc {
    #[serde(default)]
    pub label_types: Vec<LabelTypeDoc>,
    #[serde(default)]
    pub behaviors: Vec<BehaviorDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelTypeDoc {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub labels: Vec<NamedDoc>,
}

/// Shape shared by labels and pins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedDoc {
    pub id: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct BehaviorDoc {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub in_pins: Vec<NamedDoc>,
    #[serde(default)]
    pub out_pins: Vec<NamedDoc>,
    #[serde(default)]
    pub assignments: Vec<AssignmentDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AssignmentDoc {
    #[serde(rename_all = "camelCase")]
    Forward {
        in_pins: Vec<String>,
        out_pin: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        flow: Option<String>,
    },
    #[serde(rename_all = "camelCase")]
    Set {
        out_pin: String,
        #[serde(default)]
        in_pins: Vec<String>,
        labels: Vec<String>,
        term: TermDoc,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum TermDoc {
    True,
    False,
    #[serde(rename_all = "camelCase")]
    Ref {
        label_type: String,
        label: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        flow: Option<String>,
    },
    Not {
        term: Box<TermDoc>,
    },
    And {
        left: Box<TermDoc>,
        right: Box<TermDoc>,
    },
    Or {
        left: Box<TermDoc>,
        right: Box<TermDoc>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DiagramDoc {
    #[serde(default)]
    pub nodes: Vec<NodeDoc>,
    #[serde(default)]
    pub flows: Vec<FlowDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDoc {
    pub id: String,
    pub name: String,
    pub kind: NodeKind,
    pub behavior: String,
    #[serde(default)]
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct FlowDoc {
    pub id: String,
    pub name: String,
    pub source: String,
    pub source_pin: String,
    pub target: String,
    pub target_pin: String,
}

impl From<&Term> for TermDoc {
    fn from(term: &Term) -> Self {
        match term {
            Term::Constant(true) => TermDoc::True,
            Term::Constant(false) => TermDoc::False,
            Term::LabelReference { label, flow } => TermDoc::Ref {
                label_type: label.label_type.clone(),
                label: label.label.clone(),
                flow: flow.clone(),
            },
            Term::Not(t) => TermDoc::Not {
                term: Box::new(t.as_ref().into()),
            },
            Term::And(a, b) => TermDoc::And {
                left: Box::new(a.as_ref().into()),
                right: Box::new(b.as_ref().into()),
            },
            Term::Or(a, b) => TermDoc::Or {
                left: Box::new(a.as_ref().into()),
                right: Box::new(b.as_ref().into()),
            },
        }
    }
}

impl From<&TermDoc> for Term {
    fn from(doc: &TermDoc) -> Self {
        match doc {
            TermDoc::True => Term::Constant(true),
            TermDoc::False => Term::Constant(false),
            TermDoc::Ref {
                label_type,
                label,
                flow,
            } => Term::LabelReference {
                label: LabelRef::new(label_type, label),
                flow: flow.clone(),
            },
            TermDoc::Not { term } => Term::not(term.as_ref().into()),
            TermDoc::And { left, right } => Term::and(left.as_ref().into(), right.as_ref().into()),
            TermDoc::Or { left, right } => Term::or(left.as_ref().into(), right.as_ref().into()),
        }
    }
}

fn named(doc: &NamedDoc) -> Pin {
    Pin::new(&doc.id, &doc.name)
}

fn pin_doc(pin: &Pin) -> NamedDoc {
    NamedDoc {
        id: pin.id.clone(),
        name: pin.name.clone(),
    }
}

/// Converts a parsed document to a model, resolving label ids.
pub fn document_to_model(doc: &ModelDocument) -> Result<Model, IoError> {
    if doc.version != FORMAT_VERSION {
        return Err(IoError::UnknownVersion(doc.version.clone()));
    }
    let mut by_id: HashMap<&str, LabelRef> = HashMap::new();
    let label_types = doc
        .data_dictionary
        .label_types
        .iter()
        .map(|t| {
            for l in &t.labels {
                by_id.insert(&l.id, LabelRef::new(&t.name, &l.name));
            }
            LabelType {
                id: t.id.clone(),
                name: t.name.clone(),
                labels: t
                    .labels
                    .iter()
                    .map(|l| Label {
                        id: l.id.clone(),
                        name: l.name.clone(),
                    })
                    .collect(),
            }
        })
        .collect();
    let resolve = |ids: &[String], path: &str| -> Result<LabelSet, IoError> {
        ids.iter()
            .enumerate()
            .map(|(i, id)| {
                by_id.get(id.as_str()).cloned().ok_or_else(|| IoError::UnresolvedReference {
                    path: format!("{path}[{i}]"),
                    id: id.clone(),
                })
            })
            .collect()
    };

    let mut behaviors = Vec::new();
    for (bi, b) in doc.data_dictionary.behaviors.iter().enumerate() {
        let mut assignments = Vec::new();
        for (ai, a) in b.assignments.iter().enumerate() {
            let path = format!("dataDictionary.behaviors[{bi}].assignments[{ai}]");
            assignments.push(match a {
                AssignmentDoc::Forward { in_pins, out_pin, flow } => Assignment::Forward {
                    in_pins: in_pins.clone(),
                    out_pin: out_pin.clone(),
                    flow: flow.clone(),
                },
                AssignmentDoc::Set {
                    out_pin,
                    in_pins,
                    labels,
                    term,
                } => Assignment::Set {
                    in_pins: in_pins.clone(),
                    out_pin: out_pin.clone(),
                    term: term.into(),
                    labels: resolve(labels, &format!("{path}.labels"))?,
                },
            });
        }
        behaviors.push(Behavior {
            id: b.id.clone(),
            name: b.name.clone(),
            in_pins: b.in_pins.iter().map(named).collect(),
            out_pins: b.out_pins.iter().map(named).collect(),
            assignments,
        });
    }

    let mut nodes = Vec::new();
    for (i, n) in doc.dfd.nodes.iter().enumerate() {
        nodes.push(Node {
            id: n.id.clone(),
            name: n.name.clone(),
            kind: n.kind,
            behavior: n.behavior.clone(),
            labels: resolve(&n.labels, &format!("dfd.nodes[{i}].labels"))?,
        });
    }
    let node_ids: HashMap<&str, usize> = doc.dfd.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
    let behavior_ids: HashMap<&str, usize> = doc
        .data_dictionary
        .behaviors
        .iter()
        .enumerate()
        .map(|(i, b)| (b.id.as_str(), i))
        .collect();
    for (i, n) in doc.dfd.nodes.iter().enumerate() {
        if !behavior_ids.contains_key(n.behavior.as_str()) {
            return Err(IoError::UnresolvedReference {
                path: format!("dfd.nodes[{i}].behavior"),
                id: n.behavior.clone(),
            });
        }
    }
    for (i, f) in doc.dfd.flows.iter().enumerate() {
        for (field, id) in [("source", &f.source), ("target", &f.target)] {
            if !node_ids.contains_key(id.as_str()) {
                return Err(IoError::UnresolvedReference {
                    path: format!("dfd.flows[{i}].{field}"),
                    id: id.clone(),
                });
            }
        }
    }
    let flows = doc
        .dfd
        .flows
        .iter()
        .map(|f| Flow {
            id: f.id.clone(),
            name: f.name.clone(),
            source: f.source.clone(),
            source_pin: f.source_pin.clone(),
            target: f.target.clone(),
            target_pin: f.target_pin.clone(),
        })
        .collect();
    Ok(Model::new(
        DataDictionary {
            label_types,
            behaviors,
        },
        DataFlowDiagram { nodes, flows },
    ))
}

/// Canonical document for `model`. Labels missing from the dictionary are
/// written as `Type.Label`.
pub fn model_to_document(model: &Model) -> ModelDocument {
    let model = model.clone().canonicalized();
    let mut ids: HashMap<LabelRef, &str> = HashMap::new();
    for t in &model.dictionary.label_types {
        for l in &t.labels {
            ids.insert(LabelRef::new(&t.name, &l.name), &l.id);
        }
    }
    let label_ids = |set: &LabelSet| -> Vec<String> {
        set.iter()
            .map(|l| ids.get(l).map_or_else(|| l.to_string(), |id| id.to_string()))
            .collect()
    };
    ModelDocument {
        version: FORMAT_VERSION.to_string(),
        data_dictionary: DictionaryDoc {
            label_types: model
                .dictionary
                .label_types
                .iter()
                .map(|t| LabelTypeDoc {
                    id: t.id.clone(),
                    name: t.name.clone(),
                    labels: t
                        .labels
                        .iter()
                        .map(|l| NamedDoc {
                            id: l.id.clone(),
                            name: l.name.clone(),
                        })
                        .collect(),
                })
                .collect(),
            behaviors: model
                .dictionary
                .behaviors
                .iter()
                .map(|b| BehaviorDoc {
                    id: b.id.clone(),
                    name: b.name.clone(),
                    in_pins: b.in_pins.iter().map(pin_doc).collect(),
                    out_pins: b.out_pins.iter().map(pin_doc).collect(),
                    assignments: b
                        .assignments
                        .iter()
                        .map(|a| match a {
                            Assignment::Forward { in_pins, out_pin, flow } => AssignmentDoc::Forward {
                                in_pins: in_pins.clone(),
                                out_pin: out_pin.clone(),
                                flow: flow.clone(),
                            },
                            Assignment::Set {
                                in_pins,
                                out_pin,
                                term,
                                labels,
                            } => AssignmentDoc::Set {
                                out_pin: out_pin.clone(),
                                in_pins: in_pins.clone(),
                                labels: label_ids(labels),
                                term: term.into(),
                            },
                        })
                        .collect(),
                })
                .collect(),
        },
        dfd: DiagramDoc {
            nodes: model
                .diagram
                .nodes
                .iter()
                .map(|n| NodeDoc {
                    id: n.id.clone(),
                    name: n.name.clone(),
                    kind: n.kind,
                    behavior: n.behavior.clone(),
                    labels: label_ids(&n.labels),
                })
                .collect(),
            flows: model
                .diagram
                .flows
                .iter()
                .map(|f| FlowDoc {
                    id: f.id.clone(),
                    name: f.name.clone(),
                    source: f.source.clone(),
                    source_pin: f.source_pin.clone(),
                    target: f.target.clone(),
                    target_pin: f.target_pin.clone(),
                })
                .collect(),
        },
    }
}

/// Parses and validates a canonical document. Validation errors fail the
/// load; warnings are dropped.
pub fn load_model(bytes: &[u8]) -> Result<Model, IoError> {
    let value: serde_json::Value = serde_json::from_slice(bytes).map_err(IoError::json)?;
    load_model_value(value)
}

pub(crate) fn load_model_value(value: serde_json::Value) -> Result<Model, IoError> {
    if let Some(version) = value.get("version").and_then(|v| v.as_str()) {
        if version != FORMAT_VERSION {
            return Err(IoError::UnknownVersion(version.to_string()));
        }
    }
    let doc: ModelDocument = serde_json::from_value(value).map_err(IoError::json)?;
    let model = document_to_model(&doc)?;
    let report = validate_model(&model.dictionary, &model.diagram);
    if report.has_errors() {
        return Err(IoError::Invalid(report));
    }
    Ok(model)
}

/// Canonical pretty-printed JSON with a trailing newline.
pub fn save_model(model: &Model) -> String {
    let mut out = serde_json::to_string_pretty(&model_to_document(model)).expect("documents always serialize");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
  "version": "dfd/1",
  "dataDictionary": {"labelTypes": [], "behaviors": [{"id": "b", "name": "B", "inPins": [], "outPins": [], "assignments": []}]},
  "dfd": {"nodes": [{"id": "n", "name": "N", "kind": "process", "behavior": "b", "labels": []}], "flows": []}
}"#;

    #[test]
    fn minimal_document() {
        let model = load_model(MINIMAL.as_bytes()).unwrap();
        assert_eq!(model.diagram.nodes.len(), 1);
    }

    #[test]
    fn unknown_version() {
        let text = MINIMAL.replace("dfd/1", "dfd/9");
        assert!(matches!(load_model(text.as_bytes()), Err(IoError::UnknownVersion(v)) if v == "dfd/9"));
    }

    #[test]
    fn flow_to_missing_node() {
        let text = MINIMAL.replace(
            r#""flows": []"#,
            r#""flows": [{"id": "f", "name": "x", "source": "n", "sourcePin": "p", "target": "ghost", "targetPin": "q"}]"#,
        );
        match load_model(text.as_bytes()) {
            Err(IoError::UnresolvedReference { path, id }) => {
                assert_eq!(path, "dfd.flows[0].target");
                assert_eq!(id, "ghost");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_label_id_has_path() {
        let text = MINIMAL.replace(r#""labels": []}], "flows""#, r#""labels": ["nope"]}], "flows""#);
        match load_model(text.as_bytes()) {
            Err(IoError::UnresolvedReference { path, .. }) => assert_eq!(path, "dfd.nodes[0].labels[0]"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_json() {
        assert!(matches!(load_model(b"{"), Err(IoError::Json { .. })));
    }

    #[test]
    fn empty_diagram_saves_empty_arrays() {
        let text = save_model(&Model::default());
        assert!(text.ends_with('\n'));
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["version"], "dfd/1");
        assert_eq!(v["dfd"]["nodes"], serde_json::json!([]));
        assert_eq!(v["dataDictionary"]["labelTypes"], serde_json::json!([]));
        assert_eq!(load_model(text.as_bytes()).unwrap(), Model::default());
    }

    #[test]
    fn term_json_shape() {
        let term = Term::and(
            Term::not(Term::label(LabelRef::new("A", "b"))),
            Term::scoped("f", LabelRef::new("C", "d")),
        );
        let json = serde_json::to_value(TermDoc::from(&term)).unwrap();
        assert_eq!(
            json,
            serde_json::json!({
                "op": "and",
                "left": {"op": "not", "term": {"op": "ref", "labelType": "A", "label": "b"}},
                "right": {"op": "ref", "labelType": "C", "label": "d", "flow": "f"}
            })
        );
        let back: TermDoc = serde_json::from_value(json).unwrap();
        assert_eq!(Term::from(&back), term);
    }
}
