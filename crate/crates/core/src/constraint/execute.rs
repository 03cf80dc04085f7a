//! Checking constraints against propagated flow graphs.

use std::collections::HashMap;

use super::{evaluate_condition, Bindings, Constraint, ConstraintError, Selection};
use crate::model::{LabelSet, Model, Node};
use crate::propagation::PropagatedFlowGraph;

/// A data variable that satisfied the data side of a constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchedVariable {
    pub pin: String,
    pub name: String,
    pub labels: LabelSet,
}

/// A vertex receiving data it must never receive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub constraint: String,
    /// Index of the flow graph in its collection.
    pub tfg: usize,
    /// Index of the vertex within the flow graph.
    pub vertex: usize,
    pub node: String,
    pub node_name: String,
    pub node_labels: LabelSet,
    pub variables: Vec<MatchedVariable>,
}

fn labels_of_type(labels: &LabelSet, label_type: &str) -> LabelSet {
    labels
        .iter()
        .filter(|l| l.label_type == label_type)
        .cloned()
        .collect()
}

/// Applies `selections` to one element, binding variables along the way.
fn select(
    selections: &[Selection],
    labels: &LabelSet,
    name: &str,
    node: Option<&Node>,
    bindings: &mut Bindings,
) -> bool {
    for selection in selections {
        let ok = match selection {
            Selection::Label { label, negated } => labels.contains(label) != *negated,
            Selection::Name { name: n, negated } => (n == name) != *negated,
            Selection::Kind(kind) => node.is_some_and(|n| n.kind == *kind),
            Selection::VariableLabel {
                label_type,
                variable,
            } => {
                bindings.insert(variable.clone(), labels_of_type(labels, label_type));
                true
            }
        };
        if !ok {
            return false;
        }
    }
    true
}

/// Runs `constraint` over every vertex of every graph. The constraint should
/// have been bound against `model.dictionary` first.
///
/// Results are ordered by graph, then by node id.
pub fn execute(
    constraint: &Constraint,
    propagated: &[PropagatedFlowGraph],
    model: &Model,
) -> Result<Vec<Violation>, ConstraintError> {
    let nodes: HashMap<&str, &Node> = model.diagram.nodes.iter().map(|n| (n.id.as_str(), n)).collect();
    let mut out = Vec::new();
    for graph in propagated {
        let mut order: Vec<usize> = (0..graph.vertices.len()).collect();
        order.sort_by(|&a, &b| graph.vertices[a].node.cmp(&graph.vertices[b].node));
        for idx in order {
            let vertex = &graph.vertices[idx];
            let node = nodes.get(vertex.node.as_str()).copied();
            let node_name = node.map_or(vertex.node.as_str(), |n| n.name.as_str());
            let mut vertex_bindings = Bindings::new();
            if !select(
                &constraint.vertex,
                &vertex.node_labels,
                node_name,
                node,
                &mut vertex_bindings,
            ) {
                continue;
            }
            let data = if constraint.outgoing {
                &vertex.outgoing
            } else {
                &vertex.incoming
            };
            let mut variables = Vec::new();
            for (pin, flows) in data {
                for (name, labels) in flows {
                    let mut bindings = vertex_bindings.clone();
                    if !select(&constraint.data, labels, name, None, &mut bindings) {
                        continue;
                    }
                    if let Some(condition) = &constraint.condition {
                        if !evaluate_condition(condition, &bindings)? {
                            continue;
                        }
                    }
                    variables.push(MatchedVariable {
                        pin: pin.clone(),
                        name: name.clone(),
                        labels: labels.clone(),
                    });
                }
            }
            if !variables.is_empty() {
                out.push(Violation {
                    constraint: constraint.name.clone(),
                    tfg: graph.index,
                    vertex: idx,
                    node: vertex.node.clone(),
                    node_name: node_name.to_string(),
                    node_labels: vertex.node_labels.clone(),
                    variables,
                });
            }
        }
    }
    Ok(out)
}
