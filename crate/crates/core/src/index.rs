//! Id lookups over a validated model.

use std::collections::HashMap;

use crate::model::{Behavior, Flow, Model, Node};

/// Dense indices for nodes and flows plus adjacency in both directions.
#[derive(Debug)]
pub struct ModelIndex<'m> {
    pub model: &'m Model,
    node_ids: HashMap<&'m str, usize>,
    flow_ids: HashMap<&'m str, usize>,
    behaviors: Vec<Option<&'m Behavior>>,
    incoming: Vec<Vec<usize>>,
    outgoing: Vec<Vec<usize>>,
}

impl<'m> ModelIndex<'m> {
    pub fn new(model: &'m Model) -> Self {
        let diagram = &model.diagram;
        let node_ids: HashMap<&str, usize> = diagram
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.as_str(), i))
            .collect();
        let flow_ids = diagram
            .flows
            .iter()
            .enumerate()
            .map(|(i, f)| (f.id.as_str(), i))
            .collect();
        let by_id: HashMap<&str, &Behavior> = model
            .dictionary
            .behaviors
            .iter()
            .map(|b| (b.id.as_str(), b))
            .collect();
        let behaviors = diagram
            .nodes
            .iter()
            .map(|n| by_id.get(n.behavior.as_str()).copied())
            .collect();
        let mut incoming = vec![Vec::new(); diagram.nodes.len()];
        let mut outgoing = vec![Vec::new(); diagram.nodes.len()];
        for (i, flow) in diagram.flows.iter().enumerate() {
            if let Some(&t) = node_ids.get(flow.target.as_str()) {
                incoming[t].push(i);
            }
            if let Some(&s) = node_ids.get(flow.source.as_str()) {
                outgoing[s].push(i);
            }
        }
        for list in incoming.iter_mut().chain(outgoing.iter_mut()) {
            list.sort_by(|&a, &b| diagram.flows[a].id.cmp(&diagram.flows[b].id));
        }
        Self {
            model,
            node_ids,
            flow_ids,
            behaviors,
            incoming,
            outgoing,
        }
    }

    pub fn node_count(&self) -> usize {
        self.model.diagram.nodes.len()
    }

    pub fn node(&self, idx: usize) -> &'m Node {
        &self.model.diagram.nodes[idx]
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.node_ids.get(id).copied()
    }

    pub fn flow(&self, idx: usize) -> &'m Flow {
        &self.model.diagram.flows[idx]
    }

    pub fn flow_index(&self, id: &str) -> Option<usize> {
        self.flow_ids.get(id).copied()
    }

    pub fn behavior(&self, node: usize) -> Option<&'m Behavior> {
        self.behaviors[node]
    }

    /// Flows entering `node`, sorted by flow id.
    pub fn incoming(&self, node: usize) -> &[usize] {
        &self.incoming[node]
    }

    /// Flows leaving `node`, sorted by flow id.
    pub fn outgoing(&self, node: usize) -> &[usize] {
        &self.outgoing[node]
    }

    /// Whether the node terminates incoming data: it receives at least one
    /// flow and none of its output pins depend on its inputs.
    pub fn terminates_data(&self, node: usize) -> bool {
        !self.incoming[node].is_empty()
            && self
                .behaviors[node]
                .is_some_and(|b| b.all_outputs_input_independent())
    }
}
