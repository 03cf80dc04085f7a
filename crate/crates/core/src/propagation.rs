//! Label propagation over transpose flow graphs.
//!
//! Node characteristic labels are looked up per vertex first. Data labels are
//! then computed on demand from the sink: a vertex evaluates its behavior once
//! all of its predecessors have produced their outputs. Every vertex is
//! evaluated exactly once per graph.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::behavior::{evaluate_behavior, EvalError};
use crate::flowgraph::{FlowGraphCollection, TransposeFlowGraph};
use crate::index::ModelIndex;
use crate::model::{LabelSet, Model, PinData};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PropagationError {
    #[error("vertex `{node}`: {source}")]
    Behavior {
        node: String,
        #[source]
        source: EvalError,
    },
    #[error("vertex `{0}` does not trace to a model element")]
    Trace(String),
}

/// Per-graph failures of [`propagate_all`], tagged with the graph index.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct PropagateAllError {
    pub failures: Vec<(usize, PropagationError)>,
}

impl fmt::Display for PropagateAllError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .failures
            .iter()
            .map(|(i, e)| format!("flow graph {i}: {e}"))
            .collect();
        f.write_str(&parts.join("; "))
    }
}

/// Where the node characteristic labels of a vertex come from.
pub trait NodeLabelSource: Sync {
    fn node_labels(&self, node_id: &str) -> Result<LabelSet, PropagationError>;
}

/// Reads node labels straight from the diagram.
pub struct DiagramNodeLabels<'m>(pub &'m Model);

impl NodeLabelSource for DiagramNodeLabels<'_> {
    fn node_labels(&self, node_id: &str) -> Result<LabelSet, PropagationError> {
        self.0
            .diagram
            .node(node_id)
            .map(|n| n.labels.clone())
            .ok_or_else(|| PropagationError::Trace(node_id.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropagatedVertex {
    pub node: String,
    pub node_labels: LabelSet,
    /// Input pin -> flow name -> labels.
    pub incoming: PinData,
    /// Behavior result per output pin.
    pub outputs: BTreeMap<String, LabelSet>,
    /// Output pin -> variable name -> labels. Variables are named after the
    /// diagram flows leaving the pin, or after the pin when none leave it.
    pub outgoing: PinData,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropagatedFlowGraph {
    /// Position of the graph in its collection.
    pub index: usize,
    pub sink: usize,
    /// Indexed like the vertices of the source graph.
    pub vertices: Vec<PropagatedVertex>,
    /// Number of behavior evaluations performed.
    pub evaluations: usize,
}

impl PropagatedFlowGraph {
    pub fn sink_vertex(&self) -> &PropagatedVertex {
        &self.vertices[self.sink]
    }

    pub fn vertex_of_node(&self, node: &str) -> Option<&PropagatedVertex> {
        self.vertices.iter().find(|v| v.node == node)
    }
}

/// Node labels for each vertex of `tfg`, indexed like its vertices.
pub fn compute_node_labels(
    tfg: &TransposeFlowGraph,
    source: &dyn NodeLabelSource,
) -> Result<Vec<LabelSet>, PropagationError> {
    tfg.vertices
        .iter()
        .map(|v| source.node_labels(&v.node))
        .collect()
}

/// Propagates data labels through one graph.
pub fn propagate(
    tfg: &TransposeFlowGraph,
    model: &Model,
    labels: &dyn NodeLabelSource,
) -> Result<PropagatedFlowGraph, PropagationError> {
    propagate_indexed(tfg, 0, &ModelIndex::new(model), labels)
}

fn propagate_indexed(
    tfg: &TransposeFlowGraph,
    graph_index: usize,
    index: &ModelIndex<'_>,
    labels: &dyn NodeLabelSource,
) -> Result<PropagatedFlowGraph, PropagationError> {
    let node_labels = compute_node_labels(tfg, labels)?;
    let mut states: Vec<Option<PropagatedVertex>> = vec![None; tfg.vertices.len()];
    let mut evaluations = 0;

    // Explicit post-order walk from the sink keeps deep chains off the call stack.
    let mut stack = vec![(tfg.sink, false)];
    while let Some((v, ready)) = stack.pop() {
        if states[v].is_some() {
            continue;
        }
        let vertex = &tfg.vertices[v];
        if !ready {
            stack.push((v, true));
            for e in vertex.predecessors.iter().rev() {
                if states[e.vertex].is_none() {
                    stack.push((e.vertex, false));
                }
            }
            continue;
        }

        let node_idx = index
            .node_index(&vertex.node)
            .ok_or_else(|| PropagationError::Trace(vertex.node.clone()))?;
        let behavior = index
            .behavior(node_idx)
            .ok_or_else(|| PropagationError::Trace(vertex.node.clone()))?;

        let mut incoming = PinData::new();
        for e in &vertex.predecessors {
            let flow = index
                .flow_index(&e.flow)
                .map(|f| index.flow(f))
                .ok_or_else(|| PropagationError::Trace(e.flow.clone()))?;
            let producer = states[e.vertex]
                .as_ref()
                .expect("predecessors are evaluated first");
            let data = producer
                .outputs
                .get(&flow.source_pin)
                .cloned()
                .unwrap_or_default();
            incoming
                .entry(e.target_pin.clone())
                .or_default()
                .entry(flow.name.clone())
                .or_default()
                .extend(data);
        }

        let outputs =
            evaluate_behavior(behavior, &incoming).map_err(|source| PropagationError::Behavior {
                node: vertex.node.clone(),
                source,
            })?;
        evaluations += 1;

        let mut outgoing = PinData::new();
        for (pin, set) in &outputs {
            let vars = outgoing.entry(pin.clone()).or_default();
            for &f in index.outgoing(node_idx) {
                let flow = index.flow(f);
                if &flow.source_pin == pin {
                    vars.insert(flow.name.clone(), set.clone());
                }
            }
            if vars.is_empty() {
                let name = behavior.out_pin(pin).map_or(pin.as_str(), |p| p.name.as_str());
                vars.insert(name.to_string(), set.clone());
            }
        }

        states[v] = Some(PropagatedVertex {
            node: vertex.node.clone(),
            node_labels: node_labels[v].clone(),
            incoming,
            outputs,
            outgoing,
        });
    }

    // Vertices that cannot reach the sink do not exist in extracted graphs,
    // but a hand-built graph might contain them.
    let vertices = states
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            s.ok_or_else(|| PropagationError::Trace(tfg.vertices[i].node.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok(PropagatedFlowGraph {
        index: graph_index,
        sink: tfg.sink,
        vertices,
        evaluations,
    })
}

/// Propagates every graph of the collection independently; results keep the
/// collection order.
pub fn propagate_all(
    collection: &FlowGraphCollection,
    model: &Model,
    labels: &dyn NodeLabelSource,
) -> Result<Vec<PropagatedFlowGraph>, PropagateAllError> {
    let index = ModelIndex::new(model);
    let results: Vec<_> = collection
        .graphs
        .par_iter()
        .enumerate()
        .map(|(i, g)| propagate_indexed(g, i, &index, labels))
        .collect();
    let mut ok = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(g) => ok.push(g),
            Err(e) => failures.push((i, e)),
        }
    }
    if failures.is_empty() {
        Ok(ok)
    } else {
        Err(PropagateAllError { failures })
    }
}
