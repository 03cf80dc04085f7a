//! Transpose flow graph extraction.
//!
//! Starting at every data sink the diagram is walked against the direction of
//! data flow. Each walk produces a rooted DAG with one vertex per visited
//! node. When an input pin is fed by flows from more than one source node the
//! walk is ambiguous: the partial graph is copied once per source node and each
//! copy continues with exactly one of them. Finished walks are transposed so
//! that edges point in the direction data travels.

use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::index::ModelIndex;
use crate::model::Model;

/// Upper bound on the number of graphs a single extraction may produce.
pub const MAX_FLOW_GRAPHS: usize = 1 << 17;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractionError {
    #[error("flow cycle through nodes {}", .nodes.join(" -> "))]
    Cycle { nodes: Vec<String> },
    #[error("the diagram has nodes but no data sink")]
    NoSinks,
    #[error("node `{0}` has no resolvable behavior")]
    UnknownBehavior(String),
    #[error("extraction exceeded {limit} flow graphs")]
    TooManyGraphs { limit: usize },
}

/// Incoming data edge of a vertex.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexEdge {
    /// Index of the producing vertex.
    pub vertex: usize,
    pub flow: String,
    pub target_pin: String,
}

/// One data processing step. `node` is the id of the originating DFD node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vertex {
    pub node: String,
    pub predecessors: Vec<VertexEdge>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransposeFlowGraph {
    /// Index of the single sink vertex.
    pub sink: usize,
    pub vertices: Vec<Vertex>,
}

/// An edge in data-flow direction.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FlowEdge {
    pub from: usize,
    pub to: usize,
    pub flow: String,
    pub target_pin: String,
}

/// An edge of a backward walk, from the consuming to the producing vertex.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BackwardEdge {
    pub consumer: usize,
    pub producer: usize,
    pub flow: String,
    pub target_pin: String,
}

/// Result of walking the diagram backwards from a sink.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackwardGraph {
    pub root: usize,
    pub nodes: Vec<String>,
    pub edges: Vec<BackwardEdge>,
}

impl BackwardGraph {
    fn sort_edges(&mut self) {
        self.edges.sort();
    }
}

/// Reverses every edge of a backward walk.
pub fn transpose(graph: BackwardGraph) -> TransposeFlowGraph {
    let mut vertices: Vec<Vertex> = graph
        .nodes
        .into_iter()
        .map(|node| Vertex {
            node,
            predecessors: Vec::new(),
        })
        .collect();
    for edge in graph.edges {
        vertices[edge.consumer].predecessors.push(VertexEdge {
            vertex: edge.producer,
            flow: edge.flow,
            target_pin: edge.target_pin,
        });
    }
    for v in &mut vertices {
        v.predecessors.sort();
    }
    TransposeFlowGraph {
        sink: graph.root,
        vertices,
    }
}

impl TransposeFlowGraph {
    pub fn sink_vertex(&self) -> &Vertex {
        &self.vertices[self.sink]
    }

    /// Edges in data-flow direction, sorted.
    pub fn edges(&self) -> Vec<FlowEdge> {
        let mut edges: Vec<FlowEdge> = self
            .vertices
            .iter()
            .enumerate()
            .flat_map(|(to, v)| {
                v.predecessors.iter().map(move |e| FlowEdge {
                    from: e.vertex,
                    to,
                    flow: e.flow.clone(),
                    target_pin: e.target_pin.clone(),
                })
            })
            .collect();
        edges.sort();
        edges
    }

    /// The backward orientation of this graph; inverse of [`transpose`].
    pub fn to_backward(&self) -> BackwardGraph {
        let mut graph = BackwardGraph {
            root: self.sink,
            nodes: self.vertices.iter().map(|v| v.node.clone()).collect(),
            edges: self
                .edges()
                .into_iter()
                .map(|e| BackwardEdge {
                    consumer: e.to,
                    producer: e.from,
                    flow: e.flow,
                    target_pin: e.target_pin,
                })
                .collect(),
        };
        graph.sort_edges();
        graph
    }

    pub fn vertex_of_node(&self, node: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v.node == node)
    }

    /// Graphviz rendering with node names taken from `model`.
    pub fn to_dot(&self, model: &Model, name: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "digraph \"{}\" {{", escape(name));
        let _ = writeln!(out, "  rankdir=LR;");
        for (i, v) in self.vertices.iter().enumerate() {
            let label = model
                .diagram
                .node(&v.node)
                .map(|n| n.name.as_str())
                .unwrap_or(&v.node);
            let shape = if i == self.sink { "doublecircle" } else { "box" };
            let _ = writeln!(
                out,
                "  v{i} [label=\"{}\\n({})\", shape={shape}];",
                escape(label),
                escape(&v.node)
            );
        }
        for e in self.edges() {
            let flow_name = model
                .diagram
                .flows
                .iter()
                .find(|f| f.id == e.flow)
                .map(|f| f.name.as_str())
                .unwrap_or(&e.flow);
            let _ = writeln!(out, "  v{} -> v{} [label=\"{}\"];", e.from, e.to, escape(flow_name));
        }
        out.push_str("}\n");
        out
    }
}

pub(crate) fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FlowGraphCollection {
    pub graphs: Vec<TransposeFlowGraph>,
}

impl FlowGraphCollection {
    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, TransposeFlowGraph> {
        self.graphs.iter()
    }
}

/// Nodes where data terminates, sorted by node id: nodes without outgoing
/// flows, and nodes that receive data but whose output pins are all
/// independent of their input pins.
pub fn identify_sinks(model: &Model) -> Vec<&crate::model::Node> {
    let index = ModelIndex::new(model);
    let mut sinks: Vec<_> = sink_indices(&index)
        .into_iter()
        .map(|i| index.node(i))
        .collect();
    sinks.sort_by(|a, b| a.id.cmp(&b.id));
    sinks
}

fn sink_indices(index: &ModelIndex<'_>) -> Vec<usize> {
    let mut sinks: Vec<usize> = (0..index.node_count())
        .filter(|&n| index.outgoing(n).is_empty() || index.terminates_data(n))
        .collect();
    sinks.sort_by(|&a, &b| index.node(a).id.cmp(&index.node(b).id));
    sinks
}

/// Extracts every transpose flow graph of the diagram, ordered by sink id and
/// then by the order in which ambiguities were resolved.
pub fn extract_tfgs(model: &Model) -> Result<FlowGraphCollection, ExtractionError> {
    let index = ModelIndex::new(model);
    for n in 0..index.node_count() {
        if index.behavior(n).is_none() {
            return Err(ExtractionError::UnknownBehavior(index.node(n).id.clone()));
        }
    }
    let sinks = sink_indices(&index);
    if sinks.is_empty() {
        if index.node_count() == 0 {
            return Ok(FlowGraphCollection::default());
        }
        return Err(find_any_cycle(&index).unwrap_or(ExtractionError::NoSinks));
    }
    check_acyclic(&index, &sinks)?;

    let per_sink: Vec<Result<Vec<BackwardGraph>, ExtractionError>> = sinks
        .par_iter()
        .map(|&sink| walk_from_sink(&index, sink))
        .collect();
    let mut graphs = Vec::new();
    for result in per_sink {
        graphs.extend(result?.into_iter().map(transpose));
        if graphs.len() > MAX_FLOW_GRAPHS {
            return Err(ExtractionError::TooManyGraphs {
                limit: MAX_FLOW_GRAPHS,
            });
        }
    }
    Ok(FlowGraphCollection { graphs })
}

/// Whether the walk continues past `node` when it is not the root.
fn expands(index: &ModelIndex<'_>, node: usize, is_root: bool) -> bool {
    is_root || !index.terminates_data(node)
}

fn check_acyclic(index: &ModelIndex<'_>, sinks: &[usize]) -> Result<(), ExtractionError> {
    const WHITE: u8 = 0;
    const GREY: u8 = 1;
    const BLACK: u8 = 2;
    let mut color = vec![WHITE; index.node_count()];
    for &sink in sinks {
        if color[sink] != WHITE {
            continue;
        }
        // (node, next incoming flow position)
        let mut stack = vec![(sink, 0usize)];
        color[sink] = GREY;
        while let Some(&mut (node, ref mut pos)) = stack.last_mut() {
            let incoming = index.incoming(node);
            if *pos >= incoming.len() {
                color[node] = BLACK;
                stack.pop();
                continue;
            }
            let flow = index.flow(incoming[*pos]);
            *pos += 1;
            let Some(src) = index.node_index(&flow.source) else {
                continue;
            };
            if !expands(index, src, false) {
                continue;
            }
            match color[src] {
                WHITE => {
                    color[src] = GREY;
                    stack.push((src, 0));
                }
                GREY => {
                    let start = stack.iter().position(|&(n, _)| n == src).unwrap_or(0);
                    let mut nodes: Vec<String> = stack[start..]
                        .iter()
                        .map(|&(n, _)| index.node(n).id.clone())
                        .collect();
                    nodes.reverse();
                    return Err(ExtractionError::Cycle { nodes });
                }
                _ => {}
            }
        }
    }
    Ok(())
}

fn find_any_cycle(index: &ModelIndex<'_>) -> Option<ExtractionError> {
    let all: Vec<usize> = (0..index.node_count()).collect();
    check_acyclic(index, &all).err()
}

#[derive(Debug, Clone)]
struct PartialWalk {
    vertex_of: HashMap<usize, usize>,
    nodes: Vec<usize>,
    edges: Vec<(usize, usize, usize)>,
    /// (vertex, input pin position) still to resolve, processed LIFO.
    pending: Vec<(usize, usize)>,
}

impl PartialWalk {
    fn add_vertex(&mut self, index: &ModelIndex<'_>, node: usize, is_root: bool) -> usize {
        if let Some(&v) = self.vertex_of.get(&node) {
            return v;
        }
        let v = self.nodes.len();
        self.nodes.push(node);
        self.vertex_of.insert(node, v);
        if expands(index, node, is_root) {
            let pins = index.behavior(node).map_or(0, |b| b.in_pins.len());
            self.pending.extend((0..pins).rev().map(|p| (v, p)));
        }
        v
    }

    fn apply(&mut self, index: &ModelIndex<'_>, consumer: usize, flows: &[usize]) {
        for &f in flows {
            let flow = index.flow(f);
            let Some(src) = index.node_index(&flow.source) else {
                continue;
            };
            let producer = self.add_vertex(index, src, false);
            self.edges.push((consumer, producer, f));
        }
    }

    fn finish(self, index: &ModelIndex<'_>) -> BackwardGraph {
        let mut graph = BackwardGraph {
            root: 0,
            nodes: self
                .nodes
                .iter()
                .map(|&n| index.node(n).id.clone())
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|&(consumer, producer, f)| {
                    let flow = index.flow(f);
                    BackwardEdge {
                        consumer,
                        producer,
                        flow: flow.id.clone(),
                        target_pin: flow.target_pin.clone(),
                    }
                })
                .collect(),
        };
        graph.sort_edges();
        graph
    }
}

/// Groups the flows entering one pin by source node. Groups are ordered by
/// their smallest flow id; flows inside a group keep flow-id order.
fn alternatives(index: &ModelIndex<'_>, node: usize, pin: &str) -> Vec<Vec<usize>> {
    let mut groups: Vec<(&str, Vec<usize>)> = Vec::new();
    for &f in index.incoming(node) {
        let flow = index.flow(f);
        if flow.target_pin != pin {
            continue;
        }
        match groups.iter_mut().find(|(src, _)| *src == flow.source) {
            Some((_, list)) => list.push(f),
            None => groups.push((flow.source.as_str(), vec![f])),
        }
    }
    groups.into_iter().map(|(_, g)| g).collect()
}

fn walk_from_sink(index: &ModelIndex<'_>, sink: usize) -> Result<Vec<BackwardGraph>, ExtractionError> {
    let mut root = PartialWalk {
        vertex_of: HashMap::new(),
        nodes: Vec::new(),
        edges: Vec::new(),
        pending: Vec::new(),
    };
    root.add_vertex(index, sink, true);

    let mut open = vec![root];
    let mut done = Vec::new();
    while let Some(mut walk) = open.pop() {
        let mut forked = false;
        while let Some((vertex, pin_pos)) = walk.pending.pop() {
            let node = walk.nodes[vertex];
            let behavior = index
                .behavior(node)
                .ok_or_else(|| ExtractionError::UnknownBehavior(index.node(node).id.clone()))?;
            let pin = &behavior.in_pins[pin_pos].id;
            let groups = alternatives(index, node, pin);
            match groups.len() {
                0 => {}
                1 => walk.apply(index, vertex, &groups[0]),
                _ => {
                    if done.len() + open.len() + groups.len() > MAX_FLOW_GRAPHS {
                        return Err(ExtractionError::TooManyGraphs {
                            limit: MAX_FLOW_GRAPHS,
                        });
                    }
                    // LIFO: push in reverse so the first alternative is explored first.
                    for group in groups.iter().rev() {
                        let mut copy = walk.clone();
                        copy.apply(index, vertex, group);
                        open.push(copy);
                    }
                    forked = true;
                    break;
                }
            }
        }
        if !forked {
            done.push(walk.finish(index));
        }
    }
    Ok(done)
}
