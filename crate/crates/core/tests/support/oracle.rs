//! Slow reference implementations used to cross-check the library.
//!
//! Nothing here calls the library's extraction, propagation, behavior or
//! constraint code. Only the model types are shared.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use dataflow_core::constraint::{Condition, Constraint, Selection, SetExpr};
use dataflow_core::{
    Assignment, Behavior, DataDictionary, DataFlowDiagram, DictionaryBuilder, Flow, LabelRef, LabelSet, Model, Node,
    NodeKind, Pin, Term,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Vars = BTreeMap<String, LabelSet>;
pub type Pins = BTreeMap<String, Vars>;

const FLOW_NAMES: [&str; 3] = ["x", "y", "z"];
const LABELS: [&str; 3] = ["a", "b", "c"];

/// Knobs of [`random_model`].
#[derive(Debug, Clone, Copy)]
pub struct GenLimits {
    pub max_nodes: usize,
    pub max_label_types: usize,
    pub max_merges: usize,
}

impl Default for GenLimits {
    fn default() -> Self {
        Self {
            max_nodes: 8,
            max_label_types: 3,
            max_merges: 2,
        }
    }
}

fn all_labels(dict: &DataDictionary) -> Vec<LabelRef> {
    dict.label_types
        .iter()
        .flat_map(|t| t.labels.iter().map(move |l| LabelRef::new(&t.name, &l.name)))
        .collect()
}

fn random_term(rng: &mut ChaCha8Rng, labels: &[LabelRef], scopes: &[String], refs: bool, depth: u32) -> Term {
    let leaf = depth == 0 || rng.gen_bool(0.4);
    if leaf {
        if !refs || rng.gen_bool(0.2) {
            return Term::Constant(rng.gen());
        }
        let label = labels.choose(rng).unwrap().clone();
        return match scopes.choose(rng) {
            Some(s) if rng.gen_bool(0.3) => Term::scoped(s.clone(), label),
            _ => Term::label(label),
        };
    }
    match rng.gen_range(0..3) {
        0 => Term::not(random_term(rng, labels, scopes, refs, depth - 1)),
        1 => Term::and(
            random_term(rng, labels, scopes, refs, depth - 1),
            random_term(rng, labels, scopes, refs, depth - 1),
        ),
        _ => Term::or(
            random_term(rng, labels, scopes, refs, depth - 1),
            random_term(rng, labels, scopes, refs, depth - 1),
        ),
    }
}

/// Random acyclic diagram. Flows only run from lower to higher node
/// positions. At most `max_merges` input pins are fed by more than one source
/// node.
pub fn random_model(seed: u64, limits: GenLimits) -> Model {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dict = DictionaryBuilder::new();
    let type_count = rng.gen_range(1..=limits.max_label_types);
    for t in 0..type_count {
        let n = rng.gen_range(1..=LABELS.len());
        dict.add_label_type(&format!("T{t}"), &LABELS[..n]);
    }
    let dictionary = dict.build();
    let labels = all_labels(&dictionary);

    let node_count = rng.gen_range(2..=limits.max_nodes);
    let mut ins: Vec<Vec<String>> = Vec::new();
    let mut outs: Vec<Vec<String>> = Vec::new();
    for i in 0..node_count {
        let n_in = if i == 0 { 0 } else { rng.gen_range(0..=2) };
        let n_out = rng.gen_range(1..=2);
        ins.push((0..n_in).map(|p| format!("n{i}.i{p}")).collect());
        outs.push((0..n_out).map(|p| format!("n{i}.o{p}")).collect());
    }

    let mut flows: Vec<Flow> = Vec::new();
    let add_flow = |flows: &mut Vec<Flow>, src: usize, src_pin: &str, dst: usize, dst_pin: &str, name: &str| {
        let id = format!("f{:02}", flows.len());
        flows.push(Flow {
            id,
            name: name.to_string(),
            source: format!("n{src}"),
            source_pin: src_pin.to_string(),
            target: format!("n{dst}"),
            target_pin: dst_pin.to_string(),
        });
    };
    for (j, pins) in ins.iter().enumerate().skip(1) {
        for pin in pins.clone() {
            let src = rng.gen_range(0..j);
            let sp = outs[src].choose(&mut rng).unwrap().clone();
            let name = *FLOW_NAMES.choose(&mut rng).unwrap();
            add_flow(&mut flows, src, &sp, j, &pin, name);
            // A second flow from the same source node never forks.
            if rng.gen_bool(0.1) {
                let sp = outs[src].choose(&mut rng).unwrap().clone();
                let name = *FLOW_NAMES.choose(&mut rng).unwrap();
                add_flow(&mut flows, src, &sp, j, &pin, name);
            }
        }
    }
    let merges = rng.gen_range(0..=limits.max_merges);
    for _ in 0..merges {
        let candidates: Vec<(usize, String)> = (2..node_count)
            .flat_map(|j| ins[j].iter().map(move |p| (j, p.clone())))
            .filter(|(j, p)| {
                let sources: BTreeSet<&str> = flows
                    .iter()
                    .filter(|f| f.target_pin == *p)
                    .map(|f| f.source.as_str())
                    .collect();
                sources.len() == 1 && sources.len() < *j
            })
            .collect();
        let Some((j, pin)) = candidates.choose(&mut rng).cloned() else {
            break;
        };
        let existing = flows.iter().find(|f| f.target_pin == pin).unwrap().source.clone();
        let others: Vec<usize> = (0..j).filter(|s| format!("n{s}") != existing).collect();
        let src = *others.choose(&mut rng).unwrap();
        let sp = outs[src].choose(&mut rng).unwrap().clone();
        let name = *FLOW_NAMES.choose(&mut rng).unwrap();
        add_flow(&mut flows, src, &sp, j, &pin, name);
    }

    // Flow names that are guaranteed to arrive at a pin in every flow graph.
    let certain_name = |pin: &str| -> Option<String> {
        let names: BTreeSet<&str> = flows
            .iter()
            .filter(|f| f.target_pin == pin)
            .map(|f| f.name.as_str())
            .collect();
        (names.len() == 1).then(|| names.into_iter().next().unwrap().to_string())
    };

    let mut behaviors = Vec::new();
    let mut nodes = Vec::new();
    for i in 0..node_count {
        let mut b = Behavior::new(format!("b{i}"), format!("behavior {i}"));
        b.in_pins = ins[i].iter().map(|p| Pin::new(p, p)).collect();
        b.out_pins = outs[i].iter().map(|p| Pin::new(p, p)).collect();
        for out in &outs[i] {
            if !ins[i].is_empty() && rng.gen_bool(0.8) {
                let mut pins: Vec<String> = ins[i].iter().filter(|_| rng.gen_bool(0.7)).cloned().collect();
                if pins.is_empty() {
                    pins.push(ins[i][0].clone());
                }
                let scope = if pins.len() == 1 && rng.gen_bool(0.3) {
                    certain_name(&pins[0])
                } else {
                    None
                };
                b.assignments.push(Assignment::Forward {
                    in_pins: pins,
                    out_pin: out.clone(),
                    flow: scope,
                });
            }
            for _ in 0..rng.gen_range(0..=2) {
                let pins: Vec<String> = ins[i].iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
                let scopes: Vec<String> = pins.iter().filter_map(|p| certain_name(p)).collect();
                let n = rng.gen_range(1..=2);
                let set_labels: LabelSet = labels.choose_multiple(&mut rng, n).cloned().collect();
                let term = random_term(&mut rng, &labels, &scopes, !pins.is_empty(), 2);
                b.assignments.push(Assignment::Set {
                    in_pins: pins,
                    out_pin: out.clone(),
                    term,
                    labels: set_labels,
                });
            }
        }
        let kind = *[NodeKind::External, NodeKind::Process, NodeKind::Store].choose(&mut rng).unwrap();
        let k = rng.gen_range(0..=2).min(labels.len());
        nodes.push(Node {
            id: format!("n{i}"),
            name: format!("node {i}"),
            kind,
            behavior: b.id.clone(),
            labels: labels.choose_multiple(&mut rng, k).cloned().collect(),
        });
        behaviors.push(b);
    }
    let mut dictionary = dictionary;
    dictionary.behaviors = behaviors;
    Model::new(dictionary, DataFlowDiagram { nodes, flows }).canonicalized()
}

/// Random constraint over the vocabulary of [`random_model`].
pub fn random_constraint(seed: u64, dict: &DataDictionary) -> Constraint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let labels = all_labels(dict);
    let mut data = Vec::new();
    let mut vertex = Vec::new();
    for _ in 0..rng.gen_range(1..=2) {
        data.push(if rng.gen_bool(0.8) {
            Selection::Label {
                label: labels.choose(&mut rng).unwrap().clone(),
                negated: rng.gen_bool(0.3),
            }
        } else {
            Selection::Name {
                name: FLOW_NAMES.choose(&mut rng).unwrap().to_string(),
                negated: rng.gen_bool(0.3),
            }
        });
    }
    for _ in 0..rng.gen_range(0..=2) {
        vertex.push(match rng.gen_range(0..4) {
            0 | 1 => Selection::Label {
                label: labels.choose(&mut rng).unwrap().clone(),
                negated: rng.gen_bool(0.3),
            },
            2 => Selection::Kind(*[NodeKind::External, NodeKind::Process, NodeKind::Store].choose(&mut rng).unwrap()),
            _ => Selection::Name {
                name: format!("node {}", rng.gen_range(0..8)),
                negated: rng.gen_bool(0.5),
            },
        });
    }
    let mut condition = None;
    if rng.gen_bool(0.4) {
        let t = &dict.label_types.choose(&mut rng).unwrap().name;
        data.push(Selection::VariableLabel {
            label_type: t.clone(),
            variable: "d".into(),
        });
        vertex.push(Selection::VariableLabel {
            label_type: t.clone(),
            variable: "v".into(),
        });
        let (d, v) = (SetExpr::var("d"), SetExpr::var("v"));
        let c = match rng.gen_range(0..4) {
            0 => Condition::IsEmpty(SetExpr::intersect(d, v)),
            1 => Condition::Subset(d, v),
            2 => Condition::Equals(d, SetExpr::union(v.clone(), v)),
            _ => Condition::not(Condition::IsEmpty(SetExpr::intersect(d, v))),
        };
        condition = Some(c);
    }
    Constraint {
        name: format!("R{seed}"),
        outgoing: rng.gen_bool(0.3),
        data,
        vertex,
        condition,
    }
}

/// A flow graph reduced to what identifies it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GraphKey {
    pub sink: String,
    pub nodes: BTreeSet<String>,
    pub flows: BTreeSet<String>,
}

impl GraphKey {
    pub fn of(tfg: &dataflow_core::TransposeFlowGraph) -> Self {
        GraphKey {
            sink: tfg.vertices[tfg.sink].node.clone(),
            nodes: tfg.vertices.iter().map(|v| v.node.clone()).collect(),
            flows: tfg
                .vertices
                .iter()
                .flat_map(|v| v.predecessors.iter().map(|e| e.flow.clone()))
                .collect(),
        }
    }
}

fn behavior_of<'m>(model: &'m Model, node: &str) -> &'m Behavior {
    let n = model.diagram.nodes.iter().find(|n| n.id == node).unwrap();
    model.dictionary.behaviors.iter().find(|b| b.id == n.behavior).unwrap()
}

fn terminates(model: &Model, node: &str) -> bool {
    let receives = model.diagram.flows.iter().any(|f| f.target == node);
    let b = behavior_of(model, node);
    let independent = |pin: &str| {
        b.assignments.iter().all(|a| match a {
            Assignment::Forward { out_pin, .. } => out_pin != pin,
            Assignment::Set { out_pin, in_pins, .. } => out_pin != pin || in_pins.is_empty(),
        })
    };
    receives && !b.out_pins.is_empty() && b.out_pins.iter().all(|p| independent(&p.id))
}

fn sinks(model: &Model) -> Vec<String> {
    model
        .diagram
        .nodes
        .iter()
        .filter(|n| !model.diagram.flows.iter().any(|f| f.source == n.id) || terminates(model, &n.id))
        .map(|n| n.id.clone())
        .collect()
}

/// Every flow graph by brute force: fix one source node for every input pin
/// of the whole diagram, walk back from each sink, and deduplicate.
pub fn naive_flow_graphs(model: &Model) -> BTreeSet<GraphKey> {
    // (node, pin) -> distinct source nodes
    let mut choices: BTreeMap<(String, String), Vec<String>> = BTreeMap::new();
    for f in &model.diagram.flows {
        let entry = choices.entry((f.target.clone(), f.target_pin.clone())).or_default();
        if !entry.contains(&f.source) {
            entry.push(f.source.clone());
        }
    }
    let keys: Vec<&(String, String)> = choices.keys().collect();
    let mut picks = vec![0usize; keys.len()];
    let mut out = BTreeSet::new();
    loop {
        let chosen: BTreeMap<&(String, String), &String> = keys
            .iter()
            .zip(&picks)
            .map(|(k, &i)| (*k, &choices[*k][i]))
            .collect();
        for sink in sinks(model) {
            let mut nodes = BTreeSet::new();
            let mut flows = BTreeSet::new();
            let mut todo = vec![sink.clone()];
            while let Some(n) = todo.pop() {
                if !nodes.insert(n.clone()) {
                    continue;
                }
                if n != sink && terminates(model, &n) {
                    continue;
                }
                for f in model.diagram.flows.iter().filter(|f| f.target == n) {
                    if *chosen[&(f.target.clone(), f.target_pin.clone())] == f.source {
                        flows.insert(f.id.clone());
                        todo.push(f.source.clone());
                    }
                }
            }
            out.insert(GraphKey { sink, nodes, flows });
        }
        // next combination
        let mut k = 0;
        loop {
            if k == picks.len() {
                return out;
            }
            picks[k] += 1;
            if picks[k] < choices[keys[k]].len() {
                break;
            }
            picks[k] = 0;
            k += 1;
        }
    }
}

fn term_holds(term: &Term, vars: &[(&String, &LabelSet)]) -> bool {
    match term {
        Term::Constant(b) => *b,
        Term::LabelReference { label, flow } => vars
            .iter()
            .filter(|(name, _)| flow.as_ref().is_none_or(|f| f == *name))
            .any(|(_, set)| set.contains(label)),
        Term::Not(t) => !term_holds(t, vars),
        Term::And(a, b) => term_holds(a, vars) && term_holds(b, vars),
        Term::Or(a, b) => term_holds(a, vars) || term_holds(b, vars),
    }
}

/// Labels of one output pin given the data on every input pin.
pub fn naive_output(behavior: &Behavior, inputs: &Pins, out: &str) -> LabelSet {
    let mut result = LabelSet::new();
    for a in &behavior.assignments {
        if let Assignment::Forward { in_pins, out_pin, flow } = a {
            if out_pin != out {
                continue;
            }
            for p in in_pins {
                for (name, set) in inputs.get(p).into_iter().flatten() {
                    if flow.as_ref().is_none_or(|f| f == name) {
                        result.extend(set.iter().cloned());
                    }
                }
            }
        }
    }
    for a in &behavior.assignments {
        if let Assignment::Set {
            in_pins,
            out_pin,
            term,
            labels,
        } = a
        {
            if out_pin != out {
                continue;
            }
            let vars: Vec<(&String, &LabelSet)> = in_pins.iter().filter_map(|p| inputs.get(p)).flatten().collect();
            if term_holds(term, &vars) {
                result.extend(labels.iter().cloned());
            } else {
                result.retain(|l| !labels.contains(l));
            }
        }
    }
    result
}

/// Data arriving at `node` within the graph, recomputed recursively from
/// scratch for every request.
pub fn naive_incoming(model: &Model, graph: &GraphKey, node: &str) -> Pins {
    let mut pins = Pins::new();
    for f in model.diagram.flows.iter().filter(|f| f.target == node && graph.flows.contains(&f.id)) {
        let labels = naive_pin(model, graph, &f.source, &f.source_pin);
        pins.entry(f.target_pin.clone())
            .or_default()
            .entry(f.name.clone())
            .or_default()
            .extend(labels);
    }
    pins
}

pub fn naive_pin(model: &Model, graph: &GraphKey, node: &str, out: &str) -> LabelSet {
    let inputs = naive_incoming(model, graph, node);
    naive_output(behavior_of(model, node), &inputs, out)
}

pub fn naive_outputs(model: &Model, graph: &GraphKey, node: &str) -> BTreeMap<String, LabelSet> {
    behavior_of(model, node)
        .out_pins
        .iter()
        .map(|p| (p.id.clone(), naive_pin(model, graph, node, &p.id)))
        .collect()
}

pub fn naive_outgoing(model: &Model, graph: &GraphKey, node: &str) -> Pins {
    let b = behavior_of(model, node);
    let mut pins = Pins::new();
    for p in &b.out_pins {
        let labels = naive_pin(model, graph, node, &p.id);
        let mut vars = Vars::new();
        for f in model.diagram.flows.iter().filter(|f| f.source == node && f.source_pin == p.id) {
            vars.insert(f.name.clone(), labels.clone());
        }
        if vars.is_empty() {
            vars.insert(p.name.clone(), labels);
        }
        pins.insert(p.id.clone(), vars);
    }
    pins
}

fn set_value(e: &SetExpr, env: &BTreeMap<String, LabelSet>) -> LabelSet {
    match e {
        SetExpr::Var(v) => env[v].clone(),
        SetExpr::Intersect(a, b) => {
            let b = set_value(b, env);
            set_value(a, env).into_iter().filter(|l| b.contains(l)).collect()
        }
        SetExpr::Union(a, b) => set_value(a, env).into_iter().chain(set_value(b, env)).collect(),
    }
}

fn condition_holds(c: &Condition, env: &BTreeMap<String, LabelSet>) -> bool {
    match c {
        Condition::IsEmpty(e) => set_value(e, env).is_empty(),
        Condition::Subset(a, b) => {
            let b = set_value(b, env);
            set_value(a, env).iter().all(|l| b.contains(l))
        }
        Condition::Equals(a, b) => set_value(a, env) == set_value(b, env),
        Condition::Not(c) => !condition_holds(c, env),
        Condition::And(a, b) => condition_holds(a, env) && condition_holds(b, env),
        Condition::Or(a, b) => condition_holds(a, env) || condition_holds(b, env),
    }
}

fn selections_hold(
    selections: &[Selection],
    labels: &LabelSet,
    name: &str,
    kind: Option<NodeKind>,
    env: &mut BTreeMap<String, LabelSet>,
) -> bool {
    selections.iter().all(|s| match s {
        Selection::Label { label, negated } => labels.contains(label) ^ negated,
        Selection::Name { name: n, negated } => (n == name) ^ negated,
        Selection::Kind(k) => kind == Some(*k),
        Selection::VariableLabel { label_type, variable } => {
            let bound = labels.iter().filter(|l| &l.label_type == label_type).cloned().collect();
            env.insert(variable.clone(), bound);
            true
        }
    })
}

/// (graph, node id, pin, variable name) of every violating variable.
pub type Finding = (GraphKey, String, String, String);

/// Walks every path from a source of each graph to its sink and checks the
/// constraint at every vertex on the way.
pub fn brute_force_violations(model: &Model, constraint: &Constraint) -> BTreeSet<Finding> {
    let mut found = BTreeSet::new();
    for graph in naive_flow_graphs(model) {
        let edges: Vec<&Flow> = model.diagram.flows.iter().filter(|f| graph.flows.contains(&f.id)).collect();
        let sources: Vec<&String> = graph
            .nodes
            .iter()
            .filter(|n| !edges.iter().any(|f| &f.target == *n))
            .collect();
        let mut paths: Vec<Vec<String>> = Vec::new();
        let mut stack: Vec<Vec<String>> = sources.iter().map(|s| vec![(*s).clone()]).collect();
        while let Some(path) = stack.pop() {
            let last = path.last().unwrap();
            if *last == graph.sink {
                paths.push(path);
                continue;
            }
            for f in edges.iter().filter(|f| &f.source == last) {
                let mut next = path.clone();
                next.push(f.target.clone());
                stack.push(next);
            }
        }
        for path in paths {
            for node_id in &path {
                let node = model.diagram.nodes.iter().find(|n| &n.id == node_id).unwrap();
                let mut env = BTreeMap::new();
                if !selections_hold(&constraint.vertex, &node.labels, &node.name, Some(node.kind), &mut env) {
                    continue;
                }
                let data = if constraint.outgoing {
                    naive_outgoing(model, &graph, node_id)
                } else {
                    naive_incoming(model, &graph, node_id)
                };
                for (pin, vars) in &data {
                    for (name, labels) in vars {
                        let mut env = env.clone();
                        if !selections_hold(&constraint.data, labels, name, None, &mut env) {
                            continue;
                        }
                        if constraint.condition.as_ref().is_none_or(|c| condition_holds(c, &env)) {
                            found.insert((graph.clone(), node_id.clone(), pin.clone(), name.clone()));
                        }
                    }
                }
            }
        }
    }
    found
}
