//! Hand-shaped diagrams with analytically known properties.

#![allow(dead_code)]

use dataflow_core::{Assignment, Behavior, DataFlowDiagram, DictionaryBuilder, Flow, LabelRef, Model, Node, NodeKind, Pin, Term};

fn node(id: &str, kind: NodeKind) -> Node {
    Node {
        id: id.into(),
        name: id.into(),
        kind,
        behavior: format!("b-{id}"),
        labels: Default::default(),
    }
}

fn forwarder(id: &str) -> Behavior {
    let mut b = Behavior::new(format!("b-{id}"), id);
    b.in_pins.push(Pin::new(format!("{id}.in"), "in"));
    b.out_pins.push(Pin::new(format!("{id}.out"), "out"));
    b.assignments.push(Assignment::forward(&[&format!("{id}.in")], &format!("{id}.out")));
    b
}

fn flow(flows: &mut Vec<Flow>, from: &str, to: &str) {
    flows.push(Flow {
        id: format!("f{:03}", flows.len()),
        name: "d".into(),
        source: from.into(),
        source_pin: format!("{from}.out"),
        target: to.into(),
        target_pin: format!("{to}.in"),
    });
}

/// `src`, then `k` diamonds in a row: two parallel forwarders whose flows
/// meet on the single input pin of a merge node. Each diamond is an
/// independent two-way choice, so there are exactly 2^k flow graphs.
pub fn diamond_chain(k: usize) -> Model {
    let mut dict = DictionaryBuilder::new().label_type("S", &["p"]);
    let mut src = Behavior::new("b-src", "src");
    src.out_pins.push(Pin::new("src.out", "out"));
    src.assignments.push(Assignment::set(&[], "src.out", Term::Constant(true), [LabelRef::new("S", "p")]));
    dict.add_behavior(src);
    let mut nodes = vec![node("src", NodeKind::External)];
    let mut flows = Vec::new();
    let mut prev = "src".to_string();
    for i in 0..k {
        let (a, b, m) = (format!("a{i:02}"), format!("b{i:02}"), format!("m{i:02}"));
        for id in [&a, &b, &m] {
            dict.add_behavior(forwarder(id));
            nodes.push(node(id, NodeKind::Process));
        }
        flow(&mut flows, &prev, &a);
        flow(&mut flows, &prev, &b);
        flow(&mut flows, &a, &m);
        flow(&mut flows, &b, &m);
        prev = m;
    }
    dict.add_behavior(forwarder("sink"));
    nodes.push(node("sink", NodeKind::Store));
    flow(&mut flows, &prev, "sink");
    Model::new(dict.build(), DataFlowDiagram { nodes, flows }).canonicalized()
}
