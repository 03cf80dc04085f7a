//! Architecture model to data flow diagram.
//!
//! Every action becomes a node. Calls are inlined at each call site between
//! a calling and a returning node, with an entry node for the callee.
//! Scenarios get a start and an end node, branches a join node. Nodes pass
//! their variables on through one input pin `in`; each variable leaves on its
//! own output pin and travels on a flow named after it. Returning nodes
//! receive the callee's returned variables on a second pin `result`.

use std::collections::BTreeSet;

use super::{Action, ActionKind, ArchitectureModel, Owner, Role, TraceMap, TraceTarget};
use crate::model::{
    Assignment, Behavior, DataFlowDiagram, DictionaryBuilder, Flow, LabelSet, Model, Node, NodeKind, Pin, Term,
};

/// Result of [`transform_to_dfd`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdlTransform {
    pub model: Model,
    pub trace: TraceMap,
}

#[derive(Debug, Clone)]
struct Tail {
    node: String,
    vars: BTreeSet<String>,
}

fn in_pin(node: &str) -> String {
    format!("{node}.in")
}

fn result_pin(node: &str) -> String {
    format!("{node}.result")
}

fn out_pin(node: &str, var: &str) -> String {
    format!("{node}.o.{var}")
}

/// Scopes unscoped label references to `var`.
fn rescope(term: &Term, var: &str) -> Term {
    match term {
        Term::LabelReference { label, flow: None } => Term::scoped(var, label.clone()),
        Term::Not(t) => Term::not(rescope(t, var)),
        Term::And(a, b) => Term::and(rescope(a, var), rescope(b, var)),
        Term::Or(a, b) => Term::or(rescope(a, var), rescope(b, var)),
        other => other.clone(),
    }
}

struct Generator<'a> {
    arch: &'a ArchitectureModel,
    nodes: Vec<Node>,
    behaviors: Vec<Behavior>,
    flows: Vec<Flow>,
    trace: TraceMap,
}

struct NodeSpec<'s> {
    name: String,
    role: Role,
    element: &'s str,
    owner: &'s Owner,
    context: &'s str,
}

impl<'a> Generator<'a> {
    fn add_node(&mut self, spec: NodeSpec<'_>) -> String {
        let id = format!("n{:06}", self.nodes.len() + 1);
        let kind = match spec.owner {
            Owner::Scenario(_) => NodeKind::External,
            Owner::Component(c) => self.arch.component(c).map_or(NodeKind::Process, |c| c.kind),
        };
        let labels: LabelSet = self
            .arch
            .owner_labels(spec.owner)
            .unwrap_or_default()
            .into_iter()
            .collect();
        self.behaviors.push(Behavior::new(format!("{id}.b"), format!("{} behavior", spec.name)));
        self.nodes.push(Node {
            id: id.clone(),
            name: spec.name,
            kind,
            behavior: format!("{id}.b"),
            labels,
        });
        self.trace.insert(
            id.clone(),
            TraceTarget {
                element: spec.element.to_string(),
                role: spec.role,
                owner: spec.owner.clone(),
                context: spec.context.to_string(),
            },
        );
        id
    }

    fn behavior(&mut self) -> &mut Behavior {
        self.behaviors.last_mut().expect("a node was added")
    }

    /// Adds an input pin to the newest node and wires `vars` of `from` into it.
    fn wire<'v>(&mut self, from: &Tail, to: &str, pin: String, pin_name: &str, vars: impl IntoIterator<Item = &'v String>) {
        let vars: Vec<&String> = vars.into_iter().collect();
        if vars.is_empty() {
            return;
        }
        self.behavior().in_pins.push(Pin::new(&pin, pin_name));
        for v in vars {
            let id = format!("f{:06}", self.flows.len() + 1);
            self.flows.push(Flow {
                id,
                name: v.clone(),
                source: from.node.clone(),
                source_pin: out_pin(&from.node, v),
                target: to.to_string(),
                target_pin: pin.clone(),
            });
        }
    }

    /// Output pin for `var` on the newest node, forwarding flow `flow` from `pin`.
    fn forward(&mut self, node: &str, var: &str, pin: &str, flow: &str) {
        let out = out_pin(node, var);
        let b = self.behavior();
        b.out_pins.push(Pin::new(&out, var));
        b.assignments.push(Assignment::Forward {
            in_pins: vec![pin.to_string()],
            out_pin: out,
            flow: Some(flow.to_string()),
        });
    }

    /// Node that passes `vars` of `tail` through unchanged.
    fn pass_through(&mut self, tail: &Tail, vars: &BTreeSet<String>, spec: NodeSpec<'_>) -> Tail {
        let id = self.add_node(spec);
        self.wire(tail, &id, in_pin(&id), "in", vars);
        for v in vars {
            self.forward(&id, v, &in_pin(&id), v);
        }
        Tail {
            node: id,
            vars: vars.clone(),
        }
    }

    fn sequence(&mut self, actions: &[Action], mut tail: Tail, owner: &Owner, context: &str) -> Tail {
        for action in actions {
            tail = self.action(action, tail, owner, context);
        }
        tail
    }

    fn action(&mut self, action: &Action, tail: Tail, owner: &Owner, context: &str) -> Tail {
        match &action.kind {
            ActionKind::SetVariable { variable, labels, term } => {
                let id = self.add_node(NodeSpec {
                    name: format!("set {variable}"),
                    role: Role::Set,
                    element: &action.id,
                    owner,
                    context,
                });
                let input = in_pin(&id);
                self.wire(&tail, &id, input.clone(), "in", &tail.vars);
                for v in &tail.vars {
                    self.forward(&id, v, &input, v);
                }
                let known = tail.vars.contains(variable);
                let out = out_pin(&id, variable);
                if !known {
                    self.behavior().out_pins.push(Pin::new(&out, variable));
                }
                if !labels.is_empty() {
                    let term = if known { rescope(term, variable) } else { term.clone() };
                    let in_pins: Vec<&str> = if term.has_references() && !tail.vars.is_empty() {
                        vec![&input]
                    } else {
                        vec![]
                    };
                    let set = Assignment::set(&in_pins, &out, term, labels.iter().cloned());
                    self.behavior().assignments.push(set);
                }
                let mut vars = tail.vars;
                vars.insert(variable.clone());
                Tail { node: id, vars }
            }
            ActionKind::Call {
                component,
                operation,
                args,
            } => {
                let callee = self
                    .arch
                    .component(component)
                    .and_then(|c| c.operation(operation))
                    .expect("calls are resolved by the parser");
                let target = format!("{component}.{operation}");
                let calling = self.pass_through(
                    &tail,
                    &tail.vars,
                    NodeSpec {
                        name: format!("call {target}"),
                        role: Role::Calling,
                        element: &action.id,
                        owner,
                        context,
                    },
                );

                let inner_context = if context.is_empty() {
                    action.id.clone()
                } else {
                    format!("{context}>{}", action.id)
                };
                let callee_owner = Owner::Component(component.clone());
                let entry = self.add_node(NodeSpec {
                    name: target.clone(),
                    role: Role::Entry,
                    element: &target,
                    owner: &callee_owner,
                    context: &inner_context,
                });
                let arg_set: BTreeSet<String> = args.iter().cloned().collect();
                self.wire(&calling, &entry, in_pin(&entry), "in", &arg_set);
                for (param, arg) in callee.params.iter().zip(args) {
                    self.forward(&entry, param, &in_pin(&entry), arg);
                }
                let entry_tail = Tail {
                    node: entry,
                    vars: callee.params.iter().cloned().collect(),
                };
                let body = self.sequence(&callee.actions, entry_tail, &callee_owner, &inner_context);

                let returned: BTreeSet<String> = callee.returns().iter().cloned().collect();
                let id = self.add_node(NodeSpec {
                    name: format!("return from {target}"),
                    role: Role::Returning,
                    element: &action.id,
                    owner,
                    context,
                });
                self.wire(&calling, &id, in_pin(&id), "in", &tail.vars);
                self.wire(&body, &id, result_pin(&id), "result", &returned);
                let vars: BTreeSet<String> = tail.vars.union(&returned).cloned().collect();
                for v in &vars {
                    let pin = if returned.contains(v) { result_pin(&id) } else { in_pin(&id) };
                    self.forward(&id, v, &pin, v);
                }
                Tail { node: id, vars }
            }
            ActionKind::Branch(alternatives) => {
                let tails: Vec<Tail> = alternatives
                    .iter()
                    .map(|alt| self.sequence(alt, tail.clone(), owner, context))
                    .collect();
                let joined = tails
                    .iter()
                    .skip(1)
                    .fold(tails[0].vars.clone(), |acc, t| acc.intersection(&t.vars).cloned().collect());
                let id = self.add_node(NodeSpec {
                    name: "join".to_string(),
                    role: Role::Join,
                    element: &action.id,
                    owner,
                    context,
                });
                let input = in_pin(&id);
                if !joined.is_empty() {
                    self.behavior().in_pins.push(Pin::new(&input, "in"));
                }
                for t in &tails {
                    for v in &joined {
                        let fid = format!("f{:06}", self.flows.len() + 1);
                        self.flows.push(Flow {
                            id: fid,
                            name: v.clone(),
                            source: t.node.clone(),
                            source_pin: out_pin(&t.node, v),
                            target: id.clone(),
                            target_pin: input.clone(),
                        });
                    }
                }
                for v in &joined {
                    self.forward(&id, v, &input, v);
                }
                Tail { node: id, vars: joined }
            }
            ActionKind::Return(vars) => {
                let vars: BTreeSet<String> = vars.iter().cloned().collect();
                let names: Vec<&str> = vars.iter().map(String::as_str).collect();
                self.pass_through(
                    &tail,
                    &vars,
                    NodeSpec {
                        name: format!("return {}", names.join(", ")),
                        role: Role::Return,
                        element: &action.id,
                        owner,
                        context,
                    },
                )
            }
        }
    }
}

/// Generates the diagram, dictionary and trace links for `arch`. The model
/// must come from [`super::parse_adl`], which resolves every reference.
pub fn transform_to_dfd(arch: &ArchitectureModel) -> AdlTransform {
    let mut dict = DictionaryBuilder::new();
    for (name, labels) in &arch.label_types {
        let labels: Vec<&str> = labels.iter().map(String::as_str).collect();
        dict.add_label_type(name, &labels);
    }
    let mut gen = Generator {
        arch,
        nodes: Vec::new(),
        behaviors: Vec::new(),
        flows: Vec::new(),
        trace: TraceMap::new(),
    };
    for scenario in &arch.scenarios {
        let owner = Owner::Scenario(scenario.name.clone());
        let start = gen.add_node(NodeSpec {
            name: format!("start {}", scenario.name),
            role: Role::Start,
            element: &scenario.name,
            owner: &owner,
            context: "",
        });
        let mut vars = BTreeSet::new();
        for (var, labels) in &scenario.data {
            let out = out_pin(&start, var);
            gen.behavior().out_pins.push(Pin::new(&out, var));
            if !labels.is_empty() {
                let set = Assignment::set(&[], &out, Term::Constant(true), labels.iter().cloned());
                gen.behavior().assignments.push(set);
            }
            vars.insert(var.clone());
        }
        let tail = gen.sequence(&scenario.actions, Tail { node: start, vars }, &owner, "");
        gen.pass_through(
            &tail,
            &tail.vars,
            NodeSpec {
                name: format!("end {}", scenario.name),
                role: Role::End,
                element: &scenario.name,
                owner: &owner,
                context: "",
            },
        );
    }
    for b in gen.behaviors {
        dict.add_behavior(b);
    }
    let model = Model::new(
        dict.build(),
        DataFlowDiagram {
            nodes: gen.nodes,
            flows: gen.flows,
        },
    )
    .canonicalized();
    AdlTransform {
        model,
        trace: gen.trace,
    }
}
