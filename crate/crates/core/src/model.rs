//! Data flow diagram metamodel.
//!
//! A model is split into a [`DataDictionary`], which holds the reusable label
//! vocabulary and node behaviors, and a [`DataFlowDiagram`], which wires
//! concrete nodes together. Nodes and flows refer to dictionary elements by id;
//! labels are identified by their `(label type name, label name)` pair.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Reference to a label by its type name and label name, e.g. `Sensitivity.Personal`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LabelRef {
    pub label_type: String,
    pub label: String,
}

impl LabelRef {
    pub fn new(label_type: impl Into<String>, label: impl Into<String>) -> Self {
        Self {
            label_type: label_type.into(),
            label: label.into(),
        }
    }
}

impl fmt::Display for LabelRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.label_type, self.label)
    }
}

/// A set of characteristic labels.
pub type LabelSet = BTreeSet<LabelRef>;

/// Labels per data variable, keyed by flow name.
pub type FlowData = BTreeMap<String, LabelSet>;

/// Data variables per pin, keyed by pin id.
pub type PinData = BTreeMap<String, FlowData>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Label {
    pub id: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelType {
    pub id: String,
    pub name: String,
    pub labels: Vec<Label>,
}

impl LabelType {
    pub fn label(&self, name: &str) -> Option<&Label> {
        self.labels.iter().find(|l| l.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PinDirection {
    Input,
    Output,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pin {
    pub id: String,
    pub name: String,
}

impl Pin {
    pub fn new(id: impl Into<String>, name: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            name: name.into(),
        }
    }
}

/// Logical expression deciding whether a `set` assignment applies.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Constant(bool),
    /// True iff the label is carried by incoming data. With a flow scope only
    /// the data variable of that name is consulted.
    LabelReference {
        label: LabelRef,
        flow: Option<String>,
    },
    Not(Box<Term>),
    And(Box<Term>, Box<Term>),
    Or(Box<Term>, Box<Term>),
}

impl Term {
    pub fn label(label: LabelRef) -> Self {
        Term::LabelReference { label, flow: None }
    }

    pub fn scoped(flow: impl Into<String>, label: LabelRef) -> Self {
        Term::LabelReference {
            label,
            flow: Some(flow.into()),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(term: Term) -> Self {
        Term::Not(Box::new(term))
    }

    pub fn and(left: Term, right: Term) -> Self {
        Term::And(Box::new(left), Box::new(right))
    }

    pub fn or(left: Term, right: Term) -> Self {
        Term::Or(Box::new(left), Box::new(right))
    }

    /// Calls `f` for every label reference in the term.
    pub fn for_each_reference<'a>(&'a self, f: &mut impl FnMut(&'a LabelRef, Option<&'a str>)) {
        match self {
            Term::Constant(_) => {}
            Term::LabelReference { label, flow } => f(label, flow.as_deref()),
            Term::Not(inner) => inner.for_each_reference(f),
            Term::And(l, r) | Term::Or(l, r) => {
                l.for_each_reference(f);
                r.for_each_reference(f);
            }
        }
    }

    pub fn has_references(&self) -> bool {
        let mut found = false;
        self.for_each_reference(&mut |_, _| found = true);
        found
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Constant(true) => f.write_str("TRUE"),
            Term::Constant(false) => f.write_str("FALSE"),
            Term::LabelReference { label, flow: None } => write!(f, "{label}"),
            Term::LabelReference {
                label,
                flow: Some(flow),
            } => write!(f, "{flow}.{label}"),
            Term::Not(inner) => write!(f, "!{inner}"),
            Term::And(l, r) => write!(f, "({l} && {r})"),
            Term::Or(l, r) => write!(f, "({l} || {r})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Assignment {
    /// Copies every label arriving at `in_pins` to `out_pin`. With a flow
    /// scope only the data variable of that name is copied.
    Forward {
        in_pins: Vec<String>,
        out_pin: String,
        flow: Option<String>,
    },
    /// Adds `labels` to `out_pin` if `term` holds, removes them otherwise.
    Set {
        in_pins: Vec<String>,
        out_pin: String,
        term: Term,
        labels: LabelSet,
    },
}

impl Assignment {
    pub fn forward(in_pins: &[&str], out_pin: &str) -> Self {
        Assignment::Forward {
            in_pins: in_pins.iter().map(|p| p.to_string()).collect(),
            out_pin: out_pin.to_string(),
            flow: None,
        }
    }

    pub fn set(
        in_pins: &[&str],
        out_pin: &str,
        term: Term,
        labels: impl IntoIterator<Item = LabelRef>,
    ) -> Self {
        Assignment::Set {
            in_pins: in_pins.iter().map(|p| p.to_string()).collect(),
            out_pin: out_pin.to_string(),
            term,
            labels: labels.into_iter().collect(),
        }
    }

    pub fn in_pins(&self) -> &[String] {
        match self {
            Assignment::Forward { in_pins, .. } | Assignment::Set { in_pins, .. } => in_pins,
        }
    }

    pub fn out_pin(&self) -> &str {
        match self {
            Assignment::Forward { out_pin, .. } | Assignment::Set { out_pin, .. } => out_pin,
        }
    }

    pub fn is_forward(&self) -> bool {
        matches!(self, Assignment::Forward { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Behavior {
    pub id: String,
    pub name: String,
    pub in_pins: Vec<Pin>,
    pub out_pins: Vec<Pin>,
    /// Evaluation order is significant.
    pub assignments: Vec<Assignment>,
}

impl Behavior {
    pub fn new(id: impl Into<String>, name: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            name: name.into(),
            in_pins: Vec::new(),
            out_pins: Vec::new(),
            assignments: Vec::new(),
        }
    }

    pub fn in_pin(&self, id: &str) -> Option<&Pin> {
        self.in_pins.iter().find(|p| p.id == id)
    }

    pub fn out_pin(&self, id: &str) -> Option<&Pin> {
        self.out_pins.iter().find(|p| p.id == id)
    }

    pub fn pin_direction(&self, id: &str) -> Option<PinDirection> {
        if self.in_pin(id).is_some() {
            Some(PinDirection::Input)
        } else if self.out_pin(id).is_some() {
            Some(PinDirection::Output)
        } else {
            None
        }
    }

    /// True when no assignment of `out_pin` reads any input pin.
    pub fn is_input_independent(&self, out_pin: &str) -> bool {
        self.assignments
            .iter()
            .filter(|a| a.out_pin() == out_pin)
            .all(|a| a.in_pins().is_empty())
    }

    /// True when the behavior has output pins and every one of them is
    /// input-independent.
    pub fn all_outputs_input_independent(&self) -> bool {
        !self.out_pins.is_empty()
            && self
                .out_pins
                .iter()
                .all(|p| self.is_input_independent(&p.id))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    External,
    Process,
    Store,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::External => "external",
            NodeKind::Process => "process",
            NodeKind::Store => "store",
        }
    }

    /// Case-insensitive parse of `external`, `process` or `store`.
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "external" => Some(NodeKind::External),
            "process" => Some(NodeKind::Process),
            "store" => Some(NodeKind::Store),
            _ => None,
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: String,
    pub name: String,
    pub kind: NodeKind,
    pub behavior: String,
    pub labels: LabelSet,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Flow {
    pub id: String,
    /// Name of the data variable carried on this edge.
    pub name: String,
    pub source: String,
    pub source_pin: String,
    pub target: String,
    pub target_pin: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DataDictionary {
    pub label_types: Vec<LabelType>,
    pub behaviors: Vec<Behavior>,
}

impl DataDictionary {
    pub fn label_type(&self, name: &str) -> Option<&LabelType> {
        self.label_types.iter().find(|t| t.name == name)
    }

    pub fn behavior(&self, id: &str) -> Option<&Behavior> {
        self.behaviors.iter().find(|b| b.id == id)
    }

    pub fn contains_label(&self, label: &LabelRef) -> bool {
        self.label_type(&label.label_type)
            .and_then(|t| t.label(&label.label))
            .is_some()
    }

    /// Every label in declaration order.
    pub fn all_labels(&self) -> impl Iterator<Item = LabelRef> + '_ {
        self.label_types.iter().flat_map(|t| {
            t.labels
                .iter()
                .map(move |l| LabelRef::new(t.name.clone(), l.name.clone()))
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DataFlowDiagram {
    pub nodes: Vec<Node>,
    pub flows: Vec<Flow>,
}

impl DataFlowDiagram {
    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }
}

/// A data dictionary together with a diagram that uses it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Model {
    pub dictionary: DataDictionary,
    pub diagram: DataFlowDiagram,
}

impl Model {
    pub fn new(dictionary: DataDictionary, diagram: DataFlowDiagram) -> Self {
        Self {
            dictionary,
            diagram,
        }
    }

    /// Sorts every id-addressed collection by id. Labels inside a label type,
    /// pins and assignments keep their declared order.
    pub fn canonicalize(&mut self) {
        self.dictionary.label_types.sort_by(|a, b| a.id.cmp(&b.id));
        self.dictionary.behaviors.sort_by(|a, b| a.id.cmp(&b.id));
        self.diagram.nodes.sort_by(|a, b| a.id.cmp(&b.id));
        self.diagram.flows.sort_by(|a, b| a.id.cmp(&b.id));
    }

    pub fn canonicalized(mut self) -> Self {
        self.canonicalize();
        self
    }
}

/// Incremental construction of label types with generated ids.
#[derive(Debug, Default)]
pub struct DictionaryBuilder {
    dictionary: DataDictionary,
}

impl DictionaryBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a label type with the given labels; ids are derived from names.
    pub fn label_type(mut self, name: &str, labels: &[&str]) -> Self {
        self.add_label_type(name, labels);
        self
    }

    pub fn add_label_type(&mut self, name: &str, labels: &[&str]) {
        let id = format!("lt-{name}");
        let labels = labels
            .iter()
            .map(|l| Label {
                id: format!("{id}-{l}"),
                name: l.to_string(),
            })
            .collect();
        self.dictionary.label_types.push(LabelType {
            id,
            name: name.to_string(),
            labels,
        });
    }

    /// Adds `label` to the type, creating the type if necessary.
    pub fn ensure_label(&mut self, label: &LabelRef) {
        let type_id = format!("lt-{}", label.label_type);
        let idx = match self
            .dictionary
            .label_types
            .iter()
            .position(|t| t.name == label.label_type)
        {
            Some(idx) => idx,
            None => {
                self.dictionary.label_types.push(LabelType {
                    id: type_id,
                    name: label.label_type.clone(),
                    labels: Vec::new(),
                });
                self.dictionary.label_types.len() - 1
            }
        };
        let ty = &mut self.dictionary.label_types[idx];
        if ty.label(&label.label).is_none() {
            let id = format!("{}-{}", ty.id, label.label);
            ty.labels.push(Label {
                id,
                name: label.label.clone(),
            });
        }
    }

    pub fn behavior(mut self, behavior: Behavior) -> Self {
        self.dictionary.behaviors.push(behavior);
        self
    }

    pub fn add_behavior(&mut self, behavior: Behavior) {
        self.dictionary.behaviors.push(behavior);
    }

    pub fn build(self) -> DataDictionary {
        self.dictionary
    }
}
