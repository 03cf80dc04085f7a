//! Well-formedness checks for a dictionary and diagram.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use crate::model::{Assignment, Behavior, DataDictionary, DataFlowDiagram, LabelRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub severity: Severity,
    pub code: &'static str,
    pub element: String,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{sev}[{}] {}: {}", self.code, self.element, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn has_errors(&self) -> bool {
        self.errors().next().is_some()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Error)
    }

    pub fn codes(&self) -> Vec<&'static str> {
        self.findings.iter().map(|f| f.code).collect()
    }

    fn push(&mut self, severity: Severity, code: &'static str, element: &str, message: String) {
        self.findings.push(Finding {
            severity,
            code,
            element: element.to_string(),
            message,
        });
    }

    fn error(&mut self, code: &'static str, element: &str, message: String) {
        self.push(Severity::Error, code, element, message);
    }

    fn warning(&mut self, code: &'static str, element: &str, message: String) {
        self.push(Severity::Warning, code, element, message);
    }
}

/// Checks every structural invariant of the metamodel. Findings are data:
/// the report is empty iff the model is well-formed.
pub fn validate_model(dictionary: &DataDictionary, diagram: &DataFlowDiagram) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut ids = HashSet::new();
    let mut check_id = |report: &mut ValidationReport, id: &str, what: &str| {
        if id.is_empty() {
            report.error("empty-id", id, format!("{what} has an empty id"));
        } else if !ids.insert(id.to_string()) {
            report.error("duplicate-id", id, format!("id `{id}` is used more than once"));
        }
    };

    let mut type_names = HashSet::new();
    for ty in &dictionary.label_types {
        check_id(&mut report, &ty.id, "label type");
        if ty.name.is_empty() {
            report.error("empty-name", &ty.id, "label type name is empty".into());
        } else if !type_names.insert(ty.name.as_str()) {
            report.error(
                "duplicate-label-type",
                &ty.id,
                format!("label type name `{}` is not unique", ty.name),
            );
        }
        let mut label_names = HashSet::new();
        for label in &ty.labels {
            check_id(&mut report, &label.id, "label");
            if label.name.is_empty() {
                report.error("empty-name", &label.id, "label name is empty".into());
            } else if !label_names.insert(label.name.as_str()) {
                report.error(
                    "duplicate-label",
                    &label.id,
                    format!("label `{}` appears twice in `{}`", label.name, ty.name),
                );
            }
        }
    }

    let check_label = |report: &mut ValidationReport, element: &str, label: &LabelRef| {
        if !dictionary.contains_label(label) {
            report.error(
                "unresolved-label",
                element,
                format!("label `{label}` is not defined in the dictionary"),
            );
        }
    };

    for behavior in &dictionary.behaviors {
        check_id(&mut report, &behavior.id, "behavior");
        for pin in behavior.in_pins.iter().chain(&behavior.out_pins) {
            check_id(&mut report, &pin.id, "pin");
        }
        validate_assignments(&mut report, behavior, &check_label);
    }

    let behaviors: HashMap<&str, &Behavior> = dictionary
        .behaviors
        .iter()
        .map(|b| (b.id.as_str(), b))
        .collect();

    let mut node_behavior = HashMap::new();
    for node in &diagram.nodes {
        check_id(&mut report, &node.id, "node");
        match behaviors.get(node.behavior.as_str()) {
            Some(b) => {
                node_behavior.insert(node.id.as_str(), *b);
            }
            None => report.error(
                "unresolved-reference",
                &node.id,
                format!("behavior `{}` does not exist", node.behavior),
            ),
        }
        for label in &node.labels {
            check_label(&mut report, &node.id, label);
        }
    }

    // (node, pin) -> flow names arriving there
    let mut arriving: BTreeMap<(&str, &str), BTreeSet<&str>> = BTreeMap::new();
    let mut has_incoming: HashSet<&str> = HashSet::new();
    for flow in &diagram.flows {
        check_id(&mut report, &flow.id, "flow");
        if flow.name.is_empty() {
            report.warning("empty-name", &flow.id, "flow has no data name".into());
        }
        match node_behavior.get(flow.source.as_str()) {
            None if diagram.node(&flow.source).is_none() => report.error(
                "unresolved-reference",
                &flow.id,
                format!("source node `{}` does not exist", flow.source),
            ),
            None => {}
            Some(b) => match b.pin_direction(&flow.source_pin) {
                None => report.error(
                    "unknown-pin",
                    &flow.id,
                    format!("source pin `{}` is not a pin of `{}`", flow.source_pin, flow.source),
                ),
                Some(crate::model::PinDirection::Input) => report.error(
                    "pin-direction-mismatch",
                    &flow.id,
                    format!("source pin `{}` is an input pin", flow.source_pin),
                ),
                Some(_) => {}
            },
        }
        match node_behavior.get(flow.target.as_str()) {
            None if diagram.node(&flow.target).is_none() => report.error(
                "unresolved-reference",
                &flow.id,
                format!("target node `{}` does not exist", flow.target),
            ),
            None => {}
            Some(b) => match b.pin_direction(&flow.target_pin) {
                None => report.error(
                    "unknown-pin",
                    &flow.id,
                    format!("target pin `{}` is not a pin of `{}`", flow.target_pin, flow.target),
                ),
                Some(crate::model::PinDirection::Output) => report.error(
                    "pin-direction-mismatch",
                    &flow.id,
                    format!("target pin `{}` is an output pin", flow.target_pin),
                ),
                Some(_) => {
                    arriving
                        .entry((flow.target.as_str(), flow.target_pin.as_str()))
                        .or_default()
                        .insert(flow.name.as_str());
                    has_incoming.insert(flow.target.as_str());
                }
            },
        }
    }

    for node in &diagram.nodes {
        let Some(behavior) = node_behavior.get(node.id.as_str()) else {
            continue;
        };
        let mut read_pins = BTreeSet::new();
        for assignment in &behavior.assignments {
            read_pins.extend(assignment.in_pins().iter().map(String::as_str));
            let flows_at = |pins: &[String]| -> BTreeSet<&str> {
                pins.iter()
                    .filter_map(|p| arriving.get(&(node.id.as_str(), p.as_str())))
                    .flatten()
                    .copied()
                    .collect()
            };
            let mut scopes = Vec::new();
            match assignment {
                Assignment::Forward {
                    flow: Some(flow), ..
                } => scopes.push(flow.as_str()),
                Assignment::Set { term, .. } => term.for_each_reference(&mut |_, flow| {
                    if let Some(flow) = flow {
                        scopes.push(flow);
                    }
                }),
                _ => {}
            }
            let available = flows_at(assignment.in_pins());
            for scope in scopes {
                if !available.contains(scope) {
                    report.warning(
                        "unknown-flow-scope",
                        &node.id,
                        format!("no flow named `{scope}` reaches the pins read by an assignment"),
                    );
                }
            }
        }
        for pin in read_pins {
            if behavior.in_pin(pin).is_some() && !arriving.contains_key(&(node.id.as_str(), pin)) {
                report.warning(
                    "unconnected-input-pin",
                    &node.id,
                    format!("input pin `{pin}` is read by an assignment but receives no flow"),
                );
            }
        }
        if has_incoming.contains(node.id.as_str()) {
            let independent = behavior
                .out_pins
                .iter()
                .filter(|p| behavior.is_input_independent(&p.id))
                .count();
            if independent > 0 && independent < behavior.out_pins.len() {
                report.warning(
                    "partial-input-independence",
                    &node.id,
                    "only some output pins are independent of the inputs; the node is not treated as a sink"
                        .into(),
                );
            }
        }
    }

    report
}

fn validate_assignments(
    report: &mut ValidationReport,
    behavior: &Behavior,
    check_label: &impl Fn(&mut ValidationReport, &str, &LabelRef),
) {
    for assignment in &behavior.assignments {
        for pin in assignment.in_pins() {
            match behavior.pin_direction(pin) {
                None => report.error(
                    "unknown-pin",
                    &behavior.id,
                    format!("assignment reads pin `{pin}` which the behavior does not own"),
                ),
                Some(crate::model::PinDirection::Output) => report.error(
                    "pin-direction-mismatch",
                    &behavior.id,
                    format!("assignment reads output pin `{pin}`"),
                ),
                Some(_) => {}
            }
        }
        let out = assignment.out_pin();
        match behavior.pin_direction(out) {
            None => report.error(
                "unknown-pin",
                &behavior.id,
                format!("assignment writes pin `{out}` which the behavior does not own"),
            ),
            Some(crate::model::PinDirection::Input) => report.error(
                "pin-direction-mismatch",
                &behavior.id,
                format!("assignment writes input pin `{out}`"),
            ),
            Some(_) => {}
        }
        match assignment {
            Assignment::Forward { in_pins, .. } if in_pins.is_empty() => report.error(
                "empty-forward",
                &behavior.id,
                format!("forwarding assignment for `{out}` has no input pins"),
            ),
            Assignment::Set { labels, term, .. } => {
                if labels.is_empty() {
                    report.error(
                        "empty-output-labels",
                        &behavior.id,
                        format!("assignment for `{out}` sets no labels"),
                    );
                }
                for label in labels {
                    check_label(report, &behavior.id, label);
                }
                term.for_each_reference(&mut |label, _| check_label(report, &behavior.id, label));
            }
            _ => {}
        }
    }
}
