//! The full analysis pipeline and its report.
//!
//! Input is loaded and transformed if needed, flow graphs are extracted,
//! labels propagated and every constraint executed. The report is a plain
//! serializable value; rendering it twice from the same input gives the same
//! bytes unless timings were requested.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::adl::{parse_adl, transform_to_dfd, AdlError, AdlNodeLabels, ArchitectureModel, TraceMap, TraceTarget};
use crate::constraint::{execute, parse_constraints, Constraint, ConstraintError, Violation};
use crate::flowgraph::{extract_tfgs, ExtractionError, FlowGraphCollection};
use crate::io::{import_plantuml, load_any_json, IoError};
use crate::model::{LabelSet, Model};
use crate::propagation::{propagate_all, DiagramNodeLabels, NodeLabelSource, PropagateAllError, PropagatedFlowGraph};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("architecture model: {0}")]
    Adl(#[from] AdlError),
    #[error("flow graph extraction: {0}")]
    Extraction(#[from] ExtractionError),
    #[error("label propagation: {0}")]
    Propagation(#[from] PropagateAllError),
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
    #[error("unsupported input `{0}`; expected .json, .adl or .puml")]
    UnknownFormat(String),
}

impl AnalysisError {
    /// True when the input itself is at fault rather than the analysis.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            AnalysisError::Io(_) | AnalysisError::Adl(_) | AnalysisError::Constraint(_) | AnalysisError::UnknownFormat(_)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    /// Canonical document or the flat dialect.
    Json,
    Adl,
    PlantUml,
}

impl InputFormat {
    pub fn from_path(path: &Path) -> Result<Self, AnalysisError> {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("json") => Ok(InputFormat::Json),
            Some("adl") => Ok(InputFormat::Adl),
            Some("puml" | "plantuml") => Ok(InputFormat::PlantUml),
            _ => Err(AnalysisError::UnknownFormat(path.display().to_string())),
        }
    }
}

/// A diagram ready for analysis, with its architecture origin if it was
/// generated from one.
#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub model: Model,
    pub architecture: Option<(ArchitectureModel, TraceMap)>,
    pub warnings: Vec<String>,
}

impl LoadedModel {
    pub fn from_model(model: Model) -> Self {
        Self {
            model,
            architecture: None,
            warnings: Vec::new(),
        }
    }
}

pub fn load_input(bytes: &[u8], format: InputFormat) -> Result<LoadedModel, AnalysisError> {
    match format {
        InputFormat::Json => Ok(LoadedModel::from_model(load_any_json(bytes)?)),
        InputFormat::Adl => {
            let text = std::str::from_utf8(bytes).map_err(|e| AdlError::new(1, 1, format!("not UTF-8: {e}")))?;
            let arch = parse_adl(text)?;
            let t = transform_to_dfd(&arch);
            Ok(LoadedModel {
                model: t.model,
                architecture: Some((arch, t.trace)),
                warnings: Vec::new(),
            })
        }
        InputFormat::PlantUml => {
            let text = String::from_utf8_lossy(bytes);
            let import = import_plantuml(&text)?;
            Ok(LoadedModel {
                model: import.model,
                architecture: None,
                warnings: import.warnings.iter().map(ToString::to_string).collect(),
            })
        }
    }
}

/// Parses every constraint in `texts` and binds it against `model`.
pub fn prepare_constraints<S: AsRef<str>>(texts: &[S], model: &Model) -> Result<Vec<Constraint>, AnalysisError> {
    let mut out = Vec::new();
    for text in texts {
        for c in parse_constraints(text.as_ref())? {
            c.bind(&model.dictionary)?;
            out.push(c);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AnalysisOptions {
    /// Include per-stage wall times in the report.
    pub timings: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Summary {
    pub nodes: usize,
    pub flows: usize,
    pub flow_graphs: usize,
    pub constraints: usize,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VariableReport {
    pub pin: String,
    pub name: String,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ViolationReport {
    pub flow_graph: usize,
    /// Node id of the flow graph's sink.
    pub sink: String,
    pub vertex: usize,
    pub node: String,
    pub node_name: String,
    pub node_labels: Vec<String>,
    pub variables: Vec<VariableReport>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConstraintReport {
    pub name: String,
    pub constraint: String,
    pub violations: Vec<ViolationReport>,
}

/// What the editor needs to highlight one node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ViolatingNode {
    pub name: String,
    pub constraints: BTreeSet<String>,
    /// Union of the matched data labels.
    pub labels: BTreeSet<String>,
    pub flow_graphs: BTreeSet<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Timings {
    pub load_ms: f64,
    pub extract_ms: f64,
    pub propagate_ms: f64,
    pub execute_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AnalysisReport {
    pub summary: Summary,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub constraints: Vec<ConstraintReport>,
    /// Keyed by node id.
    pub violating_nodes: BTreeMap<String, ViolatingNode>,
    /// Architecture origin of every violating node, for generated diagrams.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub trace: BTreeMap<String, TraceTarget>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

fn strings(labels: &LabelSet) -> Vec<String> {
    labels.iter().map(ToString::to_string).collect()
}

impl AnalysisReport {
    pub fn violation_count(&self) -> usize {
        self.summary.violations
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let s = &self.summary;
        let mut out = format!(
            "model: {} nodes, {} flows, {} flow graphs\n",
            s.nodes, s.flows, s.flow_graphs
        );
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        for c in &self.constraints {
            let _ = writeln!(out, "constraint {}: {} violation(s)", c.name, c.violations.len());
            for v in &c.violations {
                let _ = writeln!(
                    out,
                    "  {} \"{}\" [{}] in flow graph {} (sink {})",
                    v.node,
                    v.node_name,
                    v.node_labels.join(", "),
                    v.flow_graph,
                    v.sink
                );
                for var in &v.variables {
                    let _ = writeln!(out, "    {} on {}: {}", var.name, var.pin, var.labels.join(", "));
                }
                if let Some(t) = self.trace.get(&v.node) {
                    let _ = writeln!(out, "    from {} {} of {:?} {}", t.role, t.element, t.owner, t.context);
                }
            }
        }
        if let Some(t) = &self.timings {
            let _ = writeln!(
                out,
                "timings: load {:.3} ms, extract {:.3} ms, propagate {:.3} ms, execute {:.3} ms, total {:.3} ms",
                t.load_ms, t.extract_ms, t.propagate_ms, t.execute_ms, t.total_ms
            );
        }
        let _ = writeln!(out, "violations: {}", s.violations);
        out
    }
}

/// Everything the pipeline produced.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub loaded: LoadedModel,
    pub flow_graphs: FlowGraphCollection,
    pub propagated: Vec<PropagatedFlowGraph>,
    pub violations: Vec<(Constraint, Vec<Violation>)>,
    pub report: AnalysisReport,
}

fn millis(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1000.0
}

/// Loads `bytes` and analyzes them against the constraints in `constraints`.
pub fn analyze_bytes<S: AsRef<str>>(
    bytes: &[u8],
    format: InputFormat,
    constraints: &[S],
    options: AnalysisOptions,
) -> Result<Analysis, AnalysisError> {
    let start = Instant::now();
    let loaded = load_input(bytes, format)?;
    let load_ms = millis(start);
    analyze_loaded(loaded, constraints, options, start, load_ms)
}

/// Analyzes an already loaded model. Load time is reported as zero.
pub fn analyze<S: AsRef<str>>(
    loaded: LoadedModel,
    constraints: &[S],
    options: AnalysisOptions,
) -> Result<Analysis, AnalysisError> {
    analyze_loaded(loaded, constraints, options, Instant::now(), 0.0)
}

fn analyze_loaded<S: AsRef<str>>(
    loaded: LoadedModel,
    constraint_texts: &[S],
    options: AnalysisOptions,
    start: Instant,
    load_ms: f64,
) -> Result<Analysis, AnalysisError> {
    let constraints = prepare_constraints(constraint_texts, &loaded.model)?;
    let model = &loaded.model;

    let t = Instant::now();
    let flow_graphs = extract_tfgs(model)?;
    let extract_ms = millis(t);

    let t = Instant::now();
    let diagram_labels = DiagramNodeLabels(model);
    let adl_labels = loaded.architecture.as_ref().map(|(arch, trace)| AdlNodeLabels {
        architecture: arch,
        trace,
    });
    let labels: &dyn NodeLabelSource = match &adl_labels {
        Some(l) => l,
        None => &diagram_labels,
    };
    let propagated = propagate_all(&flow_graphs, model, labels)?;
    let propagate_ms = millis(t);

    let t = Instant::now();
    let mut violations = Vec::with_capacity(constraints.len());
    for c in constraints {
        let found = execute(&c, &propagated, model)?;
        violations.push((c, found));
    }
    let execute_ms = millis(t);

    let timings = options.timings.then(|| Timings {
        load_ms,
        extract_ms,
        propagate_ms,
        execute_ms,
        total_ms: millis(start),
    });
    let report = build_report(&loaded, &flow_graphs, &violations, timings);
    Ok(Analysis {
        loaded,
        flow_graphs,
        propagated,
        violations,
        report,
    })
}

fn build_report(
    loaded: &LoadedModel,
    flow_graphs: &FlowGraphCollection,
    violations: &[(Constraint, Vec<Violation>)],
    timings: Option<Timings>,
) -> AnalysisReport {
    let mut constraints = Vec::new();
    let mut violating_nodes: BTreeMap<String, ViolatingNode> = BTreeMap::new();
    let mut total = 0;
    for (c, found) in violations {
        total += found.len();
        let mut entries = Vec::with_capacity(found.len());
        for v in found {
            let variables: Vec<VariableReport> = v
                .variables
                .iter()
                .map(|m| VariableReport {
                    pin: m.pin.clone(),
                    name: m.name.clone(),
                    labels: strings(&m.labels),
                })
                .collect();
            let entry = violating_nodes.entry(v.node.clone()).or_insert_with(|| ViolatingNode {
                name: v.node_name.clone(),
                constraints: BTreeSet::new(),
                labels: BTreeSet::new(),
                flow_graphs: BTreeSet::new(),
            });
            entry.constraints.insert(c.name.clone());
            entry.flow_graphs.insert(v.tfg);
            entry.labels.extend(variables.iter().flat_map(|m| m.labels.iter().cloned()));
            entries.push(ViolationReport {
                flow_graph: v.tfg,
                sink: flow_graphs.graphs[v.tfg].sink_vertex().node.clone(),
                vertex: v.vertex,
                node: v.node.clone(),
                node_name: v.node_name.clone(),
                node_labels: strings(&v.node_labels),
                variables,
            });
        }
        constraints.push(ConstraintReport {
            name: c.name.clone(),
            constraint: c.to_string(),
            violations: entries,
        });
    }
    let trace = match &loaded.architecture {
        Some((_, trace)) => violating_nodes
            .keys()
            .filter_map(|id| trace.get(id).map(|t| (id.clone(), t.clone())))
            .collect(),
        None => BTreeMap::new(),
    };
    AnalysisReport {
        summary: Summary {
            nodes: loaded.model.diagram.nodes.len(),
            flows: loaded.model.diagram.flows.len(),
            flow_graphs: flow_graphs.len(),
            constraints: constraints.len(),
            violations: total,
        },
        warnings: loaded.warnings.clone(),
        constraints,
        violating_nodes,
        trace,
        timings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const C1: &str = "constraint C1: data Sensitivity.Personal, !Encryption.Encrypted never flows vertex Location.offPremise";

    #[test]
    fn adl_shop_variants() {
        let plain = include_bytes!("../tests/fixtures/shop.adl");
        let a = analyze_bytes(plain, InputFormat::Adl, &[C1], AnalysisOptions::default()).unwrap();
        assert_eq!(a.report.violation_count(), 1);
        let (node, info) = a.report.violating_nodes.iter().next().unwrap();
        assert_eq!(info.name, "Database.store");
        assert_eq!(a.report.trace[node].element, "Database.store");

        let enc = include_bytes!("../tests/fixtures/shop-encrypted.adl");
        let b = analyze_bytes(enc, InputFormat::Adl, &[C1], AnalysisOptions::default()).unwrap();
        assert_eq!(b.report.violation_count(), 0);
        assert!(b.report.violating_nodes.is_empty());
    }

    #[test]
    fn timings_only_when_requested() {
        let plain = include_bytes!("../tests/fixtures/shop.adl");
        let a = analyze_bytes(plain, InputFormat::Adl, &[C1], AnalysisOptions::default()).unwrap();
        assert!(!a.report.to_json().contains("timings"));
        let b = analyze_bytes(plain, InputFormat::Adl, &[C1], AnalysisOptions { timings: true }).unwrap();
        let t = b.report.timings.unwrap();
        assert!(t.total_ms >= t.extract_ms);
    }

    #[test]
    fn unknown_label_in_constraint_is_input_error() {
        let plain = include_bytes!("../tests/fixtures/shop.adl");
        let err = analyze_bytes(
            plain,
            InputFormat::Adl,
            &["constraint X: data Foo.Bar never flows vertex Location.offPremise"],
            AnalysisOptions::default(),
        )
        .unwrap_err();
        assert!(err.is_input_error(), "{err}");
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(InputFormat::from_path(Path::new("a/b.JSON")).unwrap(), InputFormat::Json);
        assert_eq!(InputFormat::from_path(Path::new("x.puml")).unwrap(), InputFormat::PlantUml);
        assert!(InputFormat::from_path(Path::new("x.txt")).is_err());
    }
}
