//! Reading and writing models.

mod flat;
mod json;
mod plantuml;
mod simple;

use thiserror::Error;

use crate::assignment::Diagnostic;
use crate::model::Model;
use crate::validate::ValidationReport;

pub use flat::load_flat;
pub use json::{
    document_to_model, load_model, model_to_document, save_model, AssignmentDoc, BehaviorDoc, DiagramDoc,
    DictionaryDoc, FlowDoc, LabelTypeDoc, ModelDocument, NamedDoc, NodeDoc, TermDoc, FORMAT_VERSION,
};
pub use plantuml::{import_plantuml, PlantUmlImport, STEREOTYPE_LABEL_TYPE};
pub use simple::{build_model, build_model_with_labels, SimpleEdge, SimpleNode};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Json { line: usize, column: usize, message: String },
    #[error("unknown format version `{0}`")]
    UnknownVersion(String),
    #[error("{path}: unresolved reference `{id}`")]
    UnresolvedReference { path: String, id: String },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
    #[error("model is invalid: {}", summarize(.0))]
    Invalid(ValidationReport),
    #[error("PlantUML import failed: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    PlantUml(Vec<Diagnostic>),
}

fn summarize(report: &ValidationReport) -> String {
    report.errors().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

impl IoError {
    pub(crate) fn json(e: serde_json::Error) -> Self {
        IoError::Json {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

/// Loads either the canonical document or the flat dialect, chosen by the
/// presence of a `version` key.
pub fn load_any_json(bytes: &[u8]) -> Result<Model, IoError> {
    let value: serde_json::Value = serde_json::from_slice(bytes).map_err(IoError::json)?;
    if value.get("version").is_some() {
        json::load_model_value(value)
    } else {
        flat::load_flat_value(value)
    }
}

/// Loads a JSON model and reports its findings. Models rejected for
/// well-formedness reasons, including dangling references, yield findings
/// instead of an error.
pub fn validate_json(bytes: &[u8]) -> Result<ValidationReport, IoError> {
    match load_any_json(bytes) {
        Ok(model) => Ok(crate::validate::validate_model(&model.dictionary, &model.diagram)),
        Err(IoError::Invalid(report)) => Ok(report),
        Err(IoError::UnresolvedReference { path, id }) => Ok(ValidationReport {
            findings: vec![crate::validate::Finding {
                severity: crate::validate::Severity::Error,
                code: "unresolved-reference",
                element: path,
                message: format!("unresolved reference `{id}`"),
            }],
        }),
        Err(e) => Err(e),
    }
}

/// Graphviz rendering of a diagram: nodes by kind, edges labelled with the
/// flow name.
pub fn diagram_to_dot(model: &Model) -> String {
    use crate::flowgraph::escape;
    use crate::model::NodeKind;
    use std::fmt::Write;

    let model = model.clone().canonicalized();
    let mut out = String::from("digraph dfd {\n  rankdir=LR;\n");
    for n in &model.diagram.nodes {
        let shape = match n.kind {
            NodeKind::External => "box",
            NodeKind::Process => "ellipse",
            NodeKind::Store => "cylinder",
        };
        let labels: Vec<String> = n.labels.iter().map(ToString::to_string).collect();
        let mut text = escape(&n.name);
        if !labels.is_empty() {
            text = format!("{text}\\n{}", escape(&labels.join(", ")));
        }
        let _ = writeln!(out, "  \"{}\" [shape={shape}, label=\"{text}\"];", escape(&n.id));
    }
    for f in &model.diagram.flows {
        let _ = writeln!(
            out,
            "  \"{}\" -> \"{}\" [label=\"{}\"];",
            escape(&f.source),
            escape(&f.target),
            escape(&f.name)
        );
    }
    out.push_str("}\n");
    out
}
