//! Import of data flow diagrams drawn in PlantUML.
//!
//! Supported subset:
//!
//! ```text
//! actor "Customer" as user <<external_entity>>
//! rectangle shop <<internal, local_logging>>
//! database "Orders" as db
//! user -> shop : order <<https>>
//! shop -[#black]-> db : "order"
//! ```
//!
//! Declaration keywords choose the node kind; `external_entity`,
//! `database` and `datastore` stereotypes override it. Stereotypes become
//! labels of the `Stereotype` type. Arrow stereotypes are attached to the data
//! leaving the source. Layout and styling statements are skipped with a
//! warning; anything else is an error.

use std::collections::HashMap;
use std::sync::OnceLock;

use regex::Regex;

use super::simple::{build_model, SimpleEdge, SimpleNode};
use super::IoError;
use crate::assignment::Diagnostic;
use crate::model::{LabelRef, Model, NodeKind};

pub const STEREOTYPE_LABEL_TYPE: &str = "Stereotype";

#[derive(Debug, Clone, PartialEq)]
pub struct PlantUmlImport {
    pub model: Model,
    pub warnings: Vec<Diagnostic>,
}

fn kind_for_keyword(keyword: &str) -> Option<NodeKind> {
    Some(match keyword.to_ascii_lowercase().as_str() {
        "actor" | "external" | "entity" | "person" => NodeKind::External,
        "database" | "store" | "queue" | "collections" | "storage" => NodeKind::Store,
        "rectangle" | "process" | "component" | "participant" | "node" | "control" | "agent" | "usecase"
        | "boundary" => NodeKind::Process,
        _ => return None,
    })
}

const IGNORED: &[&str] = &[
    "skinparam",
    "title",
    "left",
    "top",
    "hide",
    "show",
    "scale",
    "caption",
    "header",
    "footer",
    "!include",
    "!define",
    "!theme",
    "allowmixing",
    "package",
    "frame",
    "cloud",
    "together",
];

fn declaration() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r#"^(?P<kw>[A-Za-z]+)\s+(?:"(?P<qname>[^"]*)"|(?P<name>[\w.\-]+))(?:\s+as\s+(?:"(?P<qalias>[^"]*)"|(?P<alias>[\w.\-]+)))?\s*(?P<stereo>(?:<<[^>]*>>\s*)*)(?:#[\w]+)?\s*(?P<block>\[)?\s*$"#,
        )
        .unwrap()
    })
}

fn arrow() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r#"^(?:"(?P<qa>[^"]+)"|(?P<a>[\w.\-]+))\s*(?P<arrow><?-+(?:\[[^\]]*\]-*)?>?)\s*(?:"(?P<qb>[^"]+)"|(?P<b>[\w.\-]+))\s*(?::\s*(?P<label>.*))?$"#,
        )
        .unwrap()
    })
}

fn stereotypes(text: &str) -> Vec<String> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"<<([^>]*)>>").unwrap());
    re.captures_iter(text)
        .flat_map(|c| {
            c[1].split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect::<Vec<_>>()
        })
        .collect()
}

fn stereotype_labels(names: &[String]) -> Vec<LabelRef> {
    names
        .iter()
        .map(|s| LabelRef::new(STEREOTYPE_LABEL_TYPE, s.replace(char::is_whitespace, "_")))
        .collect()
}

/// Parses `text` into a model. Errors list every rejected line.
pub fn import_plantuml(text: &str) -> Result<PlantUmlImport, IoError> {
    let mut nodes: Vec<SimpleNode> = Vec::new();
    let mut keys: HashMap<String, usize> = HashMap::new();
    let mut edges = Vec::new();
    let mut warnings = Vec::new();
    let mut errors = Vec::new();
    // Open `note ... end note` style block and its terminator.
    let mut skipping: Option<&str> = None;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if let Some(end) = skipping {
            if line.to_ascii_lowercase().starts_with(end) {
                skipping = None;
            }
            continue;
        }
        if line.is_empty() || line.starts_with('\'') || line.starts_with("@startuml") || line.starts_with("@enduml") {
            continue;
        }
        let first = line.split_whitespace().next().unwrap_or("").to_ascii_lowercase();
        if first == "note" || first == "legend" {
            if !line.contains(':') {
                skipping = Some(if first == "note" { "end note" } else { "endlegend" });
            }
            warnings.push(Diagnostic::new(line_no, 1, format!("`{first}` is not imported")));
            continue;
        }
        if IGNORED.contains(&first.as_str()) || line == "}" || line == "]" {
            warnings.push(Diagnostic::new(line_no, 1, format!("`{first}` is not imported")));
            continue;
        }
        if let Some(c) = declaration().captures(line) {
            if let Some(mut kind) = kind_for_keyword(&c["kw"]) {
                let name = c
                    .name("qname")
                    .or_else(|| c.name("name"))
                    .map_or("", |m| m.as_str())
                    .to_string();
                let alias = c.name("qalias").or_else(|| c.name("alias")).map(|m| m.as_str().to_string());
                // `rectangle key as "Display"` and `rectangle "Display" as key`.
                let (key, display) = match alias {
                    Some(alias) if c.name("qalias").is_some() => (name, alias),
                    Some(alias) => (alias, name),
                    None => (name.clone(), name),
                };
                let stereo = stereotypes(c.name("stereo").map_or("", |m| m.as_str()));
                for s in &stereo {
                    match s.as_str() {
                        "external_entity" => kind = NodeKind::External,
                        "database" | "datastore" => kind = NodeKind::Store,
                        _ => {}
                    }
                }
                if c.name("block").is_some() {
                    skipping = Some("]");
                }
                if keys.contains_key(&key) {
                    errors.push(Diagnostic::new(line_no, 1, format!("`{key}` is declared twice")));
                    continue;
                }
                keys.insert(key.clone(), nodes.len());
                nodes.push(SimpleNode {
                    key,
                    name: display,
                    kind,
                    labels: stereotype_labels(&stereo),
                });
                continue;
            }
        }
        if let Some(c) = arrow().captures(line) {
            let a = c.name("qa").or_else(|| c.name("a")).unwrap().as_str().to_string();
            let b = c.name("qb").or_else(|| c.name("b")).unwrap().as_str().to_string();
            let arrow = &c["arrow"];
            let (from, to) = match (arrow.starts_with('<'), arrow.ends_with('>')) {
                (false, true) => (a, b),
                (true, false) => (b, a),
                _ => {
                    errors.push(Diagnostic::new(line_no, 1, format!("arrow `{arrow}` has no single direction")));
                    continue;
                }
            };
            let label = c.name("label").map_or("", |m| m.as_str());
            let stereo = stereotypes(label);
            let data = label
                .split("<<")
                .next()
                .unwrap_or("")
                .trim()
                .trim_matches('"')
                .trim()
                .to_string();
            for key in [&from, &to] {
                if !keys.contains_key(key) {
                    warnings.push(Diagnostic::new(
                        line_no,
                        1,
                        format!("`{key}` is used before being declared; imported as a process"),
                    ));
                    keys.insert(key.clone(), nodes.len());
                    nodes.push(SimpleNode {
                        key: key.clone(),
                        name: key.clone(),
                        kind: NodeKind::Process,
                        labels: Vec::new(),
                    });
                }
            }
            let name = if data.is_empty() { format!("{from}_to_{to}") } else { data };
            edges.push(SimpleEdge {
                from,
                to,
                name,
                labels: stereotype_labels(&stereo),
            });
            continue;
        }
        errors.push(Diagnostic::new(line_no, 1, format!("cannot import `{line}`")));
    }
    if !errors.is_empty() {
        return Err(IoError::PlantUml(errors));
    }
    if nodes.is_empty() {
        warnings.push(Diagnostic::new(1, 1, "no elements"));
    }
    Ok(PlantUmlImport {
        model: build_model(&nodes, &edges),
        warnings,
    })
}
