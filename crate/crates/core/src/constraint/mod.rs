//! "Never flows" constraints.
//!
//! A constraint selects data variables by their labels or names and vertices
//! by their node labels, name or kind. Every vertex that receives a matching
//! variable while matching the vertex side is a violation. An optional
//! condition compares label sets bound by variable selections.
//!
//! ```text
//! constraint C1: data Sensitivity.Personal, !Encryption.Encrypted
//!     never flows vertex Location.offPremise
//! constraint R: data Roles.$d never flows vertex Roles.$v where isEmpty(intersect($d, $v))
//! constraint Anywhere: data Sensitivity.Personal never flows vertex any
//! ```

mod builder;
mod condition;
mod execute;
mod parser;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::assignment::Diagnostic;
use crate::model::{DataDictionary, LabelRef, NodeKind};

pub use builder::{ConstraintBuilder, DataSelectorBuilder, NeverFlows, VertexSelectorBuilder};
pub use condition::{evaluate_condition, Bindings};
pub use execute::{execute, MatchedVariable, Violation};
pub use parser::{parse_constraint, parse_constraints};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selection {
    /// Label presence, or absence when negated.
    Label { label: LabelRef, negated: bool },
    /// Flow name on the data side, node name on the vertex side.
    Name { name: String, negated: bool },
    /// Vertex side only.
    Kind(NodeKind),
    /// Binds `variable` to all labels of `label_type`; always matches.
    VariableLabel { label_type: String, variable: String },
}

impl fmt::Display for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bang = |n: &bool| if *n { "!" } else { "" };
        match self {
            Selection::Label { label, negated } => write!(f, "{}{label}", bang(negated)),
            Selection::Name { name, negated } => write!(f, "{}named {name:?}", bang(negated)),
            Selection::Kind(kind) => write!(f, "kind {}", kind_keyword(*kind)),
            Selection::VariableLabel {
                label_type,
                variable,
            } => write!(f, "{label_type}.${variable}"),
        }
    }
}

fn kind_keyword(kind: NodeKind) -> &'static str {
    match kind {
        NodeKind::External => "External",
        NodeKind::Process => "Process",
        NodeKind::Store => "Store",
    }
}

/// Expression producing a label set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SetExpr {
    Var(String),
    Intersect(Box<SetExpr>, Box<SetExpr>),
    Union(Box<SetExpr>, Box<SetExpr>),
}

impl SetExpr {
    pub fn var(name: &str) -> Self {
        SetExpr::Var(name.to_string())
    }

    pub fn intersect(a: SetExpr, b: SetExpr) -> Self {
        SetExpr::Intersect(Box::new(a), Box::new(b))
    }

    pub fn union(a: SetExpr, b: SetExpr) -> Self {
        SetExpr::Union(Box::new(a), Box::new(b))
    }

    fn variables<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            SetExpr::Var(v) => out.push(v),
            SetExpr::Intersect(a, b) | SetExpr::Union(a, b) => {
                a.variables(out);
                b.variables(out);
            }
        }
    }
}

impl fmt::Display for SetExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetExpr::Var(v) => write!(f, "${v}"),
            SetExpr::Intersect(a, b) => write!(f, "intersect({a}, {b})"),
            SetExpr::Union(a, b) => write!(f, "union({a}, {b})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Condition {
    IsEmpty(SetExpr),
    /// First operand is a subset of the second.
    Subset(SetExpr, SetExpr),
    Equals(SetExpr, SetExpr),
    Not(Box<Condition>),
    And(Box<Condition>, Box<Condition>),
    Or(Box<Condition>, Box<Condition>),
}

impl Condition {
    #[allow(clippy::should_implement_trait)]
    pub fn not(c: Condition) -> Self {
        Condition::Not(Box::new(c))
    }

    pub fn variables(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Condition::IsEmpty(e) => e.variables(out),
            Condition::Subset(a, b) | Condition::Equals(a, b) => {
                a.variables(out);
                b.variables(out);
            }
            Condition::Not(c) => c.collect(out),
            Condition::And(a, b) | Condition::Or(a, b) => {
                a.collect(out);
                b.collect(out);
            }
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::IsEmpty(e) => write!(f, "isEmpty({e})"),
            Condition::Subset(a, b) => write!(f, "subset({a}, {b})"),
            Condition::Equals(a, b) => write!(f, "equals({a}, {b})"),
            Condition::Not(c) => write!(f, "!{c}"),
            Condition::And(a, b) => write!(f, "({a} && {b})"),
            Condition::Or(a, b) => write!(f, "({a} || {b})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub name: String,
    /// Match outgoing instead of incoming data.
    pub outgoing: bool,
    pub data: Vec<Selection>,
    pub vertex: Vec<Selection>,
    pub condition: Option<Condition>,
}

impl Constraint {
    /// Starts a builder, e.g.
    /// `Constraint::builder("C1").of_data().with_label("Sensitivity", "Personal")`.
    pub fn builder(name: &str) -> ConstraintBuilder {
        ConstraintBuilder::new(name)
    }

    /// Checks labels against the dictionary and condition variables against
    /// the variable selections.
    pub fn bind(&self, dictionary: &DataDictionary) -> Result<(), ConstraintError> {
        let bind_error = |message: String| ConstraintError::Bind {
            constraint: self.name.clone(),
            message,
        };
        let mut variables = BTreeSet::new();
        for selection in self.data.iter().chain(&self.vertex) {
            match selection {
                Selection::Label { label, .. } => {
                    if dictionary.label_type(&label.label_type).is_none() {
                        return Err(bind_error(format!("unknown label type `{}`", label.label_type)));
                    }
                    if !dictionary.contains_label(label) {
                        return Err(bind_error(format!("unknown label `{label}`")));
                    }
                }
                Selection::VariableLabel {
                    label_type,
                    variable,
                } => {
                    if dictionary.label_type(label_type).is_none() {
                        return Err(bind_error(format!("unknown label type `{label_type}`")));
                    }
                    if !variables.insert(variable.as_str()) {
                        return Err(bind_error(format!("variable `${variable}` is bound twice")));
                    }
                }
                Selection::Name { .. } | Selection::Kind(_) => {}
            }
        }
        if let Some(condition) = &self.condition {
            for v in condition.variables() {
                if !variables.contains(v) {
                    return Err(bind_error(format!("unbound variable `${v}`")));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |s: &[Selection]| s.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ");
        write!(f, "constraint {}: data ", self.name)?;
        if self.outgoing {
            f.write_str("outgoing ")?;
        }
        let vertex = if self.vertex.is_empty() { "any".to_string() } else { join(&self.vertex) };
        write!(f, "{} never flows vertex {vertex}", join(&self.data))?;
        if let Some(c) = &self.condition {
            write!(f, " where {c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConstraintError {
    #[error("{0}")]
    Syntax(Diagnostic),
    #[error("constraint `{constraint}`: {message}")]
    Bind { constraint: String, message: String },
    #[error("unbound variable `${0}`")]
    UnboundVariable(String),
}
