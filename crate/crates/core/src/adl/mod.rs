//! A small textual architecture description language and its transformation
//! into data flow diagrams.
//!
//! ```text
//! labeltype Sensitivity Personal Public
//! labeltype Encryption Encrypted
//! labeltype Location onPremise offPremise
//!
//! container LocalServer labels Location.onPremise
//! container Cloud labels Location.offPremise
//!
//! component OnlineShop
//!   operation buy(userData)
//!     set userData Encryption.Encrypted if TRUE
//!     call Database.store(userData)
//!   end
//! end
//!
//! component Database kind store
//!   operation store(record)
//!   end
//! end
//!
//! deploy OnlineShop on LocalServer
//! deploy Database on Cloud
//!
//! scenario Purchase
//!   data userData Sensitivity.Personal
//!   call OnlineShop.buy(userData)
//! end
//! ```
//!
//! Statements are line oriented; `#` starts a comment. Inside operations and
//! scenarios the actions are `set`, `call`, `branch` / `or` / `end` and
//! `return` (operations only, as the last action). Scenarios may also declare
//! their initial `data` before any action.

mod labels;
mod parser;
mod transform;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::model::{LabelRef, NodeKind, Term};

pub use labels::AdlNodeLabels;
pub use parser::parse_adl;
pub use transform::{transform_to_dfd, AdlTransform};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct AdlError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl AdlError {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            column,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Container {
    pub name: String,
    pub labels: Vec<LabelRef>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Operation {
    pub name: String,
    pub params: Vec<String>,
    pub actions: Vec<Action>,
}

impl Operation {
    /// Variables handed back to the caller by a trailing `return`.
    pub fn returns(&self) -> &[String] {
        match self.actions.last().map(|a| &a.kind) {
            Some(ActionKind::Return(vars)) => vars,
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub name: String,
    /// Kind of the diagram nodes generated for this component's actions.
    pub kind: NodeKind,
    pub operations: Vec<Operation>,
}

impl Component {
    pub fn operation(&self, name: &str) -> Option<&Operation> {
        self.operations.iter().find(|o| o.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Action {
    /// Stable element id, e.g. `OnlineShop.buy#2`; actions inside a branch alternative
    /// extend their branch id, as in `Purchase#1/2#1`.
    pub id: String,
    pub line: usize,
    pub kind: ActionKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ActionKind {
    /// Adds `labels` to `variable` when `term` holds, removes them otherwise.
    SetVariable {
        variable: String,
        labels: Vec<LabelRef>,
        term: Term,
    },
    /// Call of another component's operation, passing variables by position.
    Call {
        component: String,
        operation: String,
        args: Vec<String>,
    },
    Branch(Vec<Vec<Action>>),
    Return(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub name: String,
    pub labels: Vec<LabelRef>,
    /// Initial variables and their labels.
    pub data: Vec<(String, Vec<LabelRef>)>,
    pub actions: Vec<Action>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ArchitectureModel {
    pub label_types: Vec<(String, Vec<String>)>,
    pub containers: Vec<Container>,
    pub components: Vec<Component>,
    /// Component name to container name.
    pub deployments: BTreeMap<String, String>,
    pub scenarios: Vec<Scenario>,
}

impl ArchitectureModel {
    pub fn component(&self, name: &str) -> Option<&Component> {
        self.components.iter().find(|c| c.name == name)
    }

    pub fn container(&self, name: &str) -> Option<&Container> {
        self.containers.iter().find(|c| c.name == name)
    }

    pub fn scenario(&self, name: &str) -> Option<&Scenario> {
        self.scenarios.iter().find(|s| s.name == name)
    }

    /// Node labels of anything owned by `owner`: the container labels of a
    /// component's deployment, or a scenario's own annotations.
    pub fn owner_labels(&self, owner: &Owner) -> Option<Vec<LabelRef>> {
        match owner {
            Owner::Component(c) => {
                let container = self.deployments.get(c)?;
                Some(self.container(container)?.labels.clone())
            }
            Owner::Scenario(s) => Some(self.scenario(s)?.labels.clone()),
        }
    }
}

/// Architecture element that a generated node belongs to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(tag = "kind", content = "name", rename_all = "lowercase")]
pub enum Owner {
    Component(String),
    Scenario(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Start,
    End,
    Calling,
    Entry,
    Returning,
    Set,
    Join,
    Return,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Role::Start => "start",
            Role::End => "end",
            Role::Calling => "calling",
            Role::Entry => "entry",
            Role::Returning => "returning",
            Role::Set => "set",
            Role::Join => "join",
            Role::Return => "return",
        };
        f.write_str(s)
    }
}

/// Where a generated diagram node comes from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct TraceTarget {
    /// Action, operation or scenario id.
    pub element: String,
    pub role: Role,
    pub owner: Owner,
    /// Chain of call sites leading here, outermost first.
    pub context: String,
}

/// Diagram node id to its architecture origin.
pub type TraceMap = BTreeMap<String, TraceTarget>;
