//! Fluent construction of constraints.

use super::{Condition, Constraint, Selection};
use crate::model::{LabelRef, NodeKind};

/// Entry point returned by [`Constraint::builder`].
#[derive(Debug, Clone)]
pub struct ConstraintBuilder {
    name: String,
}

impl ConstraintBuilder {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
        }
    }

    pub fn of_data(self) -> DataSelectorBuilder {
        DataSelectorBuilder {
            name: self.name,
            outgoing: false,
            data: Vec::new(),
        }
    }
}

/// Collects data selections until [`DataSelectorBuilder::never_flows`].
#[derive(Debug, Clone)]
pub struct DataSelectorBuilder {
    name: String,
    outgoing: bool,
    data: Vec<Selection>,
}

impl DataSelectorBuilder {
    /// Match data leaving the vertex instead of data reaching it.
    pub fn outgoing(mut self) -> Self {
        self.outgoing = true;
        self
    }

    pub fn with_label(mut self, label_type: &str, label: &str) -> Self {
        self.data.push(Selection::Label {
            label: LabelRef::new(label_type, label),
            negated: false,
        });
        self
    }

    pub fn without_label(mut self, label_type: &str, label: &str) -> Self {
        self.data.push(Selection::Label {
            label: LabelRef::new(label_type, label),
            negated: true,
        });
        self
    }

    pub fn named(mut self, name: &str) -> Self {
        self.data.push(Selection::Name {
            name: name.to_string(),
            negated: false,
        });
        self
    }

    pub fn with_variable(mut self, label_type: &str, variable: &str) -> Self {
        self.data.push(Selection::VariableLabel {
            label_type: label_type.to_string(),
            variable: variable.to_string(),
        });
        self
    }

    pub fn never_flows(self) -> NeverFlows {
        NeverFlows(self)
    }
}

/// Intermediate step between the two selectors.
#[derive(Debug, Clone)]
pub struct NeverFlows(DataSelectorBuilder);

impl NeverFlows {
    pub fn to_vertex(self) -> VertexSelectorBuilder {
        VertexSelectorBuilder {
            data: self.0,
            vertex: Vec::new(),
            condition: None,
        }
    }
}

/// Collects vertex selections and the optional condition.
#[derive(Debug, Clone)]
pub struct VertexSelectorBuilder {
    data: DataSelectorBuilder,
    vertex: Vec<Selection>,
    condition: Option<Condition>,
}

impl VertexSelectorBuilder {
    pub fn with_label(mut self, label_type: &str, label: &str) -> Self {
        self.vertex.push(Selection::Label {
            label: LabelRef::new(label_type, label),
            negated: false,
        });
        self
    }

    pub fn without_label(mut self, label_type: &str, label: &str) -> Self {
        self.vertex.push(Selection::Label {
            label: LabelRef::new(label_type, label),
            negated: true,
        });
        self
    }

    pub fn named(mut self, name: &str) -> Self {
        self.vertex.push(Selection::Name {
            name: name.to_string(),
            negated: false,
        });
        self
    }

    pub fn of_kind(mut self, kind: NodeKind) -> Self {
        self.vertex.push(Selection::Kind(kind));
        self
    }

    pub fn with_variable(mut self, label_type: &str, variable: &str) -> Self {
        self.vertex.push(Selection::VariableLabel {
            label_type: label_type.to_string(),
            variable: variable.to_string(),
        });
        self
    }

    pub fn where_condition(mut self, condition: Condition) -> Self {
        self.condition = Some(condition);
        self
    }

    pub fn create(self) -> Constraint {
        Constraint {
            name: self.data.name,
            outgoing: self.data.outgoing,
            data: self.data.data,
            vertex: self.vertex,
            condition: self.condition,
        }
    }
}
