//! Node labels looked up through the architecture model.

use super::{ArchitectureModel, TraceMap};
use crate::model::LabelSet;
use crate::propagation::{NodeLabelSource, PropagationError};

/// Follows a node's trace to its owner and from there to the deployment
/// container or scenario annotations.
pub struct AdlNodeLabels<'a> {
    pub architecture: &'a ArchitectureModel,
    pub trace: &'a TraceMap,
}

impl NodeLabelSource for AdlNodeLabels<'_> {
    fn node_labels(&self, node_id: &str) -> Result<LabelSet, PropagationError> {
        let target = self
            .trace
            .get(node_id)
            .ok_or_else(|| PropagationError::Trace(node_id.to_string()))?;
        self.architecture
            .owner_labels(&target.owner)
            .map(|labels| labels.into_iter().collect())
            .ok_or_else(|| PropagationError::Trace(node_id.to_string()))
    }
}
