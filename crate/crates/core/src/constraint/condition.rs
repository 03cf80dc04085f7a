//! Set-theoretic evaluation of constraint conditions.

use std::collections::BTreeMap;

use super::{Condition, ConstraintError, SetExpr};
use crate::model::LabelSet;

/// Variable name (without `$`) to bound labels.
pub type Bindings = BTreeMap<String, LabelSet>;

fn eval_set(expr: &SetExpr, bindings: &Bindings) -> Result<LabelSet, ConstraintError> {
    Ok(match expr {
        SetExpr::Var(v) => bindings
            .get(v)
            .cloned()
            .ok_or_else(|| ConstraintError::UnboundVariable(v.clone()))?,
        SetExpr::Intersect(a, b) => {
            let b = eval_set(b, bindings)?;
            eval_set(a, bindings)?.intersection(&b).cloned().collect()
        }
        SetExpr::Union(a, b) => {
            let mut a = eval_set(a, bindings)?;
            a.extend(eval_set(b, bindings)?);
            a
        }
    })
}

pub fn evaluate_condition(condition: &Condition, bindings: &Bindings) -> Result<bool, ConstraintError> {
    Ok(match condition {
        Condition::IsEmpty(e) => eval_set(e, bindings)?.is_empty(),
        Condition::Subset(a, b) => eval_set(a, bindings)?.is_subset(&eval_set(b, bindings)?),
        Condition::Equals(a, b) => eval_set(a, bindings)? == eval_set(b, bindings)?,
        Condition::Not(c) => !evaluate_condition(c, bindings)?,
        Condition::And(a, b) => evaluate_condition(a, bindings)? && evaluate_condition(b, bindings)?,
        Condition::Or(a, b) => evaluate_condition(a, bindings)? || evaluate_condition(b, bindings)?,
    })
}
