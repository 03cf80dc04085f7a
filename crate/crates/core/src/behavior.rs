//! Evaluation of terms and node behaviors: how labels cross a node.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{Assignment, Behavior, FlowData, LabelSet, PinData, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("term references unknown flow `{0}`")]
    UnknownFlowScope(String),
    #[error("assignment reads input pin `{0}` which receives no data")]
    UnresolvedInput(String),
    #[error("assignment writes unknown output pin `{0}`")]
    UnknownOutputPin(String),
}

/// Evaluates `term` against incoming data keyed by flow name.
///
/// An unscoped label reference holds if any incoming variable carries the
/// label; a scoped one only consults the named variable.
pub fn evaluate_term(term: &Term, incoming: &FlowData) -> Result<bool, EvalError> {
    let vars: Vec<(&str, &LabelSet)> = incoming.iter().map(|(k, v)| (k.as_str(), v)).collect();
    eval(term, &vars)
}

fn eval(term: &Term, vars: &[(&str, &LabelSet)]) -> Result<bool, EvalError> {
    Ok(match term {
        Term::Constant(value) => *value,
        Term::LabelReference { label, flow: None } => vars.iter().any(|(_, set)| set.contains(label)),
        Term::LabelReference {
            label,
            flow: Some(flow),
        } => {
            let mut scoped = vars.iter().filter(|(name, _)| name == flow).peekable();
            if scoped.peek().is_none() {
                return Err(EvalError::UnknownFlowScope(flow.clone()));
            }
            scoped.any(|(_, set)| set.contains(label))
        }
        Term::Not(inner) => !eval(inner, vars)?,
        Term::And(l, r) => eval(l, vars)? && eval(r, vars)?,
        Term::Or(l, r) => eval(l, vars)? || eval(r, vars)?,
    })
}

fn pin_data<'a>(incoming: &'a PinData, pin: &str) -> Result<&'a FlowData, EvalError> {
    incoming
        .get(pin)
        .ok_or_else(|| EvalError::UnresolvedInput(pin.to_string()))
}

/// Computes the labels leaving every output pin of `behavior`.
///
/// Forwarding assignments run first and union their inputs into the output
/// pin. The remaining assignments then run in declared order, adding their
/// labels when the term holds and removing them when it does not. Output
/// pins without assignments carry no labels.
pub fn evaluate_behavior(
    behavior: &Behavior,
    incoming: &PinData,
) -> Result<BTreeMap<String, LabelSet>, EvalError> {
    let mut outputs: BTreeMap<String, LabelSet> = behavior
        .out_pins
        .iter()
        .map(|p| (p.id.clone(), LabelSet::new()))
        .collect();

    for assignment in &behavior.assignments {
        let Assignment::Forward {
            in_pins,
            out_pin,
            flow,
        } = assignment
        else {
            continue;
        };
        let target = outputs
            .get_mut(out_pin)
            .ok_or_else(|| EvalError::UnknownOutputPin(out_pin.clone()))?;
        for pin in in_pins {
            let data = pin_data(incoming, pin)?;
            match flow {
                None => data.values().for_each(|set| target.extend(set.iter().cloned())),
                Some(flow) => match data.get(flow) {
                    Some(set) => target.extend(set.iter().cloned()),
                    None => return Err(EvalError::UnknownFlowScope(flow.clone())),
                },
            }
        }
    }

    for assignment in &behavior.assignments {
        let Assignment::Set {
            in_pins,
            out_pin,
            term,
            labels,
        } = assignment
        else {
            continue;
        };
        let mut vars = Vec::new();
        for pin in in_pins {
            let data = pin_data(incoming, pin)?;
            vars.extend(data.iter().map(|(k, v)| (k.as_str(), v)));
        }
        let holds = eval(term, &vars)?;
        let target = outputs
            .get_mut(out_pin)
            .ok_or_else(|| EvalError::UnknownOutputPin(out_pin.clone()))?;
        if holds {
            target.extend(labels.iter().cloned());
        } else {
            for label in labels {
                target.remove(label);
            }
        }
    }

    Ok(outputs)
}
