//! Design-time data flow analysis for information security.
//!
//! The crate models data flow diagrams with a reusable data dictionary,
//! extracts transpose flow graphs from them, propagates characteristic labels
//! along those graphs and checks "never flows" constraints against the result.
//! Architecture models written in a small textual language can be transformed
//! into diagrams first.

pub mod adl;
pub mod analysis;
pub mod assignment;
pub mod behavior;
pub mod constraint;
pub mod flowgraph;
pub mod index;
pub mod io;
pub mod lexer;
pub mod model;
pub mod propagation;
pub mod validate;

pub use behavior::{evaluate_behavior, evaluate_term, EvalError};
pub use flowgraph::{extract_tfgs, identify_sinks, transpose, FlowGraphCollection, TransposeFlowGraph};
pub use model::*;
pub use validate::{validate_model, Finding, Severity, ValidationReport};
