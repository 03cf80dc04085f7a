//! Stateless HTTP API over the analysis pipeline.
//!
//! | method | path | body |
//! |---|---|---|
//! | GET, POST | `/health` | none |
//! | POST | `/api/v1/validate` | a model document |
//! | POST | `/api/v1/analyze` | `{"model": ..., "constraints": ["..."]}` |
//! | POST | `/api/v1/check-assignment` | `{"text": "...", "context": {...}}` |
//!
//! Malformed bodies and models that cannot be loaded get 400, failures
//! during analysis get 422. Both carry `{"error", "diagnostics", "trace"}`.

use std::error::Error as _;

use axum::body::Bytes;
use axum::extract::DefaultBodyLimit;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use dataflow_core::analysis::{analyze_bytes, AnalysisError, AnalysisOptions, InputFormat};
use dataflow_core::assignment::{check_assignments, AssignmentContext, Diagnostic};
use dataflow_core::constraint::ConstraintError;
use dataflow_core::io::validate_json;
use dataflow_core::{DictionaryBuilder, LabelRef};
use serde::{Deserialize, Serialize};

const BODY_LIMIT: usize = 64 * 1024 * 1024;

pub fn router() -> Router {
    Router::new()
        .route("/health", get(health).post(health))
        .route("/api/v1/validate", post(validate))
        .route("/api/v1/analyze", post(analyze))
        .route("/api/v1/check-assignment", post(check_assignment))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
}

pub async fn serve(host: &str, port: u16) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind((host, port)).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router())
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    diagnostics: Vec<Diagnostic>,
    /// Error messages from outermost to innermost cause.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    trace: Vec<String>,
}

struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn bad_request(error: impl Into<String>, diagnostics: Vec<Diagnostic>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            body: ErrorBody {
                error: error.into(),
                diagnostics,
                trace: Vec::new(),
            },
        }
    }

    fn json(e: &serde_json::Error) -> Self {
        Self::bad_request(
            format!("invalid request body: {e}"),
            vec![Diagnostic::new(e.line(), e.column(), e.to_string())],
        )
    }
}

impl From<AnalysisError> for ApiError {
    fn from(e: AnalysisError) -> Self {
        let diagnostics = match &e {
            AnalysisError::Constraint(ConstraintError::Syntax(d)) => vec![d.clone()],
            _ => Vec::new(),
        };
        let mut trace = Vec::new();
        let mut source = e.source();
        while let Some(s) = source {
            trace.push(s.to_string());
            source = s.source();
        }
        let status = if e.is_input_error() {
            StatusCode::BAD_REQUEST
        } else {
            StatusCode::UNPROCESSABLE_ENTITY
        };
        Self {
            status,
            body: ErrorBody {
                error: e.to_string(),
                diagnostics,
                trace,
            },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, json_response(&self.body)).into_response()
    }
}

fn json_response<T: Serialize>(value: &T) -> Response {
    let mut body = serde_json::to_string_pretty(value).expect("responses serialize");
    body.push('\n');
    raw_json(body)
}

fn raw_json(body: String) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], body).into_response()
}

async fn health() -> Response {
    json_response(&serde_json::json!({ "status": "ok" }))
}

#[derive(Serialize)]
struct ValidateResponse {
    valid: bool,
    findings: dataflow_core::ValidationReport,
}

async fn validate(body: Bytes) -> Result<Response, ApiError> {
    let findings = validate_json(&body).map_err(AnalysisError::from)?;
    Ok(json_response(&ValidateResponse {
        valid: !findings.has_errors(),
        findings,
    }))
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ModelFormat {
    #[default]
    Json,
    Adl,
    #[serde(alias = "puml")]
    Plantuml,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnalyzeRequest {
    /// A model document, or the text of an ADL or PlantUML model.
    model: serde_json::Value,
    constraints: Vec<String>,
    #[serde(default)]
    format: ModelFormat,
    #[serde(default)]
    timings: bool,
}

async fn analyze(body: Bytes) -> Result<Response, ApiError> {
    let request: AnalyzeRequest = serde_json::from_slice(&body).map_err(|e| ApiError::json(&e))?;
    let (bytes, format) = match (request.format, request.model) {
        (ModelFormat::Json, serde_json::Value::String(_)) => {
            return Err(ApiError::bad_request(
                "`model` is a string; set `format` to \"adl\" or \"plantuml\" for textual models",
                Vec::new(),
            ))
        }
        (ModelFormat::Json, value) => (serde_json::to_vec(&value).expect("values serialize"), InputFormat::Json),
        (ModelFormat::Adl, serde_json::Value::String(s)) => (s.into_bytes(), InputFormat::Adl),
        (ModelFormat::Plantuml, serde_json::Value::String(s)) => (s.into_bytes(), InputFormat::PlantUml),
        _ => return Err(ApiError::bad_request("textual models must be sent as a string", Vec::new())),
    };
    let options = AnalysisOptions {
        timings: request.timings,
    };
    let constraints = request.constraints;
    let analysis = tokio::task::spawn_blocking(move || analyze_bytes(&bytes, format, &constraints, options))
        .await
        .map_err(|e| ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            body: ErrorBody {
                error: format!("analysis aborted: {e}"),
                diagnostics: Vec::new(),
                trace: Vec::new(),
            },
        })??;
    Ok(raw_json(analysis.report.to_json()))
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct PinRef {
    id: String,
    name: String,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct FlowRef {
    name: String,
    target_pin: String,
}

/// The behavior an assignment belongs to.
#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct BehaviorContext {
    #[serde(default)]
    in_pins: Vec<PinRef>,
    /// Flows arriving at the input pins.
    #[serde(default)]
    flows: Vec<FlowRef>,
    #[serde(default)]
    out_pin: String,
    /// Known labels as `Type.Label`; unknown labels are only reported when
    /// this is present.
    #[serde(default)]
    labels: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckRequest {
    text: String,
    #[serde(default)]
    context: Option<BehaviorContext>,
}

#[derive(Serialize)]
struct CheckResponse {
    valid: bool,
    diagnostics: Vec<Diagnostic>,
}

async fn check_assignment(body: Bytes) -> Result<Response, ApiError> {
    let request: CheckRequest = serde_json::from_slice(&body).map_err(|e| ApiError::json(&e))?;
    let dictionary = match request.context.as_ref().and_then(|c| c.labels.as_ref()) {
        Some(labels) => {
            let mut builder = DictionaryBuilder::new();
            for l in labels {
                let Some((t, name)) = l.split_once('.') else {
                    return Err(ApiError::bad_request(
                        format!("label `{l}` is not of the form Type.Label"),
                        Vec::new(),
                    ));
                };
                builder.ensure_label(&LabelRef::new(t, name));
            }
            Some(builder.build())
        }
        None => None,
    };
    let ctx = request.context.as_ref().map(|c| AssignmentContext {
        in_pins: c.in_pins.iter().map(|p| (p.id.clone(), p.name.clone())).collect(),
        flows: c.flows.iter().map(|f| (f.name.clone(), f.target_pin.clone())).collect(),
        out_pin: c.out_pin.clone(),
        dictionary: dictionary.as_ref(),
    });
    let diagnostics = check_assignments(&request.text, ctx.as_ref());
    Ok(json_response(&CheckResponse {
        valid: diagnostics.is_empty(),
        diagnostics,
    }))
}
