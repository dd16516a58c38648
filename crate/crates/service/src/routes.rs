use alterfactual_core::Explanation;
use alterfactual_study::export::to_csv_string;
use alterfactual_study::{ClientEvent, Condition, Stage, Submission};
use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::IntoResponse;
use axum::Json;
use serde::{Deserialize, Serialize};

use crate::error::ServiceError;
use crate::explain::ExplainRequest;
use crate::state::AppState;

type Result<T> = std::result::Result<T, ServiceError>;

fn parse_body<T: serde::de::DeserializeOwned>(body: &[u8]) -> Result<T> {
    serde_json::from_slice(body).map_err(|e| ServiceError::BadRequest(format!("invalid body: {e}")))
}

/// `Authorization: Bearer <token>`.
fn bearer(headers: &HeaderMap) -> Option<&str> {
    headers.get(header::AUTHORIZATION)?.to_str().ok()?.strip_prefix("Bearer ").map(str::trim)
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateRequest {
    #[serde(default)]
    forced_condition: Option<Condition>,
}

#[derive(Debug, Serialize)]
struct Created {
    session_id: String,
    stage: Stage,
}

pub async fn create_session(
    State(state): State<AppState>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<impl IntoResponse> {
    let req: CreateRequest = if body.iter().all(u8::is_ascii_whitespace) { CreateRequest::default() } else { parse_body(&body)? };
    if req.forced_condition.is_some() {
        state.check_admin(bearer(&headers))?;
    }
    let v = state.create_session(req.forced_condition)?;
    Ok((
        StatusCode::CREATED,
        Json(Created {
            session_id: v.session_id,
            stage: v.stage,
        }),
    ))
}

pub async fn get_state(State(state): State<AppState>, Path(id): Path<String>) -> Result<impl IntoResponse> {
    Ok(Json(state.state(&id)?))
}

pub async fn submit(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> Result<impl IntoResponse> {
    let mut value: serde_json::Value = parse_body(&body)?;
    let seq = match value.as_object_mut().and_then(|o| o.remove("seq")) {
        None | Some(serde_json::Value::Null) => None,
        Some(v) => Some(v.as_u64().ok_or_else(|| ServiceError::BadRequest("seq must be a non-negative integer".into()))?),
    };
    let submission: Submission =
        serde_json::from_value(value).map_err(|e| ServiceError::BadRequest(format!("invalid submission: {e}")))?;
    Ok(Json(state.submit(&id, seq, submission)?))
}

pub async fn event(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> Result<impl IntoResponse> {
    let event: ClientEvent = parse_body(&body)?;
    state.record_event(&id, event)?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Debug, Default, Deserialize)]
pub struct ExportQuery {
    #[serde(default)]
    include_excluded: bool,
}

pub async fn export_csv(
    State(state): State<AppState>,
    headers: HeaderMap,
    Query(q): Query<ExportQuery>,
) -> Result<impl IntoResponse> {
    state.check_admin(bearer(&headers))?;
    let csv = to_csv_string(&state.records(q.include_excluded)?)?;
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], csv))
}

pub async fn explain(body: Bytes) -> Result<Json<Explanation>> {
    let req: ExplainRequest = parse_body(&body)?;
    // full-grid searches take a while; keep them off the async workers
    let out = tokio::task::spawn_blocking(move || req.run())
        .await
        .map_err(|e| ServiceError::BadRequest(format!("explanation task failed: {e}")))??;
    Ok(Json(out))
}

#[derive(Debug, Serialize)]
struct Health {
    status: &'static str,
    study: bool,
}

pub async fn health(State(state): State<AppState>) -> impl IntoResponse {
    Json(Health {
        status: "ok",
        study: state.study().is_ok(),
    })
}
