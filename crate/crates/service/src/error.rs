use alterfactual_study::{FieldError, StudyError};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

use crate::explain::is_not_found;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("no session `{0}`")]
    UnknownSession(String),
    #[error("admin token missing or wrong")]
    Forbidden,
    #[error("study config unavailable: {0}")]
    Unavailable(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("stale request: {0}")]
    Stale(String),
    #[error(transparent)]
    Study(#[from] StudyError),
    #[error(transparent)]
    Engine(#[from] alterfactual_core::Error),
}

#[derive(Debug, Serialize)]
struct ErrorBody<'a> {
    error: &'static str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    fields: Option<&'a [FieldError]>,
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        use StudyError as S;
        match self {
            ServiceError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ServiceError::Forbidden => StatusCode::FORBIDDEN,
            ServiceError::Unavailable(_) => StatusCode::SERVICE_UNAVAILABLE,
            ServiceError::BadRequest(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Stale(_) => StatusCode::CONFLICT,
            ServiceError::Study(e) => match e {
                S::WrongStage { .. } | S::Terminal(_) | S::StaleItem { .. } | S::Incomplete(_) => StatusCode::CONFLICT,
                S::Validation(_) | S::UnknownItem { .. } => StatusCode::UNPROCESSABLE_ENTITY,
                _ => StatusCode::INTERNAL_SERVER_ERROR,
            },
            ServiceError::Engine(e) if is_not_found(e) => StatusCode::NOT_FOUND,
            ServiceError::Engine(alterfactual_core::Error::Render(_)) => StatusCode::INTERNAL_SERVER_ERROR,
            ServiceError::Engine(_) => StatusCode::UNPROCESSABLE_ENTITY,
        }
    }

    fn code(&self) -> &'static str {
        use StudyError as S;
        match self {
            ServiceError::UnknownSession(_) => "not_found",
            ServiceError::Forbidden => "forbidden",
            ServiceError::Unavailable(_) => "unavailable",
            ServiceError::BadRequest(_) => "bad_request",
            ServiceError::Stale(_) => "stale",
            ServiceError::Study(e) => match e {
                S::WrongStage { .. } => "wrong_stage",
                S::Terminal(_) => "terminal",
                S::StaleItem { .. } => "stale",
                S::Incomplete(_) => "incomplete",
                S::Validation(_) => "validation",
                S::UnknownItem { .. } => "unknown_item",
                _ => "internal",
            },
            ServiceError::Engine(e) if is_not_found(e) => "no_explanation",
            ServiceError::Engine(alterfactual_core::Error::InvalidInstance(_)) => "invalid_instance",
            ServiceError::Engine(alterfactual_core::Error::Render(_)) => "internal",
            ServiceError::Engine(_) => "invalid_request",
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let fields = match &self {
            ServiceError::Study(StudyError::Validation(f)) => Some(f.as_slice()),
            _ => None,
        };
        let body = ErrorBody {
            error: self.code(),
            message: self.to_string(),
            fields,
        };
        (self.status(), Json(body)).into_response()
    }
}
