use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

use vecdebias_core::Error as CoreError;

/// JSON error body: a category, a message and, for unresolved tokens, the full list.
#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub error: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub missing: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("unknown embedding `{0}`")]
    UnknownEmbedding(String),
    #[error("unknown token `{0}`")]
    UnknownToken(String),
    #[error("{0}")]
    BadRequest(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("internal error: {0}")]
    Internal(String),
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::UnknownSession(_) | ApiError::UnknownEmbedding(_) | ApiError::UnknownToken(_) => {
                StatusCode::NOT_FOUND
            }
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
            ApiError::Core(e) => match e {
                CoreError::UnknownTokens(_) => StatusCode::UNPROCESSABLE_ENTITY,
                CoreError::InvalidJob(_) => StatusCode::CONFLICT,
                CoreError::Degenerate(_) | CoreError::NotConverged { .. } | CoreError::NonFinite { .. } => {
                    StatusCode::UNPROCESSABLE_ENTITY
                }
                CoreError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
                _ => StatusCode::BAD_REQUEST,
            },
        }
    }

    fn category(&self) -> &'static str {
        match self {
            ApiError::UnknownSession(_) => "unknown_session",
            ApiError::UnknownEmbedding(_) => "unknown_embedding",
            ApiError::UnknownToken(_) => "unknown_token",
            ApiError::BadRequest(_) => "bad_request",
            ApiError::Internal(_) => "internal",
            ApiError::Core(e) => match e {
                CoreError::UnknownTokens(_) => "unknown_tokens",
                CoreError::InvalidJob(_) => "invalid_job",
                CoreError::Degenerate(_) => "degenerate",
                CoreError::NotConverged { .. } => "not_converged",
                CoreError::NonFinite { .. } => "non_finite",
                CoreError::Io(_) => "io",
                _ => "invalid_input",
            },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let missing = match &self {
            ApiError::Core(CoreError::UnknownTokens(m)) => m.clone(),
            ApiError::UnknownToken(t) => vec![t.clone()],
            _ => Vec::new(),
        };
        let body = ErrorBody {
            error: self.category(),
            message: self.to_string(),
            missing,
        };
        (self.status(), Json(body)).into_response()
    }
}
