use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use bdc_core::kg::KgError;
use bdc_core::stat_store::StatError;
use serde::{Deserialize, Serialize};

/// The `{status, code, message}` envelope every failing endpoint returns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub status: u16,
    pub code: String,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status: status.as_u16(),
            code: code.to_string(),
            message: message.into(),
        }
    }

    pub fn missing_param(name: &str) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "missing_param", format!("query parameter `{name}` is required"))
    }

    pub fn invalid_param(name: &str, why: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid_param", format!("`{name}`: {why}"))
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}: {}", self.status, self.code, self.message)
    }
}

impl std::error::Error for ApiError {}

impl From<StatError> for ApiError {
    fn from(e: StatError) -> Self {
        let msg = e.to_string();
        match e {
            StatError::UnknownEntity(_) => Self::new(StatusCode::NOT_FOUND, "unknown_entity", msg),
            StatError::UnknownVariable(_) => Self::new(StatusCode::NOT_FOUND, "unknown_variable", msg),
            StatError::EmptyRequest => Self::new(StatusCode::BAD_REQUEST, "empty_request", msg),
            _ => Self::internal(msg),
        }
    }
}

impl From<KgError> for ApiError {
    fn from(e: KgError) -> Self {
        let msg = e.to_string();
        match e {
            KgError::UnknownNode(_) => Self::new(StatusCode::NOT_FOUND, "unknown_node", msg),
            KgError::InvalidLevel { .. } => Self::new(StatusCode::BAD_REQUEST, "invalid_level", msg),
            KgError::NotAPlace(_) => Self::new(StatusCode::BAD_REQUEST, "invalid_param", msg),
            KgError::EmptyDescriptor => Self::new(StatusCode::BAD_REQUEST, "missing_param", msg),
            KgError::InvalidId(_) => Self::new(StatusCode::BAD_REQUEST, "invalid_param", msg),
            _ => Self::internal(msg),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}
