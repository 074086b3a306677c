use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ErrorCode {
    InvalidRequest,
    TaskNotFound,
    DuplicateTask,
    NoTaskAvailable,
    NotAssigned,
    InvalidReference,
    TooManyReferences,
    InsufficientSubmissions,
    EmptyResolution,
    FlagMismatch,
    TaskResolved,
    RevisionConflict,
    Storage,
}

impl ErrorCode {
    pub fn status(self) -> StatusCode {
        match self {
            ErrorCode::InvalidRequest => StatusCode::BAD_REQUEST,
            ErrorCode::TaskNotFound | ErrorCode::NoTaskAvailable => StatusCode::NOT_FOUND,
            ErrorCode::NotAssigned => StatusCode::FORBIDDEN,
            ErrorCode::DuplicateTask
            | ErrorCode::InsufficientSubmissions
            | ErrorCode::TaskResolved
            | ErrorCode::RevisionConflict => StatusCode::CONFLICT,
            ErrorCode::InvalidReference
            | ErrorCode::TooManyReferences
            | ErrorCode::EmptyResolution
            | ErrorCode::FlagMismatch => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorCode::Storage => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

/// Error body returned by every endpoint.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, thiserror::Error)]
#[error("{code:?}: {message}")]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field_path: Option<String>,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        ApiError {
            code,
            message: message.into(),
            field_path: None,
        }
    }

    pub fn at(mut self, path: impl Into<String>) -> Self {
        self.field_path = Some(path.into());
        self
    }

    pub fn not_found(id: &str) -> Self {
        ApiError::new(ErrorCode::TaskNotFound, format!("no task with id {id:?}"))
    }

    pub fn storage(e: impl std::fmt::Display) -> Self {
        ApiError::new(ErrorCode::Storage, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.code.status(), Json(self)).into_response()
    }
}
