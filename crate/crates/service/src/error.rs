use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("archive could not be read: {0}")]
    BadArchive(String),
    #[error("archive holds no complete shapefile (.shp with .dbf)")]
    NoShapefileFound,
    #[error("upload exceeds the {0}-byte limit")]
    OversizeUpload(usize),
    #[error("no such session '{0}'")]
    UnknownSession(String),
    #[error("session is {0}; a task can only be submitted to an idle session")]
    SessionBusy(String),
    #[error("no such artifact '{0}'")]
    UnknownArtifact(String),
    #[error("path '{0}' is not allowed")]
    PathTraversal(String),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl ApiError {
    pub fn kind(&self) -> &'static str {
        match self {
            ApiError::BadArchive(_) => "BadArchive",
            ApiError::NoShapefileFound => "NoShapefileFound",
            ApiError::OversizeUpload(_) => "OversizeUpload",
            ApiError::UnknownSession(_) => "UnknownSession",
            ApiError::SessionBusy(_) => "SessionBusy",
            ApiError::UnknownArtifact(_) => "UnknownArtifact",
            ApiError::PathTraversal(_) => "PathTraversal",
            ApiError::BadRequest(_) => "BadRequest",
            ApiError::Internal(_) => "Internal",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::BadArchive(_) | ApiError::NoShapefileFound | ApiError::BadRequest(_) | ApiError::PathTraversal(_) => {
                StatusCode::BAD_REQUEST
            }
            ApiError::OversizeUpload(_) => StatusCode::PAYLOAD_TOO_LARGE,
            ApiError::UnknownSession(_) | ApiError::UnknownArtifact(_) => StatusCode::NOT_FOUND,
            ApiError::SessionBusy(_) => StatusCode::CONFLICT,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(json!({"error": self.kind(), "message": self.to_string()}))).into_response()
    }
}
