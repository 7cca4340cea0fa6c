use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

/// Error response body: `{error, detail}` for client errors, plus an
/// `error_id` that is also logged to stderr for server errors.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorBody {
    pub error: String,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_id: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn bad_request(error: &str, detail: impl Into<String>) -> Self {
        Self::client(StatusCode::BAD_REQUEST, error, detail)
    }

    pub fn not_found(detail: impl Into<String>) -> Self {
        Self::client(StatusCode::NOT_FOUND, "not_found", detail)
    }

    fn client(status: StatusCode, error: &str, detail: impl Into<String>) -> Self {
        ApiError { status, body: ErrorBody { error: error.into(), detail: detail.into(), error_id: None } }
    }

    pub fn internal(detail: impl Into<String>) -> Self {
        let id = uuid::Uuid::new_v4().to_string();
        let detail = detail.into();
        eprintln!("internal error {id}: {detail}");
        ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            body: ErrorBody { error: "internal".into(), detail, error_id: Some(id) },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}
