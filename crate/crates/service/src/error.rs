use axum::extract::rejection::JsonRejection;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use evacrec_core::knowledge::KnowledgeError;
use evacrec_core::recommender::RecommendError;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// Error body shared by every endpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    pub details: Value,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>, details: Value) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                code: code.to_owned(),
                message: message.into(),
                details,
            },
        }
    }

    pub fn malformed(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "MalformedBody", message, json!({}))
    }

    pub fn busy() -> Self {
        Self::new(
            StatusCode::SERVICE_UNAVAILABLE,
            "SolverBusy",
            "a recommendation is already being computed",
            json!({}),
        )
    }

    pub fn plan_not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "PlanNotFound", format!("no plan {id}"), json!({ "id": id }))
    }

    pub fn route_not_found() -> Self {
        Self::new(StatusCode::NOT_FOUND, "RouteNotFound", "no such endpoint", json!({}))
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", message, json!({}))
    }

    pub fn code(&self) -> &str {
        &self.body.code
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::malformed(r.body_text())
    }
}

impl From<KnowledgeError> for ApiError {
    fn from(e: KnowledgeError) -> Self {
        let message = e.to_string();
        match e {
            KnowledgeError::SchemaViolation(v) => {
                ApiError::new(StatusCode::BAD_REQUEST, "SchemaViolation", message, json!({ "violations": v }))
            }
            KnowledgeError::UnknownEntity { kind, id } => ApiError::new(
                StatusCode::NOT_FOUND,
                "UnknownEntity",
                message,
                json!({ "kind": kind.to_string(), "id": id }),
            ),
            KnowledgeError::DuplicateId { kind, id } => ApiError::new(
                StatusCode::CONFLICT,
                "DuplicateId",
                message,
                json!({ "kind": kind.to_string(), "id": id }),
            ),
            KnowledgeError::LicenseMismatch {
                driver,
                vehicle,
                license,
            } => ApiError::new(
                StatusCode::CONFLICT,
                "LicenseMismatch",
                message,
                json!({ "driver": driver, "vehicle": vehicle, "license": license }),
            ),
            KnowledgeError::AlreadyPaired { kind, id } => ApiError::new(
                StatusCode::CONFLICT,
                "AlreadyPaired",
                message,
                json!({ "kind": kind.to_string(), "id": id }),
            ),
            KnowledgeError::Io(_) | KnowledgeError::Parse(_) => ApiError::internal(message),
        }
    }
}

impl From<RecommendError> for ApiError {
    fn from(e: RecommendError) -> Self {
        let message = e.to_string();
        match e {
            RecommendError::MatrixIncomplete { origin, destination } => ApiError::new(
                StatusCode::CONFLICT,
                "MatrixIncomplete",
                message,
                json!({ "origin": origin, "destination": destination }),
            ),
            RecommendError::Unsnappable(id, _) => {
                ApiError::new(StatusCode::CONFLICT, "MatrixIncomplete", message, json!({ "place": id }))
            }
            _ => ApiError::internal(message),
        }
    }
}
