use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use gsicast_core::Error;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Wire shape of every error response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default)]
    pub detail: Value,
}

impl ErrorBody {
    pub fn from_core(err: &Error) -> Self {
        let detail = match err {
            Error::InsufficientRows { required, available } | Error::TooFewSamples { required, available } => {
                serde_json::json!({ "required": required, "available": available })
            }
            Error::Parse { offset, .. } => serde_json::json!({ "offset": offset }),
            Error::Diverged { epoch } => serde_json::json!({ "epoch": epoch }),
            _ => Value::Null,
        };
        Self {
            code: err.code().to_string(),
            message: err.to_string(),
            detail,
        }
    }
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                code: code.to_string(),
                message: message.into(),
                detail: Value::Null,
            },
        }
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.body.detail = detail;
        self
    }

    pub fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", format!("unknown {what} `{id}`"))
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "validation_error", message)
    }
}

impl From<Error> for ApiError {
    fn from(err: Error) -> Self {
        let status = match &err {
            Error::Parse { .. } | Error::Structure(_) => StatusCode::BAD_REQUEST,
            Error::Unauthorized => StatusCode::UNAUTHORIZED,
            Error::State(_) => StatusCode::CONFLICT,
            Error::Lookup(_) => StatusCode::NOT_FOUND,
            Error::InsufficientRows { .. }
            | Error::TooFewSamples { .. }
            | Error::Config(_)
            | Error::EmptyInput(_)
            | Error::Shape(_)
            | Error::UndefinedMetric(_) => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self {
            status,
            body: ErrorBody::from_core(&err),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}
