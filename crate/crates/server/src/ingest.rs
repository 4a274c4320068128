//! Game-client POST handling.

use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use gsicast_core::gsi;
use gsicast_core::session::{CaptureSession, PostOutcome};

use crate::app::{lock, App};
use crate::error::ApiError;

/// Posts on the configured ingest path go to the active session. Without
/// one the body is still validated, then acknowledged so the client never
/// stalls.
pub async fn post_active(State(app): State<Arc<App>>, body: String) -> Result<StatusCode, ApiError> {
    match app.active() {
        Some(session) => handle(&mut lock(&session), &body),
        None => {
            gsi::parse_snapshot(&body)?;
            Ok(StatusCode::OK)
        }
    }
}

pub async fn post_session(
    State(app): State<Arc<App>>,
    Path(id): Path<String>,
    body: String,
) -> Result<StatusCode, ApiError> {
    let session = app.session(&id).ok_or_else(|| ApiError::not_found("session", &id))?;
    let mut guard = lock(&session);
    handle(&mut guard, &body)
}

fn handle(session: &mut CaptureSession, body: &str) -> Result<StatusCode, ApiError> {
    if let PostOutcome::Written(row) = session.handle_post(body)? {
        tracing::trace!(session = session.id(), row, "row written");
    }
    Ok(StatusCode::OK)
}
