//! The versioned REST control plane.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use gsicast_core::models::{LstmArch, MlpArch, ModelKind, SplitSpec, TrainConfig};
use gsicast_core::pipeline::{DatasetRequest, FeatureMode};
use gsicast_core::session::SessionInfo;
use gsicast_core::table::{count_complete_rows, RawTable};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::app::{lock, valid_id, App};
use crate::error::ApiError;
use crate::jobs::{report_path, Job, JobKind, JobSpec, JobState};

pub const DEFAULT_ROW_LIMIT: usize = 500;
pub const MAX_ROW_LIMIT: usize = 5000;

type ApiResult<T> = Result<T, ApiError>;

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    let body: &[u8] = if body.iter().all(u8::is_ascii_whitespace) { b"{}" } else { body };
    serde_json::from_slice(body).map_err(|e| ApiError::validation(format!("invalid request body: {e}")))
}

pub async fn health() -> Json<Value> {
    Json(json!({ "status": "ok", "version": env!("CARGO_PKG_VERSION") }))
}

#[derive(Debug, Default, Deserialize)]
struct StartRequest {
    session_id: Option<String>,
}

pub async fn start_session(State(app): State<Arc<App>>, body: Bytes) -> ApiResult<(StatusCode, Json<SessionInfo>)> {
    let req: StartRequest = parse_body(&body)?;
    let id = req
        .session_id
        .unwrap_or_else(|| format!("session-{}", chrono::Utc::now().format("%Y%m%dT%H%M%S%3f")));
    if !valid_id(&id) {
        return Err(ApiError::validation("session_id must be 1-64 characters of [A-Za-z0-9_-]"));
    }
    let info = app.start(&id)?;
    Ok((StatusCode::CREATED, Json(info)))
}

pub async fn stop_session(State(app): State<Arc<App>>, Path(id): Path<String>) -> ApiResult<Json<SessionInfo>> {
    app.stop(&id)?
        .map(Json)
        .ok_or_else(|| ApiError::not_found("session", &id))
}

pub async fn list_sessions(State(app): State<Arc<App>>) -> Json<Value> {
    Json(json!({ "sessions": app.list() }))
}

pub async fn get_session(State(app): State<Arc<App>>, Path(id): Path<String>) -> ApiResult<Json<SessionInfo>> {
    let session = app.session(&id).ok_or_else(|| ApiError::not_found("session", &id))?;
    let info = lock(&session).info();
    Ok(Json(info))
}

#[derive(Debug, Deserialize)]
pub struct RowsQuery {
    #[serde(default)]
    since: u64,
    limit: Option<usize>,
    columns: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct RowEntry {
    pub index: u64,
    pub values: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct RowPage {
    pub session_id: String,
    pub columns: Vec<String>,
    pub rows: Vec<RowEntry>,
    /// Pass back as `since` to continue.
    pub next: u64,
    pub total: u64,
}

/// Rows with 1-based index greater than `since`, as the CSV cell strings.
pub async fn session_rows(
    State(app): State<Arc<App>>,
    Path(id): Path<String>,
    Query(q): Query<RowsQuery>,
) -> ApiResult<Json<RowPage>> {
    let session = app.session(&id).ok_or_else(|| ApiError::not_found("session", &id))?;
    let limit = q.limit.unwrap_or(DEFAULT_ROW_LIMIT);
    if !(1..=MAX_ROW_LIMIT).contains(&limit) {
        return Err(ApiError::validation(format!("limit must be in 1..={MAX_ROW_LIMIT}")));
    }
    let table = {
        let guard = lock(&session);
        let csv = guard.files().csv;
        if !csv.is_file() {
            return Ok(Json(RowPage {
                session_id: id,
                columns: guard.manifest().columns().to_vec(),
                rows: Vec::new(),
                next: q.since,
                total: 0,
            }));
        }
        RawTable::read_csv(&csv)?
    };
    let picks: Vec<usize> = match q.columns.as_deref().filter(|c| !c.is_empty()) {
        None => (0..table.columns.len()).collect(),
        Some(list) => list
            .split(',')
            .map(|c| {
                table
                    .columns
                    .iter()
                    .position(|have| have == c)
                    .ok_or_else(|| gsicast_core::Error::Lookup(c.to_string()).into())
            })
            .collect::<ApiResult<_>>()?,
    };
    let total = table.nrows() as u64;
    let start = usize::try_from(q.since.min(total)).unwrap_or(usize::MAX);
    let rows: Vec<RowEntry> = table.rows[start..]
        .iter()
        .take(limit)
        .enumerate()
        .map(|(k, row)| RowEntry {
            index: (start + k + 1) as u64,
            values: picks.iter().map(|&c| row[c].clone()).collect(),
        })
        .collect();
    let next = rows.last().map_or(q.since, |r| r.index);
    Ok(Json(RowPage {
        session_id: id,
        columns: picks.iter().map(|&c| table.columns[c].clone()).collect(),
        rows,
        next,
        total,
    }))
}

/// Body of `POST /v1/train` and `POST /v1/datasets`. Unset fields take the
/// library defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobRequest {
    pub session_id: String,
    #[serde(default)]
    pub model: Option<ModelKind>,
    #[serde(default, alias = "L")]
    pub lag: Option<usize>,
    #[serde(default, alias = "d")]
    pub horizon: Option<usize>,
    #[serde(default)]
    pub target: Option<String>,
    #[serde(default)]
    pub features: Option<FeatureMode>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub epochs: Option<usize>,
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default)]
    pub learning_rate: Option<f64>,
    #[serde(default)]
    pub split: Option<SplitSpec>,
    #[serde(default)]
    pub mlp: Option<MlpArch>,
    #[serde(default)]
    pub lstm: Option<LstmArch>,
}

impl JobRequest {
    fn spec(&self) -> ApiResult<JobSpec> {
        let defaults = DatasetRequest::default();
        let dataset = DatasetRequest {
            lag: self.lag.unwrap_or(defaults.lag),
            horizon: self.horizon.unwrap_or(defaults.horizon),
            target: self.target.clone().unwrap_or(defaults.target),
            features: self.features.clone().unwrap_or(defaults.features),
        };
        if dataset.lag == 0 {
            return Err(ApiError::validation("L must be at least 1"));
        }
        if dataset.horizon == 0 {
            return Err(ApiError::validation("d must be at least 1"));
        }
        let mut train = TrainConfig::default();
        if let Some(seed) = self.seed {
            train.seed = seed;
        }
        if let Some(epochs) = self.epochs {
            train.epochs = epochs;
        }
        if let Some(batch) = self.batch_size {
            train.batch_size = batch;
        }
        if let Some(lr) = self.learning_rate {
            train.adam.learning_rate = lr;
        }
        if let Some(split) = self.split {
            train.split = split;
        }
        if let Some(mlp) = &self.mlp {
            train.mlp = mlp.clone();
        }
        if let Some(lstm) = &self.lstm {
            train.lstm = lstm.clone();
        }
        train.validate()?;
        Ok(JobSpec {
            session_id: self.session_id.clone(),
            dataset,
            train,
        })
    }
}

#[derive(Debug, Serialize)]
pub struct Submitted {
    pub job_id: String,
    pub kind: JobKind,
    pub state: JobState,
}

fn submit(app: &App, kind: JobKind, spec: JobSpec) -> ApiResult<(StatusCode, Json<Submitted>)> {
    let job = app.jobs.submit(kind, spec)?;
    Ok((
        StatusCode::ACCEPTED,
        Json(Submitted {
            job_id: job.job_id,
            kind: job.kind,
            state: job.state,
        }),
    ))
}

fn session_rows_available(app: &App, id: &str) -> ApiResult<usize> {
    let session = app.session(id).ok_or_else(|| ApiError::not_found("session", id))?;
    let csv = lock(&session).files().csv;
    if !csv.is_file() {
        return Ok(0);
    }
    Ok(count_complete_rows(&csv)? as usize)
}

pub async fn train(State(app): State<Arc<App>>, body: Bytes) -> ApiResult<(StatusCode, Json<Submitted>)> {
    let req: JobRequest = parse_body(&body)?;
    let model = req.model.ok_or_else(|| ApiError::validation("model is required (lr, nn or lstm)"))?;
    let spec = req.spec()?;
    let available = session_rows_available(&app, &spec.session_id)?;
    spec.dataset.check_training_rows(available)?;
    submit(&app, JobKind::for_model(model), spec)
}

pub async fn build_dataset(State(app): State<Arc<App>>, body: Bytes) -> ApiResult<(StatusCode, Json<Submitted>)> {
    let req: JobRequest = parse_body(&body)?;
    if req.model.is_some() {
        return Err(ApiError::validation("model is not accepted when building a dataset"));
    }
    let spec = req.spec()?;
    session_rows_available(&app, &spec.session_id)?;
    submit(&app, JobKind::BuildDataset, spec)
}

pub async fn list_jobs(State(app): State<Arc<App>>) -> Json<Value> {
    Json(json!({ "jobs": app.jobs.list() }))
}

pub async fn get_job(State(app): State<Arc<App>>, Path(id): Path<String>) -> ApiResult<Json<Job>> {
    app.jobs.get(&id).map(Json).ok_or_else(|| ApiError::not_found("job", &id))
}

/// The training report of a done job, byte-for-byte as written to disk.
/// Dataset jobs answer with their result record.
pub async fn job_report(State(app): State<Arc<App>>, Path(id): Path<String>) -> ApiResult<Response> {
    let job = app.jobs.get(&id).ok_or_else(|| ApiError::not_found("job", &id))?;
    match job.state {
        JobState::Done => {}
        JobState::Failed => {
            return Err(ApiError::new(StatusCode::CONFLICT, "job_failed", "job failed; no report")
                .with_detail(serde_json::to_value(&job.error).unwrap_or(Value::Null)))
        }
        state => {
            return Err(
                ApiError::new(StatusCode::CONFLICT, "not_ready", "report is available once the job is done")
                    .with_detail(json!({ "state": state, "progress": job.progress })),
            )
        }
    }
    match report_path(&job) {
        Some(path) => {
            let bytes = std::fs::read(path).map_err(|e| gsicast_core::Error::io(path, e))?;
            Ok(([(header::CONTENT_TYPE, "application/json")], bytes).into_response())
        }
        None => Ok(Json(&job.result).into_response()),
    }
}
