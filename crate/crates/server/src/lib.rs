//! HTTP side of the system: the game-client ingest endpoint and the `/v1`
//! control plane for capture sessions, dataset builds and training jobs.
//!
//! All state lives under one data directory: `sessions/<id>/` holds the
//! three sinks and `session.json`, `jobs/<id>/` holds the job journal and
//! its outputs.

pub mod api;
pub mod app;
pub mod error;
pub mod ingest;
pub mod jobs;

use std::net::{SocketAddr, ToSocketAddrs};
use std::path::PathBuf;
use std::sync::{mpsc, Arc};
use std::thread::JoinHandle;

use axum::routing::{delete, get, post};
use axum::Router;
use gsicast_core::gsi::EndpointConfig;
use gsicast_core::{Error, Result};
use tokio::sync::oneshot;

pub use app::App;
pub use error::{ApiError, ErrorBody};
pub use jobs::{Job, JobKind, JobQueue, JobResult, JobSpec, JobState, Progress};

pub const DEFAULT_WORKERS: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct ServerConfig {
    pub data_dir: PathBuf,
    pub bind: SocketAddr,
    /// Path the game client posts to; posts there go to the active session.
    pub ingest_path: String,
    pub workers: usize,
    pub auth_token: Option<String>,
}

impl ServerConfig {
    /// Listens where `endpoint.uri` points.
    pub fn from_endpoint(data_dir: impl Into<PathBuf>, endpoint: &EndpointConfig) -> Result<Self> {
        endpoint.validate()?;
        let authority = endpoint.socket_addr()?;
        let bind = authority
            .to_socket_addrs()
            .map_err(|e| Error::Config(format!("cannot resolve `{authority}`: {e}")))?
            .next()
            .ok_or_else(|| Error::Config(format!("`{authority}` resolves to no address")))?;
        Ok(Self {
            data_dir: data_dir.into(),
            bind,
            ingest_path: endpoint.path(),
            workers: DEFAULT_WORKERS,
            auth_token: endpoint.auth_token.clone(),
        })
    }

    /// Loopback on an ephemeral port, mostly for tests.
    pub fn ephemeral(data_dir: impl Into<PathBuf>) -> Self {
        Self {
            data_dir: data_dir.into(),
            bind: SocketAddr::from(([127, 0, 0, 1], 0)),
            ingest_path: "/".into(),
            workers: DEFAULT_WORKERS,
            auth_token: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if !self.ingest_path.starts_with('/') || self.ingest_path.starts_with("/v1") {
            return Err(Error::Config(format!(
                "ingest path `{}` must start with `/` and lie outside /v1",
                self.ingest_path
            )));
        }
        Ok(())
    }
}

pub fn router(app: Arc<App>, ingest_path: &str) -> Router {
    let v1 = Router::new()
        .route("/health", get(api::health))
        .route("/sessions", post(api::start_session).get(api::list_sessions))
        .route("/sessions/{id}", delete(api::stop_session).get(api::get_session))
        .route("/sessions/{id}/rows", get(api::session_rows))
        .route("/train", post(api::train))
        .route("/datasets", post(api::build_dataset))
        .route("/jobs", get(api::list_jobs))
        .route("/jobs/{id}", get(api::get_job))
        .route("/jobs/{id}/report", get(api::job_report));
    Router::new()
        .route(ingest_path, post(ingest::post_active))
        .route("/gsi/{id}", post(ingest::post_session))
        .nest("/v1", v1)
        .with_state(app)
}

/// Serves until `shutdown` resolves.
pub async fn run(cfg: ServerConfig, shutdown: impl std::future::Future<Output = ()> + Send + 'static) -> Result<()> {
    cfg.validate()?;
    let app = App::open(&cfg.data_dir, cfg.workers, cfg.auth_token.clone())?;
    let listener = tokio::net::TcpListener::bind(cfg.bind)
        .await
        .map_err(|e| Error::io(cfg.bind.to_string(), e))?;
    tracing::info!(addr = %cfg.bind, data_dir = %cfg.data_dir.display(), "listening");
    let served = axum::serve(listener, router(Arc::clone(&app), &cfg.ingest_path))
        .with_graceful_shutdown(shutdown)
        .await;
    app.jobs.shutdown();
    served.map_err(|e| Error::io(cfg.bind.to_string(), e))
}

/// A server on its own thread and runtime.
pub struct RunningServer {
    pub addr: SocketAddr,
    pub app: Arc<App>,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl RunningServer {
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn stop(mut self) {
        self.shutdown_now();
    }

    fn shutdown_now(&mut self) {
        self.app.jobs.shutdown();
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(thread) = self.thread.take() {
            let _ = thread.join();
        }
    }
}

impl Drop for RunningServer {
    fn drop(&mut self) {
        self.shutdown_now();
    }
}

pub fn spawn(cfg: ServerConfig) -> Result<RunningServer> {
    spawn_with(cfg, |r| r)
}

/// Like [`spawn`], with a hook to wrap the router (extra layers in tests).
pub fn spawn_with(cfg: ServerConfig, wrap: impl FnOnce(Router) -> Router + Send + 'static) -> Result<RunningServer> {
    cfg.validate()?;
    let app = App::open(&cfg.data_dir, cfg.workers, cfg.auth_token.clone())?;
    let std_listener = std::net::TcpListener::bind(cfg.bind).map_err(|e| Error::io(cfg.bind.to_string(), e))?;
    std_listener
        .set_nonblocking(true)
        .map_err(|e| Error::io(cfg.bind.to_string(), e))?;
    let addr = std_listener.local_addr().map_err(|e| Error::io(cfg.bind.to_string(), e))?;
    let router = wrap(router(Arc::clone(&app), &cfg.ingest_path));
    let (tx, rx) = oneshot::channel::<()>();
    let (ready_tx, ready_rx) = mpsc::channel::<Result<()>>();
    let thread = std::thread::Builder::new()
        .name("gsicast-server".into())
        .spawn(move || {
            let runtime = match tokio::runtime::Builder::new_multi_thread()
                .worker_threads(2)
                .enable_all()
                .build()
            {
                Ok(rt) => rt,
                Err(e) => {
                    let _ = ready_tx.send(Err(Error::io("tokio runtime", e)));
                    return;
                }
            };
            runtime.block_on(async move {
                let listener = match tokio::net::TcpListener::from_std(std_listener) {
                    Ok(l) => l,
                    Err(e) => {
                        let _ = ready_tx.send(Err(Error::io(addr.to_string(), e)));
                        return;
                    }
                };
                let _ = ready_tx.send(Ok(()));
                let shutdown = async {
                    let _ = rx.await;
                };
                if let Err(e) = axum::serve(listener, router).with_graceful_shutdown(shutdown).await {
                    tracing::error!(error = %e, "server stopped");
                }
            });
        })
        .map_err(|e| Error::io("server thread", e))?;
    ready_rx
        .recv()
        .map_err(|_| Error::State("server thread exited early".into()))??;
    Ok(RunningServer {
        addr,
        app,
        shutdown: Some(tx),
        thread: Some(thread),
    })
}
