//! Shared server state: the session registry and the job queue.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard};

use gsicast_core::session::{CaptureSession, SessionInfo, SessionState, META_FILE};
use gsicast_core::{Error, Result};

use crate::jobs::JobQueue;

pub const SESSIONS_DIR: &str = "sessions";
pub const JOBS_DIR: &str = "jobs";

pub type SharedSession = Arc<Mutex<CaptureSession>>;

pub struct App {
    data_dir: PathBuf,
    auth_token: Option<String>,
    sessions: Mutex<BTreeMap<String, SharedSession>>,
    active: Mutex<Option<String>>,
    pub jobs: Arc<JobQueue>,
}

/// Session ids double as directory names.
pub fn valid_id(id: &str) -> bool {
    (1..=64).contains(&id.len()) && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}

pub fn lock(session: &SharedSession) -> MutexGuard<'_, CaptureSession> {
    session.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

impl App {
    /// Opens `data_dir`, recovering sessions and unfinished jobs.
    pub fn open(data_dir: impl Into<PathBuf>, workers: usize, auth_token: Option<String>) -> Result<Arc<Self>> {
        let data_dir = data_dir.into();
        let sessions_dir = data_dir.join(SESSIONS_DIR);
        fs::create_dir_all(&sessions_dir).map_err(|e| Error::io(&sessions_dir, e))?;
        let mut sessions = BTreeMap::new();
        let entries = fs::read_dir(&sessions_dir).map_err(|e| Error::io(&sessions_dir, e))?;
        for entry in entries.flatten() {
            let dir = entry.path();
            if !dir.join(META_FILE).is_file() {
                continue;
            }
            match CaptureSession::recover(&dir) {
                Ok(s) => {
                    let s = s.with_auth_token(auth_token.clone());
                    sessions.insert(s.id().to_string(), Arc::new(Mutex::new(s)));
                }
                Err(e) => tracing::warn!(dir = %dir.display(), error = %e, "skipping unreadable session"),
            }
        }
        let jobs = JobQueue::open(data_dir.join(JOBS_DIR), sessions_dir, workers)?;
        Ok(Arc::new(Self {
            data_dir,
            auth_token,
            sessions: Mutex::new(sessions),
            active: Mutex::new(None),
            jobs,
        }))
    }

    pub fn data_dir(&self) -> &Path {
        &self.data_dir
    }

    pub fn sessions_dir(&self) -> PathBuf {
        self.data_dir.join(SESSIONS_DIR)
    }

    pub fn session(&self, id: &str) -> Option<SharedSession> {
        self.sessions.lock().expect("sessions lock").get(id).cloned()
    }

    /// The session that receives posts on the plain ingest path.
    pub fn active(&self) -> Option<SharedSession> {
        let id = self.active.lock().expect("active lock").clone()?;
        self.session(&id)
    }

    pub fn list(&self) -> Vec<SessionInfo> {
        let sessions: Vec<SharedSession> = self.sessions.lock().expect("sessions lock").values().cloned().collect();
        sessions.iter().map(|s| lock(s).info()).collect()
    }

    /// Starts capture under `id`. An existing closed session is renewed and
    /// its files truncated; a capturing one is a state error.
    pub fn start(&self, id: &str) -> Result<SessionInfo> {
        let session = {
            let mut sessions = self.sessions.lock().expect("sessions lock");
            if let Some(existing) = sessions.get(id) {
                if lock(existing).state() == SessionState::Capturing {
                    return Err(Error::State(format!("session {id} is already capturing")));
                }
            }
            let fresh = CaptureSession::new(id, self.sessions_dir().join(id)).with_auth_token(self.auth_token.clone());
            let shared = Arc::new(Mutex::new(fresh));
            sessions.insert(id.to_string(), Arc::clone(&shared));
            shared
        };
        let info = lock(&session).start()?;
        *self.active.lock().expect("active lock") = Some(id.to_string());
        tracing::info!(session = id, "capture started");
        Ok(info)
    }

    pub fn stop(&self, id: &str) -> Result<Option<SessionInfo>> {
        let Some(session) = self.session(id) else {
            return Ok(None);
        };
        let info = lock(&session).stop()?;
        let mut active = self.active.lock().expect("active lock");
        if active.as_deref() == Some(id) {
            *active = None;
        }
        tracing::info!(session = id, rows = info.rows_written, "capture stopped");
        Ok(Some(info))
    }
}
