//! Journaled job queue. Each job lives in `jobs/<id>/job.json`, rewritten
//! atomically on every transition; queued and running jobs are re-enqueued
//! when the queue is reopened.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;

use chrono::{DateTime, Utc};
use gsicast_core::models::{ModelKind, TrainConfig};
use gsicast_core::pipeline::{self, DatasetRequest};
use gsicast_core::session::{write_atomic, CSV_FILE};
use gsicast_core::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::error::ErrorBody;

pub const JOB_FILE: &str = "job.json";
pub const DATASET_DIR: &str = "dataset";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JobKind {
    BuildDataset,
    TrainLr,
    TrainNn,
    TrainLstm,
}

impl JobKind {
    pub fn for_model(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Lr => JobKind::TrainLr,
            ModelKind::Nn => JobKind::TrainNn,
            ModelKind::Lstm => JobKind::TrainLstm,
        }
    }

    pub fn model(self) -> Option<ModelKind> {
        match self {
            JobKind::BuildDataset => None,
            JobKind::TrainLr => Some(ModelKind::Lr),
            JobKind::TrainNn => Some(ModelKind::Nn),
            JobKind::TrainLstm => Some(ModelKind::Lstm),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobState {
    pub fn is_terminal(self) -> bool {
        matches!(self, JobState::Done | JobState::Failed)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub epoch: usize,
    pub epochs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobSpec {
    pub session_id: String,
    pub dataset: DatasetRequest,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum JobResult {
    Report {
        report: PathBuf,
        series: PathBuf,
        model: PathBuf,
        r2: f64,
        adjusted_r2: Option<f64>,
    },
    Dataset {
        dir: PathBuf,
        samples: usize,
        width: usize,
        features: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub job_id: String,
    pub seq: u64,
    pub kind: JobKind,
    pub state: JobState,
    pub progress: Progress,
    pub spec: JobSpec,
    pub created_at: DateTime<Utc>,
    pub started_at: Option<DateTime<Utc>>,
    pub finished_at: Option<DateTime<Utc>>,
    pub result: Option<JobResult>,
    pub error: Option<ErrorBody>,
}

pub struct JobQueue {
    jobs_dir: PathBuf,
    sessions_dir: PathBuf,
    jobs: Mutex<BTreeMap<String, Job>>,
    tx: Mutex<Sender<String>>,
    stopping: AtomicBool,
}

impl JobQueue {
    /// Loads journals under `jobs_dir`, starts `workers` threads and
    /// re-enqueues unfinished jobs in submission order.
    pub fn open(jobs_dir: PathBuf, sessions_dir: PathBuf, workers: usize) -> Result<Arc<Self>> {
        fs::create_dir_all(&jobs_dir).map_err(|e| Error::io(&jobs_dir, e))?;
        let mut jobs = BTreeMap::new();
        let entries = fs::read_dir(&jobs_dir).map_err(|e| Error::io(&jobs_dir, e))?;
        for entry in entries.flatten() {
            let path = entry.path().join(JOB_FILE);
            if !path.is_file() {
                continue;
            }
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let mut job: Job = serde_json::from_str(&text)?;
            if !job.state.is_terminal() {
                job.state = JobState::Queued;
                job.progress = Progress::default();
                job.started_at = None;
            }
            jobs.insert(job.job_id.clone(), job);
        }
        let mut pending: Vec<(u64, String)> = jobs
            .values()
            .filter(|j| j.state == JobState::Queued)
            .map(|j| (j.seq, j.job_id.clone()))
            .collect();
        pending.sort();

        let (tx, rx) = mpsc::channel();
        let queue = Arc::new(Self {
            jobs_dir,
            sessions_dir,
            jobs: Mutex::new(jobs),
            tx: Mutex::new(tx),
            stopping: AtomicBool::new(false),
        });
        for (_, id) in &pending {
            queue.journal(id)?;
        }
        let rx = Arc::new(Mutex::new(rx));
        for n in 0..workers.max(1) {
            let q = Arc::clone(&queue);
            let rx = Arc::clone(&rx);
            thread::Builder::new()
                .name(format!("job-worker-{n}"))
                .spawn(move || q.worker(rx))
                .map_err(|e| Error::io("worker thread", e))?;
        }
        for (_, id) in pending {
            queue.enqueue(id);
        }
        Ok(queue)
    }

    /// Stops workers from taking new jobs. A job still computing is
    /// abandoned without writing anything, so its journal keeps saying
    /// `running` and the next queue over this directory reruns it.
    pub fn shutdown(&self) {
        self.stopping.store(true, Ordering::SeqCst);
    }

    fn stopping(&self) -> bool {
        self.stopping.load(Ordering::SeqCst)
    }

    fn enqueue(&self, id: String) {
        let _ = self.tx.lock().expect("queue sender").send(id);
    }

    pub fn job_dir(&self, id: &str) -> PathBuf {
        self.jobs_dir.join(id)
    }

    pub fn submit(&self, kind: JobKind, spec: JobSpec) -> Result<Job> {
        let job = {
            let mut jobs = self.jobs.lock().expect("jobs lock");
            let seq = jobs.values().map(|j| j.seq).max().map_or(1, |s| s + 1);
            let job = Job {
                job_id: format!("job-{}", uuid::Uuid::new_v4().simple()),
                seq,
                kind,
                state: JobState::Queued,
                progress: Progress::default(),
                spec,
                created_at: Utc::now(),
                started_at: None,
                finished_at: None,
                result: None,
                error: None,
            };
            jobs.insert(job.job_id.clone(), job.clone());
            job
        };
        self.journal(&job.job_id)?;
        self.enqueue(job.job_id.clone());
        tracing::info!(job = %job.job_id, kind = ?kind, "job queued");
        Ok(job)
    }

    pub fn get(&self, id: &str) -> Option<Job> {
        self.jobs.lock().expect("jobs lock").get(id).cloned()
    }

    pub fn list(&self) -> Vec<Job> {
        let mut jobs: Vec<Job> = self.jobs.lock().expect("jobs lock").values().cloned().collect();
        jobs.sort_by_key(|j| j.seq);
        jobs
    }

    fn update(&self, id: &str, f: impl FnOnce(&mut Job)) -> Result<()> {
        {
            let mut jobs = self.jobs.lock().expect("jobs lock");
            if let Some(job) = jobs.get_mut(id) {
                f(job);
            }
        }
        self.journal(id)
    }

    fn journal(&self, id: &str) -> Result<()> {
        let Some(job) = self.get(id) else {
            return Ok(());
        };
        let dir = self.job_dir(id);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        write_atomic(&dir.join(JOB_FILE), serde_json::to_string_pretty(&job)?.as_bytes())
    }

    fn worker(&self, rx: Arc<Mutex<Receiver<String>>>) {
        loop {
            let next = rx.lock().expect("queue receiver").recv();
            let Ok(id) = next else {
                return;
            };
            if self.stopping() {
                return;
            }
            self.execute(&id);
        }
    }

    fn execute(&self, id: &str) {
        let Some(job) = self.get(id) else {
            return;
        };
        if job.state != JobState::Queued {
            return;
        }
        let epochs = if job.kind.model().is_some_and(|m| m != ModelKind::Lr) {
            job.spec.train.epochs
        } else {
            1
        };
        let started = self.update(id, |j| {
            j.state = JobState::Running;
            j.started_at = Some(Utc::now());
            j.progress = Progress { epoch: 0, epochs };
        });
        if let Err(e) = started {
            tracing::error!(job = id, error = %e, "cannot journal job start");
        }
        let outcome = self.run(&job);
        if self.stopping() {
            return;
        }
        let finished = self.update(id, |j| {
            j.finished_at = Some(Utc::now());
            match outcome {
                Ok(result) => {
                    j.state = JobState::Done;
                    j.progress.epoch = j.progress.epochs;
                    j.result = Some(result);
                }
                Err(e) => {
                    j.state = JobState::Failed;
                    j.error = Some(ErrorBody::from_core(&e));
                }
            }
        });
        if let Err(e) = finished {
            tracing::error!(job = id, error = %e, "cannot journal job completion");
        }
        tracing::info!(job = id, "job finished");
    }

    fn run(&self, job: &Job) -> Result<JobResult> {
        let csv = self.sessions_dir.join(&job.spec.session_id).join(CSV_FILE);
        let table = pipeline::load_numeric(&csv)?;
        let dir = self.job_dir(&job.job_id);
        let session = Some(job.spec.session_id.clone());
        match job.kind.model() {
            None => {
                let prepared = pipeline::prepare(&table, &job.spec.dataset, session)?;
                let out = dir.join(DATASET_DIR);
                prepared.write(&out)?;
                Ok(JobResult::Dataset {
                    dir: out,
                    samples: prepared.dataset.len(),
                    width: prepared.window.width(),
                    features: prepared.window.features.clone(),
                })
            }
            Some(kind) => {
                let mut progress = |epoch: usize, _total: usize| {
                    let id = job.job_id.as_str();
                    if self.stopping() {
                        return;
                    }
                    if let Err(e) = self.update(id, |j| j.progress.epoch = j.progress.epoch.max(epoch)) {
                        tracing::warn!(job = id, error = %e, "progress journal failed");
                    }
                };
                let (model, report) =
                    pipeline::run(&table, &job.spec.dataset, kind, &job.spec.train, session, &mut progress)?;
                if self.stopping() {
                    return Err(Error::State("server shutting down".into()));
                }
                pipeline::write_outputs(&dir, &model, &report)?;
                Ok(JobResult::Report {
                    report: dir.join(pipeline::REPORT_FILE),
                    series: dir.join(pipeline::SERIES_FILE),
                    model: dir.join(pipeline::MODEL_FILE),
                    r2: report.r2,
                    adjusted_r2: report.adjusted_r2,
                })
            }
        }
    }
}

/// Report file of a finished training job.
pub fn report_path(job: &Job) -> Option<&Path> {
    match &job.result {
        Some(JobResult::Report { report, .. }) => Some(report),
        _ => None,
    }
}
