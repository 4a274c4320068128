//! One capture lifetime: state machine, sinks and the POST handling contract.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::gsi::{self, BuildingRegistry, Cell, ColumnManifest, FeatureRow};
use crate::{Error, Result};

pub const CSV_FILE: &str = "session.csv";
pub const JSONL_FILE: &str = "session.jsonl";
pub const TEXT_FILE: &str = "session.txt";
pub const META_FILE: &str = "session.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionState {
    Idle,
    Capturing,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionFiles {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub text: PathBuf,
}

impl SessionFiles {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            csv: dir.join(CSV_FILE),
            json: dir.join(JSONL_FILE),
            text: dir.join(TEXT_FILE),
        }
    }
}

/// Serializable view of a session, also persisted as `session.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub session_id: String,
    pub state: SessionState,
    pub files: SessionFiles,
    pub rows_written: u64,
    pub started_at: Option<DateTime<Utc>>,
    pub ended_at: Option<DateTime<Utc>>,
    pub columns: usize,
}

/// What happened to an accepted POST.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PostOutcome {
    /// Row appended; carries its 1-based index.
    Written(u64),
    /// Acknowledged without writing (gate closed or not capturing).
    Acknowledged,
}

struct Sinks {
    csv: csv::Writer<File>,
    json: BufWriter<File>,
    text: BufWriter<File>,
}

pub struct CaptureSession {
    id: String,
    dir: PathBuf,
    state: SessionState,
    manifest: ColumnManifest,
    registry: BuildingRegistry,
    sinks: Option<Sinks>,
    rows_written: u64,
    started_at: Option<DateTime<Utc>>,
    ended_at: Option<DateTime<Utc>>,
    auth_token: Option<String>,
}

impl std::fmt::Debug for CaptureSession {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CaptureSession")
            .field("id", &self.id)
            .field("state", &self.state)
            .field("rows_written", &self.rows_written)
            .finish()
    }
}

impl CaptureSession {
    /// A new idle session writing into `dir`.
    pub fn new(id: impl Into<String>, dir: impl Into<PathBuf>) -> Self {
        Self {
            id: id.into(),
            dir: dir.into(),
            state: SessionState::Idle,
            manifest: ColumnManifest::canonical().clone(),
            registry: BuildingRegistry::new(),
            sinks: None,
            rows_written: 0,
            started_at: None,
            ended_at: None,
            auth_token: None,
        }
    }

    /// Requires posts to carry `auth.token == token`.
    pub fn with_auth_token(mut self, token: Option<String>) -> Self {
        self.auth_token = token;
        self
    }

    /// Rebuilds a closed session from its metadata file, e.g. after a restart.
    pub fn recover(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        let meta = dir.join(META_FILE);
        let text = fs::read_to_string(&meta).map_err(|e| Error::io(&meta, e))?;
        let info: SessionInfo = serde_json::from_str(&text)?;
        let rows = crate::table::count_complete_rows(&info.files.csv)?;
        let mut session = Self::new(info.session_id, dir);
        session.state = match info.state {
            SessionState::Idle => SessionState::Idle,
            _ => SessionState::Closed,
        };
        session.rows_written = rows;
        session.started_at = info.started_at;
        session.ended_at = info.ended_at.or_else(|| info.started_at.map(|_| Utc::now()));
        if info.state == SessionState::Capturing {
            session.write_meta()?;
        }
        Ok(session)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn rows_written(&self) -> u64 {
        self.rows_written
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> SessionFiles {
        SessionFiles::in_dir(&self.dir)
    }

    pub fn manifest(&self) -> &ColumnManifest {
        &self.manifest
    }

    pub fn info(&self) -> SessionInfo {
        SessionInfo {
            session_id: self.id.clone(),
            state: self.state,
            files: self.files(),
            rows_written: self.rows_written,
            started_at: self.started_at,
            ended_at: self.ended_at,
            columns: self.manifest.len(),
        }
    }

    /// idle -> capturing. Truncates the three sinks and writes the CSV header.
    pub fn start(&mut self) -> Result<SessionInfo> {
        if self.state != SessionState::Idle {
            return Err(Error::State(format!(
                "cannot start session {} in state {:?}",
                self.id, self.state
            )));
        }
        fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let files = self.files();
        let create = |p: &Path| File::create(p).map_err(|e| Error::io(p, e));
        let mut csv = csv::Writer::from_writer(create(&files.csv)?);
        csv.write_record(self.manifest.columns())?;
        csv.flush().map_err(|e| Error::io(&files.csv, e))?;
        self.sinks = Some(Sinks {
            csv,
            json: BufWriter::new(create(&files.json)?),
            text: BufWriter::new(create(&files.text)?),
        });
        self.registry = BuildingRegistry::new();
        self.rows_written = 0;
        self.state = SessionState::Capturing;
        self.started_at = Some(Utc::now());
        self.write_meta()?;
        Ok(self.info())
    }

    /// capturing -> closed. Flushes and closes the sinks.
    pub fn stop(&mut self) -> Result<SessionInfo> {
        if self.state != SessionState::Capturing {
            return Err(Error::State(format!(
                "cannot stop session {} in state {:?}",
                self.id, self.state
            )));
        }
        if let Some(mut sinks) = self.sinks.take() {
            let files = self.files();
            sinks.csv.flush().map_err(|e| Error::io(&files.csv, e))?;
            sinks.json.flush().map_err(|e| Error::io(&files.json, e))?;
            sinks.text.flush().map_err(|e| Error::io(&files.text, e))?;
        }
        self.state = SessionState::Closed;
        self.ended_at = Some(Utc::now());
        self.write_meta()?;
        Ok(self.info())
    }

    /// Handles one POST body. Parse failures are errors (HTTP 400); a closed
    /// gate or a session that is not capturing is acknowledged without writing.
    pub fn handle_post(&mut self, body: &str) -> Result<PostOutcome> {
        let snapshot = gsi::parse_snapshot(body)?;
        if let Some(expected) = &self.auth_token {
            if snapshot.auth_token() != Some(expected.as_str()) {
                return Err(Error::Unauthorized);
            }
        }
        if self.state != SessionState::Capturing || !gsi::gate(&snapshot) {
            return Ok(PostOutcome::Acknowledged);
        }
        let row = gsi::flatten(&snapshot, &mut self.registry, &self.manifest);
        self.append(&row)?;
        Ok(PostOutcome::Written(self.rows_written))
    }

    fn append(&mut self, row: &FeatureRow) -> Result<()> {
        let files = self.files();
        let sinks = self.sinks.as_mut().expect("capturing session has sinks");
        let index = self.rows_written + 1;
        let now = Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true);

        sinks.csv.write_record(row.to_strings())?;
        sinks.csv.flush().map_err(|e| Error::io(&files.csv, e))?;

        let record = JsonRecord {
            row: index,
            received_at: &now,
            columns: self.manifest.columns(),
            cells: &row.cells,
        };
        serde_json::to_writer(&mut sinks.json, &record)?;
        sinks
            .json
            .write_all(b"\n")
            .and_then(|_| sinks.json.flush())
            .map_err(|e| Error::io(&files.json, e))?;

        let mut block = format!("--- {now}\n");
        for (column, cell) in self.manifest.columns().iter().zip(&row.cells) {
            if !cell.is_empty() {
                block.push_str(column);
                block.push_str(": ");
                block.push_str(&cell.to_string());
                block.push('\n');
            }
        }
        block.push('\n');
        sinks
            .text
            .write_all(block.as_bytes())
            .and_then(|_| sinks.text.flush())
            .map_err(|e| Error::io(&files.text, e))?;

        self.rows_written = index;
        Ok(())
    }

    fn write_meta(&self) -> Result<()> {
        let path = self.dir.join(META_FILE);
        let text = serde_json::to_string_pretty(&self.info())?;
        write_atomic(&path, text.as_bytes())
    }
}

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

struct JsonRecord<'a> {
    row: u64,
    received_at: &'a str,
    columns: &'a [String],
    cells: &'a [Cell],
}

impl Serialize for JsonRecord<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.columns.len() + 2))?;
        map.serialize_entry("_row", &self.row)?;
        map.serialize_entry("_received_at", self.received_at)?;
        for (c, v) in self.columns.iter().zip(self.cells) {
            map.serialize_entry(c, v)?;
        }
        map.end()
    }
}
