//! Append-only artifact store: one directory per run under `runs/`.
//!
//! Artifacts are created once and never rewritten. The two logs
//! (`status.jsonl`, `events.jsonl`) only ever grow.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub const CONFIG: &str = "config.json";
pub const STATUS: &str = "status.jsonl";
pub const EVENTS: &str = "events.jsonl";
pub const SAMPLES: &str = "samples.csv";
pub const DROPPED: &str = "dropped.jsonl";
pub const DATASET: &str = "dataset.csv";
pub const TREE: &str = "tree.json";
pub const REPORT: &str = "pairs.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Sampling,
    Classifying,
    Tracking,
    Done,
    Failed,
}

impl RunStatus {
    pub fn is_terminal(self) -> bool {
        matches!(self, RunStatus::Done | RunStatus::Failed)
    }

    /// Allowed forward transitions; any live state may fail.
    pub fn can_become(self, next: RunStatus) -> bool {
        use RunStatus::*;
        matches!(
            (self, next),
            (Sampling, Classifying) | (Classifying, Tracking) | (Tracking, Done) | (Sampling | Classifying | Tracking, Failed)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatusEntry {
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub config: RunConfig,
    /// Artifacts present on disk, sorted.
    pub artifacts: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("unknown run {0}")]
    UnknownRun(String),
    #[error("artifact {0} already exists")]
    Exists(String),
    #[error("run {run_id}: cannot move from {from:?} to {to:?}")]
    Transition { run_id: String, from: RunStatus, to: RunStatus },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

/// `run-0001`, `run-0002`, ...
pub fn is_run_id(id: &str) -> bool {
    id.strip_prefix("run-").is_some_and(|n| n.len() >= 4 && n.bytes().all(|b| b.is_ascii_digit()))
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> Result<Store, StoreError> {
        let root = root.into();
        let runs = root.join("runs");
        fs::create_dir_all(&runs).map_err(io_err(&runs))?;
        Ok(Store { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn run_dir(&self, run_id: &str) -> PathBuf {
        self.root.join("runs").join(run_id)
    }

    pub fn exists(&self, run_id: &str) -> bool {
        is_run_id(run_id) && self.run_dir(run_id).is_dir()
    }

    fn checked_dir(&self, run_id: &str) -> Result<PathBuf, StoreError> {
        if self.exists(run_id) {
            Ok(self.run_dir(run_id))
        } else {
            Err(StoreError::UnknownRun(run_id.to_string()))
        }
    }

    /// Run ids in ascending order.
    pub fn list(&self) -> Result<Vec<String>, StoreError> {
        let runs = self.root.join("runs");
        let mut ids: Vec<String> = fs::read_dir(&runs)
            .map_err(io_err(&runs))?
            .filter_map(|e| e.ok()?.file_name().into_string().ok())
            .filter(|n| is_run_id(n))
            .collect();
        ids.sort_by_key(|id| id[4..].parse::<u64>().unwrap_or(u64::MAX));
        Ok(ids)
    }

    /// Creates the next sequential run directory and writes its config.
    pub fn create_run(&self, config: &RunConfig) -> Result<String, StoreError> {
        let mut next = self.list()?.last().and_then(|id| id[4..].parse::<u64>().ok()).unwrap_or(0) + 1;
        loop {
            let id = format!("run-{next:04}");
            let dir = self.run_dir(&id);
            match fs::create_dir(&dir) {
                Ok(()) => {
                    let bytes = serde_json::to_vec_pretty(config).expect("config serializes");
                    self.write_artifact(&id, CONFIG, &bytes)?;
                    return Ok(id);
                }
                // Lost a race with another writer; take the next id.
                Err(e) if e.kind() == io::ErrorKind::AlreadyExists => next += 1,
                Err(e) => return Err(StoreError::Io { path: dir, source: e }),
            }
        }
    }

    pub fn write_artifact(&self, run_id: &str, name: &str, bytes: &[u8]) -> Result<(), StoreError> {
        let path = self.checked_dir(run_id)?.join(name);
        let mut file = OpenOptions::new().write(true).create_new(true).open(&path).map_err(|e| {
            if e.kind() == io::ErrorKind::AlreadyExists {
                StoreError::Exists(name.to_string())
            } else {
                StoreError::Io { path: path.clone(), source: e }
            }
        })?;
        file.write_all(bytes).map_err(io_err(&path))
    }

    pub fn read_artifact(&self, run_id: &str, name: &str) -> Result<Vec<u8>, StoreError> {
        let path = self.checked_dir(run_id)?.join(name);
        fs::read(&path).map_err(io_err(&path))
    }

    pub fn read_text(&self, run_id: &str, name: &str) -> Result<String, StoreError> {
        let bytes = self.read_artifact(run_id, name)?;
        Ok(String::from_utf8_lossy(&bytes).into_owned())
    }

    pub fn config(&self, run_id: &str) -> Result<RunConfig, StoreError> {
        let path = self.checked_dir(run_id)?.join(CONFIG);
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        serde_json::from_slice(&bytes).map_err(|source| StoreError::Json { path, source })
    }

    pub fn status_log(&self, run_id: &str) -> Result<Vec<StatusEntry>, StoreError> {
        let path = self.checked_dir(run_id)?.join(STATUS);
        let text = match fs::read_to_string(&path) {
            Ok(text) => text,
            Err(e) if e.kind() == io::ErrorKind::NotFound => String::new(),
            Err(e) => return Err(StoreError::Io { path, source: e }),
        };
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(|source| StoreError::Json { path: path.clone(), source }))
            .collect()
    }

    /// Appends a status transition after checking it against the log.
    pub fn append_status(&self, run_id: &str, entry: &StatusEntry) -> Result<(), StoreError> {
        let current = self.status_log(run_id)?.last().map(|e| e.status);
        let allowed = match current {
            None => entry.status == RunStatus::Sampling,
            Some(from) => from.can_become(entry.status),
        };
        if !allowed {
            return Err(StoreError::Transition {
                run_id: run_id.to_string(),
                from: current.unwrap_or(RunStatus::Sampling),
                to: entry.status,
            });
        }
        let path = self.run_dir(run_id).join(STATUS);
        let mut file = OpenOptions::new().create(true).append(true).open(&path).map_err(io_err(&path))?;
        let mut line = serde_json::to_vec(entry).expect("status serializes");
        line.push(b'\n');
        file.write_all(&line).map_err(io_err(&path))
    }

    pub fn record(&self, run_id: &str) -> Result<RunRecord, StoreError> {
        let config = self.config(run_id)?;
        let last = self.status_log(run_id)?.pop();
        let dir = self.run_dir(run_id);
        let mut artifacts: Vec<String> = fs::read_dir(&dir)
            .map_err(io_err(&dir))?
            .filter_map(|e| e.ok()?.file_name().into_string().ok())
            .collect();
        artifacts.sort();
        Ok(RunRecord {
            run_id: run_id.to_string(),
            status: last.as_ref().map_or(RunStatus::Sampling, |e| e.status),
            reason: last.and_then(|e| e.reason),
            config,
            artifacts,
        })
    }

    pub fn event_writer(&self, run_id: &str) -> Result<EventWriter, StoreError> {
        let path = self.checked_dir(run_id)?.join(EVENTS);
        let file = OpenOptions::new().create_new(true).write(true).open(&path).map_err(|e| {
            if e.kind() == io::ErrorKind::AlreadyExists {
                StoreError::Exists(EVENTS.to_string())
            } else {
                StoreError::Io { path: path.clone(), source: e }
            }
        })?;
        Ok(EventWriter { path, out: BufWriter::new(file) })
    }
}

/// Line-at-a-time writer for `events.jsonl`; flushes every line so that
/// readers of the file never see a partial record.
pub struct EventWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl EventWriter {
    pub fn append(&mut self, line: &str) -> Result<(), StoreError> {
        let path = &self.path;
        self.out.write_all(line.as_bytes()).map_err(io_err(path))?;
        self.out.write_all(b"\n").map_err(io_err(path))?;
        self.out.flush().map_err(io_err(path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{FeedSource, PlanSpec};

    fn config() -> RunConfig {
        RunConfig {
            feed: FeedSource::Csv { path: "feed.csv".into(), speed: 0.0 },
            plan: PlanSpec::uniform(10.0, 3),
            tree: Default::default(),
            pairs: Default::default(),
            validation: Default::default(),
        }
    }

    #[test]
    fn sequential_ids_and_write_once() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        assert_eq!(store.create_run(&config()).unwrap(), "run-0001");
        assert_eq!(store.create_run(&config()).unwrap(), "run-0002");
        assert_eq!(store.list().unwrap(), vec!["run-0001", "run-0002"]);
        store.write_artifact("run-0001", TREE, b"{}").unwrap();
        assert!(matches!(store.write_artifact("run-0001", TREE, b"{}"), Err(StoreError::Exists(_))));
        assert!(matches!(store.record("run-9999"), Err(StoreError::UnknownRun(_))));
        assert!(!store.exists("../etc"));
        assert_eq!(store.config("run-0002").unwrap(), config());
    }

    #[test]
    fn status_transitions_are_checked() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        let id = store.create_run(&config()).unwrap();
        let st = |status| StatusEntry { status, reason: None };
        assert!(store.append_status(&id, &st(RunStatus::Tracking)).is_err());
        store.append_status(&id, &st(RunStatus::Sampling)).unwrap();
        store.append_status(&id, &st(RunStatus::Classifying)).unwrap();
        assert!(store.append_status(&id, &st(RunStatus::Done)).is_err());
        store
            .append_status(&id, &StatusEntry { status: RunStatus::Failed, reason: Some("boom".into()) })
            .unwrap();
        assert!(store.append_status(&id, &st(RunStatus::Sampling)).is_err());
        let record = store.record(&id).unwrap();
        assert_eq!(record.status, RunStatus::Failed);
        assert_eq!(record.reason.as_deref(), Some("boom"));
        assert_eq!(record.artifacts, vec![CONFIG, STATUS]);
    }
}
