//! The daemon's core: submits runs, tracks live ones and answers queries
//! about both live and persisted runs.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::thread;

use copair::feedgen::{Feed, FeedError};
use copair::sampler::{SamplingError, SamplingPlan};

use crate::config::RunConfig;
use crate::run::{RunHandle, Runner};
use crate::store::{self, RunRecord, RunStatus, StatusEntry, Store, StoreError};
use crate::tracking::TrackingSnapshot;

#[derive(Debug, thiserror::Error)]
pub enum TrackdError {
    #[error("invalid run config: {0}")]
    Config(String),
    #[error("feed: {0}")]
    Feed(#[from] FeedError),
    #[error(transparent)]
    Plan(#[from] SamplingError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("unknown run {0}")]
    UnknownRun(String),
    #[error("run {run_id} is {status:?}; no tracking state yet")]
    NotTracking { run_id: String, status: RunStatus },
}

pub struct Trackd {
    store: Store,
    live: Mutex<HashMap<String, Arc<RunHandle>>>,
}

struct Prepared {
    handle: Arc<RunHandle>,
    config: RunConfig,
    plan: SamplingPlan,
    feed: Feed,
}

impl Trackd {
    pub fn new(store: Store) -> Arc<Self> {
        Arc::new(Trackd { store, live: Mutex::new(HashMap::new()) })
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    /// Validates the config, opens the feed and allocates the run. The
    /// persisted config carries the resolved start time.
    fn prepare(&self, mut config: RunConfig) -> Result<Prepared, TrackdError> {
        config.tree.validate().map_err(|e| TrackdError::Config(e.to_string()))?;
        config.pairs.validate().map_err(|e| TrackdError::Config(e.to_string()))?;
        let mut feed = config.feed.open()?;
        let plan = config.plan.resolve(feed.peek_timestamp())?;
        config.plan.start = Some(plan.start);
        let run_id = self.store.create_run(&config)?;
        let handle = RunHandle::new(&run_id);
        self.live.lock().unwrap_or_else(|e| e.into_inner()).insert(run_id, Arc::clone(&handle));
        Ok(Prepared { handle, config, plan, feed })
    }

    fn execute(&self, p: Prepared) -> Result<RunStatus, TrackdError> {
        let id = p.handle.run_id().to_string();
        let result = Runner::new(&self.store, Arc::clone(&p.handle))
            .and_then(|runner| runner.execute(&p.config, &p.plan, p.feed));
        p.handle.finish();
        match result {
            Ok(status) => Ok(status),
            Err(e) => {
                // Best effort: the store itself may be what failed.
                let entry = StatusEntry { status: RunStatus::Failed, reason: Some(e.to_string()) };
                let _ = self.store.append_status(&id, &entry);
                Err(e.into())
            }
        }
    }

    /// Starts a run on a background thread and returns its id.
    pub fn start_run(self: &Arc<Self>, config: RunConfig) -> Result<String, TrackdError> {
        let prepared = self.prepare(config)?;
        let id = prepared.handle.run_id().to_string();
        let this = Arc::clone(self);
        thread::Builder::new()
            .name(format!("trackd-{id}"))
            .spawn(move || {
                if let Err(e) = this.execute(prepared) {
                    eprintln!("trackd: run aborted: {e}");
                }
            })
            .map_err(|e| StoreError::Io { path: self.store.run_dir(&id), source: e })?;
        Ok(id)
    }

    /// Runs to completion on the calling thread.
    pub fn run_blocking(&self, config: RunConfig) -> Result<RunRecord, TrackdError> {
        let prepared = self.prepare(config)?;
        let id = prepared.handle.run_id().to_string();
        self.execute(prepared)?;
        Ok(self.store.record(&id)?)
    }

    /// The live handle, or a finished one over the persisted log.
    pub fn handle(&self, run_id: &str) -> Result<Arc<RunHandle>, TrackdError> {
        if let Some(h) = self.live.lock().unwrap_or_else(|e| e.into_inner()).get(run_id) {
            return Ok(Arc::clone(h));
        }
        if !self.store.exists(run_id) {
            return Err(TrackdError::UnknownRun(run_id.to_string()));
        }
        let record = self.store.record(run_id)?;
        let log = if record.artifacts.iter().any(|a| a == store::EVENTS) {
            self.store.read_text(run_id, store::EVENTS)?
        } else {
            String::new()
        };
        Ok(RunHandle::from_log(run_id, record.status, &log))
    }

    pub fn record(&self, run_id: &str) -> Result<RunRecord, TrackdError> {
        if !self.store.exists(run_id) {
            return Err(TrackdError::UnknownRun(run_id.to_string()));
        }
        Ok(self.store.record(run_id)?)
    }

    pub fn list(&self) -> Result<Vec<RunRecord>, TrackdError> {
        self.store.list()?.iter().map(|id| Ok(self.store.record(id)?)).collect()
    }

    pub fn snapshot(&self, run_id: &str) -> Result<TrackingSnapshot, TrackdError> {
        let handle = self.handle(run_id)?;
        handle
            .snapshot()
            .ok_or_else(|| TrackdError::NotTracking { run_id: run_id.to_string(), status: handle.status() })
    }
}
