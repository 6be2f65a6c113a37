//! Run execution: sampling, classification, validation and tracking, with
//! every event written to `events.jsonl` and fanned out to live subscribers.

use std::collections::{BTreeMap, VecDeque};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};

use copair::feedgen::Feed;
use copair::pipeline::{classify, ClassifyError};
use copair::sampler::{Sampler, SamplingError, SamplingPlan};
use copair::validation::validate_pairs;
use tokio::sync::watch;

use crate::config::RunConfig;
use crate::events::{Event, StreamFilter};
use crate::store::{self, EventWriter, RunStatus, StatusEntry, Store, StoreError};
use crate::tracking::{TrackedPair, TrackingSession, TrackingSnapshot};

struct LiveState {
    lines: Vec<Arc<str>>,
    status: RunStatus,
    session: Option<TrackingSession>,
    finished: bool,
}

/// In-memory view of one run. The single ingesting thread appends; any
/// number of readers copy out under a short lock.
pub struct RunHandle {
    run_id: String,
    state: Mutex<LiveState>,
    cond: Condvar,
    notify: watch::Sender<usize>,
}

impl RunHandle {
    pub fn new(run_id: &str) -> Arc<Self> {
        Arc::new(RunHandle {
            run_id: run_id.to_string(),
            state: Mutex::new(LiveState { lines: vec![], status: RunStatus::Sampling, session: None, finished: false }),
            cond: Condvar::new(),
            notify: watch::channel(0).0,
        })
    }

    /// A finished handle over a persisted log.
    pub fn from_log(run_id: &str, status: RunStatus, log: &str) -> Arc<Self> {
        let lines: Vec<Arc<str>> = log.lines().filter(|l| !l.is_empty()).map(Arc::from).collect();
        let events: Vec<Event> = lines.iter().filter_map(|l| Event::from_line(l).ok()).collect();
        let handle = RunHandle::new(run_id);
        {
            let mut state = handle.lock();
            state.session = TrackingSession::from_events(&events);
            state.lines = lines;
            state.status = status;
            state.finished = true;
        }
        handle
    }

    fn lock(&self) -> MutexGuard<'_, LiveState> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn wake(&self, len: usize) {
        self.cond.notify_all();
        self.notify.send_replace(len);
    }

    pub fn run_id(&self) -> &str {
        &self.run_id
    }

    pub fn status(&self) -> RunStatus {
        self.lock().status
    }

    pub fn is_finished(&self) -> bool {
        self.lock().finished
    }

    fn push(&self, line: String, update: impl FnOnce(&mut LiveState)) {
        let len = {
            let mut state = self.lock();
            update(&mut state);
            state.lines.push(Arc::from(line));
            state.lines.len()
        };
        self.wake(len);
    }

    fn set_status(&self, status: RunStatus) {
        self.lock().status = status;
    }

    pub(crate) fn finish(&self) {
        let len = {
            let mut state = self.lock();
            state.finished = true;
            state.lines.len()
        };
        self.wake(len);
    }

    /// Lines from `from` onwards, and whether the log is complete.
    pub fn lines_from(&self, from: usize) -> (Vec<Arc<str>>, bool) {
        let state = self.lock();
        (state.lines.get(from..).map(<[_]>::to_vec).unwrap_or_default(), state.finished)
    }

    /// Blocks until the run ends and returns the full log.
    pub fn wait(&self) -> Vec<Arc<str>> {
        let mut state = self.lock();
        while !state.finished {
            state = self.cond.wait(state).unwrap_or_else(|e| e.into_inner());
        }
        state.lines.clone()
    }

    pub fn snapshot(&self) -> Option<TrackingSnapshot> {
        let state = self.lock();
        state.session.as_ref().map(|s| s.snapshot(&self.run_id, state.status))
    }

    /// Blocking iterator over the (filtered) event lines, from the start.
    pub fn subscribe(self: &Arc<Self>, same_sector_only: bool) -> Subscription {
        Subscription { handle: Arc::clone(self), next: 0, filter: StreamFilter::new(same_sector_only) }
    }

    /// Async counterpart of [`RunHandle::subscribe`].
    pub fn stream(self: &Arc<Self>, same_sector_only: bool) -> impl futures::Stream<Item = Arc<str>> + Send + 'static {
        let rx = self.notify.subscribe();
        let state = (Arc::clone(self), rx, 0usize, StreamFilter::new(same_sector_only), VecDeque::<Arc<str>>::new());
        futures::stream::unfold(state, |(handle, mut rx, mut next, mut filter, mut pending)| async move {
            loop {
                if let Some(line) = pending.pop_front() {
                    return Some((line, (handle, rx, next, filter, pending)));
                }
                let (batch, finished) = handle.lines_from(next);
                next += batch.len();
                pending.extend(batch.into_iter().filter(|l| filter.admit_line(l)));
                if !pending.is_empty() {
                    continue;
                }
                if finished || rx.changed().await.is_err() {
                    return None;
                }
            }
        })
    }
}

pub struct Subscription {
    handle: Arc<RunHandle>,
    next: usize,
    filter: StreamFilter,
}

impl Iterator for Subscription {
    type Item = Arc<str>;

    fn next(&mut self) -> Option<Arc<str>> {
        loop {
            let line = {
                let mut state = self.handle.lock();
                while self.next >= state.lines.len() && !state.finished {
                    state = self.handle.cond.wait(state).unwrap_or_else(|e| e.into_inner());
                }
                state.lines.get(self.next).cloned()
            }?;
            self.next += 1;
            if self.filter.admit_line(&line) {
                return Some(line);
            }
        }
    }
}

/// Drives one run to a terminal state. Store errors abort the run; pipeline
/// errors are recorded as a `run_failed` event and a `failed` status.
pub struct Runner<'a> {
    store: &'a Store,
    handle: Arc<RunHandle>,
    events: EventWriter,
}

impl<'a> Runner<'a> {
    pub fn new(store: &'a Store, handle: Arc<RunHandle>) -> Result<Self, StoreError> {
        let events = store.event_writer(handle.run_id())?;
        Ok(Runner { store, handle, events })
    }

    fn id(&self) -> &str {
        self.handle.run_id()
    }

    fn emit(&mut self, event: &Event, update: impl FnOnce(&mut LiveState)) -> Result<(), StoreError> {
        let line = event.to_line();
        self.events.append(&line)?;
        self.handle.push(line, update);
        Ok(())
    }

    fn status(&mut self, status: RunStatus, reason: Option<String>) -> Result<(), StoreError> {
        self.store.append_status(self.id(), &StatusEntry { status, reason })?;
        self.handle.set_status(status);
        Ok(())
    }

    fn fail(&mut self, reason: String) -> Result<RunStatus, StoreError> {
        self.emit(&Event::RunFailed { reason: reason.clone() }, |_| {})?;
        self.status(RunStatus::Failed, Some(reason))?;
        Ok(RunStatus::Failed)
    }

    fn artifact(&self, name: &str, bytes: &[u8]) -> Result<(), StoreError> {
        self.store.write_artifact(self.id(), name, bytes)
    }

    pub fn execute(mut self, config: &RunConfig, plan: &SamplingPlan, feed: Feed) -> Result<RunStatus, StoreError> {
        let result = self.execute_inner(config, plan, feed);
        self.handle.finish();
        result
    }

    fn execute_inner(&mut self, config: &RunConfig, plan: &SamplingPlan, mut feed: Feed) -> Result<RunStatus, StoreError> {
        self.status(RunStatus::Sampling, None)?;
        let started = Event::RunStarted {
            run_id: self.id().to_string(),
            n_samples: plan.n_samples(),
            intervals: plan.intervals.clone(),
        };
        self.emit(&started, |_| {})?;

        // Sampling: ticks after the final sample stay in the feed for tracking.
        let mut sampler = Sampler::new(feed.meta(), plan);
        while !sampler.is_complete() {
            let taken = match feed.peek_timestamp() {
                Some(ts) if ts > sampler.end() => sampler.advance_to(ts),
                _ => match feed.next() {
                    Some(Ok(tick)) => match sampler.push(&tick) {
                        Ok(taken) => taken,
                        Err(e) => return self.fail(e.to_string()),
                    },
                    Some(Err(e)) => return self.fail(e.to_string()),
                    None => {
                        let taken = sampler.finish();
                        self.samples_taken(&sampler, &taken)?;
                        break;
                    }
                },
            };
            self.samples_taken(&sampler, &taken)?;
        }
        let matrix = sampler.matrix();
        let mut csv = Vec::new();
        matrix.write_csv(&mut csv).expect("in-memory csv");
        self.artifact(store::SAMPLES, &csv)?;
        if !sampler.is_complete() {
            let partial = SamplingError::PartialWindow { collected: matrix, expected: plan.n_samples() };
            return self.fail(partial.to_string());
        }

        self.status(RunStatus::Classifying, None)?;
        let class = match classify(&matrix, &config.tree, &config.pairs) {
            Ok(c) => c,
            Err(e) => {
                if let ClassifyError::Sampling(SamplingError::EmptyCohort { dropped }) = &e {
                    self.artifact(store::DROPPED, &jsonl(dropped))?;
                }
                return self.fail(e.to_string());
            }
        };
        self.artifact(store::DROPPED, &jsonl(&class.dropped))?;
        let mut dataset = Vec::new();
        class.dataset.write_csv(&mut dataset).expect("in-memory csv");
        self.artifact(store::DATASET, &dataset)?;
        let mut tree = serde_json::to_vec_pretty(&class.tree.export()).expect("tree serializes");
        tree.push(b'\n');
        self.artifact(store::TREE, &tree)?;
        let report = match validate_pairs(&class.pairs, &class.matrix, config.validation) {
            Ok(r) => r,
            Err(e) => return self.fail(e.to_string()),
        };
        let mut report_bytes = Vec::new();
        report.write_jsonl(&mut report_bytes).expect("in-memory jsonl");
        self.artifact(store::REPORT, &report_bytes)?;

        let done = Event::ClassificationDone {
            n_series: class.matrix.n_series(),
            n_nodes: class.tree.nodes().len(),
            n_pairs: class.pairs.len(),
        };
        self.emit(&done, |_| {})?;
        let r_of: BTreeMap<usize, Option<f64>> = report.entries.iter().map(|e| (e.pair.pair_id, e.r)).collect();
        let mut tracked = Vec::new();
        for p in &class.pairs.pairs {
            let r = r_of.get(&p.pair_id).copied().flatten();
            tracked.push(TrackedPair {
                pair_id: p.pair_id,
                a: p.a.clone(),
                b: p.b.clone(),
                counter: p.counter,
                r,
                same_sector: p.same_sector,
            });
            let event = Event::Pair {
                pair_id: p.pair_id,
                a: p.a.clone(),
                b: p.b.clone(),
                counter: p.counter,
                r,
                sector_a: p.sector_a,
                sector_b: p.sector_b,
            };
            self.emit(&event, |_| {})?;
        }

        // Tracking: baselines are the final sampled prices.
        let last = class.matrix.n_samples() - 1;
        let mut baselines = BTreeMap::new();
        for p in &class.pairs.pairs {
            for (symbol, sector) in [(&p.a, p.sector_a), (&p.b, p.sector_b)] {
                let row = class.matrix.row_of(symbol).expect("paired symbols survive filtering");
                let price = class.matrix.values[row][last].expect("surviving rows are complete");
                baselines.insert(symbol.clone(), (sector, price));
            }
        }
        let mut session = TrackingSession::new(
            plan.end(),
            tracked,
            baselines.into_iter().map(|(s, (sector, price))| (s, sector, price)),
        );
        self.status(RunStatus::Tracking, None)?;
        let initial = session.clone();
        let opening = session.initial_events();
        self.handle.lock().session = Some(initial);
        for event in &opening {
            self.emit(event, |_| {})?;
        }
        for tick in feed.by_ref() {
            let tick = match tick {
                Ok(t) => t,
                Err(e) => return self.fail(e.to_string()),
            };
            if let Some(event) = session.apply(&tick) {
                self.emit(&event, |state| {
                    if let Some(live) = state.session.as_mut() {
                        live.apply(&tick);
                    }
                })?;
            }
        }
        self.status(RunStatus::Done, None)?;
        Ok(RunStatus::Done)
    }

    fn samples_taken(&mut self, sampler: &Sampler, taken: &[usize]) -> Result<(), StoreError> {
        for &j in taken {
            self.emit(&Event::SampleTaken { index: j + 1, timestamp: sampler.sample_time(j) }, |_| {})?;
        }
        Ok(())
    }
}

fn jsonl<T: serde::Serialize>(items: &[T]) -> Vec<u8> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item).expect("serializes");
        out.push(b'\n');
    }
    out
}
