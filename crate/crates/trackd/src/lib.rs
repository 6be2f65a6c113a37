//! Run orchestration for copair: an append-only artifact store, the run
//! pipeline (sample, classify, validate, track) and a live event stream
//! served over HTTP.

pub mod config;
pub mod events;
pub mod run;
pub mod server;
pub mod service;
pub mod store;
pub mod tracking;

pub use config::{FeedSource, PlanSpec, RunConfig};
pub use events::{Event, StreamFilter};
pub use service::{Trackd, TrackdError};
pub use store::{RunRecord, RunStatus, Store};
