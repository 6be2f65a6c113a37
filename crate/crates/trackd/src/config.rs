//! Run configuration as accepted by `trackd run` and `POST /runs`.

use std::path::PathBuf;

use copair::dtree::TreeParams;
use copair::feedgen::{generate_feed, replay_csv, Feed, FeedConfig, FeedError};
use copair::ranking::PairPolicy;
use copair::sampler::{SamplingError, SamplingPlan};
use copair::validation::ValidationOptions;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedSource {
    /// `timestamp,symbol,sector,price` file.
    Csv {
        path: PathBuf,
        /// Feed-seconds per wall-clock second; 0 replays as fast as possible.
        #[serde(default)]
        speed: f64,
    },
    Synthetic {
        config: FeedConfig,
        #[serde(default)]
        speed: f64,
    },
}

impl FeedSource {
    pub fn open(&self) -> Result<Feed, FeedError> {
        match self {
            FeedSource::Csv { path, speed } => replay_csv(path, *speed),
            FeedSource::Synthetic { config, speed } => Ok(generate_feed(config)?.paced(*speed)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSpec {
    /// First sample time; defaults to the feed's first timestamp.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    pub intervals: Vec<f64>,
}

impl PlanSpec {
    pub fn uniform(interval: f64, n_samples: usize) -> Self {
        PlanSpec { start: None, intervals: vec![interval; n_samples.saturating_sub(1)] }
    }

    pub fn resolve(&self, first_tick: Option<f64>) -> Result<SamplingPlan, SamplingError> {
        let start = self
            .start
            .or(first_tick)
            .ok_or_else(|| SamplingError::InvalidPlan("no start time and the feed is empty".into()))?;
        SamplingPlan::new(start, self.intervals.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub feed: FeedSource,
    pub plan: PlanSpec,
    #[serde(default)]
    pub tree: TreeParams,
    #[serde(default)]
    pub pairs: PairPolicy,
    #[serde(default)]
    pub validation: ValidationOptions,
}
