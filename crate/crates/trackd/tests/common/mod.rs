#![allow(dead_code)]

use std::path::Path;

use copair::feedgen::{FeedConfig, GroupSpec};
use trackd::{FeedSource, PlanSpec, RunConfig};

/// Four series over samples at t = 0, 1, 2 followed by tracking ticks.
/// A and B rise together (A ends the window at 100), C and D fall together;
/// C and D sit in different sectors.
pub const FOUR_SERIES: &str = "\
timestamp,symbol,sector,price
0,A,Technology,96
0,B,Technology,50
0,C,Financial,80
0,D,Services,30
1,A,Technology,98
1,B,Technology,51
1,C,Financial,78
1,D,Services,29.5
2,A,Technology,100
2,B,Technology,52.2
2,C,Financial,76
2,D,Services,28.6
3,A,Technology,101
3,C,Financial,77
4,B,Technology,52
4,D,Services,29
";

pub fn csv_config(path: &Path, interval: f64, samples: usize) -> RunConfig {
    RunConfig {
        feed: FeedSource::Csv { path: path.to_path_buf(), speed: 0.0 },
        plan: PlanSpec::uniform(interval, samples),
        tree: Default::default(),
        pairs: Default::default(),
        validation: Default::default(),
    }
}

pub fn write_feed(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

pub fn synthetic(seed: u64, steps: usize, samples: usize, interval: f64) -> RunConfig {
    let groups = vec![GroupSpec { size: 2, coupling: 0.0002 }; 5];
    let mut feed = FeedConfig::planted(seed, groups, 30, 0.002, steps);
    feed.dropout_rate = 0.05;
    RunConfig {
        feed: FeedSource::Synthetic { config: feed, speed: 0.0 },
        plan: PlanSpec::uniform(interval, samples),
        tree: Default::default(),
        pairs: Default::default(),
        validation: Default::default(),
    }
}
