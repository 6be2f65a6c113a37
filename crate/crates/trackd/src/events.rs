//! Event grammar shared by the persisted log, `trackd replay` and the HTTP
//! stream. One JSON object per line, discriminated by `"event"`.

use std::collections::HashSet;

use copair::Sector;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    RunStarted {
        run_id: String,
        n_samples: usize,
        intervals: Vec<f64>,
    },
    SampleTaken {
        /// 1-based, matching the `t1..tn` sample columns.
        index: usize,
        timestamp: f64,
    },
    ClassificationDone {
        n_series: usize,
        n_nodes: usize,
        n_pairs: usize,
    },
    Pair {
        pair_id: usize,
        a: String,
        b: String,
        counter: u32,
        r: Option<f64>,
        sector_a: Sector,
        sector_b: Sector,
    },
    Price {
        symbol: String,
        price: f64,
        pct_since_start: f64,
        timestamp: f64,
    },
    RunFailed {
        reason: String,
    },
    /// Stream-level error (for example an unknown run id); never persisted.
    Error {
        message: String,
    },
}

impl Event {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("events serialize")
    }

    pub fn from_line(line: &str) -> Result<Event, serde_json::Error> {
        serde_json::from_str(line)
    }
}

/// Stateful per-subscriber filter. With `same_sector_only`, cross-sector pair
/// events are dropped, and so are price events for symbols that appear in no
/// same-sector pair. Pair events always precede price events in a run log,
/// so the symbol set is complete by the time prices arrive.
#[derive(Debug, Clone, Default)]
pub struct StreamFilter {
    same_sector_only: bool,
    kept: HashSet<String>,
}

impl StreamFilter {
    pub fn new(same_sector_only: bool) -> Self {
        StreamFilter { same_sector_only, kept: HashSet::new() }
    }

    pub fn admit(&mut self, event: &Event) -> bool {
        if !self.same_sector_only {
            return true;
        }
        match event {
            Event::Pair { a, b, sector_a, sector_b, .. } => {
                if sector_a != sector_b {
                    return false;
                }
                self.kept.insert(a.clone());
                self.kept.insert(b.clone());
                true
            }
            Event::Price { symbol, .. } => self.kept.contains(symbol),
            _ => true,
        }
    }

    /// Filters serialized lines; lines that do not parse are passed through.
    pub fn admit_line(&mut self, line: &str) -> bool {
        if !self.same_sector_only {
            return true;
        }
        match Event::from_line(line) {
            Ok(event) => self.admit(&event),
            Err(_) => true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_format() {
        let e = Event::SampleTaken { index: 1, timestamp: 0.0 };
        assert_eq!(e.to_line(), r#"{"event":"sample_taken","index":1,"timestamp":0.0}"#);
        let p = Event::Pair {
            pair_id: 1,
            a: "AAA".into(),
            b: "BBB".into(),
            counter: 3,
            r: Some(0.5),
            sector_a: Sector::ConsumerGoods,
            sector_b: Sector::ConsumerGoods,
        };
        assert_eq!(
            p.to_line(),
            r#"{"event":"pair","pair_id":1,"a":"AAA","b":"BBB","counter":3,"r":0.5,"sector_a":"Consumer Goods","sector_b":"Consumer Goods"}"#
        );
        assert_eq!(Event::from_line(&p.to_line()).unwrap(), p);
    }

    #[test]
    fn same_sector_filter() {
        let pair = |a: &str, b: &str, sb| Event::Pair {
            pair_id: 1,
            a: a.into(),
            b: b.into(),
            counter: 2,
            r: None,
            sector_a: Sector::Financial,
            sector_b: sb,
        };
        let price = |s: &str| Event::Price { symbol: s.into(), price: 1.0, pct_since_start: 0.0, timestamp: 0.0 };
        let mut f = StreamFilter::new(true);
        assert!(f.admit(&pair("A", "B", Sector::Financial)));
        assert!(!f.admit(&pair("C", "D", Sector::Services)));
        assert!(f.admit(&price("A")));
        assert!(!f.admit(&price("C")));
        assert!(f.admit(&Event::RunFailed { reason: "x".into() }));
        let mut all = StreamFilter::new(false);
        assert!(all.admit(&pair("C", "D", Sector::Services)) && all.admit(&price("C")));
    }
}
