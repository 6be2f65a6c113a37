//! Live state of the paired symbols after classification.
//!
//! Each tracked symbol's baseline is its price at the final sample time, so
//! `pct_since_start` starts at 0 for every symbol and then follows the
//! remaining ticks: `(price / baseline - 1) * 100`.

use std::collections::BTreeMap;

use copair::feedgen::Tick;
use copair::Sector;
use serde::{Deserialize, Serialize};

use crate::events::Event;
use crate::store::RunStatus;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolState {
    pub symbol: String,
    pub sector: Sector,
    pub baseline: f64,
    pub price: f64,
    pub pct_since_start: f64,
    /// Time of the latest price applied.
    pub timestamp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackedPair {
    pub pair_id: usize,
    pub a: String,
    pub b: String,
    pub counter: u32,
    pub r: Option<f64>,
    pub same_sector: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingSnapshot {
    pub run_id: String,
    pub status: RunStatus,
    /// Tracking start: the final sample time.
    pub start: f64,
    pub pairs: Vec<TrackedPair>,
    /// Sorted by symbol.
    pub symbols: Vec<SymbolState>,
}

pub fn pct_change(baseline: f64, price: f64) -> f64 {
    (price / baseline - 1.0) * 100.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingSession {
    start: f64,
    pairs: Vec<TrackedPair>,
    states: BTreeMap<String, SymbolState>,
}

impl TrackingSession {
    /// `baselines` lists every tracked symbol with its sector and last sampled price.
    pub fn new(start: f64, pairs: Vec<TrackedPair>, baselines: impl IntoIterator<Item = (String, Sector, f64)>) -> Self {
        let states = baselines
            .into_iter()
            .map(|(symbol, sector, baseline)| {
                let state = SymbolState {
                    symbol: symbol.clone(),
                    sector,
                    baseline,
                    price: baseline,
                    pct_since_start: 0.0,
                    timestamp: start,
                };
                (symbol, state)
            })
            .collect();
        TrackingSession { start, pairs, states }
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn tracks(&self, symbol: &str) -> bool {
        self.states.contains_key(symbol)
    }

    /// One price event per tracked symbol at the baseline, in symbol order.
    pub fn initial_events(&self) -> Vec<Event> {
        self.states
            .values()
            .map(|s| Event::Price {
                symbol: s.symbol.clone(),
                price: s.baseline,
                pct_since_start: 0.0,
                timestamp: self.start,
            })
            .collect()
    }

    /// Applies a tick for a tracked symbol and returns its price event.
    pub fn apply(&mut self, tick: &Tick) -> Option<Event> {
        let state = self.states.get_mut(&tick.symbol)?;
        state.price = tick.price;
        state.pct_since_start = pct_change(state.baseline, tick.price);
        state.timestamp = tick.timestamp;
        Some(Event::Price {
            symbol: state.symbol.clone(),
            price: state.price,
            pct_since_start: state.pct_since_start,
            timestamp: state.timestamp,
        })
    }

    pub fn snapshot(&self, run_id: &str, status: RunStatus) -> TrackingSnapshot {
        TrackingSnapshot {
            run_id: run_id.to_string(),
            status,
            start: self.start,
            pairs: self.pairs.clone(),
            symbols: self.states.values().cloned().collect(),
        }
    }

    /// Rebuilds the session from a persisted event log. Returns `None` when
    /// the log never got past classification.
    pub fn from_events<'a>(events: impl IntoIterator<Item = &'a Event>) -> Option<Self> {
        let mut start = None;
        let mut classified = false;
        let mut pairs = Vec::new();
        let mut sectors = BTreeMap::new();
        let mut states: BTreeMap<String, SymbolState> = BTreeMap::new();
        for event in events {
            match event {
                Event::SampleTaken { timestamp, .. } => start = Some(*timestamp),
                Event::ClassificationDone { .. } => classified = true,
                Event::Pair { pair_id, a, b, counter, r, sector_a, sector_b } => {
                    sectors.insert(a.clone(), *sector_a);
                    sectors.insert(b.clone(), *sector_b);
                    pairs.push(TrackedPair {
                        pair_id: *pair_id,
                        a: a.clone(),
                        b: b.clone(),
                        counter: *counter,
                        r: *r,
                        same_sector: sector_a == sector_b,
                    });
                }
                Event::Price { symbol, price, pct_since_start, timestamp } => {
                    let sector = *sectors.get(symbol)?;
                    let state = states.entry(symbol.clone()).or_insert_with(|| SymbolState {
                        symbol: symbol.clone(),
                        sector,
                        baseline: *price,
                        price: *price,
                        pct_since_start: 0.0,
                        timestamp: *timestamp,
                    });
                    state.price = *price;
                    state.pct_since_start = *pct_since_start;
                    state.timestamp = *timestamp;
                }
                _ => {}
            }
        }
        if !classified {
            return None;
        }
        Some(TrackingSession { start: start?, pairs, states })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tick(symbol: &str, timestamp: f64, price: f64) -> Tick {
        Tick { symbol: symbol.into(), timestamp, price }
    }

    #[test]
    fn pct_follows_ticks() {
        let mut s = TrackingSession::new(
            10.0,
            vec![],
            [("A".to_string(), Sector::Financial, 100.0), ("B".to_string(), Sector::Financial, 50.0)],
        );
        assert_eq!(s.initial_events().len(), 2);
        let e = s.apply(&tick("A", 11.0, 101.0)).unwrap();
        let Event::Price { pct_since_start, .. } = e else { panic!() };
        assert!((pct_since_start - 1.0).abs() < 1e-12);
        assert!(s.apply(&tick("Z", 11.0, 1.0)).is_none());
        let snap = s.snapshot("run-0001", RunStatus::Tracking);
        assert_eq!(snap.symbols[0].price, 101.0);
        assert_eq!(snap.symbols[1].pct_since_start, 0.0);
    }

    #[test]
    fn rebuild_from_log_matches_live_state() {
        let pair = TrackedPair { pair_id: 1, a: "A".into(), b: "B".into(), counter: 2, r: Some(0.9), same_sector: true };
        let mut live = TrackingSession::new(
            10.0,
            vec![pair],
            [("A".to_string(), Sector::Financial, 100.0), ("B".to_string(), Sector::Financial, 50.0)],
        );
        let mut log = vec![
            Event::SampleTaken { index: 2, timestamp: 10.0 },
            Event::ClassificationDone { n_series: 2, n_nodes: 1, n_pairs: 1 },
            Event::Pair {
                pair_id: 1,
                a: "A".into(),
                b: "B".into(),
                counter: 2,
                r: Some(0.9),
                sector_a: Sector::Financial,
                sector_b: Sector::Financial,
            },
        ];
        log.extend(live.initial_events());
        for t in [tick("A", 11.0, 99.0), tick("B", 12.0, 52.5), tick("A", 13.0, 103.0)] {
            log.push(live.apply(&t).unwrap());
        }
        assert_eq!(TrackingSession::from_events(&log), Some(live));
        assert_eq!(TrackingSession::from_events(&log[..1]), None);
        assert!(TrackingSession::from_events(&log[..2]).is_some());
    }
}
