//! Snapshot sampling of many concurrent series.
//!
//! At each sample time the most recent tick price at or before that time is
//! recorded (no interpolation); a series that has not ticked yet is missing.

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::feedgen::{Feed, FeedError, SeriesMeta, Tick};
use crate::sector::Sector;

/// Marker in the symbol column of the sample CSV row that carries the
/// sample timestamps.
pub const TIMESTAMP_ROW: &str = "@timestamp";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    /// Time of the first sample.
    pub start: f64,
    /// Gaps between consecutive samples; `n_samples = intervals.len() + 1`.
    pub intervals: Vec<f64>,
}

impl SamplingPlan {
    pub fn new(start: f64, intervals: Vec<f64>) -> Result<Self, SamplingError> {
        if intervals.is_empty() {
            return Err(SamplingError::InvalidPlan("at least two samples are required".into()));
        }
        if let Some(bad) = intervals.iter().find(|&&d| !(d > 0.0 && d.is_finite())) {
            return Err(SamplingError::InvalidPlan(format!("interval {bad} is not positive")));
        }
        if !start.is_finite() {
            return Err(SamplingError::InvalidPlan("start must be finite".into()));
        }
        Ok(SamplingPlan { start, intervals })
    }

    pub fn uniform(start: f64, interval: f64, n_samples: usize) -> Result<Self, SamplingError> {
        if n_samples < 2 {
            return Err(SamplingError::InvalidPlan(format!("n_samples = {n_samples}, need at least 2")));
        }
        SamplingPlan::new(start, vec![interval; n_samples - 1])
    }

    pub fn n_samples(&self) -> usize {
        self.intervals.len() + 1
    }

    pub fn sample_times(&self) -> Vec<f64> {
        let mut t = self.start;
        let mut times = Vec::with_capacity(self.n_samples());
        times.push(t);
        for d in &self.intervals {
            t += d;
            times.push(t);
        }
        times
    }

    pub fn end(&self) -> f64 {
        *self.sample_times().last().expect("plan has samples")
    }
}

/// m series by n samples; `None` marks a missing cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMatrix {
    pub symbols: Vec<String>,
    pub sectors: Vec<Sector>,
    pub timestamps: Vec<f64>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl SampleMatrix {
    pub fn n_series(&self) -> usize {
        self.symbols.len()
    }

    pub fn n_samples(&self) -> usize {
        self.timestamps.len()
    }

    pub fn row_of(&self, symbol: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == symbol)
    }

    /// Present values of a row; `None` if any cell is missing.
    pub fn complete_row(&self, i: usize) -> Option<Vec<f64>> {
        self.values[i].iter().copied().collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["symbol".to_string(), "sector".to_string()];
        header.extend((1..=self.n_samples()).map(|j| format!("t{j}")));
        w.write_record(&header)?;
        let mut ts_row = vec![TIMESTAMP_ROW.to_string(), String::new()];
        ts_row.extend(self.timestamps.iter().map(|t| t.to_string()));
        w.write_record(&ts_row)?;
        for (i, symbol) in self.symbols.iter().enumerate() {
            let mut row = vec![symbol.clone(), self.sectors[i].name().to_string()];
            row.extend(self.values[i].iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, SamplingError> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header = reader.headers().map_err(|e| SamplingError::Format(e.to_string()))?.clone();
        let n = header.len().saturating_sub(2);
        if header.get(0) != Some("symbol") || header.get(1) != Some("sector") || n < 2 {
            return Err(SamplingError::Format("expected header symbol,sector,t1..tn with n >= 2".into()));
        }
        let mut matrix = SampleMatrix { symbols: vec![], sectors: vec![], timestamps: vec![], values: vec![] };
        for record in reader.records() {
            let record = record.map_err(|e| SamplingError::Format(e.to_string()))?;
            let line = record.position().map_or(0, |p| p.line());
            let bad = |what: &str| SamplingError::Format(format!("line {line}: {what}"));
            if record.len() != n + 2 {
                return Err(bad("wrong number of fields"));
            }
            let cells: Vec<Option<f64>> = record
                .iter()
                .skip(2)
                .map(|c| {
                    if c.is_empty() {
                        Ok(None)
                    } else {
                        c.parse::<f64>().map(Some).map_err(|_| bad(&format!("bad number {c:?}")))
                    }
                })
                .collect::<Result<_, _>>()?;
            if &record[0] == TIMESTAMP_ROW {
                matrix.timestamps = cells
                    .into_iter()
                    .map(|c| c.ok_or_else(|| bad("missing timestamp")))
                    .collect::<Result<_, _>>()?;
                continue;
            }
            if cells.iter().flatten().any(|&v| !(v > 0.0)) {
                return Err(bad("sample values must be positive"));
            }
            matrix.symbols.push(record[0].to_string());
            matrix.sectors.push(record[1].parse().map_err(|e: crate::sector::UnknownSector| bad(&e.to_string()))?);
            matrix.values.push(cells);
        }
        if matrix.timestamps.len() != n {
            return Err(SamplingError::Format(format!("missing {TIMESTAMP_ROW} row")));
        }
        Ok(matrix)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DropReason {
    /// At least one sample had no prior tick.
    Missing { cells: usize },
    /// Zero variance across the window.
    Inactive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dropped {
    pub symbol: String,
    pub reason: DropReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Filtered {
    pub matrix: SampleMatrix,
    pub dropped: Vec<Dropped>,
}

#[derive(Debug, thiserror::Error)]
pub enum SamplingError {
    #[error("invalid sampling plan: {0}")]
    InvalidPlan(String),
    #[error("feed ended after {} of {expected} samples", .collected.n_samples())]
    PartialWindow { collected: SampleMatrix, expected: usize },
    #[error("tick for unknown symbol {0}")]
    UnknownSymbol(String),
    #[error("tick for {symbol} at {timestamp} arrives after sample time {sampled}")]
    OutOfOrder { symbol: String, timestamp: f64, sampled: f64 },
    #[error("every series was filtered out ({} dropped)", .dropped.len())]
    EmptyCohort { dropped: Vec<Dropped> },
    #[error("sample matrix format: {0}")]
    Format(String),
    #[error(transparent)]
    Feed(#[from] FeedError),
}

/// Incremental sampler; feed it ticks in time order.
pub struct Sampler {
    symbols: Vec<String>,
    sectors: Vec<Sector>,
    index: HashMap<String, usize>,
    times: Vec<f64>,
    last_price: Vec<Option<f64>>,
    columns: Vec<Vec<Option<f64>>>,
    latest_ts: Option<f64>,
}

impl Sampler {
    pub fn new(meta: &[SeriesMeta], plan: &SamplingPlan) -> Self {
        Sampler {
            symbols: meta.iter().map(|m| m.symbol.clone()).collect(),
            sectors: meta.iter().map(|m| m.sector).collect(),
            index: meta.iter().enumerate().map(|(i, m)| (m.symbol.clone(), i)).collect(),
            times: plan.sample_times(),
            last_price: vec![None; meta.len()],
            columns: Vec::with_capacity(plan.n_samples()),
            latest_ts: None,
        }
    }

    pub fn samples_taken(&self) -> usize {
        self.columns.len()
    }

    pub fn is_complete(&self) -> bool {
        self.columns.len() == self.times.len()
    }

    pub fn sample_time(&self, j: usize) -> f64 {
        self.times[j]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().expect("plan has samples")
    }

    /// Takes every pending sample strictly before `ts`; returns the indices taken.
    pub fn advance_to(&mut self, ts: f64) -> Vec<usize> {
        let mut taken = Vec::new();
        while !self.is_complete() && self.times[self.columns.len()] < ts {
            taken.push(self.columns.len());
            self.columns.push(self.last_price.clone());
        }
        taken
    }

    /// Records a tick, first taking any samples that precede it. Ticks after
    /// the final sample are ignored.
    pub fn push(&mut self, tick: &Tick) -> Result<Vec<usize>, SamplingError> {
        let i = *self
            .index
            .get(&tick.symbol)
            .ok_or_else(|| SamplingError::UnknownSymbol(tick.symbol.clone()))?;
        if let Some(j) = self.columns.len().checked_sub(1) {
            if tick.timestamp <= self.times[j] && !self.is_complete() {
                return Err(SamplingError::OutOfOrder {
                    symbol: tick.symbol.clone(),
                    timestamp: tick.timestamp,
                    sampled: self.times[j],
                });
            }
        }
        let taken = self.advance_to(tick.timestamp);
        if !self.is_complete() {
            self.last_price[i] = Some(tick.price);
            self.latest_ts = Some(self.latest_ts.map_or(tick.timestamp, |t| t.max(tick.timestamp)));
        }
        Ok(taken)
    }

    /// Called when the feed is exhausted: takes samples up to the last seen tick.
    pub fn finish(&mut self) -> Vec<usize> {
        let mut taken = Vec::new();
        if let Some(ts) = self.latest_ts {
            while !self.is_complete() && self.times[self.columns.len()] <= ts {
                taken.push(self.columns.len());
                self.columns.push(self.last_price.clone());
            }
        }
        taken
    }

    /// Matrix of the samples taken so far.
    pub fn matrix(&self) -> SampleMatrix {
        let taken = self.columns.len();
        SampleMatrix {
            symbols: self.symbols.clone(),
            sectors: self.sectors.clone(),
            timestamps: self.times[..taken].to_vec(),
            values: (0..self.symbols.len())
                .map(|i| self.columns.iter().map(|col| col[i]).collect())
                .collect(),
        }
    }
}

/// Samples `feed` according to `plan`, leaving any ticks after the final
/// sample time unconsumed in the feed.
pub fn run_sampling(feed: &mut Feed, plan: &SamplingPlan) -> Result<SampleMatrix, SamplingError> {
    let mut sampler = Sampler::new(feed.meta(), plan);
    while !sampler.is_complete() {
        if let Some(ts) = feed.peek_timestamp() {
            if ts > sampler.end() {
                sampler.advance_to(ts);
                break;
            }
        }
        match feed.next() {
            Some(tick) => {
                sampler.push(&tick?)?;
            }
            None => {
                sampler.finish();
                break;
            }
        }
    }
    if sampler.is_complete() {
        Ok(sampler.matrix())
    } else {
        Err(SamplingError::PartialWindow { collected: sampler.matrix(), expected: plan.n_samples() })
    }
}

/// Drops series with missing cells or zero variance over the window.
pub fn filter_incomplete(matrix: &SampleMatrix) -> Result<Filtered, SamplingError> {
    let mut kept = SampleMatrix {
        symbols: vec![],
        sectors: vec![],
        timestamps: matrix.timestamps.clone(),
        values: vec![],
    };
    let mut dropped = Vec::new();
    for (i, row) in matrix.values.iter().enumerate() {
        let missing = row.iter().filter(|v| v.is_none()).count();
        let reason = if missing > 0 {
            Some(DropReason::Missing { cells: missing })
        } else if row.windows(2).all(|w| w[0] == w[1]) {
            Some(DropReason::Inactive)
        } else {
            None
        };
        match reason {
            Some(reason) => dropped.push(Dropped { symbol: matrix.symbols[i].clone(), reason }),
            None => {
                kept.symbols.push(matrix.symbols[i].clone());
                kept.sectors.push(matrix.sectors[i]);
                kept.values.push(row.clone());
            }
        }
    }
    if kept.symbols.is_empty() {
        return Err(SamplingError::EmptyCohort { dropped });
    }
    Ok(Filtered { matrix: kept, dropped })
}
