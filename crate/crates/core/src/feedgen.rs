//! Tick sources: a seeded generator of correlated random walks and a CSV
//! replay reader.
//!
//! Grouped series share a per-step "group move" drawn with the base
//! volatility and add their own N(0, coupling) noise:
//! `price' = price * (1 + group_move + own_noise)`. Independent series use
//! N(0, base_volatility) alone. Ground-truth group ids live in
//! [`SeriesMeta::group_id`] and are only meant for evaluation code.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::iter::Peekable;
use std::path::Path;
use std::thread;
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::sector::Sector;

pub const CSV_HEADER: [&str; 4] = ["timestamp", "symbol", "sector", "price"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub symbol: String,
    pub sector: Sector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_id: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tick {
    pub symbol: String,
    pub timestamp: f64,
    pub price: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub size: usize,
    /// Relative per-step std-dev of each member's own noise.
    pub coupling: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedConfig {
    pub seed: u64,
    pub n_series: usize,
    #[serde(default)]
    pub groups: Vec<GroupSpec>,
    #[serde(default = "default_tick_period")]
    pub tick_period: f64,
    pub base_volatility: f64,
    #[serde(default)]
    pub dropout_rate: f64,
    /// Number of tick periods emitted per series.
    pub steps: usize,
    #[serde(default)]
    pub start: f64,
}

fn default_tick_period() -> f64 {
    1.0
}

impl FeedConfig {
    /// `n_groups` pairs (or larger groups) followed by independent series.
    pub fn planted(
        seed: u64,
        groups: Vec<GroupSpec>,
        n_independent: usize,
        base_volatility: f64,
        steps: usize,
    ) -> Self {
        let n_series = groups.iter().map(|g| g.size).sum::<usize>() + n_independent;
        FeedConfig {
            seed,
            n_series,
            groups,
            tick_period: 1.0,
            base_volatility,
            dropout_rate: 0.0,
            steps,
            start: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), FeedError> {
        let bad = |field: &'static str, message: String| Err(FeedError::Config { field, message });
        if self.n_series == 0 {
            return bad("n_series", "must be positive".into());
        }
        let grouped: usize = self.groups.iter().map(|g| g.size).sum();
        if grouped > self.n_series {
            return bad(
                "groups",
                format!("group sizes sum to {grouped}, more than n_series = {}", self.n_series),
            );
        }
        if let Some(g) = self.groups.iter().find(|g| g.size == 0) {
            return bad("groups", format!("empty group (coupling {})", g.coupling));
        }
        if let Some(g) = self.groups.iter().find(|g| !(g.coupling >= 0.0 && g.coupling.is_finite())) {
            return bad("groups.coupling", format!("{} is not a finite value >= 0", g.coupling));
        }
        if !(self.base_volatility >= 0.0 && self.base_volatility.is_finite()) {
            return bad("base_volatility", format!("{} is not a finite value >= 0", self.base_volatility));
        }
        if !(self.dropout_rate >= 0.0 && self.dropout_rate < 1.0) {
            return bad("dropout_rate", format!("{} is outside [0, 1)", self.dropout_rate));
        }
        if !(self.tick_period > 0.0 && self.tick_period.is_finite()) {
            return bad("tick_period", format!("{} is not a positive finite value", self.tick_period));
        }
        if !self.start.is_finite() {
            return bad("start", "must be finite".into());
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FeedError {
    #[error("invalid feed config field `{field}`: {message}")]
    Config { field: &'static str, message: String },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: timestamp {timestamp} for {symbol} does not increase")]
    NonMonotonic { line: u64, symbol: String, timestamp: f64 },
    #[error("line {line}: {message}")]
    Data { line: u64, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

type TickIter = Box<dyn Iterator<Item = Result<Tick, FeedError>> + Send>;

/// A metadata table plus a single-consumer tick stream.
pub struct Feed {
    meta: Vec<SeriesMeta>,
    ticks: Peekable<TickIter>,
}

impl Feed {
    pub fn new(meta: Vec<SeriesMeta>, ticks: TickIter) -> Self {
        Feed { meta, ticks: ticks.peekable() }
    }

    pub fn from_ticks(meta: Vec<SeriesMeta>, ticks: Vec<Tick>) -> Self {
        Feed::new(meta, Box::new(ticks.into_iter().map(Ok)))
    }

    pub fn meta(&self) -> &[SeriesMeta] {
        &self.meta
    }

    /// Timestamp of the next tick, if any, without consuming it.
    pub fn peek_timestamp(&mut self) -> Option<f64> {
        match self.ticks.peek() {
            Some(Ok(t)) => Some(t.timestamp),
            _ => None,
        }
    }

    /// Sleeps between ticks so that `speed` feed-seconds pass per wall-clock
    /// second. A speed of 0 (or less) leaves the feed unpaced.
    pub fn paced(self, speed: f64) -> Feed {
        if !(speed > 0.0) {
            return self;
        }
        let Feed { meta, ticks } = self;
        let mut last: Option<f64> = None;
        let paced = ticks.inspect(move |tick| {
            if let Ok(t) = tick {
                if let Some(prev) = last {
                    let dt = (t.timestamp - prev) / speed;
                    if dt > 0.0 {
                        thread::sleep(Duration::from_secs_f64(dt));
                    }
                }
                last = Some(t.timestamp);
            }
        });
        Feed::new(meta, Box::new(paced))
    }

    /// Drains the stream. Mostly useful in tests and for CSV export.
    pub fn collect_ticks(self) -> Result<(Vec<SeriesMeta>, Vec<Tick>), FeedError> {
        let Feed { meta, ticks } = self;
        let ticks = ticks.collect::<Result<Vec<_>, _>>()?;
        Ok((meta, ticks))
    }
}

impl Iterator for Feed {
    type Item = Result<Tick, FeedError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.ticks.next()
    }
}

pub fn generate_feed(config: &FeedConfig) -> Result<Feed, FeedError> {
    config.validate()?;
    let generator = Generator::new(config.clone());
    let meta = generator.meta();
    Ok(Feed::new(meta, Box::new(generator.map(Ok))))
}

struct Series {
    symbol: String,
    sector: Sector,
    group: Option<usize>,
    price: f64,
}

struct Generator {
    config: FeedConfig,
    rng: ChaCha8Rng,
    /// Sorted by symbol; emission order within a step.
    series: Vec<Series>,
    step: usize,
    buffer: std::vec::IntoIter<Tick>,
}

impl Generator {
    fn new(config: FeedConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let width = config.n_series.saturating_sub(1).to_string().len().max(4);
        let mut labels: Vec<usize> = (0..config.n_series).collect();
        labels.shuffle(&mut rng);

        let mut series = Vec::with_capacity(config.n_series);
        let mut next = 0usize;
        for (g, spec) in config.groups.iter().enumerate() {
            for _ in 0..spec.size {
                series.push((next, Some(g), Sector::nth(g)));
                next += 1;
            }
        }
        let n_groups = config.groups.len();
        for j in 0..config.n_series - next {
            series.push((next + j, None, Sector::nth(n_groups + j)));
        }
        let mut series: Vec<Series> = series
            .into_iter()
            .map(|(i, group, sector)| Series {
                symbol: format!("S{:0width$}", labels[i], width = width),
                sector,
                group,
                price: rng.random_range(10.0..100.0),
            })
            .collect();
        series.sort_by(|a, b| a.symbol.cmp(&b.symbol));

        Generator {
            config,
            rng,
            series,
            step: 0,
            buffer: Vec::new().into_iter(),
        }
    }

    fn meta(&self) -> Vec<SeriesMeta> {
        self.series
            .iter()
            .map(|s| SeriesMeta {
                symbol: s.symbol.clone(),
                sector: s.sector,
                group_id: s.group.map(|g| g as u32),
            })
            .collect()
    }

    fn advance_prices(&mut self) {
        let base = Normal::new(0.0, self.config.base_volatility).expect("validated volatility");
        let group_moves: Vec<f64> = (0..self.config.groups.len())
            .map(|_| base.sample(&mut self.rng))
            .collect();
        let own: Vec<Normal<f64>> = self
            .config
            .groups
            .iter()
            .map(|g| Normal::new(0.0, g.coupling).expect("validated coupling"))
            .collect();
        for s in &mut self.series {
            let step = match s.group {
                Some(g) => group_moves[g] + own[g].sample(&mut self.rng),
                None => base.sample(&mut self.rng),
            };
            s.price *= (1.0 + step).max(1e-6);
        }
    }

    fn fill_buffer(&mut self) -> bool {
        if self.step >= self.config.steps {
            return false;
        }
        if self.step > 0 {
            self.advance_prices();
        }
        let timestamp = self.config.start + self.step as f64 * self.config.tick_period;
        let dropout = self.config.dropout_rate;
        let mut ticks = Vec::with_capacity(self.series.len());
        for s in &self.series {
            let missed = self.rng.random::<f64>() < dropout;
            if !missed {
                ticks.push(Tick { symbol: s.symbol.clone(), timestamp, price: s.price });
            }
        }
        self.step += 1;
        self.buffer = ticks.into_iter();
        true
    }
}

impl Iterator for Generator {
    type Item = Tick;

    fn next(&mut self) -> Option<Tick> {
        loop {
            if let Some(t) = self.buffer.next() {
                return Some(t);
            }
            if !self.fill_buffer() {
                return None;
            }
        }
    }
}

/// Writes `timestamp,symbol,sector,price` rows. Float fields use the shortest
/// representation that parses back to the same value.
pub fn write_feed_csv<W: Write>(
    meta: &[SeriesMeta],
    ticks: impl IntoIterator<Item = Tick>,
    out: W,
) -> Result<(), FeedError> {
    let sectors: HashMap<&str, Sector> = meta.iter().map(|m| (m.symbol.as_str(), m.sector)).collect();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for t in ticks {
        let sector = sectors.get(t.symbol.as_str()).ok_or_else(|| FeedError::Data {
            line: 0,
            message: format!("tick for {} has no metadata", t.symbol),
        })?;
        w.write_record([
            t.timestamp.to_string(),
            t.symbol.clone(),
            sector.name().to_string(),
            t.price.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads and validates a whole CSV feed. `speed` > 0 paces emission at
/// `speed` feed-seconds per wall-clock second; 0 emits as fast as possible.
pub fn replay_csv(path: impl AsRef<Path>, speed: f64) -> Result<Feed, FeedError> {
    let file = std::fs::File::open(path)?;
    replay_reader(file, speed)
}

pub fn replay_reader<R: Read>(input: R, speed: f64) -> Result<Feed, FeedError> {
    let (meta, ticks) = parse_feed_csv(input)?;
    Ok(Feed::from_ticks(meta, ticks).paced(speed))
}

fn parse_feed_csv<R: Read>(input: R) -> Result<(Vec<SeriesMeta>, Vec<Tick>), FeedError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(input);
    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(FeedError::Parse {
            line: 1,
            message: format!("expected header {:?}, found {:?}", CSV_HEADER.join(","), header.iter().collect::<Vec<_>>().join(",")),
        });
    }

    let mut meta: Vec<SeriesMeta> = Vec::new();
    let mut index: HashMap<String, (usize, f64)> = HashMap::new();
    let mut ticks = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| FeedError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(i).unwrap_or("");
        let parse_err = |message: String| FeedError::Parse { line, message };

        let timestamp: f64 = field(0)
            .parse()
            .map_err(|_| parse_err(format!("bad timestamp {:?}", field(0))))?;
        if !timestamp.is_finite() {
            return Err(parse_err(format!("non-finite timestamp {:?}", field(0))));
        }
        let symbol = field(1).to_string();
        if symbol.is_empty() {
            return Err(parse_err("empty symbol".into()));
        }
        let sector: Sector = field(2).parse().map_err(|e: crate::sector::UnknownSector| parse_err(e.to_string()))?;
        let price: f64 = field(3)
            .parse()
            .map_err(|_| parse_err(format!("bad price {:?}", field(3))))?;
        if !(price > 0.0 && price.is_finite()) {
            return Err(parse_err(format!("price {:?} must be a positive finite number", field(3))));
        }

        match index.get_mut(&symbol) {
            Some((i, last)) => {
                if meta[*i].sector != sector {
                    return Err(FeedError::Data {
                        line,
                        message: format!("{symbol} changes sector from {} to {sector}", meta[*i].sector),
                    });
                }
                if timestamp <= *last {
                    return Err(FeedError::NonMonotonic { line, symbol, timestamp });
                }
                *last = timestamp;
            }
            None => {
                index.insert(symbol.clone(), (meta.len(), timestamp));
                meta.push(SeriesMeta { symbol: symbol.clone(), sector, group_id: None });
            }
        }
        ticks.push(Tick { symbol, timestamp, price });
    }
    Ok((meta, ticks))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair_config(coupling: f64) -> FeedConfig {
        FeedConfig::planted(1, vec![GroupSpec { size: 2, coupling }], 0, 0.01, 50)
    }

    #[test]
    fn zero_coupling_gives_identical_relative_changes() {
        let (meta, ticks) = generate_feed(&pair_config(0.0)).unwrap().collect_ticks().unwrap();
        assert_eq!(meta.len(), 2);
        let rows: Vec<Vec<f64>> = meta
            .iter()
            .map(|m| ticks.iter().filter(|t| t.symbol == m.symbol).map(|t| t.price).collect())
            .collect();
        for j in 1..rows[0].len() {
            let a = rows[0][j] / rows[0][j - 1];
            let b = rows[1][j] / rows[1][j - 1];
            assert!((a - b).abs() <= 1e-15, "step {j}: {a} vs {b}");
        }
    }

    #[test]
    fn no_dropout_means_a_tick_every_period() {
        let config = FeedConfig { dropout_rate: 0.0, ..FeedConfig::planted(3, vec![], 5, 0.01, 12) };
        let (_, ticks) = generate_feed(&config).unwrap().collect_ticks().unwrap();
        assert_eq!(ticks.len(), 60);
        for step in 0..12 {
            let ts = step as f64;
            assert_eq!(ticks.iter().filter(|t| t.timestamp == ts).count(), 5);
        }
    }

    #[test]
    fn dropout_removes_ticks() {
        let config = FeedConfig { dropout_rate: 0.5, ..FeedConfig::planted(3, vec![], 20, 0.01, 20) };
        let (_, ticks) = generate_feed(&config).unwrap().collect_ticks().unwrap();
        assert!(ticks.len() < 400 && ticks.len() > 100, "{}", ticks.len());
    }

    #[test]
    fn same_seed_same_stream() {
        let config = FeedConfig::planted(9, vec![GroupSpec { size: 3, coupling: 0.001 }], 7, 0.01, 30);
        let a = generate_feed(&config).unwrap().collect_ticks().unwrap();
        let b = generate_feed(&config).unwrap().collect_ticks().unwrap();
        assert_eq!(a, b);
        let other = FeedConfig { seed: 10, ..config };
        let c = generate_feed(&other).unwrap().collect_ticks().unwrap();
        assert_ne!(a.1, c.1);
    }

    #[test]
    fn group_members_share_sector_and_symbols_are_unique() {
        let groups = vec![GroupSpec { size: 2, coupling: 0.0 }; 12];
        let config = FeedConfig::planted(2, groups, 30, 0.01, 2);
        let feed = generate_feed(&config).unwrap();
        let mut symbols: Vec<&str> = feed.meta().iter().map(|m| m.symbol.as_str()).collect();
        symbols.sort();
        symbols.dedup();
        assert_eq!(symbols.len(), 54);
        for g in 0..12 {
            let members: Vec<&SeriesMeta> = feed.meta().iter().filter(|m| m.group_id == Some(g)).collect();
            assert_eq!(members.len(), 2);
            assert_eq!(members[0].sector, members[1].sector);
        }
    }

    #[test]
    fn invalid_configs_name_the_field() {
        let base = FeedConfig::planted(1, vec![], 3, 0.01, 5);
        let cases = [
            (FeedConfig { n_series: 0, ..base.clone() }, "n_series"),
            (FeedConfig { dropout_rate: 1.0, ..base.clone() }, "dropout_rate"),
            (FeedConfig { base_volatility: -0.1, ..base.clone() }, "base_volatility"),
            (FeedConfig { groups: vec![GroupSpec { size: 4, coupling: 0.0 }], ..base.clone() }, "groups"),
            (
                FeedConfig { groups: vec![GroupSpec { size: 2, coupling: -1.0 }], ..base.clone() },
                "groups.coupling",
            ),
        ];
        for (config, expected) in cases {
            match generate_feed(&config) {
                Err(FeedError::Config { field, .. }) => assert_eq!(field, expected),
                Err(other) => panic!("unexpected error {other}"),
                Ok(_) => panic!("{expected} should be rejected"),
            }
        }
    }

    #[test]
    fn pacing_slows_emission() {
        let csv = "timestamp,symbol,sector,price\n0,AAA,Technology,10\n1,AAA,Technology,11\n2,AAA,Technology,12\n";
        let started = std::time::Instant::now();
        let (_, ticks) = replay_reader(csv.as_bytes(), 20.0).unwrap().collect_ticks().unwrap();
        assert_eq!(ticks.len(), 3);
        assert!(started.elapsed() >= Duration::from_millis(100));
    }

    #[test]
    fn replay_three_rows_in_order() {
        let csv = "timestamp,symbol,sector,price\n0,AAA,Technology,10\n1,AAA,Technology,10.5\n2.5,AAA,Technology,9.75\n";
        let feed = replay_reader(csv.as_bytes(), 0.0).unwrap();
        assert_eq!(feed.meta().len(), 1);
        assert_eq!(feed.meta()[0].sector, Sector::Technology);
        let (_, ticks) = feed.collect_ticks().unwrap();
        let prices: Vec<f64> = ticks.iter().map(|t| t.price).collect();
        assert_eq!(prices, vec![10.0, 10.5, 9.75]);
        assert_eq!(ticks[2].timestamp, 2.5);
    }

    #[test]
    fn zero_price_is_rejected_with_line() {
        let csv = "timestamp,symbol,sector,price\n0,AAA,Technology,10\n1,AAA,Technology,0\n";
        match replay_reader(csv.as_bytes(), 0.0) {
            Err(FeedError::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("price"), "{message}");
            }
            other => panic!("expected parse error, got {:?}", other.err()),
        }
    }

    #[test]
    fn malformed_and_non_monotonic_rows() {
        let bad_ts = "timestamp,symbol,sector,price\nabc,AAA,Technology,10\n";
        assert!(matches!(replay_reader(bad_ts.as_bytes(), 0.0), Err(FeedError::Parse { line: 2, .. })));

        let bad_sector = "timestamp,symbol,sector,price\n0,AAA,Energy,10\n";
        assert!(matches!(replay_reader(bad_sector.as_bytes(), 0.0), Err(FeedError::Parse { line: 2, .. })));

        let backwards = "timestamp,symbol,sector,price\n1,AAA,Technology,10\n0,BBB,Services,3\n1,AAA,Technology,11\n";
        match replay_reader(backwards.as_bytes(), 0.0) {
            Err(FeedError::NonMonotonic { line, symbol, .. }) => {
                assert_eq!(line, 4);
                assert_eq!(symbol, "AAA");
            }
            other => panic!("expected non-monotonic error, got {:?}", other.err()),
        }

        let no_header = "0,AAA,Technology,10\n";
        assert!(matches!(replay_reader(no_header.as_bytes(), 0.0), Err(FeedError::Parse { line: 1, .. })));
    }

    #[test]
    fn export_then_replay_round_trips() {
        let config = FeedConfig {
            dropout_rate: 0.1,
            ..FeedConfig::planted(5, vec![GroupSpec { size: 2, coupling: 0.0003 }], 6, 0.003, 25)
        };
        let (meta, ticks) = generate_feed(&config).unwrap().collect_ticks().unwrap();
        let mut buf = Vec::new();
        write_feed_csv(&meta, ticks.clone(), &mut buf).unwrap();
        let (replayed_meta, replayed) = replay_reader(buf.as_slice(), 0.0).unwrap().collect_ticks().unwrap();
        assert_eq!(replayed, ticks);
        let mut a: Vec<(String, Sector)> = meta.iter().map(|m| (m.symbol.clone(), m.sector)).collect();
        let mut b: Vec<(String, Sector)> = replayed_meta.iter().map(|m| (m.symbol.clone(), m.sector)).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }
}
