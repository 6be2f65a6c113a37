//! Co-occurrence ranking over the tree and the policy that turns rankings
//! into pairs.
//!
//! For a query series every node on its root-to-leaf path bumps a counter for
//! each of the node's members; partners are ranked by counter, descending,
//! with ties in ascending symbol order.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dtree::{DecisionTree, TreeError};
use crate::sector::Sector;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub symbol: String,
    pub counter: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedList {
    pub query: String,
    pub entries: Vec<RankedEntry>,
}

impl RankedList {
    pub fn top(&self) -> Option<&RankedEntry> {
        self.entries.first()
    }

    pub fn counter_of(&self, symbol: &str) -> Option<u32> {
        self.entries.iter().find(|e| e.symbol == symbol).map(|e| e.counter)
    }
}

/// Rows of the tree in ascending symbol order.
fn lexicographic_rows(tree: &DecisionTree) -> Vec<usize> {
    let mut rows: Vec<usize> = (0..tree.symbols().len()).collect();
    rows.sort_by(|&a, &b| tree.symbols()[a].cmp(&tree.symbols()[b]));
    rows
}

fn rank_row(tree: &DecisionTree, row: usize, lex_rows: &[usize], counts: &mut [u32]) -> RankedList {
    let path = tree.path_of_row(row);
    for &id in &path {
        for &r in &tree.node(id).members {
            counts[r] += 1;
        }
    }
    // counting sort by counter, stable over lexicographic order
    let depth = path.len();
    let mut bands: Vec<Vec<usize>> = vec![Vec::new(); depth + 1];
    for &r in lex_rows {
        if r != row && counts[r] > 0 {
            bands[counts[r] as usize].push(r);
        }
    }
    let entries = bands
        .iter()
        .enumerate()
        .rev()
        .flat_map(|(counter, rows)| {
            rows.iter().map(move |&r| RankedEntry { symbol: tree.symbols()[r].clone(), counter: counter as u32 })
        })
        .collect();
    for &id in &path {
        for &r in &tree.node(id).members {
            counts[r] = 0;
        }
    }
    RankedList { query: tree.symbols()[row].clone(), entries }
}

pub fn rank_similar(tree: &DecisionTree, query: &str) -> Result<RankedList, TreeError> {
    let row = tree.row_of(query).ok_or_else(|| TreeError::UnknownSymbol(query.to_string()))?;
    let mut counts = vec![0; tree.symbols().len()];
    Ok(rank_row(tree, row, &lexicographic_rows(tree), &mut counts))
}

/// Rankings for every series in the tree, in tree row order.
pub fn rank_all(tree: &DecisionTree) -> Vec<RankedList> {
    let lex_rows = lexicographic_rows(tree);
    let mut counts = vec![0; tree.symbols().len()];
    (0..tree.symbols().len()).map(|row| rank_row(tree, row, &lex_rows, &mut counts)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairMode {
    /// Every series proposes its top partner; duplicates merge.
    #[default]
    Best,
    /// Keep only pairs that are each other's top partner.
    Mutual,
}

impl FromStr for PairMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "best" => Ok(PairMode::Best),
            "mutual" => Ok(PairMode::Mutual),
            other => Err(format!("unknown pair mode {other:?} (expected best or mutual)")),
        }
    }
}

impl fmt::Display for PairMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PairMode::Best => "best",
            PairMode::Mutual => "mutual",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairPolicy {
    pub mode: PairMode,
    pub min_counter: u32,
    #[serde(default)]
    pub same_sector_only: bool,
}

impl Default for PairPolicy {
    fn default() -> Self {
        PairPolicy { mode: PairMode::Best, min_counter: 2, same_sector_only: false }
    }
}

impl PairPolicy {
    pub fn validate(&self) -> Result<(), RankingError> {
        if self.min_counter < 2 {
            return Err(RankingError::InvalidPolicy(format!(
                "min_counter {} is below 2; a counter of 1 is root-only co-membership",
                self.min_counter
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub pair_id: usize,
    pub a: String,
    pub b: String,
    pub counter: u32,
    pub sector_a: Sector,
    pub sector_b: Sector,
    pub same_sector: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PairSet {
    pub pairs: Vec<Pair>,
}

impl PairSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, x: &str, y: &str) -> bool {
        let (a, b) = if x < y { (x, y) } else { (y, x) };
        self.pairs.iter().any(|p| p.a == a && p.b == b)
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RankingError {
    #[error("invalid pair policy: {0}")]
    InvalidPolicy(String),
    #[error("no sector metadata for {0}")]
    MissingSector(String),
}

/// Builds the pair set from one ranking per series. Pair ids are 1-based in
/// `(a, b)` order.
pub fn form_pairs(
    rankings: &[RankedList],
    policy: &PairPolicy,
    sectors: &HashMap<String, Sector>,
) -> Result<PairSet, RankingError> {
    policy.validate()?;
    let tops: HashMap<&str, &RankedEntry> =
        rankings.iter().filter_map(|r| r.top().map(|t| (r.query.as_str(), t))).collect();

    let mut chosen: BTreeSet<(&str, &str, u32)> = BTreeSet::new();
    for ranking in rankings {
        let Some(top) = ranking.top() else { continue };
        if top.counter < policy.min_counter {
            continue;
        }
        let query = ranking.query.as_str();
        if policy.mode == PairMode::Mutual {
            let reciprocal = tops.get(top.symbol.as_str()).is_some_and(|back| back.symbol == query);
            if !reciprocal {
                continue;
            }
        }
        let (a, b) = if query < top.symbol.as_str() { (query, top.symbol.as_str()) } else { (top.symbol.as_str(), query) };
        chosen.insert((a, b, top.counter));
    }

    let sector_of = |s: &str| sectors.get(s).copied().ok_or_else(|| RankingError::MissingSector(s.to_string()));
    let mut pairs = Vec::new();
    let mut last: Option<(&str, &str)> = None;
    for (a, b, counter) in chosen {
        // counters are symmetric, so a duplicate (a, b) carries the same counter
        if last == Some((a, b)) {
            continue;
        }
        last = Some((a, b));
        let (sector_a, sector_b) = (sector_of(a)?, sector_of(b)?);
        let same_sector = sector_a == sector_b;
        if policy.same_sector_only && !same_sector {
            continue;
        }
        pairs.push(Pair {
            pair_id: pairs.len() + 1,
            a: a.to_string(),
            b: b.to_string(),
            counter,
            sector_a,
            sector_b,
            same_sector,
        });
    }
    Ok(PairSet { pairs })
}
