//! Independent reference implementations for tests. Nothing here shares code
//! paths with the library beyond its public data types.

use std::collections::{BTreeMap, HashMap};

use copair::dtree::{DecisionTree, TreeParams};
use copair::labeling::{feature_name, ChangeMatrix, LabeledDataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One node of the oracle tree: members (ascending rows), and the split as
/// (feature, rule bounds, children) when present.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleNode {
    pub members: Vec<usize>,
    pub split: Option<OracleSplit>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSplit {
    pub feature: usize,
    /// (θ, +inf) for threshold rules, (a, b) for interval rules.
    pub bounds: (f64, f64),
    pub interval: bool,
    pub children: [usize; 2],
}

fn sse(labels: &[f64], rows: &[usize]) -> f64 {
    if rows.is_empty() || rows.iter().all(|&r| labels[r] == labels[rows[0]]) {
        return 0.0;
    }
    let mut total = 0.0;
    for &r in rows {
        total += labels[r];
    }
    let mean = total / rows.len() as f64;
    let mut acc = 0.0;
    for &r in rows {
        let d = labels[r] - mean;
        acc += d * d;
    }
    acc
}

fn halfway(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m <= lo {
        hi
    } else {
        m
    }
}

/// Candidate boundaries of one feature within `members`: every midpoint
/// between consecutive distinct values.
fn midpoints(features: &[Vec<f64>], members: &[usize], f: usize) -> Vec<f64> {
    let mut values: Vec<f64> = members.iter().map(|&r| features[r][f]).collect();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values.dedup();
    values.windows(2).map(|w| halfway(w[0], w[1])).collect()
}

/// Grows a tree by exhaustively scoring every candidate at every node with a
/// direct partition + two-pass SSE. Breadth-first ids, same semantics as the
/// library: admissible candidates only, gain > α·SSE(root), ties by lowest
/// feature then lowest boundary.
pub fn exhaustive_tree(data: &LabeledDataset, params: &TreeParams, interval: bool) -> Vec<OracleNode> {
    let features = &data.changes.features;
    let labels = &data.labels;
    let m = labels.len();
    let all: Vec<usize> = (0..m).collect();
    let floor = params.complexity_penalty * sse(labels, &all);
    let ms = params.min_support;

    let mut nodes = vec![OracleNode { members: all, split: None }];
    let mut next = 0;
    while next < nodes.len() {
        let id = next;
        next += 1;
        if params.max_nodes.is_some_and(|cap| nodes.len() + 2 > cap) {
            continue;
        }
        let members = nodes[id].members.clone();
        let parent = sse(labels, &members);
        let mut best: Option<(f64, usize, f64, f64, Vec<usize>, Vec<usize>)> = None;
        for f in 0..data.changes.feature_names.len() {
            let mids = midpoints(features, &members, f);
            let mut cands: Vec<(f64, f64)> = Vec::new();
            if interval {
                for i in 0..mids.len() {
                    for k in i + 1..mids.len() {
                        cands.push((mids[i], mids[k]));
                    }
                }
            } else {
                cands.extend(mids.iter().map(|&t| (t, f64::INFINITY)));
            }
            for (a, b) in cands {
                let goes_first = |v: f64| if interval { a <= v && v < b } else { v < a };
                let first: Vec<usize> = members.iter().copied().filter(|&r| goes_first(features[r][f])).collect();
                let second: Vec<usize> = members.iter().copied().filter(|&r| !goes_first(features[r][f])).collect();
                if first.len() < ms || second.len() < ms {
                    continue;
                }
                let gain = parent - sse(labels, &first) - sse(labels, &second);
                let better = match &best {
                    None => true,
                    Some((g, bf, ba, bb, _, _)) => {
                        gain > *g || (gain == *g && (f, a, b).partial_cmp(&(*bf, *ba, *bb)) == Some(std::cmp::Ordering::Less))
                    }
                };
                if better {
                    best = Some((gain, f, a, b, first, second));
                }
            }
        }
        if let Some((gain, f, a, b, first, second)) = best {
            if gain > floor {
                let c = nodes.len();
                nodes.push(OracleNode { members: first, split: None });
                nodes.push(OracleNode { members: second, split: None });
                nodes[id].split = Some(OracleSplit { feature: f, bounds: (a, b), interval, children: [c, c + 1] });
            }
        }
    }
    nodes
}

/// Compares a library tree with the oracle tree node by node.
pub fn tree_matches_oracle(tree: &DecisionTree, oracle: &[OracleNode]) -> Result<(), String> {
    use copair::dtree::RuleKind;
    if tree.nodes().len() != oracle.len() {
        return Err(format!("node count {} vs oracle {}", tree.nodes().len(), oracle.len()));
    }
    for (node, o) in tree.nodes().iter().zip(oracle) {
        if node.members != o.members {
            return Err(format!("node {}: members differ", node.id));
        }
        match (&node.rule, &o.split) {
            (None, None) => {}
            (Some(rule), Some(s)) => {
                let bounds = match rule.kind {
                    RuleKind::Threshold { theta } => (theta, f64::INFINITY),
                    RuleKind::Interval { low, high } => (low, high),
                };
                if rule.feature != s.feature || bounds != s.bounds || node.children != Some(s.children) {
                    return Err(format!("node {}: rule {rule} vs oracle feature {} bounds {:?}", node.id, s.feature, s.bounds));
                }
            }
            _ => return Err(format!("node {}: split presence differs", node.id)),
        }
    }
    Ok(())
}

/// Counter of every other symbol for `query`, by scanning all nodes.
pub fn scan_counters(tree: &DecisionTree, query: &str) -> BTreeMap<String, u32> {
    let q = tree.symbols().iter().position(|s| s == query).expect("query in tree");
    let mut counts = BTreeMap::new();
    for node in tree.nodes() {
        if node.members.contains(&q) {
            for &r in &node.members {
                if r != q {
                    *counts.entry(tree.symbols()[r].clone()).or_insert(0) += 1;
                }
            }
        }
    }
    counts
}

/// Random dataset of `m` rows and `n_features` changes, labels as row sums.
/// Values are rounded to a coarse grid when `coarse` so that ties occur.
pub fn random_dataset(seed: u64, m: usize, n_features: usize, coarse: bool) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let features: Vec<Vec<f64>> = (0..m)
        .map(|_| {
            (0..n_features)
                .map(|_| {
                    let v: f64 = rng.random_range(-0.05..0.05);
                    if coarse {
                        (v * 200.0).round() / 200.0
                    } else {
                        v
                    }
                })
                .collect()
        })
        .collect();
    let labels = features.iter().map(|r| r.iter().sum()).collect();
    LabeledDataset {
        changes: ChangeMatrix {
            symbols: (0..m).map(|i| format!("X{i:03}")).collect(),
            feature_names: (0..n_features).map(feature_name).collect(),
            features,
        },
        labels,
    }
}

/// Pearson r via the single-pass sums formula.
pub fn pearson_sums(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

/// For every series, the partner with the highest Pearson r over `rows`.
pub fn max_pearson_partners(symbols: &[String], rows: &[Vec<f64>]) -> HashMap<String, (String, f64)> {
    let center = |v: &[f64]| {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let c: Vec<f64> = v.iter().map(|x| x - mean).collect();
        let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        c.into_iter().map(|x| x / norm).collect::<Vec<f64>>()
    };
    let z: Vec<Vec<f64>> = rows.iter().map(|r| center(r)).collect();
    let mut out = HashMap::new();
    for i in 0..symbols.len() {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..symbols.len() {
            if i == j {
                continue;
            }
            let r: f64 = z[i].iter().zip(&z[j]).map(|(a, b)| a * b).sum();
            if best.is_none_or(|(_, br)| r > br) {
                best = Some((j, r));
            }
        }
        if let Some((j, r)) = best {
            out.insert(symbols[i].clone(), (symbols[j].clone(), r));
        }
    }
    out
}

/// Precision and recall of `reported` unordered pairs against `truth`.
pub fn precision_recall(reported: &[(String, String)], truth: &[(String, String)]) -> (f64, f64) {
    let norm = |(a, b): &(String, String)| if a < b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
    let truth: std::collections::HashSet<(String, String)> = truth.iter().map(norm).collect();
    let hits = reported.iter().map(norm).filter(|p| truth.contains(p)).count();
    let precision = if reported.is_empty() { 0.0 } else { hits as f64 / reported.len() as f64 };
    let recall = if truth.is_empty() { 1.0 } else { hits as f64 / truth.len() as f64 };
    (precision, recall)
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}
