//! Regression tree over change vectors, targeting the self-labels.
//!
//! Growth is breadth-first. A node is split with its best candidate when that
//! candidate's SSE reduction exceeds `complexity_penalty * SSE(root)` and both
//! children keep at least `min_support` members. Only candidates whose
//! children satisfy `min_support` compete for "best".
//!
//! Candidates are scanned with prefix sums; the near-best ones are then
//! re-scored with [`subset_sse`] over members in ascending row order, so two
//! candidates that induce the same partition score bit-identically and the
//! tie-break (lowest feature, then lowest boundary) decides between them.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::labeling::LabeledDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    /// `c < θ` versus `c >= θ`.
    #[default]
    Threshold,
    /// `a <= c < b` versus outside.
    Interval,
}

impl std::str::FromStr for SplitKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "threshold" => Ok(SplitKind::Threshold),
            "interval" => Ok(SplitKind::Interval),
            other => Err(format!("unknown split kind {other:?} (expected threshold or interval)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub complexity_penalty: f64,
    pub min_support: usize,
    #[serde(default)]
    pub split_kind: SplitKind,
    #[serde(default)]
    pub max_nodes: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams { complexity_penalty: 0.0, min_support: 2, split_kind: SplitKind::Threshold, max_nodes: None }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<(), TreeError> {
        if !(0.0..1.0).contains(&self.complexity_penalty) {
            return Err(TreeError::InvalidParams(format!(
                "complexity_penalty {} is outside [0, 1)",
                self.complexity_penalty
            )));
        }
        if self.min_support < 2 {
            return Err(TreeError::InvalidParams(format!("min_support {} is below 2", self.min_support)));
        }
        if self.max_nodes == Some(0) {
            return Err(TreeError::InvalidParams("max_nodes must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RuleKind {
    Threshold { theta: f64 },
    Interval { low: f64, high: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRule {
    pub feature: usize,
    pub feature_name: String,
    #[serde(flatten)]
    pub kind: RuleKind,
}

impl SplitRule {
    /// True when `value` is routed to the first child.
    pub fn routes_first(&self, value: f64) -> bool {
        match self.kind {
            RuleKind::Threshold { theta } => value < theta,
            RuleKind::Interval { low, high } => low <= value && value < high,
        }
    }

    /// Human-readable conditions for the first and second child.
    pub fn conditions(&self) -> [String; 2] {
        let f = &self.feature_name;
        match self.kind {
            RuleKind::Threshold { theta } => [format!("{f} < {theta}"), format!("{f} >= {theta}")],
            RuleKind::Interval { low, high } => {
                [format!("{f} >= {low} and < {high}"), format!("{f} < {low} or >= {high}")]
            }
        }
    }
}

impl fmt::Display for SplitRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.conditions()[0])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: usize,
    pub parent: Option<usize>,
    pub depth: usize,
    /// Dataset row indices, ascending.
    pub members: Vec<usize>,
    pub rule: Option<SplitRule>,
    pub children: Option<[usize; 2]>,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }

    pub fn contains(&self, row: usize) -> bool {
        self.members.binary_search(&row).is_ok()
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TreeError {
    #[error("cannot train on an empty dataset")]
    EmptyDataset,
    #[error("invalid tree parameters: {0}")]
    InvalidParams(String),
    #[error("unknown symbol {0}")]
    UnknownSymbol(String),
    #[error("malformed tree export: {0}")]
    Malformed(String),
}

/// Trained tree. Node ids are indices into [`DecisionTree::nodes`], assigned
/// in breadth-first creation order; the root is node 0.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    symbols: Vec<String>,
    nodes: Vec<Node>,
    leaf_of: Vec<usize>,
    params: TreeParams,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeStats {
    pub node_count: usize,
    pub depth: usize,
    pub leaf_sizes: Vec<usize>,
}

impl DecisionTree {
    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn params(&self) -> &TreeParams {
        &self.params
    }

    pub fn row_of(&self, symbol: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == symbol)
    }

    pub fn leaf_of_row(&self, row: usize) -> usize {
        self.leaf_of[row]
    }

    pub fn member_symbols(&self, id: usize) -> impl Iterator<Item = &str> {
        self.nodes[id].members.iter().map(|&r| self.symbols[r].as_str())
    }

    /// Root-to-leaf node ids for a dataset row.
    pub fn path_of_row(&self, row: usize) -> Vec<usize> {
        let mut path = vec![self.leaf_of[row]];
        while let Some(parent) = self.nodes[*path.last().unwrap()].parent {
            path.push(parent);
        }
        path.reverse();
        path
    }

    pub fn stats(&self) -> TreeStats {
        tree_stats(self)
    }

    pub fn export(&self) -> TreeExport {
        TreeExport {
            params: self.params.clone(),
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeExport {
                    id: n.id,
                    parent: n.parent,
                    depth: n.depth,
                    rule: n.rule.clone(),
                    conditions: n.rule.as_ref().map(|r| r.conditions()),
                    children: n.children,
                    members: n.members.iter().map(|&r| self.symbols[r].clone()).collect(),
                })
                .collect(),
        }
    }

    /// Rebuilds a tree from its export. Symbols are ordered as in the root.
    pub fn from_export(export: &TreeExport) -> Result<Self, TreeError> {
        let root = export.nodes.first().ok_or_else(|| TreeError::Malformed("no nodes".into()))?;
        let symbols = root.members.clone();
        let index: std::collections::HashMap<&str, usize> =
            symbols.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        if index.len() != symbols.len() {
            return Err(TreeError::Malformed("duplicate symbols in root".into()));
        }
        let mut nodes = Vec::with_capacity(export.nodes.len());
        for (i, n) in export.nodes.iter().enumerate() {
            if n.id != i {
                return Err(TreeError::Malformed(format!("node at position {i} has id {}", n.id)));
            }
            let mut members = n
                .members
                .iter()
                .map(|s| index.get(s.as_str()).copied().ok_or_else(|| TreeError::Malformed(format!("node {i}: unknown member {s}"))))
                .collect::<Result<Vec<_>, _>>()?;
            members.sort_unstable();
            if let Some(c) = n.children {
                if c.iter().any(|&c| c >= export.nodes.len() || c <= i) {
                    return Err(TreeError::Malformed(format!("node {i}: bad children {c:?}")));
                }
            }
            nodes.push(Node { id: i, parent: n.parent, depth: n.depth, members, rule: n.rule.clone(), children: n.children });
        }
        let leaf_of = compute_leaf_of(&nodes, symbols.len())?;
        Ok(DecisionTree { symbols, nodes, leaf_of, params: export.params.clone() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeExport {
    pub id: usize,
    pub parent: Option<usize>,
    pub depth: usize,
    pub rule: Option<SplitRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditions: Option<[String; 2]>,
    pub children: Option<[usize; 2]>,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeExport {
    pub params: TreeParams,
    pub nodes: Vec<NodeExport>,
}

fn compute_leaf_of(nodes: &[Node], n_rows: usize) -> Result<Vec<usize>, TreeError> {
    let mut leaf_of = vec![usize::MAX; n_rows];
    for node in nodes.iter().filter(|n| n.is_leaf()) {
        for &r in &node.members {
            if leaf_of[r] != usize::MAX {
                return Err(TreeError::Malformed(format!("row {r} is in two leaves")));
            }
            leaf_of[r] = node.id;
        }
    }
    if leaf_of.contains(&usize::MAX) {
        return Err(TreeError::Malformed("some rows are in no leaf".into()));
    }
    Ok(leaf_of)
}

/// Sum of squared deviations from the mean over `rows`, accumulated in the
/// given order. Constant subsets score exactly 0.
pub fn subset_sse(labels: &[f64], rows: &[usize]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let first = labels[rows[0]];
    if rows.iter().all(|&r| labels[r] == first) {
        return 0.0;
    }
    let mean = rows.iter().map(|&r| labels[r]).sum::<f64>() / rows.len() as f64;
    rows.iter().map(|&r| (labels[r] - mean).powi(2)).sum()
}

/// Threshold halfway between two distinct sorted values, nudged so that
/// `low < θ <= high` holds in floating point.
pub fn midpoint(low: f64, high: f64) -> f64 {
    let mid = low + (high - low) / 2.0;
    if mid <= low {
        high
    } else {
        mid
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    feature: usize,
    kind: RuleKind,
    approx_gain: f64,
}

impl Candidate {
    fn order_key(&self) -> (usize, f64, f64) {
        match self.kind {
            RuleKind::Threshold { theta } => (self.feature, theta, 0.0),
            RuleKind::Interval { low, high } => (self.feature, low, high),
        }
    }
}

struct Split {
    rule: SplitRule,
    gain: f64,
    first: Vec<usize>,
    second: Vec<usize>,
}

struct Scan<'a> {
    features: &'a [Vec<f64>],
    labels: &'a [f64],
    min_support: usize,
    kind: SplitKind,
}

impl Scan<'_> {
    /// Approximate gains for every admissible candidate of one feature.
    fn feature_candidates(&self, members: &[usize], feature: usize, parent_sse: f64, out: &mut Vec<Candidate>) {
        let n = members.len();
        let mean = members.iter().map(|&r| self.labels[r]).sum::<f64>() / n as f64;
        let mut sorted: Vec<(f64, f64)> = members
            .iter()
            .map(|&r| (self.features[r][feature], self.labels[r] - mean))
            .collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut s1 = vec![0.0; n + 1];
        let mut s2 = vec![0.0; n + 1];
        for (k, &(_, y)) in sorted.iter().enumerate() {
            s1[k + 1] = s1[k] + y;
            s2[k + 1] = s2[k] + y * y;
        }
        let sse = |lo: usize, hi: usize| {
            let cnt = (hi - lo) as f64;
            let a = s1[hi] - s1[lo];
            (s2[hi] - s2[lo]) - a * a / cnt
        };
        // positions k where sorted[k-1] < sorted[k]
        let boundaries: Vec<usize> = (1..n).filter(|&k| sorted[k - 1].0 < sorted[k].0).collect();
        let ms = self.min_support;
        match self.kind {
            SplitKind::Threshold => {
                for &k in &boundaries {
                    if k < ms || n - k < ms {
                        continue;
                    }
                    let gain = parent_sse - sse(0, k) - sse(k, n);
                    let theta = midpoint(sorted[k - 1].0, sorted[k].0);
                    out.push(Candidate { feature, kind: RuleKind::Threshold { theta }, approx_gain: gain });
                }
            }
            SplitKind::Interval => {
                let total1 = s1[n];
                let total2 = s2[n];
                for (i, &lo) in boundaries.iter().enumerate() {
                    for &hi in &boundaries[i + 1..] {
                        let inside = hi - lo;
                        if inside < ms || n - inside < ms {
                            continue;
                        }
                        let in1 = s1[hi] - s1[lo];
                        let in2 = s2[hi] - s2[lo];
                        let out1 = total1 - in1;
                        let out2 = total2 - in2;
                        let sse_in = in2 - in1 * in1 / inside as f64;
                        let sse_out = out2 - out1 * out1 / (n - inside) as f64;
                        let low = midpoint(sorted[lo - 1].0, sorted[lo].0);
                        let high = midpoint(sorted[hi - 1].0, sorted[hi].0);
                        out.push(Candidate {
                            feature,
                            kind: RuleKind::Interval { low, high },
                            approx_gain: parent_sse - sse_in - sse_out,
                        });
                    }
                }
            }
        }
    }

    fn best_split(&self, members: &[usize], feature_names: &[String]) -> Option<Split> {
        let parent_sse = subset_sse(self.labels, members);
        if parent_sse == 0.0 || members.len() < 2 * self.min_support {
            return None;
        }
        let mut candidates = Vec::new();
        for f in 0..feature_names.len() {
            self.feature_candidates(members, f, parent_sse, &mut candidates);
        }
        let best_approx = candidates.iter().map(|c| c.approx_gain).fold(f64::NEG_INFINITY, f64::max);
        if !best_approx.is_finite() {
            return None;
        }
        let tolerance = 1e-9 * parent_sse;
        let mut best: Option<Split> = None;
        let mut best_key = (usize::MAX, 0.0, 0.0);
        for c in candidates.iter().filter(|c| c.approx_gain >= best_approx - tolerance) {
            let rule = SplitRule { feature: c.feature, feature_name: feature_names[c.feature].clone(), kind: c.kind };
            let (first, second): (Vec<usize>, Vec<usize>) =
                members.iter().partition(|&&r| rule.routes_first(self.features[r][c.feature]));
            let gain = parent_sse - subset_sse(self.labels, &first) - subset_sse(self.labels, &second);
            let key = c.order_key();
            let better = match &best {
                None => true,
                Some(b) => gain > b.gain || (gain == b.gain && key_lt(key, best_key)),
            };
            if better {
                best_key = key;
                best = Some(Split { rule, gain, first, second });
            }
        }
        best
    }
}

fn key_lt(a: (usize, f64, f64), b: (usize, f64, f64)) -> bool {
    a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2)).is_lt()
}

pub fn train_tree(dataset: &LabeledDataset, params: &TreeParams) -> Result<DecisionTree, TreeError> {
    params.validate()?;
    let m = dataset.len();
    if m == 0 {
        return Err(TreeError::EmptyDataset);
    }
    let labels = &dataset.labels;
    let scan = Scan {
        features: &dataset.changes.features,
        labels,
        min_support: params.min_support,
        kind: params.split_kind,
    };
    let root_members: Vec<usize> = (0..m).collect();
    let root_sse = subset_sse(labels, &root_members);
    let min_gain = params.complexity_penalty * root_sse;

    let mut nodes = vec![Node { id: 0, parent: None, depth: 0, members: root_members, rule: None, children: None }];
    let mut queue = VecDeque::from([0usize]);
    while let Some(id) = queue.pop_front() {
        if params.max_nodes.is_some_and(|cap| nodes.len() + 2 > cap) {
            continue;
        }
        let Some(split) = scan.best_split(&nodes[id].members, &dataset.changes.feature_names) else {
            continue;
        };
        if !(split.gain > min_gain) {
            continue;
        }
        let depth = nodes[id].depth + 1;
        let first = nodes.len();
        nodes.push(Node { id: first, parent: Some(id), depth, members: split.first, rule: None, children: None });
        nodes.push(Node { id: first + 1, parent: Some(id), depth, members: split.second, rule: None, children: None });
        nodes[id].rule = Some(split.rule);
        nodes[id].children = Some([first, first + 1]);
        queue.push_back(first);
        queue.push_back(first + 1);
    }
    let leaf_of = compute_leaf_of(&nodes, m)?;
    Ok(DecisionTree { symbols: dataset.changes.symbols.clone(), nodes, leaf_of, params: params.clone() })
}

/// Every node containing `symbol`, root first. Membership is nested, so this
/// is the symbol's root-to-leaf path.
pub fn node_membership(tree: &DecisionTree, symbol: &str) -> Result<Vec<usize>, TreeError> {
    let row = tree.row_of(symbol).ok_or_else(|| TreeError::UnknownSymbol(symbol.to_string()))?;
    Ok(tree.path_of_row(row))
}

pub fn tree_stats(tree: &DecisionTree) -> TreeStats {
    TreeStats {
        node_count: tree.nodes.len(),
        depth: tree.nodes.iter().map(|n| n.depth).max().unwrap_or(0),
        leaf_sizes: tree.nodes.iter().filter(|n| n.is_leaf()).map(|n| n.members.len()).collect(),
    }
}

/// Checks the structural invariants against the training features and
/// returns a description of every violation found.
pub fn check_invariants(tree: &DecisionTree, features: &[Vec<f64>]) -> Vec<String> {
    let mut problems = Vec::new();
    let ms = tree.params.min_support;
    let m = tree.symbols.len();
    if tree.root().members != (0..m).collect::<Vec<_>>() {
        problems.push("root does not hold the full cohort".to_string());
    }
    for node in &tree.nodes {
        if node.members.len() < ms.min(m) || (node.id != 0 && node.members.len() < ms) {
            problems.push(format!("node {} has {} members, below min_support {ms}", node.id, node.members.len()));
        }
        let (Some([a, b]), Some(rule)) = (node.children, node.rule.as_ref()) else {
            if node.children.is_some() != node.rule.is_some() {
                problems.push(format!("node {} has children without a rule or vice versa", node.id));
            }
            continue;
        };
        let mut union: Vec<usize> = tree.nodes[a].members.iter().chain(&tree.nodes[b].members).copied().collect();
        union.sort_unstable();
        let len_before = union.len();
        union.dedup();
        if union.len() != len_before {
            problems.push(format!("children of node {} overlap", node.id));
        }
        if union != node.members {
            problems.push(format!("children of node {} do not cover it", node.id));
        }
        for &r in &node.members {
            let goes_first = rule.routes_first(features[r][rule.feature]);
            let child = if goes_first { a } else { b };
            if !tree.nodes[child].contains(r) {
                problems.push(format!("rule of node {} routes row {r} to the wrong child", node.id));
            }
        }
    }
    problems
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labeling::{feature_name, ChangeMatrix};

    pub(crate) fn dataset(features: Vec<Vec<f64>>, labels: Vec<f64>) -> LabeledDataset {
        let n = features[0].len();
        LabeledDataset {
            changes: ChangeMatrix {
                symbols: (0..features.len()).map(|i| format!("S{i:02}")).collect(),
                feature_names: (0..n).map(feature_name).collect(),
                features,
            },
            labels,
        }
    }

    fn four_rows() -> LabeledDataset {
        dataset(
            vec![vec![1.0, 1.0], vec![1.0, 1.0], vec![-1.0, -1.0], vec![-1.0, -1.0]],
            vec![2.0, 2.0, -2.0, -2.0],
        )
    }

    #[test]
    fn equal_labels_give_a_single_node() {
        let d = dataset(vec![vec![0.1, 0.2], vec![0.3, -0.2], vec![0.05, 0.05], vec![0.0, 0.1]], vec![0.1; 4]);
        let tree = train_tree(&d, &TreeParams::default()).unwrap();
        assert_eq!(tree_stats(&tree), TreeStats { node_count: 1, depth: 0, leaf_sizes: vec![4] });
    }

    #[test]
    fn four_row_split_on_first_feature_at_zero() {
        let tree = train_tree(&four_rows(), &TreeParams::default()).unwrap();
        assert_eq!(tree.nodes().len(), 3);
        let rule = tree.root().rule.as_ref().unwrap();
        assert_eq!(rule.feature, 0);
        assert_eq!(rule.kind, RuleKind::Threshold { theta: 0.0 });
        assert_eq!(tree.node(1).members, vec![2, 3]);
        assert_eq!(tree.node(2).members, vec![0, 1]);
        assert_eq!(node_membership(&tree, "S00").unwrap(), vec![0, 2]);
        assert_eq!(node_membership(&tree, "S03").unwrap(), vec![0, 1]);
        assert_eq!(tree_stats(&tree), TreeStats { node_count: 3, depth: 1, leaf_sizes: vec![2, 2] });
        assert_eq!(tree_stats(&tree), tree.stats());
        assert!(check_invariants(&tree, &four_rows().changes.features).is_empty());
    }

    #[test]
    fn small_cohort_is_a_single_root() {
        let d = dataset(vec![vec![1.0], vec![2.0], vec![3.0]], vec![1.0, 2.0, 3.0]);
        let tree = train_tree(&d, &TreeParams::default()).unwrap();
        assert_eq!(tree.nodes().len(), 1);
        assert_eq!(node_membership(&tree, "S01").unwrap(), vec![0]);
    }

    #[test]
    fn errors() {
        let empty = LabeledDataset {
            changes: ChangeMatrix { symbols: vec![], feature_names: vec![feature_name(0)], features: vec![] },
            labels: vec![],
        };
        assert_eq!(train_tree(&empty, &TreeParams::default()), Err(TreeError::EmptyDataset));
        let bad = TreeParams { min_support: 1, ..TreeParams::default() };
        assert!(matches!(train_tree(&four_rows(), &bad), Err(TreeError::InvalidParams(_))));
        let bad = TreeParams { complexity_penalty: 1.0, ..TreeParams::default() };
        assert!(matches!(train_tree(&four_rows(), &bad), Err(TreeError::InvalidParams(_))));
        let tree = train_tree(&four_rows(), &TreeParams::default()).unwrap();
        assert_eq!(node_membership(&tree, "nope"), Err(TreeError::UnknownSymbol("nope".into())));
    }

    #[test]
    fn penalty_blocks_weak_splits() {
        // root SSE = 16, the split gains 16: blocked only when α * 16 >= 16
        let tree = train_tree(&four_rows(), &TreeParams { complexity_penalty: 0.99, ..TreeParams::default() }).unwrap();
        assert_eq!(tree.nodes().len(), 3);
        let d = dataset(
            (0..8).map(|i| vec![i as f64]).collect(),
            vec![0.0, 0.1, 0.2, 0.3, 5.0, 5.1, 5.2, 5.3],
        );
        let full = train_tree(&d, &TreeParams::default()).unwrap();
        let pruned = train_tree(&d, &TreeParams { complexity_penalty: 0.01, ..TreeParams::default() }).unwrap();
        assert!(full.nodes().len() > pruned.nodes().len());
        assert_eq!(pruned.nodes().len(), 3);
    }

    #[test]
    fn interval_rule_routes_inside_first() {
        // middle block differs from both tails: only a two-sided rule isolates it
        let d = dataset(
            vec![vec![-2.0], vec![-1.5], vec![0.0], vec![0.1], vec![1.5], vec![2.0]],
            vec![0.0, 0.0, 1.0, 1.0, 0.0, 0.0],
        );
        let params = TreeParams { split_kind: SplitKind::Interval, ..TreeParams::default() };
        let tree = train_tree(&d, &params).unwrap();
        let rule = tree.root().rule.as_ref().unwrap();
        assert_eq!(rule.kind, RuleKind::Interval { low: -0.75, high: 0.1 + (1.5 - 0.1) / 2.0 });
        assert_eq!(tree.node(1).members, vec![2, 3]);
        assert_eq!(tree.node(2).members, vec![0, 1, 4, 5]);
        assert_eq!(rule.conditions()[1], "T2_T1 < -0.75 or >= 0.7999999999999999");
        assert!(check_invariants(&tree, &d.changes.features).is_empty());
    }

    #[test]
    fn max_nodes_caps_growth() {
        let d = dataset((0..16).map(|i| vec![i as f64]).collect(), (0..16).map(|i| (i * i) as f64).collect());
        let capped = train_tree(&d, &TreeParams { max_nodes: Some(5), ..TreeParams::default() }).unwrap();
        assert_eq!(capped.nodes().len(), 5);
        assert!(check_invariants(&capped, &d.changes.features).is_empty());
    }

    #[test]
    fn midpoint_stays_strictly_above_low() {
        let low = 1.0f64;
        let high = f64::from_bits(low.to_bits() + 1);
        let m = midpoint(low, high);
        assert!(low < m && m <= high);
        assert_eq!(midpoint(-1.0, 1.0), 0.0);
    }

    #[test]
    fn export_round_trip() {
        let tree = train_tree(&four_rows(), &TreeParams::default()).unwrap();
        let json = serde_json::to_string(&tree.export()).unwrap();
        let back: TreeExport = serde_json::from_str(&json).unwrap();
        assert_eq!(DecisionTree::from_export(&back).unwrap(), tree);
    }
}
