//! Classification stage glue: filter → changes → labels → tree → rankings → pairs.

use std::collections::HashMap;

use crate::dtree::{train_tree, DecisionTree, TreeError, TreeParams};
use crate::labeling::{compute_changes, self_label, LabeledDataset, LabelingError};
use crate::ranking::{form_pairs, rank_all, PairPolicy, PairSet, RankedList, RankingError};
use crate::sampler::{filter_incomplete, Dropped, SampleMatrix, SamplingError};

#[derive(Debug, thiserror::Error)]
pub enum ClassifyError {
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Labeling(#[from] LabelingError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Ranking(#[from] RankingError),
}

#[derive(Debug, Clone)]
pub struct Classification {
    /// Surviving cohort.
    pub matrix: SampleMatrix,
    pub dropped: Vec<Dropped>,
    pub dataset: LabeledDataset,
    pub tree: DecisionTree,
    pub rankings: Vec<RankedList>,
    pub pairs: PairSet,
}

pub fn classify(matrix: &SampleMatrix, params: &TreeParams, policy: &PairPolicy) -> Result<Classification, ClassifyError> {
    params.validate()?;
    policy.validate()?;
    let filtered = filter_incomplete(matrix)?;
    let dataset = self_label(compute_changes(&filtered.matrix)?);
    let tree = train_tree(&dataset, params)?;
    let rankings = rank_all(&tree);
    let sectors: HashMap<String, _> = filtered
        .matrix
        .symbols
        .iter()
        .cloned()
        .zip(filtered.matrix.sectors.iter().copied())
        .collect();
    let pairs = form_pairs(&rankings, policy, &sectors)?;
    Ok(Classification { matrix: filtered.matrix, dropped: filtered.dropped, dataset, tree, rankings, pairs })
}
