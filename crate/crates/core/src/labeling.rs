//! Change vectors and self-labels.
//!
//! Each complete price row `p_1..p_n` becomes `n-1` relative changes
//! `c_j = p_{j+1} / p_j - 1`, and the row's label is the plain sum of its
//! changes. The labeled rows feed the regression tree.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::sampler::SampleMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeMatrix {
    pub symbols: Vec<String>,
    /// `T{j+1}_T{j}` for each column.
    pub feature_names: Vec<String>,
    pub features: Vec<Vec<f64>>,
}

impl ChangeMatrix {
    pub fn n_rows(&self) -> usize {
        self.features.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub changes: ChangeMatrix,
    pub labels: Vec<f64>,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// `symbol,T2_T1,...,Tn_Tn-1,label`
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["symbol".to_string()];
        header.extend(self.changes.feature_names.iter().cloned());
        header.push("label".into());
        w.write_record(&header)?;
        for (i, symbol) in self.changes.symbols.iter().enumerate() {
            let mut row = vec![symbol.clone()];
            row.extend(self.changes.features[i].iter().map(|c| c.to_string()));
            row.push(self.labels[i].to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LabelingError {
    #[error("{symbol} has a missing sample at column {column}; filter the matrix first")]
    MissingCell { symbol: String, column: usize },
    #[error("need at least 2 samples, matrix has {0}")]
    TooFewSamples(usize),
}

pub fn feature_name(j: usize) -> String {
    format!("T{}_T{}", j + 2, j + 1)
}

/// Relative changes of one complete price row.
pub fn row_changes(prices: &[f64]) -> Vec<f64> {
    prices.windows(2).map(|w| w[1] / w[0] - 1.0).collect()
}

pub fn compute_changes(matrix: &SampleMatrix) -> Result<ChangeMatrix, LabelingError> {
    let n = matrix.n_samples();
    if n < 2 {
        return Err(LabelingError::TooFewSamples(n));
    }
    let features = matrix
        .values
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let prices: Vec<f64> = row
                .iter()
                .enumerate()
                .map(|(j, v)| {
                    v.ok_or_else(|| LabelingError::MissingCell { symbol: matrix.symbols[i].clone(), column: j })
                })
                .collect::<Result<_, _>>()?;
            Ok(row_changes(&prices))
        })
        .collect::<Result<Vec<_>, LabelingError>>()?;
    Ok(ChangeMatrix {
        symbols: matrix.symbols.clone(),
        feature_names: (0..n - 1).map(feature_name).collect(),
        features,
    })
}

pub fn self_label(changes: ChangeMatrix) -> LabeledDataset {
    let labels = changes.features.iter().map(|row| row.iter().sum()).collect();
    LabeledDataset { changes, labels }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sector::Sector;

    fn matrix(rows: Vec<Vec<f64>>) -> SampleMatrix {
        SampleMatrix {
            symbols: (0..rows.len()).map(|i| format!("S{i}")).collect(),
            sectors: vec![Sector::Financial; rows.len()],
            timestamps: (0..rows[0].len()).map(|j| j as f64).collect(),
            values: rows.into_iter().map(|r| r.into_iter().map(Some).collect()).collect(),
        }
    }

    #[test]
    fn two_percent_up_then_down() {
        let c = compute_changes(&matrix(vec![vec![100.0, 102.0, 99.96]])).unwrap();
        assert_eq!(c.feature_names, vec!["T2_T1", "T3_T2"]);
        assert!((c.features[0][0] - 0.02).abs() < 1e-12);
        assert!((c.features[0][1] + 0.02).abs() < 1e-12);
    }

    #[test]
    fn constant_row_has_zero_changes_and_label() {
        let c = compute_changes(&matrix(vec![vec![5.0, 5.0, 5.0]])).unwrap();
        assert_eq!(c.features[0], vec![0.0, 0.0]);
        assert_eq!(self_label(c).labels, vec![0.0]);
    }

    #[test]
    fn label_is_row_sum() {
        let changes = ChangeMatrix {
            symbols: vec!["A".into(), "B".into()],
            feature_names: (0..3).map(feature_name).collect(),
            features: vec![vec![0.01, 0.02, -0.005], vec![-0.01, -0.02, 0.005]],
        };
        let d = self_label(changes);
        assert!((d.labels[0] - 0.025).abs() < 1e-15);
        assert_eq!(d.labels[1], -d.labels[0]);
    }

    #[test]
    fn missing_cell_is_a_contract_violation() {
        let mut m = matrix(vec![vec![1.0, 2.0, 3.0]]);
        m.values[0][1] = None;
        assert_eq!(
            compute_changes(&m),
            Err(LabelingError::MissingCell { symbol: "S0".into(), column: 1 })
        );
        let single = matrix(vec![vec![1.0]]);
        assert_eq!(compute_changes(&single), Err(LabelingError::TooFewSamples(1)));
    }

    #[test]
    fn dataset_csv_layout() {
        let d = self_label(compute_changes(&matrix(vec![vec![4.0, 5.0, 4.0]])).unwrap());
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "symbol,T2_T1,T3_T2,label\nS0,0.25,-0.19999999999999996,0.050000000000000044\n");
    }
}
