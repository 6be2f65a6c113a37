//! Pearson validation of discovered pairs.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::labeling::row_changes;
use crate::ranking::{Pair, PairSet};
use crate::sampler::SampleMatrix;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ValidationError {
    #[error("sequences have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 values, got {0}")]
    TooShort(usize),
    #[error("correlation is undefined: zero variance")]
    ZeroVariance,
    #[error("{0} is not in the sample matrix")]
    UnknownSymbol(String),
    #[error("{0} has missing samples")]
    Incomplete(String),
}

/// Pearson product-moment correlation. Zero variance in either input is an
/// error, never a silent 0.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, ValidationError> {
    if x.len() != y.len() {
        return Err(ValidationError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(ValidationError::TooShort(x.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 || x.windows(2).all(|w| w[0] == w[1]) || y.windows(2).all(|w| w[0] == w[1]) {
        return Err(ValidationError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationBasis {
    /// Sampled price levels.
    #[default]
    Prices,
    /// Step-to-step relative changes.
    Changes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationOptions {
    pub basis: CorrelationBasis,
    pub same_sector_only: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEntry {
    #[serde(flatten)]
    pub pair: Pair,
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excluded: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub n_pairs: usize,
    pub avg_r: Option<f64>,
    pub sd_r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub entries: Vec<PairEntry>,
    pub summary: ReportSummary,
    pub window: (f64, f64),
}

impl PairReport {
    /// r values of the pairs included in the summary.
    pub fn included_r(&self) -> Vec<f64> {
        self.entries.iter().filter_map(|e| e.r).collect()
    }

    /// One pair record per line, then the summary record.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for entry in &self.entries {
            serde_json::to_writer(&mut out, entry)?;
            out.write_all(b"\n")?;
        }
        serde_json::to_writer(&mut out, &self.summary)?;
        out.write_all(b"\n")
    }

    pub fn read_jsonl(text: &str) -> Result<(Vec<PairEntry>, ReportSummary), serde_json::Error> {
        let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        let (summary, entries) = match lines.split_last() {
            Some((last, rest)) => (serde_json::from_str(last)?, rest),
            None => (ReportSummary { n_pairs: 0, avg_r: None, sd_r: None }, &[][..]),
        };
        let entries = entries.iter().map(|l| serde_json::from_str(l)).collect::<Result<_, _>>()?;
        Ok((entries, summary))
    }
}

/// Mean and sample standard deviation (n - 1 denominator).
pub fn mean_and_sd(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.len() > 1).then(|| (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
    (Some(mean), sd)
}

fn series(matrix: &SampleMatrix, symbol: &str, basis: CorrelationBasis) -> Result<Vec<f64>, ValidationError> {
    let row = matrix.row_of(symbol).ok_or_else(|| ValidationError::UnknownSymbol(symbol.to_string()))?;
    let prices = matrix.complete_row(row).ok_or_else(|| ValidationError::Incomplete(symbol.to_string()))?;
    Ok(match basis {
        CorrelationBasis::Prices => prices,
        CorrelationBasis::Changes => row_changes(&prices),
    })
}

pub fn validate_pairs(
    pairs: &PairSet,
    matrix: &SampleMatrix,
    options: ValidationOptions,
) -> Result<PairReport, ValidationError> {
    let mut selected: Vec<&Pair> =
        pairs.pairs.iter().filter(|p| !options.same_sector_only || p.same_sector).collect();
    selected.sort_by_key(|p| p.pair_id);

    let mut entries = Vec::with_capacity(selected.len());
    for pair in selected {
        let x = series(matrix, &pair.a, options.basis)?;
        let y = series(matrix, &pair.b, options.basis)?;
        let (r, excluded) = match pearson(&x, &y) {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        };
        entries.push(PairEntry { pair: pair.clone(), r, excluded });
    }
    let rs: Vec<f64> = entries.iter().filter_map(|e| e.r).collect();
    let (avg_r, sd_r) = mean_and_sd(&rs);
    let window = (
        matrix.timestamps.first().copied().unwrap_or(f64::NAN),
        matrix.timestamps.last().copied().unwrap_or(f64::NAN),
    );
    Ok(PairReport { summary: ReportSummary { n_pairs: entries.len(), avg_r, sd_r }, entries, window })
}
