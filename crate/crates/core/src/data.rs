//! Dataset ingestion (CSV), z-score normalization fitted on the train
//! split only, and seeded 70/30 splitting.

use std::path::Path;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::seed::{stream_rng, STREAM_SPLIT};

/// Columns whose population std falls at or below this (relative to
/// the mean magnitude) are treated as constant and dropped.
const ZERO_VARIANCE_EPS: f64 = 1e-12;

/// How the target column is selected from a CSV file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetColumn {
    Last,
    Named(String),
}

impl TargetColumn {
    pub fn parse(spec: &str) -> TargetColumn {
        if spec == "last" {
            TargetColumn::Last
        } else {
            TargetColumn::Named(spec.to_string())
        }
    }
}

/// Parsed numeric table before any preprocessing.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub feature_names: Vec<String>,
    pub target_name: String,
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl RawTable {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn feature_count(&self) -> usize {
        self.feature_names.len()
    }
}

/// Loads a comma- or semicolon-delimited numeric CSV (delimiter
/// auto-detected from the header line). Non-numeric cells are rejected
/// with the 1-based data row named in the error.
pub fn load_csv(path: &Path, target: &TargetColumn) -> Result<RawTable> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::data(format!("cannot read dataset `{}`: {e}", path.display())))?;
    let header_line = text.lines().next().unwrap_or("");
    let delimiter = if header_line.matches(';').count() > header_line.matches(',').count() {
        b';'
    } else {
        b','
    };

    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::data(format!("cannot parse header of `{}`: {e}", path.display())))?
        .iter()
        .map(|h| h.to_string())
        .collect();
    if headers.len() < 2 {
        return Err(Error::data(format!(
            "`{}` needs at least one feature column and a target",
            path.display()
        )));
    }

    let target_idx = match target {
        TargetColumn::Last => headers.len() - 1,
        TargetColumn::Named(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::data(format!("target column `{name}` not found")))?,
    };

    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != target_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut features = Vec::new();
    let mut targets = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let row_no = row_idx + 1;
        let record =
            record.map_err(|e| Error::data(format!("row {row_no}: malformed record: {e}")))?;
        if record.len() != headers.len() {
            return Err(Error::data(format!(
                "row {row_no}: has {} cells, header has {}",
                record.len(),
                headers.len()
            )));
        }
        let mut row = Vec::with_capacity(headers.len() - 1);
        let mut target_value = f64::NAN;
        for (col, cell) in record.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| {
                Error::data(format!(
                    "row {row_no}: column `{}` value `{cell}` is not numeric",
                    headers[col]
                ))
            })?;
            if !value.is_finite() {
                return Err(Error::data(format!(
                    "row {row_no}: column `{}` value `{cell}` is not finite",
                    headers[col]
                )));
            }
            if col == target_idx {
                target_value = value;
            } else {
                row.push(value);
            }
        }
        features.push(row);
        targets.push(target_value);
    }
    if targets.is_empty() {
        return Err(Error::data(format!(
            "`{}` contains a header but no data rows",
            path.display()
        )));
    }
    Ok(RawTable {
        feature_names,
        target_name: headers[target_idx].clone(),
        features,
        targets,
    })
}

/// Seeded uniform shuffle; the first `ceil(ratio * N)` rows form the
/// train table. Deterministic per seed (the shuffle draws from the
/// split stream of the master seed).
pub fn split(table: &RawTable, ratio: f64, seed: u64) -> Result<(RawTable, RawTable)> {
    if !(0.0 < ratio && ratio < 1.0) {
        return Err(Error::config(format!("split ratio must be in (0, 1), got {ratio}")));
    }
    let n = table.len();
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut stream_rng(seed, STREAM_SPLIT));
    let n_train = ((ratio * n as f64).ceil() as usize).min(n);

    let pick = |idx: &[usize]| RawTable {
        feature_names: table.feature_names.clone(),
        target_name: table.target_name.clone(),
        features: idx.iter().map(|&i| table.features[i].clone()).collect(),
        targets: idx.iter().map(|&i| table.targets[i]).collect(),
    };
    Ok((pick(&indices[..n_train]), pick(&indices[n_train..])))
}

/// Z-score statistics fitted on a train split, with the surviving
/// column selection. Applies to any table with the same original
/// column count.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalization {
    /// Indices of retained columns in the original feature order.
    pub kept_columns: Vec<usize>,
    pub original_feature_count: usize,
    /// Per retained column.
    pub feature_means: Vec<f64>,
    pub feature_stds: Vec<f64>,
    pub target_mean: f64,
    pub target_std: f64,
}

impl Normalization {
    /// No-op normalization over `m` columns (test helper and
    /// already-normalized data).
    pub fn identity(m: usize) -> Normalization {
        Normalization {
            kept_columns: (0..m).collect(),
            original_feature_count: m,
            feature_means: vec![0.0; m],
            feature_stds: vec![1.0; m],
            target_mean: 0.0,
            target_std: 1.0,
        }
    }

    pub fn normalize_target(&self, y: f64) -> f64 {
        (y - self.target_mean) / self.target_std
    }

    pub fn denormalize_target(&self, z: f64) -> f64 {
        z * self.target_std + self.target_mean
    }

    pub fn normalize_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.original_feature_count {
            return Err(Error::shape(format!(
                "row has {} features, normalization fitted on {}",
                row.len(),
                self.original_feature_count
            )));
        }
        Ok(self
            .kept_columns
            .iter()
            .enumerate()
            .map(|(j, &col)| (row[col] - self.feature_means[j]) / self.feature_stds[j])
            .collect())
    }

    /// Normalizes a whole table into a model-ready dataset.
    pub fn apply(&self, table: &RawTable) -> Result<Dataset> {
        let mut features = Vec::with_capacity(table.len());
        for row in &table.features {
            features.push(self.normalize_row(row)?);
        }
        let targets = table.targets.iter().map(|&y| self.normalize_target(y)).collect();
        Ok(Dataset { features, targets, normalization: self.clone() })
    }
}

/// Normalized feature matrix and target vector, with the statistics
/// that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub normalization: Normalization,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.features.first().map(|r| r.len()).unwrap_or(0)
    }
}

fn population_stats(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    (mean, var.sqrt())
}

/// Fits z-score statistics on the train table only and applies them to
/// both tables. Constant train columns are dropped from both; the
/// returned list names them so callers can warn.
pub fn zscore_fit_apply(
    train: &RawTable,
    test: &RawTable,
) -> Result<(Dataset, Dataset, Vec<String>)> {
    if train.is_empty() {
        return Err(Error::data("train split is empty".to_string()));
    }
    if train.feature_count() != test.feature_count() {
        return Err(Error::shape(format!(
            "train has {} feature columns, test has {}",
            train.feature_count(),
            test.feature_count()
        )));
    }
    let n = train.len();
    let m = train.feature_count();

    let mut kept_columns = Vec::new();
    let mut feature_means = Vec::new();
    let mut feature_stds = Vec::new();
    let mut dropped = Vec::new();
    for col in 0..m {
        let (mean, std) = population_stats(train.features.iter().map(|r| r[col]), n);
        if std <= ZERO_VARIANCE_EPS * (1.0 + mean.abs()) {
            dropped.push(train.feature_names[col].clone());
        } else {
            kept_columns.push(col);
            feature_means.push(mean);
            feature_stds.push(std);
        }
    }
    if kept_columns.is_empty() {
        return Err(Error::data(
            "every feature column has zero variance on the train split".to_string(),
        ));
    }

    let (target_mean, target_std) = population_stats(train.targets.iter().copied(), n);
    if target_std <= ZERO_VARIANCE_EPS * (1.0 + target_mean.abs()) {
        return Err(Error::data("target has zero variance on the train split".to_string()));
    }

    let normalization = Normalization {
        kept_columns,
        original_feature_count: m,
        feature_means,
        feature_stds,
        target_mean,
        target_std,
    };
    let train_ds = normalization.apply(train)?;
    let test_ds = normalization.apply(test)?;
    Ok((train_ds, test_ds, dropped))
}
