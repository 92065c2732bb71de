//! Tabular datasets: loading delimited text, validation, stratified splitting
//! and the ±1 label encoding used by the kernel machine.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::path::Path;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A labeled feature matrix.
///
/// Datasets built through [`Dataset::new`] or [`load_dataset`] satisfy the
/// full invariant set (finite values, dense labels, N ≥ 2, d ≥ 1, C ≥ 2).
/// Row subsets produced by [`Dataset::select_rows`] keep the class list of
/// their parent and may therefore miss a class.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Vec<usize>,
    feature_names: Vec<String>,
    class_names: Vec<String>,
    source_id: String,
}

impl Dataset {
    pub fn new(
        features: Array2<f64>,
        labels: Vec<usize>,
        feature_names: Vec<String>,
        class_names: Vec<String>,
        source_id: impl Into<String>,
    ) -> Result<Self> {
        let data = Self::from_parts(features, labels, feature_names, class_names, source_id)?;
        if data.n_samples() < 2 {
            return Err(Error::InvalidData("at least two samples are required".into()));
        }
        if data.n_classes() < 2 {
            return Err(Error::InvalidData(format!(
                "at least two distinct labels are required, found {}",
                data.n_classes()
            )));
        }
        let counts = data.class_counts();
        if let Some(missing) = counts.iter().position(|&c| c == 0) {
            return Err(Error::InvalidData(format!(
                "class id {missing} ('{}') has no samples",
                data.class_names[missing]
            )));
        }
        Ok(data)
    }

    /// Structural checks only (shapes, finiteness, label range).
    fn from_parts(
        features: Array2<f64>,
        labels: Vec<usize>,
        feature_names: Vec<String>,
        class_names: Vec<String>,
        source_id: impl Into<String>,
    ) -> Result<Self> {
        let (n, d) = features.dim();
        if labels.len() != n {
            return Err(Error::InvalidData(format!(
                "{} labels for {n} feature rows",
                labels.len()
            )));
        }
        if d == 0 {
            return Err(Error::InvalidData("dataset has no feature columns".into()));
        }
        if feature_names.len() != d {
            return Err(Error::InvalidData(format!(
                "{} feature names for {d} columns",
                feature_names.len()
            )));
        }
        if let Some(((row, col), _)) = features.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite value at row {row}, feature '{}'",
                feature_names[col]
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::InvalidData(format!(
                "label id {bad} out of range for {} classes",
                class_names.len()
            )));
        }
        Ok(Self {
            features: features.as_standard_layout().into_owned(),
            labels,
            feature_names,
            class_names,
            source_id: source_id.into(),
        })
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.n_features();
        &self.features.as_slice().expect("standard layout")[i * d..(i + 1) * d]
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.features.column(j).to_vec()
    }

    /// Rows in the given order; class list and schema are kept.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), rows),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
            source_id: self.source_id.clone(),
        }
    }

    /// Columns in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(1), columns).as_standard_layout().into_owned(),
            labels: self.labels.clone(),
            feature_names: columns.iter().map(|&c| self.feature_names[c].clone()).collect(),
            class_names: self.class_names.clone(),
            source_id: self.source_id.clone(),
        }
    }

    /// Same features with a new label vector and class list.
    pub fn relabel(&self, labels: Vec<usize>, class_names: Vec<String>) -> Result<Dataset> {
        Self::from_parts(
            self.features.clone(),
            labels,
            self.feature_names.clone(),
            class_names,
            self.source_id.clone(),
        )
    }

    /// Same labels with replaced feature values (shape must match).
    pub fn with_features(&self, features: Array2<f64>) -> Result<Dataset> {
        if features.dim() != self.features.dim() {
            return Err(Error::SchemaMismatch(format!(
                "feature matrix {:?} does not match {:?}",
                features.dim(),
                self.features.dim()
            )));
        }
        Self::from_parts(
            features,
            self.labels.clone(),
            self.feature_names.clone(),
            self.class_names.clone(),
            self.source_id.clone(),
        )
    }

    /// One-vs-rest view: `positive` becomes class 1, everything else class 0.
    pub fn one_vs_rest(&self, positive: usize) -> Dataset {
        let labels = self.labels.iter().map(|&l| usize::from(l == positive)).collect();
        let class_names = vec![
            format!("not {}", self.class_names[positive]),
            self.class_names[positive].clone(),
        ];
        Dataset {
            features: self.features.clone(),
            labels,
            feature_names: self.feature_names.clone(),
            class_names,
            source_id: self.source_id.clone(),
        }
    }

    pub fn ensure_same_schema(&self, other: &Dataset) -> Result<()> {
        if self.feature_names != other.feature_names {
            return Err(Error::SchemaMismatch(format!(
                "expected features {:?}, got {:?}",
                self.feature_names, other.feature_names
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

impl LabelColumn {
    /// A purely numeric spec is a column index unless a header has that name.
    pub fn parse(spec: &str) -> Self {
        match spec.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(spec.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NaPolicy {
    #[default]
    Fail,
    DropRow,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadOptions {
    pub label_column: LabelColumn,
    pub delimiter: u8,
    pub na_policy: NaPolicy,
}

impl LoadOptions {
    pub fn new(label_column: LabelColumn) -> Self {
        Self {
            label_column,
            delimiter: b',',
            na_policy: NaPolicy::Fail,
        }
    }
}

fn parse_cell(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Orders raw label strings: numerically when every label parses as a
/// number, lexicographically otherwise.
fn sort_raw_labels(raw: &BTreeSet<String>) -> Vec<String> {
    let mut labels: Vec<String> = raw.iter().cloned().collect();
    let numeric: Option<Vec<f64>> = labels.iter().map(|l| parse_cell(l)).collect();
    if let Some(values) = numeric {
        let mut paired: Vec<(f64, String)> = values.into_iter().zip(labels).collect();
        paired.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
        labels = paired.into_iter().map(|(_, l)| l).collect();
    }
    labels
}

/// Loads a delimited text file with a header row.
pub fn load_dataset(path: impl AsRef<Path>, options: &LoadOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let csv_err = |e: csv::Error| Error::Parse {
        row: e.position().map_or(0, |p| p.line() as usize),
        column: String::new(),
        message: e.to_string(),
    };
    let headers: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let label_idx = match &options.label_column {
        LabelColumn::Name(name) => headers.iter().position(|h| h == name),
        LabelColumn::Index(i) => headers
            .iter()
            .position(|h| h == &i.to_string())
            .or((*i < headers.len()).then_some(*i)),
    }
    .ok_or_else(|| {
        Error::InvalidData(format!(
            "label column {:?} not found in header {:?}",
            options.label_column, headers
        ))
    })?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    let d = feature_names.len();

    let mut values = Vec::new();
    let mut raw_labels = Vec::new();
    let mut dropped = 0usize;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let row_no = i + 2;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                row: row_no,
                column: String::new(),
                message: format!("expected {} cells, found {}", headers.len(), record.len()),
            });
        }
        let label = record[label_idx].trim();
        let mut row = Vec::with_capacity(d);
        let mut bad_column = None;
        if label.is_empty() || label == "?" {
            bad_column = Some(headers[label_idx].clone());
        }
        for (j, cell) in record.iter().enumerate() {
            if j == label_idx {
                continue;
            }
            match parse_cell(cell) {
                Some(v) => row.push(v),
                None => {
                    bad_column.get_or_insert_with(|| headers[j].clone());
                }
            }
        }
        if let Some(column) = bad_column {
            match options.na_policy {
                NaPolicy::Fail => {
                    return Err(Error::Parse {
                        row: row_no,
                        column,
                        message: "missing or non-numeric value".into(),
                    })
                }
                NaPolicy::DropRow => {
                    dropped += 1;
                    continue;
                }
            }
        }
        values.extend(row);
        raw_labels.push(label.to_string());
    }

    let distinct: BTreeSet<String> = raw_labels.iter().cloned().collect();
    let class_names = sort_raw_labels(&distinct);
    let labels: Vec<usize> = raw_labels
        .iter()
        .map(|l| class_names.iter().position(|c| c == l).expect("label seen"))
        .collect();
    let n = labels.len();
    let features = Array2::from_shape_vec((n, d), values).map_err(|e| Error::InvalidData(e.to_string()))?;
    let data = Dataset::new(features, labels, feature_names, class_names, path.display().to_string())?;
    log::info!(
        "loaded {}: N={} d={} class counts {:?} ({} rows dropped)",
        path.display(),
        data.n_samples(),
        data.n_features(),
        data.class_counts(),
        dropped
    );
    Ok(data)
}

/// A stratified train/test partition of one source dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPair {
    pub train: Dataset,
    pub test: Dataset,
    /// Source row indices, ascending.
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    pub seed: u64,
    pub train_fraction: f64,
    pub warnings: Vec<String>,
}

/// Per-class training count: `floor(fraction * n + 0.5)`, kept inside `[1, n - 1]`.
pub fn stratum_train_count(n: usize, fraction: f64) -> usize {
    let count = (fraction * n as f64 + 0.5).floor() as usize;
    count.clamp(1, n.saturating_sub(1).max(1))
}

pub fn stratified_split(data: &Dataset, train_fraction: f64, seed: u64) -> Result<SplitPair> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); data.n_classes()];
    for (i, &l) in data.labels().iter().enumerate() {
        by_class[l].push(i);
    }
    if let Some((class, rows)) = by_class.iter().enumerate().find(|(_, r)| r.len() < 2) {
        return Err(Error::InvalidData(format!(
            "class '{}' has {} sample(s); at least 2 are needed to split",
            data.class_names()[class],
            rows.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_rows = Vec::new();
    let mut test_rows = Vec::new();
    for rows in &mut by_class {
        let take = stratum_train_count(rows.len(), train_fraction);
        rows.shuffle(&mut rng);
        train_rows.extend_from_slice(&rows[..take]);
        test_rows.extend_from_slice(&rows[take..]);
    }
    train_rows.sort_unstable();
    test_rows.sort_unstable();
    let mut warnings = Vec::new();
    if train_rows.len() <= data.n_features() {
        let msg = format!(
            "training split has {} samples for {} features (N_train <= d)",
            train_rows.len(),
            data.n_features()
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }
    Ok(SplitPair {
        train: data.select_rows(&train_rows),
        test: data.select_rows(&test_rows),
        train_rows,
        test_rows,
        seed,
        train_fraction,
        warnings,
    })
}

/// Class 0 ↦ −1, class 1 ↦ +1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SignEncoding;

impl SignEncoding {
    pub fn encode(label: usize) -> f64 {
        if label == 1 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn decode(sign: f64) -> usize {
        usize::from(sign > 0.0)
    }
}

/// Labels of a binary dataset in {−1, +1}.
pub fn encode_sign_labels(data: &Dataset) -> Result<Vec<f64>> {
    if data.n_classes() != 2 {
        return Err(Error::InvalidData(format!(
            "sign encoding needs exactly 2 classes, found {}",
            data.n_classes()
        )));
    }
    Ok(data.labels().iter().map(|&l| SignEncoding::encode(l)).collect())
}

pub fn decode_sign_labels(signs: &[f64]) -> Vec<usize> {
    signs.iter().map(|&s| SignEncoding::decode(s)).collect()
}
