//! Labeled vector data: CSV ingestion, standardization, stratified folds and
//! per-class views.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimensions whose standard deviation falls below this are treated as constant.
pub const CONSTANT_STDDEV: f64 = 1e-12;

/// Feature matrix plus contiguous class ids.
#[derive(Debug, Clone)]
pub struct Dataset {
    /// `N × D`, one sample per row.
    pub features: DMatrix<f64>,
    /// Class id per sample, in `0..C`.
    pub labels: Vec<usize>,
    pub class_counts: Vec<usize>,
    /// Original label string for each class id.
    pub label_names: Vec<String>,
}

/// Which CSV column carries the label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

impl Default for LabelColumn {
    fn default() -> Self {
        LabelColumn::Name("label".to_string())
    }
}

impl std::fmt::Display for LabelColumn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LabelColumn::Index(i) => write!(f, "#{i}"),
            LabelColumn::Name(n) => write!(f, "{n:?}"),
        }
    }
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

impl Dataset {
    /// Builds a dataset from raw label strings, encoding them to `0..C`.
    ///
    /// Labels are ordered numerically when every label parses as a number,
    /// lexicographically otherwise.
    pub fn from_labeled(features: DMatrix<f64>, raw_labels: &[String]) -> Result<Self> {
        if features.nrows() != raw_labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.nrows(),
                actual: raw_labels.len(),
            });
        }
        if raw_labels.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut names: Vec<String> = raw_labels.to_vec();
        names.sort();
        names.dedup();
        if names.iter().all(|n| n.parse::<f64>().is_ok()) {
            names.sort_by(|a, b| {
                let (a, b) = (a.parse::<f64>().unwrap(), b.parse::<f64>().unwrap());
                a.total_cmp(&b)
            });
        }
        let index: BTreeMap<&str, usize> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        let labels = raw_labels.iter().map(|l| index[l.as_str()]).collect();
        Self::new(features, labels, names)
    }

    /// Builds a dataset from already-encoded class ids.
    pub fn new(features: DMatrix<f64>, labels: Vec<usize>, label_names: Vec<String>) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.nrows(),
                actual: labels.len(),
            });
        }
        if labels.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n_classes = label_names.len();
        let mut class_counts = vec![0usize; n_classes];
        for &l in &labels {
            if l >= n_classes {
                return Err(Error::InvalidArgument(format!(
                    "label {l} outside 0..{n_classes}"
                )));
            }
            class_counts[l] += 1;
        }
        if let Some(c) = class_counts.iter().position(|&n| n == 0) {
            return Err(Error::ClassCoverage { class: c });
        }
        for (i, row) in features.row_iter().enumerate() {
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::Parse {
                    row: i,
                    column: j,
                    message: "non-finite feature value".into(),
                });
            }
        }
        Ok(Dataset {
            features,
            labels,
            class_counts,
            label_names,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_counts.len()
    }

    /// Rows selected by `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> DMatrix<f64> {
        self.features.select_rows(indices)
    }

    pub fn select_labels(&self, indices: &[usize]) -> Vec<usize> {
        indices.iter().map(|&i| self.labels[i]).collect()
    }
}

/// Options for [`load_csv`].
#[derive(Debug, Clone, Default)]
pub struct CsvOptions {
    pub label_column: LabelColumn,
    /// `None` detects a header: the first record is a header when any of its
    /// non-label fields fails to parse as a number.
    pub has_header: Option<bool>,
}

/// Loads a comma-separated dataset. Every non-label field must be a finite real.
pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, options)
}

/// [`load_csv`] on in-memory text.
pub fn parse_csv(text: &str, options: &CsvOptions) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        records.push(record);
    }
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let width = records[0].len();
    let has_header = match options.has_header {
        Some(h) => h,
        None => {
            let first = &records[0];
            let label_idx = match &options.label_column {
                LabelColumn::Index(i) => Some(*i),
                LabelColumn::Name(n) => first.iter().position(|f| f == n),
            };
            // A named label column that appears in the first row is a header.
            matches!(options.label_column, LabelColumn::Name(_)) && label_idx.is_some()
                || first
                    .iter()
                    .enumerate()
                    .any(|(j, f)| Some(j) != label_idx && f.parse::<f64>().is_err())
        }
    };

    let label_idx = match &options.label_column {
        LabelColumn::Index(i) => {
            if *i >= width {
                return Err(Error::MissingLabelColumn(options.label_column.to_string()));
            }
            *i
        }
        LabelColumn::Name(name) => {
            if !has_header {
                return Err(Error::MissingLabelColumn(format!(
                    "{name:?} (file has no header)"
                )));
            }
            records[0]
                .iter()
                .position(|f| f == name)
                .ok_or_else(|| Error::MissingLabelColumn(options.label_column.to_string()))?
        }
    };

    let body = if has_header { &records[1..] } else { &records[..] };
    if body.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let first_data_row = usize::from(has_header);
    let n_features = width - 1;
    let mut values = Vec::with_capacity(body.len() * n_features);
    let mut raw_labels = Vec::with_capacity(body.len());
    for (i, record) in body.iter().enumerate() {
        let row = i + first_data_row;
        if record.len() != width {
            return Err(Error::Parse {
                row,
                column: record.len(),
                message: format!("expected {width} fields, found {}", record.len()),
            });
        }
        for (j, field) in record.iter().enumerate() {
            if j == label_idx {
                if field.is_empty() {
                    return Err(Error::Parse {
                        row,
                        column: j,
                        message: "missing label".into(),
                    });
                }
                raw_labels.push(field.to_string());
                continue;
            }
            if field.is_empty() {
                return Err(Error::Parse {
                    row,
                    column: j,
                    message: "missing value".into(),
                });
            }
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                row,
                column: j,
                message: format!("cannot parse {field:?} as a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: j,
                    message: format!("non-finite value {field:?}"),
                });
            }
            values.push(v);
        }
    }
    let features = DMatrix::from_row_slice(body.len(), n_features, &values);
    Dataset::from_labeled(features, &raw_labels)
}

/// Per-dimension affine normalization fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    /// Population standard deviation; `1.0` for constant dimensions.
    pub stddevs: Vec<f64>,
    pub constant: Vec<bool>,
}

/// Fits means and population standard deviations over the rows of `train`.
pub fn fit_standardizer(train: &DMatrix<f64>) -> Result<Standardizer> {
    let n = train.nrows();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "standardizer needs at least 2 rows, got {n}"
        )));
    }
    let mut means = Vec::with_capacity(train.ncols());
    let mut stddevs = Vec::with_capacity(train.ncols());
    let mut constant = Vec::with_capacity(train.ncols());
    for col in train.column_iter() {
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let sd = var.sqrt();
        let is_const = sd < CONSTANT_STDDEV;
        means.push(mean);
        stddevs.push(if is_const { 1.0 } else { sd });
        constant.push(is_const);
    }
    Ok(Standardizer {
        means,
        stddevs,
        constant,
    })
}

impl Standardizer {
    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn apply(&self, data: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check(data)?;
        Ok(DMatrix::from_fn(data.nrows(), data.ncols(), |i, j| {
            (data[(i, j)] - self.means[j]) / self.stddevs[j]
        }))
    }

    pub fn invert(&self, data: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check(data)?;
        Ok(DMatrix::from_fn(data.nrows(), data.ncols(), |i, j| {
            data[(i, j)] * self.stddevs[j] + self.means[j]
        }))
    }

    fn check(&self, data: &DMatrix<f64>) -> Result<()> {
        if data.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: data.ncols(),
            });
        }
        Ok(())
    }
}

/// Free-function form of [`Standardizer::apply`].
pub fn apply_standardizer(s: &Standardizer, data: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    s.apply(data)
}

/// Stratified fold assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub fold_of_sample: Vec<usize>,
    pub folds: usize,
    pub seed: u64,
}

/// Assigns samples to `k` folds, class by class.
///
/// Each class is shuffled with a ChaCha8 stream seeded by `seed` and dealt
/// round-robin; the dealing position carries over between classes so total
/// fold sizes stay balanced too.
pub fn make_folds(labels: &[usize], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("fold count must be >= 2, got {k}")));
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of_sample = vec![0usize; labels.len()];
    let mut next = 0usize;
    for idx in members.iter_mut() {
        idx.shuffle(&mut rng);
        for &i in idx.iter() {
            fold_of_sample[i] = next % k;
            next += 1;
        }
    }
    let plan = FoldPlan {
        fold_of_sample,
        folds: k,
        seed,
    };
    for warning in plan.coverage_warnings(labels) {
        log::warn!("{warning}");
    }
    Ok(plan)
}

impl FoldPlan {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of_sample.len())
            .filter(|&i| self.fold_of_sample[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of_sample.len())
            .filter(|&i| self.fold_of_sample[i] != fold)
            .collect()
    }

    /// Count of samples of `class` in `fold`.
    pub fn count(&self, labels: &[usize], class: usize, fold: usize) -> usize {
        self.fold_of_sample
            .iter()
            .zip(labels)
            .filter(|(&f, &l)| f == fold && l == class)
            .count()
    }

    /// One message per (class, fold) whose training split lacks that class.
    pub fn coverage_warnings(&self, labels: &[usize]) -> Vec<String> {
        let n_classes = labels.iter().max().map_or(0, |m| m + 1);
        let mut totals = vec![0usize; n_classes];
        for &l in labels {
            totals[l] += 1;
        }
        let mut out = Vec::new();
        for fold in 0..self.folds {
            for (class, &total) in totals.iter().enumerate() {
                if total > 0 && self.count(labels, class, fold) == total {
                    out.push(format!(
                        "class {class} is absent from the training split of fold {fold}"
                    ));
                }
            }
        }
        out
    }
}

/// Training samples grouped by class.
#[derive(Debug, Clone)]
pub struct ClassPartition {
    /// `D × N_c` per class, columns in original row order.
    pub samples: Vec<DMatrix<f64>>,
    /// Row index (into the matrix that was partitioned) of each column.
    pub indices: Vec<Vec<usize>>,
}

/// Splits rows of `features` by class id. Every class in `0..n_classes` must
/// have at least one row.
pub fn partition_by_class(
    features: &DMatrix<f64>,
    labels: &[usize],
    n_classes: usize,
) -> Result<ClassPartition> {
    if features.nrows() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: features.nrows(),
            actual: labels.len(),
        });
    }
    let mut indices: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        if l >= n_classes {
            return Err(Error::InvalidArgument(format!(
                "label {l} outside 0..{n_classes}"
            )));
        }
        indices[l].push(i);
    }
    if let Some(class) = indices.iter().position(Vec::is_empty) {
        return Err(Error::ClassCoverage { class });
    }
    let samples = indices
        .iter()
        .map(|idx| features.select_rows(idx).transpose())
        .collect();
    Ok(ClassPartition { samples, indices })
}

impl ClassPartition {
    pub fn n_classes(&self) -> usize {
        self.samples.len()
    }

    pub fn dim(&self) -> usize {
        self.samples[0].nrows()
    }

    pub fn class_size(&self, c: usize) -> usize {
        self.samples[c].ncols()
    }

    pub fn n_samples(&self) -> usize {
        self.samples.iter().map(|x| x.ncols()).sum()
    }

    pub fn class_mean(&self, c: usize) -> DVector<f64> {
        let x = &self.samples[c];
        x.column_sum() / x.ncols() as f64
    }

    /// Scatters the columns back into an `N × D` row matrix.
    pub fn reassemble(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n_samples(), self.dim());
        for (x, idx) in self.samples.iter().zip(&self.indices) {
            for (col, &row) in idx.iter().enumerate() {
                out.row_mut(row).copy_from(&x.column(col).transpose());
            }
        }
        out
    }
}
