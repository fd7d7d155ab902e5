//! Cross-validated training and evaluation of every variant, plus
//! multi-dataset comparison reports.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{accuracy, fit_centroids, CentroidModel, CentroidSource};
use crate::dataset::{
    fit_standardizer, load_csv, make_folds, partition_by_class, ClassPartition, CsvOptions, Dataset, FoldPlan,
    LabelColumn, Standardizer,
};
use crate::error::{Error, Result};
use crate::graph::{GraphKind, KernelKind};
use crate::saliency::{all_class_saliency, class_representation, SaliencyResult};
use crate::scatter::{build_pair, ClassStats, ScatterPair, Variant};
use crate::solver::{solve_fisher, Projection};

/// Where standardization statistics come from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StandardizeMode {
    /// Fit on each training split only.
    #[default]
    PerFold,
    /// Fit once on the whole dataset, test rows included.
    Leaky,
}

fn default_variants() -> Vec<Variant> {
    let mut v = Variant::baselines();
    v.extend(Variant::all_swlda());
    v
}

fn default_graphs() -> Vec<GraphKind> {
    vec![GraphKind::Full]
}

fn default_folds() -> usize {
    5
}

/// Everything a cross-validation run needs, loadable from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    /// Report key for the dataset; defaults to the file stem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub label_column: LabelColumn,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub has_header: Option<bool>,
    #[serde(default = "default_variants")]
    pub variants: Vec<Variant>,
    #[serde(default = "default_graphs")]
    pub graphs: Vec<GraphKind>,
    #[serde(default)]
    pub kernel: KernelKind,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<usize>,
    #[serde(default)]
    pub standardize: StandardizeMode,
    /// Overrides the per-variant centroid choice.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centroid: Option<CentroidSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predictions: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dump_saliency: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(dataset: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            dataset: dataset.into(),
            name: None,
            label_column: LabelColumn::default(),
            has_header: None,
            variants: default_variants(),
            graphs: default_graphs(),
            kernel: KernelKind::default(),
            folds: default_folds(),
            seed: 0,
            epsilon: 0.0,
            dims: None,
            standardize: StandardizeMode::default(),
            centroid: None,
            output: None,
            predictions: None,
            dump_saliency: None,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: ExperimentConfig = serde_json::from_str(&text)?;
        // Relative dataset paths are resolved against the config file.
        if config.dataset.is_relative() {
            if let Some(dir) = path.parent() {
                config.dataset = dir.join(&config.dataset);
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::InvalidArgument(format!("folds must be >= 2, got {}", self.folds)));
        }
        if self.variants.is_empty() {
            return Err(Error::InvalidArgument("no variants selected".into()));
        }
        if self.graphs.is_empty() {
            return Err(Error::InvalidArgument("no graph kinds selected".into()));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if self.dims == Some(0) {
            return Err(Error::InvalidArgument("dims must be >= 1".into()));
        }
        Ok(())
    }

    pub fn dataset_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            self.dataset
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".into())
        })
    }

    /// `(variant, graph)` cells in report order. Variants that never touch a
    /// class graph get a single cell with no graph.
    pub fn cells(&self) -> Vec<CellKey> {
        let mut out = Vec::new();
        for &variant in &self.variants {
            if self.uses_graph(variant) {
                for &graph in &self.graphs {
                    out.push(CellKey {
                        variant,
                        graph: Some(graph),
                    });
                }
            } else {
                out.push(CellKey { variant, graph: None });
            }
        }
        out.dedup();
        out
    }

    fn uses_graph(&self, variant: Variant) -> bool {
        variant.needs_saliency() || self.centroid == Some(CentroidSource::Weighted)
    }

    pub fn train_options(&self, graph: Option<GraphKind>) -> TrainOptions {
        TrainOptions {
            graph: graph.unwrap_or(GraphKind::Full),
            kernel: self.kernel,
            epsilon: self.epsilon,
            dims: self.dims,
            centroid: self.centroid,
        }
    }
}

/// One row of a result table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellKey {
    pub variant: Variant,
    pub graph: Option<GraphKind>,
}

impl CellKey {
    fn graph_label(&self) -> String {
        self.graph.map_or_else(|| "-".to_string(), |g| g.to_string())
    }
}

/// Per-model settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub graph: GraphKind,
    pub kernel: KernelKind,
    pub epsilon: f64,
    pub dims: Option<usize>,
    pub centroid: Option<CentroidSource>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            graph: GraphKind::Full,
            kernel: KernelKind::Paper,
            epsilon: 0.0,
            dims: None,
            centroid: None,
        }
    }
}

/// A fitted discriminant with its classifier.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub variant: Variant,
    pub pair: ScatterPair,
    pub model: CentroidModel,
    pub saliency: Option<Vec<SaliencyResult>>,
}

impl TrainedModel {
    pub fn projection(&self) -> &Projection {
        &self.model.projection
    }

    pub fn predict(&self, samples: &DMatrix<f64>) -> Result<Vec<usize>> {
        self.model.predict(samples)
    }
}

/// Centroid source used when no override is given: the representation the
/// variant's between-class scatter is built on.
pub fn default_centroid(variant: Variant) -> CentroidSource {
    if variant.uses_weighted_representation() {
        CentroidSource::Weighted
    } else {
        CentroidSource::Mean
    }
}

/// Trains `variant` on already-standardized rows. Every class in
/// `0..n_classes` must be present.
pub fn train(
    features: &DMatrix<f64>,
    labels: &[usize],
    n_classes: usize,
    variant: Variant,
    opts: &TrainOptions,
) -> Result<TrainedModel> {
    let partition = partition_by_class(features, labels, n_classes)?;
    let source = opts.centroid.unwrap_or_else(|| default_centroid(variant));
    let saliency = if variant.needs_saliency() || source == CentroidSource::Weighted {
        Some(all_class_saliency(&partition, opts.graph, opts.kernel, opts.epsilon)?)
    } else {
        None
    };
    fit_model(&partition, variant, saliency, opts)
}

/// Trains from a partition with caller-supplied saliency weights.
pub fn fit_model(
    partition: &ClassPartition,
    variant: Variant,
    saliency: Option<Vec<SaliencyResult>>,
    opts: &TrainOptions,
) -> Result<TrainedModel> {
    let stats = ClassStats::from_partition(partition);
    let pair = build_pair(variant, partition, &stats, saliency.as_deref())?;
    let projection = solve_fisher(&pair, opts.dims, opts.epsilon)?;
    let source = opts.centroid.unwrap_or_else(|| default_centroid(variant));
    let reps: Vec<DVector<f64>> = match (source, &saliency) {
        (CentroidSource::Mean, _) => stats.means.clone(),
        (CentroidSource::Weighted, Some(s)) => s.iter().map(class_representation).collect(),
        (CentroidSource::Weighted, None) => {
            return Err(Error::InvalidArgument(
                "weighted centroids need saliency weights".into(),
            ))
        }
    };
    let model = fit_centroids(projection, &reps, source)?;
    Ok(TrainedModel {
        variant,
        pair,
        model,
        saliency,
    })
}

/// Standardized train/test split of one fold.
#[derive(Debug, Clone)]
pub struct FoldData {
    pub fold: usize,
    pub train_x: DMatrix<f64>,
    pub train_y: Vec<usize>,
    pub test_x: DMatrix<f64>,
    pub test_y: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub standardizer: Standardizer,
}

impl FoldData {
    /// Splits `dataset` by `plan`. With `global` set, that standardizer is
    /// used instead of one fitted on the training rows.
    pub fn prepare(dataset: &Dataset, plan: &FoldPlan, fold: usize, global: Option<&Standardizer>) -> Result<Self> {
        let train_idx = plan.train_indices(fold);
        let test_indices = plan.test_indices(fold);
        let raw_train = dataset.select_rows(&train_idx);
        let standardizer = match global {
            Some(s) => s.clone(),
            None => fit_standardizer(&raw_train)?,
        };
        Ok(FoldData {
            fold,
            train_x: standardizer.apply(&raw_train)?,
            train_y: dataset.select_labels(&train_idx),
            test_x: standardizer.apply(&dataset.select_rows(&test_indices))?,
            test_y: dataset.select_labels(&test_indices),
            test_indices,
            standardizer,
        })
    }
}

/// Accuracies of one `(variant, graph)` cell across folds.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub key: CellKey,
    /// Empty when the cell failed.
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: Option<f64>,
    pub error: Option<String>,
    /// Total training + prediction seconds over all folds.
    pub wall_time: f64,
}

/// Cross-validation results of one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub dataset: String,
    pub folds: usize,
    pub rows: Vec<ResultRow>,
}

/// One test-sample prediction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionRecord {
    pub key: CellKey,
    pub fold: usize,
    pub sample_index: usize,
    pub true_label: usize,
    pub predicted_label: usize,
}

/// Saliency weights of one class in one fold, for debugging dumps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SaliencyDump {
    pub fold: usize,
    pub graph: GraphKind,
    pub class: String,
    pub sample_indices: Vec<usize>,
    pub p: Vec<f64>,
    pub regularized: bool,
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub table: ResultTable,
    pub predictions: Vec<PredictionRecord>,
    pub saliency: Vec<SaliencyDump>,
    pub fold_plan: FoldPlan,
}

/// Loads the configured dataset and runs cross-validation, writing any
/// configured output files.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let dataset = load_csv(
        &config.dataset,
        &CsvOptions {
            label_column: config.label_column.clone(),
            has_header: config.has_header,
        },
    )?;
    let out = run_on_dataset(config, &dataset)?;
    if let Some(path) = &config.output {
        write_file(path, &out.table.to_csv()?)?;
    }
    if let Some(path) = &config.predictions {
        write_file(path, &predictions_csv(&out.predictions, &dataset)?)?;
    }
    if let Some(path) = &config.dump_saliency {
        write_file(path, &serde_json::to_string_pretty(&out.saliency)?)?;
    }
    Ok(out)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

struct FoldOutcome {
    cells: Vec<(Result<f64>, f64)>,
    predictions: Vec<PredictionRecord>,
    saliency: Vec<SaliencyDump>,
}

/// Cross-validation on an in-memory dataset; `config.dataset` is not read.
pub fn run_on_dataset(config: &ExperimentConfig, dataset: &Dataset) -> Result<RunOutput> {
    config.validate()?;
    let plan = make_folds(&dataset.labels, config.folds, config.seed)?;
    let global = match config.standardize {
        StandardizeMode::PerFold => None,
        StandardizeMode::Leaky => Some(fit_standardizer(&dataset.features)?),
    };
    let cells = config.cells();
    let want_dump = config.dump_saliency.is_some();

    let outcomes: Vec<Result<FoldOutcome>> = (0..config.folds)
        .into_par_iter()
        .map(|fold| {
            let data = FoldData::prepare(dataset, &plan, fold, global.as_ref())?;
            let mut out = FoldOutcome {
                cells: Vec::with_capacity(cells.len()),
                predictions: Vec::new(),
                saliency: Vec::new(),
            };
            for key in &cells {
                let start = Instant::now();
                let result = train(
                    &data.train_x,
                    &data.train_y,
                    dataset.n_classes(),
                    key.variant,
                    &config.train_options(key.graph),
                )
                .and_then(|m| m.predict(&data.test_x));
                let elapsed = start.elapsed().as_secs_f64();
                let result = result.map(|pred| {
                    for (i, (&p, &t)) in pred.iter().zip(&data.test_y).enumerate() {
                        out.predictions.push(PredictionRecord {
                            key: *key,
                            fold,
                            sample_index: data.test_indices[i],
                            true_label: t,
                            predicted_label: p,
                        });
                    }
                    accuracy(&pred, &data.test_y)
                });
                out.cells.push((result, elapsed));
            }
            if want_dump {
                out.saliency = dump_fold_saliency(config, dataset, &plan, &data)?;
            }
            Ok(out)
        })
        .collect();

    let mut per_fold = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        per_fold.push(o?);
    }
    let rows = cells
        .iter()
        .enumerate()
        .map(|(i, key)| {
            let mut accs = Vec::with_capacity(config.folds);
            let mut error = None;
            let mut wall_time = 0.0;
            for (fold, outcome) in per_fold.iter().enumerate() {
                let (res, t) = &outcome.cells[i];
                wall_time += t;
                match res {
                    Ok(a) => accs.push(*a),
                    Err(e) if error.is_none() => error = Some(format!("fold {fold}: {e}")),
                    Err(_) => {}
                }
            }
            if error.is_some() {
                accs.clear();
            }
            ResultRow {
                key: *key,
                mean_accuracy: (error.is_none()).then(|| mean(&accs)),
                fold_accuracies: accs,
                error,
                wall_time,
            }
        })
        .collect();
    let mut predictions = Vec::new();
    let mut saliency = Vec::new();
    for o in per_fold {
        predictions.extend(o.predictions);
        saliency.extend(o.saliency);
    }
    Ok(RunOutput {
        table: ResultTable {
            dataset: config.dataset_name(),
            folds: config.folds,
            rows,
        },
        predictions,
        saliency,
        fold_plan: plan,
    })
}

fn dump_fold_saliency(
    config: &ExperimentConfig,
    dataset: &Dataset,
    plan: &FoldPlan,
    data: &FoldData,
) -> Result<Vec<SaliencyDump>> {
    let partition = partition_by_class(&data.train_x, &data.train_y, dataset.n_classes())?;
    let train_idx = plan.train_indices(data.fold);
    let mut out = Vec::new();
    for &graph in &config.graphs {
        let results = all_class_saliency(&partition, graph, config.kernel, config.epsilon)?;
        for (c, r) in results.into_iter().enumerate() {
            out.push(SaliencyDump {
                fold: data.fold,
                graph,
                class: dataset.label_names[c].clone(),
                sample_indices: partition.indices[c].iter().map(|&i| train_idx[i]).collect(),
                p: r.p,
                regularized: r.regularized,
            });
        }
    }
    Ok(out)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Predictions as CSV: `variant,graph,fold,sample_index,true_label,predicted_label`.
pub fn predictions_csv(records: &[PredictionRecord], dataset: &Dataset) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["variant", "graph", "fold", "sample_index", "true_label", "predicted_label"])?;
    for r in records {
        w.write_record([
            r.key.variant.to_string(),
            r.key.graph_label(),
            r.fold.to_string(),
            r.sample_index.to_string(),
            dataset.label_names[r.true_label].clone(),
            dataset.label_names[r.predicted_label].clone(),
        ])?;
    }
    finish_csv(w)
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidArgument(format!("csv buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

impl ResultTable {
    /// Machine-readable form, one row per cell. Wall times are left out so
    /// the file is reproducible byte for byte.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["dataset".to_string(), "variant".into(), "graph".into(), "mean_accuracy".into()];
        header.extend((1..=self.folds).map(|f| format!("fold_{f}")));
        header.push("status".into());
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![
                self.dataset.clone(),
                row.key.variant.to_string(),
                row.key.graph_label(),
                row.mean_accuracy.map(|m| m.to_string()).unwrap_or_default(),
            ];
            for f in 0..self.folds {
                rec.push(row.fold_accuracies.get(f).map(|a| a.to_string()).unwrap_or_default());
            }
            rec.push(match &row.error {
                None => "ok".into(),
                Some(e) => format!("error: {e}"),
            });
            w.write_record(&rec)?;
        }
        finish_csv(w)
    }

    /// Parses the output of [`ResultTable::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let headers = r.headers()?.clone();
        let folds = headers.iter().filter(|h| h.starts_with("fold_")).count();
        let mut dataset = None;
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let field = |i: usize| rec.get(i).unwrap_or("");
            let name = field(0).to_string();
            match &dataset {
                None => dataset = Some(name),
                Some(d) if *d != name => {
                    return Err(Error::MismatchedKeys(format!(
                        "one result file holds datasets {d:?} and {name:?}"
                    )))
                }
                _ => {}
            }
            let variant: Variant = field(1).parse()?;
            let graph = match field(2) {
                "-" => None,
                g => Some(g.parse()?),
            };
            let parse = |s: &str| -> Result<Option<f64>> {
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse().map(Some).map_err(|_| Error::Parse {
                        row: rows.len() + 1,
                        column: 0,
                        message: format!("bad accuracy {s:?}"),
                    })
                }
            };
            let mean_accuracy = parse(field(3))?;
            let mut fold_accuracies = Vec::new();
            for f in 0..folds {
                if let Some(a) = parse(field(4 + f))? {
                    fold_accuracies.push(a);
                }
            }
            let status = field(4 + folds);
            let error = status.strip_prefix("error: ").map(str::to_string);
            rows.push(ResultRow {
                key: CellKey { variant, graph },
                fold_accuracies,
                mean_accuracy,
                error,
                wall_time: 0.0,
            });
        }
        Ok(ResultTable {
            dataset: dataset.ok_or(Error::EmptyDataset)?,
            folds,
            rows,
        })
    }

    /// Aligned text with per-fold accuracies and wall times.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "dataset: {}  ({} folds)", self.dataset, self.folds);
        let _ = writeln!(s, "{:<10} {:<6} {:>8} {:>9}  folds", "variant", "graph", "mean", "time[s]");
        for row in &self.rows {
            let mean = row.mean_accuracy.map_or_else(|| "-".into(), |m| format!("{m:.4}"));
            let folds = if let Some(e) = &row.error {
                e.clone()
            } else {
                row.fold_accuracies
                    .iter()
                    .map(|a| format!("{a:.4}"))
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            let _ = writeln!(
                s,
                "{:<10} {:<6} {:>8} {:>9.3}  {}",
                row.key.variant.to_string(),
                row.key.graph_label(),
                mean,
                row.wall_time,
                folds
            );
        }
        s
    }

    pub fn row(&self, variant: Variant, graph: Option<GraphKind>) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.key == CellKey { variant, graph })
    }
}

/// Methods × datasets grid of mean accuracies with per-dataset winners marked.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub datasets: Vec<String>,
    pub rows: Vec<CellKey>,
    /// `cells[row][dataset]`; `None` for failed cells.
    pub cells: Vec<Vec<Option<f64>>>,
    pub best: Vec<Vec<bool>>,
}

/// Combines one result table per dataset. Every table must cover the same
/// `(variant, graph)` rows and dataset names must be distinct.
pub fn compare_report(tables: &[ResultTable]) -> Result<ComparisonReport> {
    let first = tables
        .first()
        .ok_or_else(|| Error::InvalidArgument("no result tables to compare".into()))?;
    let rows: Vec<CellKey> = first.rows.iter().map(|r| r.key).collect();
    let row_set: BTreeSet<CellKey> = rows.iter().copied().collect();
    let mut seen = BTreeSet::new();
    for t in tables {
        if !seen.insert(t.dataset.clone()) {
            return Err(Error::MismatchedKeys(format!("dataset {:?} appears twice", t.dataset)));
        }
        let keys: BTreeSet<CellKey> = t.rows.iter().map(|r| r.key).collect();
        if keys != row_set {
            return Err(Error::MismatchedKeys(format!(
                "dataset {:?} has different method rows than {:?}",
                t.dataset, first.dataset
            )));
        }
    }
    let cells: Vec<Vec<Option<f64>>> = rows
        .iter()
        .map(|key| {
            tables
                .iter()
                .map(|t| t.rows.iter().find(|r| r.key == *key).and_then(|r| r.mean_accuracy))
                .collect()
        })
        .collect();
    let mut best = vec![vec![false; tables.len()]; rows.len()];
    for d in 0..tables.len() {
        let top = cells.iter().filter_map(|r| r[d]).fold(f64::NEG_INFINITY, f64::max);
        for (r, row) in cells.iter().enumerate() {
            best[r][d] = row[d] == Some(top);
        }
    }
    Ok(ComparisonReport {
        datasets: tables.iter().map(|t| t.dataset.clone()).collect(),
        rows,
        cells,
        best,
    })
}

impl ComparisonReport {
    fn row_label(key: &CellKey) -> String {
        key.variant.display_name()
    }

    fn cell_text(&self, r: usize, d: usize, precise: bool) -> String {
        match self.cells[r][d] {
            None => "-".into(),
            Some(v) => {
                let mark = if self.best[r][d] { "*" } else { "" };
                if precise {
                    format!("{v}{mark}")
                } else {
                    format!("{v:.4}{mark}")
                }
            }
        }
    }

    /// `method,graph,<dataset>...`; winning cells carry a trailing `*`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["method".to_string(), "graph".into()];
        header.extend(self.datasets.iter().cloned());
        w.write_record(&header)?;
        for (r, key) in self.rows.iter().enumerate() {
            let mut rec = vec![Self::row_label(key), key.graph_label()];
            rec.extend((0..self.datasets.len()).map(|d| self.cell_text(r, d, true)));
            w.write_record(&rec)?;
        }
        finish_csv(w)
    }

    /// Aligned table; winning cells carry a trailing `*`.
    pub fn to_text(&self) -> String {
        let mut header = vec!["Dataset".to_string(), "graph".into()];
        header.extend(self.datasets.iter().cloned());
        let mut lines = vec![header];
        for (r, key) in self.rows.iter().enumerate() {
            let mut line = vec![Self::row_label(key), key.graph_label()];
            line.extend((0..self.datasets.len()).map(|d| self.cell_text(r, d, false)));
            lines.push(line);
        }
        let widths: Vec<usize> = (0..lines[0].len())
            .map(|c| lines.iter().map(|l| l[c].len()).max().unwrap_or(0))
            .collect();
        let mut s = String::new();
        for line in &lines {
            let cols: Vec<String> = line
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (v, &w))| if c < 2 { format!("{v:<w$}") } else { format!("{v:>w$}") })
                .collect();
            let _ = writeln!(s, "{}", cols.join("  ").trim_end());
        }
        s
    }
}
