//! Per-class affinity graphs with a heat kernel.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Neighborhood structure of a class graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    /// Every pair of samples is connected.
    Full,
    /// k-NN with `k = max(1, min(5, ⌊0.1·N_c⌋))`, clamped to `N_c − 1`.
    Knn,
}

impl std::fmt::Display for GraphKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GraphKind::Full => "full",
            GraphKind::Knn => "knn",
        })
    }
}

impl std::str::FromStr for GraphKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(GraphKind::Full),
            "knn" => Ok(GraphKind::Knn),
            other => Err(Error::InvalidArgument(format!("unknown graph kind {other:?}"))),
        }
    }
}

/// Heat kernel exponent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    /// `exp(−‖x_i − x_j‖ / 2σ²)`, unsquared distance.
    #[default]
    Paper,
    /// `exp(−‖x_i − x_j‖² / 2σ²)`.
    Squared,
}

impl KernelKind {
    pub fn weight(self, distance: f64, sigma: f64) -> f64 {
        let d = match self {
            KernelKind::Paper => distance,
            KernelKind::Squared => distance * distance,
        };
        (-d / (2.0 * sigma * sigma)).exp()
    }
}

impl std::fmt::Display for KernelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            KernelKind::Paper => "paper",
            KernelKind::Squared => "squared",
        })
    }
}

impl std::str::FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(KernelKind::Paper),
            "squared" => Ok(KernelKind::Squared),
            other => Err(Error::InvalidArgument(format!("unknown kernel {other:?}"))),
        }
    }
}

/// How the edge set was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Neighborhood {
    Full,
    Knn(usize),
}

/// Symmetric nonnegative weights with zero diagonal, plus degrees.
#[derive(Debug, Clone)]
pub struct AffinityGraph {
    pub weights: DMatrix<f64>,
    pub degrees: DVector<f64>,
    pub sigma: f64,
    pub neighborhood: Neighborhood,
}

impl AffinityGraph {
    fn from_weights(weights: DMatrix<f64>, sigma: f64, neighborhood: Neighborhood) -> Self {
        let degrees = weights.column_sum();
        AffinityGraph {
            weights,
            degrees,
            sigma,
            neighborhood,
        }
    }

    pub fn size(&self) -> usize {
        self.weights.nrows()
    }

    /// `D − W`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.degrees) - &self.weights
    }
}

/// Pairwise Euclidean distances between the columns of `x`, exactly symmetric.
pub fn pairwise_distances(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.ncols();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (x.column(i) - x.column(j)).norm();
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

/// Mean Euclidean distance over unordered pairs of class samples.
///
/// Falls back to 1 for a single sample or when all samples coincide.
pub fn class_sigma(x: &DMatrix<f64>) -> f64 {
    let n = x.ncols();
    if n < 2 {
        return 1.0;
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            total += (x.column(i) - x.column(j)).norm();
        }
    }
    let sigma = total / (n * (n - 1) / 2) as f64;
    if sigma > 0.0 {
        sigma
    } else {
        log::warn!("all {n} class samples coincide; using sigma = 1");
        1.0
    }
}

/// Fully connected heat-kernel graph.
pub fn build_full_graph(x: &DMatrix<f64>, sigma: f64, kernel: KernelKind) -> Result<AffinityGraph> {
    check_sigma(sigma)?;
    let dist = pairwise_distances(x);
    let n = x.ncols();
    let weights = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            kernel.weight(dist[(i, j)], sigma)
        }
    });
    Ok(AffinityGraph::from_weights(weights, sigma, Neighborhood::Full))
}

/// Heat-kernel graph over the union of each sample's `k` nearest neighbors.
///
/// `k` is clamped to `1..=N_c−1`. Distance ties at the k-th neighbor go to
/// the lower sample index. A single-sample class yields an empty graph.
pub fn build_knn_graph(
    x: &DMatrix<f64>,
    sigma: f64,
    k: usize,
    kernel: KernelKind,
) -> Result<AffinityGraph> {
    check_sigma(sigma)?;
    let n = x.ncols();
    if n < 2 {
        return Ok(AffinityGraph::from_weights(
            DMatrix::zeros(n, n),
            sigma,
            Neighborhood::Knn(0),
        ));
    }
    let k = k.clamp(1, n - 1);
    let dist = pairwise_distances(x);
    let mut adjacent = vec![vec![false; n]; n];
    for i in 0..n {
        let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        others.sort_by(|&a, &b| dist[(i, a)].total_cmp(&dist[(i, b)]).then(a.cmp(&b)));
        for &j in &others[..k] {
            adjacent[i][j] = true;
            adjacent[j][i] = true;
        }
    }
    let weights = DMatrix::from_fn(n, n, |i, j| {
        if adjacent[i][j] {
            kernel.weight(dist[(i, j)], sigma)
        } else {
            0.0
        }
    });
    Ok(AffinityGraph::from_weights(weights, sigma, Neighborhood::Knn(k)))
}

/// `max(1, min(5, ⌊0.1·N_c⌋))`, clamped to `N_c − 1` (0 for a single sample).
pub fn knn_rule(class_size: usize) -> usize {
    let k = (class_size / 10).clamp(1, 5);
    k.min(class_size.saturating_sub(1))
}

/// Builds the graph of `kind` for one class, with σ from [`class_sigma`].
pub fn build_class_graph(x: &DMatrix<f64>, kind: GraphKind, kernel: KernelKind) -> Result<AffinityGraph> {
    let sigma = class_sigma(x);
    match kind {
        GraphKind::Full => build_full_graph(x, sigma, kernel),
        GraphKind::Knn => build_knn_graph(x, sigma, knn_rule(x.ncols()), kernel),
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")))
    }
}
