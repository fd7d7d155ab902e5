//! Per-class probabilistic saliency: `H = D − W + V`, `p ∝ H⁻¹ 1`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::ClassPartition;
use crate::error::{Error, Result};
use crate::graph::{build_class_graph, AffinityGraph, GraphKind, KernelKind};
use crate::linalg;

/// Condition number above which `H` is regularized.
pub const MAX_CONDITION: f64 = 1e12;
/// Regularization floor relative to `trace(H) / N_c`.
pub const RELATIVE_EPSILON: f64 = 1e-8;
/// Absolute floor, used only when `H` is entirely zero (a lone sample with no prior).
const ABSOLUTE_EPSILON: f64 = 1e-12;

/// Diagonal of `V_c`: how strongly each sample leans toward a rival class.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyPrior {
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SaliencyResult {
    /// Sample weights, nonnegative, summing to one.
    pub p: Vec<f64>,
    /// `X_c p`.
    pub representation: Vec<f64>,
    /// `λ_max / λ_min` of the unregularized `H`; infinite when singular.
    pub h_condition: f64,
    pub regularized: bool,
    /// Ridge added to `H`; zero when not regularized.
    pub epsilon: f64,
}

/// Misclassification prior for the samples of class `c`.
///
/// With `d_k = ‖x − μ_k‖²`, a sample gets 0 when its own class mean is
/// strictly nearest and `d_c / min_{k≠c} d_k` otherwise.
pub fn misclassification_prior(
    x: &DMatrix<f64>,
    class_means: &[DVector<f64>],
    c: usize,
) -> Result<SaliencyPrior> {
    if c >= class_means.len() {
        return Err(Error::InvalidArgument(format!(
            "class {c} outside 0..{}",
            class_means.len()
        )));
    }
    if class_means.len() < 2 {
        log::warn!("single class: no rival mean, prior is zero");
        return Ok(SaliencyPrior {
            v: vec![0.0; x.ncols()],
        });
    }
    let v = x
        .column_iter()
        .map(|sample| {
            let own = (sample - &class_means[c]).norm_squared();
            let rival = class_means
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != c)
                .map(|(_, m)| (sample - m).norm_squared())
                .fold(f64::INFINITY, f64::min);
            if own < rival {
                0.0
            } else {
                own / rival
            }
        })
        .collect();
    Ok(SaliencyPrior { v })
}

/// `D − W + V` for a graph and prior.
pub fn saliency_matrix(graph: &AffinityGraph, prior: &SaliencyPrior) -> Result<DMatrix<f64>> {
    if graph.size() != prior.v.len() {
        return Err(Error::DimensionMismatch {
            expected: graph.size(),
            actual: prior.v.len(),
        });
    }
    let mut h = graph.laplacian();
    for (i, &v) in prior.v.iter().enumerate() {
        h[(i, i)] += v;
    }
    Ok(h)
}

/// Solves `H q = 1`, clamps negatives, normalizes to `p`, and forms `X_c p`.
///
/// `H` is regularized to `H + εI` with `ε = max(epsilon, 1e-8·trace(H)/N_c)`
/// when it is singular or its condition number exceeds `1e12`.
pub fn solve_saliency(
    x: &DMatrix<f64>,
    graph: &AffinityGraph,
    prior: &SaliencyPrior,
    epsilon: f64,
) -> Result<SaliencyResult> {
    if epsilon < 0.0 || !epsilon.is_finite() {
        return Err(Error::InvalidArgument(format!("epsilon must be >= 0, got {epsilon}")));
    }
    if x.ncols() != graph.size() {
        return Err(Error::DimensionMismatch {
            expected: graph.size(),
            actual: x.ncols(),
        });
    }
    let h = saliency_matrix(graph, prior)?;
    let n = h.nrows();
    let eig = linalg::sym_eigenvalues_desc(&h);
    let (lmax, lmin) = (eig[0], eig[n - 1]);
    let h_condition = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };

    let direct = if h_condition <= MAX_CONDITION {
        h.clone().cholesky()
    } else {
        None
    };
    let (q, eps) = match direct {
        Some(ch) => (refine(graph, &prior.v, 0.0, |r| Some(ch.solve(r))), 0.0),
        None => {
            let eps = epsilon
                .max(RELATIVE_EPSILON * h.trace() / n as f64)
                .max(ABSOLUTE_EPSILON);
            let reg = &h + DMatrix::identity(n, n) * eps;
            let q = match reg.clone().cholesky() {
                Some(ch) => refine(graph, &prior.v, eps, |r| Some(ch.solve(r))),
                None => {
                    let lu = reg.lu();
                    refine(graph, &prior.v, eps, |r| lu.solve(r))
                }
            };
            (q, eps)
        }
    };
    let q = q.ok_or_else(|| Error::InvalidArgument("regularized H is singular".into()))?;

    let clamped: Vec<f64> = q.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = clamped.iter().sum();
    let p: Vec<f64> = if total > 0.0 && total.is_finite() {
        clamped.iter().map(|v| v / total).collect()
    } else {
        log::warn!("saliency solve produced no positive mass; using uniform weights");
        vec![1.0 / n as f64; n]
    };
    let representation = weighted_mean(x, &p);
    Ok(SaliencyResult {
        p,
        representation: representation.iter().copied().collect(),
        h_condition,
        regularized: eps > 0.0,
        epsilon: eps,
    })
}

/// Solves `(D − W + V + εI) q = 1` with two rounds of iterative refinement.
///
/// Residuals use the difference form `Σ_j w_ij (q_i − q_j) + (v_i + ε) q_i`,
/// which stays accurate when `q` is huge and nearly constant on a component
/// with no prior, exactly the case the ridge exists for.
fn refine(
    graph: &AffinityGraph,
    v: &[f64],
    eps: f64,
    solve: impl Fn(&DVector<f64>) -> Option<DVector<f64>>,
) -> Option<DVector<f64>> {
    let n = v.len();
    let w = &graph.weights;
    let ones = DVector::from_element(n, 1.0);
    let mut q = solve(&ones)?;
    for _ in 0..2 {
        let r = DVector::from_fn(n, |i, _| {
            let mut hq = (v[i] + eps) * q[i];
            for j in 0..n {
                hq += w[(i, j)] * (q[i] - q[j]);
            }
            1.0 - hq
        });
        q += solve(&r)?;
    }
    Some(q)
}

/// `X_c p` for a solved class.
pub fn class_representation(result: &SaliencyResult) -> DVector<f64> {
    DVector::from_column_slice(&result.representation)
}

/// `X p` over the columns of `x`.
pub fn weighted_mean(x: &DMatrix<f64>, p: &[f64]) -> DVector<f64> {
    x * DVector::from_column_slice(p)
}

/// Uniform weights `p = 1/N_c` for every class, bypassing the graph solve.
pub fn uniform_saliency(partition: &ClassPartition) -> Vec<SaliencyResult> {
    partition
        .samples
        .iter()
        .map(|x| {
            let p = vec![1.0 / x.ncols() as f64; x.ncols()];
            let rep = weighted_mean(x, &p);
            SaliencyResult {
                p,
                representation: rep.iter().copied().collect(),
                h_condition: f64::NAN,
                regularized: false,
                epsilon: 0.0,
            }
        })
        .collect()
}

/// Saliency for every class of a partition, each class solved independently.
///
/// Class means for the prior are taken from the same partition.
pub fn all_class_saliency(
    partition: &ClassPartition,
    graph: GraphKind,
    kernel: KernelKind,
    epsilon: f64,
) -> Result<Vec<SaliencyResult>> {
    let means: Vec<DVector<f64>> = (0..partition.n_classes())
        .map(|c| partition.class_mean(c))
        .collect();
    (0..partition.n_classes())
        .into_par_iter()
        .map(|c| {
            let x = &partition.samples[c];
            let solve = || -> Result<SaliencyResult> {
                let g = build_class_graph(x, graph, kernel)?;
                let prior = misclassification_prior(x, &means, c)?;
                solve_saliency(x, &g, &prior, epsilon)
            };
            solve().map_err(|e| Error::in_class(c, e))
        })
        .collect()
}
