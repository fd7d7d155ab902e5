//! Scatter matrices: classical LDA, the Loog/Tang/Jarchi weighted baselines
//! and the saliency-weighted within/between-class variants.
//!
//! Builders return raw `D × D` sums. Weighted sums are formed as one product
//! `(X − c) diag(w) (X − c)ᵀ`, which is symmetric only up to round-off;
//! [`assemble`] symmetrizes once and forms `S_t = S_b + S_w`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::ClassPartition;
use crate::error::{Error, Result};
use crate::linalg::{outer, symmetrize, weighted_scatter};
use crate::saliency::SaliencyResult;

/// Which scatter pair (and hence which discriminant) to learn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    /// Classical LDA, pencil `(S_B, S_W)`.
    Lda,
    /// Loog's weighted between-class scatter with the classical `S_W`.
    Loog,
    /// Loog's between-class scatter with relevance-weighted within-class scatter.
    Tang,
    /// Fisher-criterion-weighted scatters.
    Jarchi,
    /// Saliency-weighted: `between ∈ 1..=4`, `within ∈ 1..=2`.
    Swlda { between: u8, within: u8 },
}

impl Variant {
    /// All eight saliency-weighted variants in table order (`11, 21, 31, 41, 12, …`).
    pub fn all_swlda() -> Vec<Variant> {
        (1..=2)
            .flat_map(|within| (1..=4).map(move |between| Variant::Swlda { between, within }))
            .collect()
    }

    pub fn baselines() -> Vec<Variant> {
        vec![Variant::Lda, Variant::Loog, Variant::Tang, Variant::Jarchi]
    }

    pub fn needs_saliency(self) -> bool {
        matches!(self, Variant::Swlda { .. })
    }

    /// Whether the between-class scatter is built on `X_c p_c` rather than the plain mean.
    pub fn uses_weighted_representation(self) -> bool {
        matches!(self, Variant::Swlda { between, .. } if between >= 2)
    }

    /// Human-readable row label.
    pub fn display_name(self) -> String {
        match self {
            Variant::Lda => "LDA".into(),
            Variant::Loog => "Loog".into(),
            Variant::Tang => "Tang".into(),
            Variant::Jarchi => "Jarchi".into(),
            Variant::Swlda { between, within } => format!("SwLDA_{between}{within}"),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Variant::Lda => f.write_str("lda"),
            Variant::Loog => f.write_str("loog"),
            Variant::Tang => f.write_str("tang"),
            Variant::Jarchi => f.write_str("jarchi"),
            Variant::Swlda { between, within } => write!(f, "swlda_{between}{within}"),
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "lda" => return Ok(Variant::Lda),
            "loog" => return Ok(Variant::Loog),
            "tang" => return Ok(Variant::Tang),
            "jarchi" => return Ok(Variant::Jarchi),
            _ => {}
        }
        if let Some(digits) = lower.strip_prefix("swlda_") {
            let b = digits.as_bytes();
            if b.len() == 2 && (b'1'..=b'4').contains(&b[0]) && (b'1'..=b'2').contains(&b[1]) {
                return Ok(Variant::Swlda {
                    between: b[0] - b'0',
                    within: b[1] - b'0',
                });
            }
        }
        Err(Error::UnknownVariant(s.to_string()))
    }
}

impl Serialize for Variant {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Variant {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Class means, counts, priors and pairwise mean distances of a partition.
#[derive(Debug, Clone)]
pub struct ClassStats {
    pub means: Vec<DVector<f64>>,
    pub counts: Vec<usize>,
    /// `N_c / N`.
    pub priors: Vec<f64>,
    pub total_mean: DVector<f64>,
    /// `L_ij = ‖μ_i − μ_j‖`.
    pub distances: DMatrix<f64>,
}

impl ClassStats {
    pub fn from_partition(partition: &ClassPartition) -> Self {
        let c = partition.n_classes();
        let means: Vec<DVector<f64>> = (0..c).map(|k| partition.class_mean(k)).collect();
        let counts: Vec<usize> = (0..c).map(|k| partition.class_size(k)).collect();
        let n: usize = counts.iter().sum();
        let priors = counts.iter().map(|&k| k as f64 / n as f64).collect();
        let mut total = DVector::zeros(partition.dim());
        for x in &partition.samples {
            total += x.column_sum();
        }
        total /= n as f64;
        let mut distances = DMatrix::zeros(c, c);
        for i in 0..c {
            for j in (i + 1)..c {
                let d = (&means[i] - &means[j]).norm();
                distances[(i, j)] = d;
                distances[(j, i)] = d;
            }
        }
        ClassStats {
            means,
            counts,
            priors,
            total_mean: total,
            distances,
        }
    }

    pub fn n_classes(&self) -> usize {
        self.means.len()
    }

    pub fn dim(&self) -> usize {
        self.total_mean.len()
    }

    /// `r_c = Σ_{i≠c} 1 / L_ic`. Fails when two class means coincide.
    pub fn relevance(&self) -> Result<Vec<f64>> {
        let c = self.n_classes();
        (0..c)
            .map(|k| {
                let mut r = 0.0;
                for i in (0..c).filter(|&i| i != k) {
                    let l = self.distances[(i, k)];
                    if l == 0.0 {
                        return Err(Error::DuplicateClassMeans(i.min(k), i.max(k)));
                    }
                    r += 1.0 / l;
                }
                Ok(r)
            })
            .collect()
    }
}

/// Two scatter matrices and their sum, tagged with the variant that produced them.
#[derive(Debug, Clone)]
pub struct ScatterPair {
    pub s_b: DMatrix<f64>,
    pub s_w: DMatrix<f64>,
    pub s_t: DMatrix<f64>,
    pub variant: Variant,
    pub n_classes: usize,
}

impl ScatterPair {
    /// Right-hand matrix of the discriminant pencil: `S_W` for classical LDA,
    /// `S_t` for every weighted variant.
    pub fn denominator(&self) -> &DMatrix<f64> {
        match self.variant {
            Variant::Lda => &self.s_w,
            _ => &self.s_t,
        }
    }

    pub fn dim(&self) -> usize {
        self.s_b.nrows()
    }
}

/// Symmetrizes both parts and forms `S_t = S_b + S_w`.
pub fn assemble(variant: Variant, s_b: DMatrix<f64>, s_w: DMatrix<f64>, n_classes: usize) -> Result<ScatterPair> {
    assemble_with(variant, s_b, s_w, n_classes, true)
}

pub(crate) fn assemble_with(
    variant: Variant,
    s_b: DMatrix<f64>,
    s_w: DMatrix<f64>,
    n_classes: usize,
    symmetrize_parts: bool,
) -> Result<ScatterPair> {
    let d = s_b.nrows();
    for m in [&s_b, &s_w] {
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: if m.nrows() != d { m.nrows() } else { m.ncols() },
            });
        }
    }
    let (s_b, s_w) = if symmetrize_parts {
        (symmetrize(&s_b), symmetrize(&s_w))
    } else {
        (s_b, s_w)
    };
    let s_t = &s_b + &s_w;
    Ok(ScatterPair {
        s_b,
        s_w,
        s_t,
        variant,
        n_classes,
    })
}

/// `Σ_{k∈c} w_k (x_k − μ_c)(x_k − μ_c)ᵀ` for one class.
fn class_block(partition: &ClassPartition, stats: &ClassStats, c: usize, weights: &[f64]) -> DMatrix<f64> {
    weighted_scatter(&partition.samples[c], &stats.means[c], weights)
}

fn within_with<F>(partition: &ClassPartition, stats: &ClassStats, mut weight: F) -> DMatrix<f64>
where
    F: FnMut(usize, usize) -> f64,
{
    let d = stats.dim();
    let mut s = DMatrix::zeros(d, d);
    for c in 0..partition.n_classes() {
        let w: Vec<f64> = (0..partition.class_size(c)).map(|k| weight(c, k)).collect();
        s += class_block(partition, stats, c, &w);
    }
    s
}

/// Classical `S_W = Σ_c Σ_{i∈c} (x_i − μ_c)(x_i − μ_c)ᵀ`.
pub fn classic_within(partition: &ClassPartition, stats: &ClassStats) -> DMatrix<f64> {
    within_with(partition, stats, |_, _| 1.0)
}

/// Classical `S_B = Σ_c N_c (μ_c − μ)(μ_c − μ)ᵀ`.
pub fn classic_between(stats: &ClassStats) -> DMatrix<f64> {
    let d = stats.dim();
    let mut s = DMatrix::zeros(d, d);
    for (mean, &n) in stats.means.iter().zip(&stats.counts) {
        s += outer(&(mean - &stats.total_mean)) * n as f64;
    }
    s
}

/// Classical LDA pair.
pub fn classic_scatters(partition: &ClassPartition, stats: &ClassStats) -> Result<ScatterPair> {
    assemble(
        Variant::Lda,
        classic_between(stats),
        classic_within(partition, stats),
        stats.n_classes(),
    )
}

/// `L ↦ 1/L`, the default dissimilarity weight.
pub fn reciprocal_weight(distance: f64) -> f64 {
    1.0 / distance
}

/// Loog's between-class scatter `Σ_{c<j} w(L_cj) p̂_c p̂_j (μ_c − μ_j)(μ_c − μ_j)ᵀ`,
/// with the weight function `w` applied to the Euclidean mean distance.
pub fn loog_between(stats: &ClassStats, weight: &dyn Fn(f64) -> f64) -> Result<DMatrix<f64>> {
    let c = stats.n_classes();
    if c < 2 {
        return Err(Error::InvalidArgument("between-class scatter needs at least 2 classes".into()));
    }
    let d = stats.dim();
    let mut s = DMatrix::zeros(d, d);
    for i in 0..c {
        for j in (i + 1)..c {
            let w = weight(stats.distances[(i, j)]);
            if !w.is_finite() {
                return Err(Error::InfiniteDissimilarity(i, j));
            }
            s += outer(&(&stats.means[i] - &stats.means[j])) * (w * stats.priors[i] * stats.priors[j]);
        }
    }
    Ok(s)
}

/// Tang's relevance-weighted `S_w = Σ_c Σ_{k∈c} p̂_c r_c (x_k − μ_c)(x_k − μ_c)ᵀ`.
pub fn tang_within(partition: &ClassPartition, stats: &ClassStats) -> Result<DMatrix<f64>> {
    let r = stats.relevance()?;
    Ok(within_with(partition, stats, |c, _| stats.priors[c] * r[c]))
}

/// Pairwise Fisher criterion between classes `c` and `j` under `S_T = pair.s_t`.
///
/// With `δ = μ_c − μ_j` and `w = S_T⁻¹ δ`, returns `(wᵀδ)² / (wᵀ S_T w)`.
/// A singular `S_T` is ridge-regularized with `1e-6·trace(S_T)/D`.
pub fn jarchi_delta(stats: &ClassStats, pair: &ScatterPair, c: usize, j: usize) -> Result<f64> {
    let solver = TotalScatterSolver::new(&pair.s_t)?;
    Ok(solver.delta(&(&stats.means[c] - &stats.means[j])))
}

/// All `Δ_cj` as a symmetric `C × C` matrix with zero diagonal.
pub fn jarchi_deltas(stats: &ClassStats, classic: &ScatterPair) -> Result<DMatrix<f64>> {
    let solver = TotalScatterSolver::new(&classic.s_t)?;
    let c = stats.n_classes();
    let mut out = DMatrix::zeros(c, c);
    for i in 0..c {
        for j in (i + 1)..c {
            let v = solver.delta(&(&stats.means[i] - &stats.means[j]));
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(out)
}

struct TotalScatterSolver<'a> {
    s_t: &'a DMatrix<f64>,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl<'a> TotalScatterSolver<'a> {
    fn new(s_t: &'a DMatrix<f64>) -> Result<Self> {
        let d = s_t.nrows();
        let eig = crate::linalg::sym_eigenvalues_desc(s_t);
        let (lmax, lmin) = (eig[0], eig[d - 1]);
        let reg = if lmin > crate::solver::PD_THRESHOLD * lmax {
            s_t.clone()
        } else {
            let eps = (crate::solver::RIDGE_SCALE * s_t.trace() / d as f64).max(f64::MIN_POSITIVE);
            s_t + DMatrix::identity(d, d) * eps
        };
        let chol = reg
            .cholesky()
            .ok_or_else(|| Error::InvalidArgument("total scatter is not positive definite".into()))?;
        Ok(TotalScatterSolver { s_t, chol })
    }

    fn delta(&self, diff: &DVector<f64>) -> f64 {
        if diff.iter().all(|&v| v == 0.0) {
            return 0.0;
        }
        let w = self.chol.solve(diff);
        let num = w.dot(diff).powi(2);
        let den = w.dot(&(self.s_t * &w));
        num / den
    }
}

/// Jarchi's pair: `S_b = Σ_{c<j} n_c n_j / Δ_cj (μ_c − μ_j)(μ_c − μ_j)ᵀ` and
/// `S_w = Σ_c Σ_{k∈c} p̂_c / (Σ_{j≠c} Δ_cj) (x_k − μ_c)(x_k − μ_c)ᵀ`.
pub fn jarchi_scatters(partition: &ClassPartition, stats: &ClassStats, deltas: &DMatrix<f64>) -> Result<ScatterPair> {
    let c = stats.n_classes();
    if c < 2 {
        return Err(Error::InvalidArgument("between-class scatter needs at least 2 classes".into()));
    }
    let d = stats.dim();
    let mut s_b = DMatrix::zeros(d, d);
    for i in 0..c {
        for j in (i + 1)..c {
            let delta = deltas[(i, j)];
            if delta.is_nan() || delta <= 0.0 || delta.is_infinite() {
                return Err(Error::DegenerateClassPair(i, j));
            }
            let nn = (stats.counts[i] * stats.counts[j]) as f64;
            s_b += outer(&(&stats.means[i] - &stats.means[j])) * (nn / delta);
        }
    }
    let row_sums: Vec<f64> = (0..c)
        .map(|i| (0..c).filter(|&j| j != i).map(|j| deltas[(i, j)]).sum())
        .collect();
    let s_w = within_with(partition, stats, |k, _| stats.priors[k] / row_sums[k]);
    assemble(Variant::Jarchi, s_b, s_w, c)
}

fn check_saliency(partition: &ClassPartition, saliency: &[SaliencyResult]) -> Result<()> {
    if saliency.len() != partition.n_classes() {
        return Err(Error::DimensionMismatch {
            expected: partition.n_classes(),
            actual: saliency.len(),
        });
    }
    for (c, s) in saliency.iter().enumerate() {
        if s.p.len() != partition.class_size(c) {
            return Err(Error::in_class(
                c,
                Error::DimensionMismatch {
                    expected: partition.class_size(c),
                    actual: s.p.len(),
                },
            ));
        }
    }
    Ok(())
}

/// Saliency-weighted within-class scatter.
///
/// `within = 1`: `Σ_c Σ_k p_{c,k} (x_{c,k} − μ_c)(x_{c,k} − μ_c)ᵀ`;
/// `within = 2`: each class term additionally scaled by `r_c`.
pub fn swlda_within(
    partition: &ClassPartition,
    stats: &ClassStats,
    saliency: &[SaliencyResult],
    within: u8,
) -> Result<DMatrix<f64>> {
    check_saliency(partition, saliency)?;
    match within {
        1 => Ok(within_with(partition, stats, |c, k| saliency[c].p[k])),
        2 => {
            let r = stats.relevance()?;
            Ok(within_with(partition, stats, |c, k| saliency[c].p[k] * r[c]))
        }
        other => Err(Error::InvalidArgument(format!("within-class index must be 1 or 2, got {other}"))),
    }
}

/// Saliency-weighted between-class scatter, `between ∈ 1..=4`.
///
/// 1. classical `S_B`;
/// 2. `Σ_c (μ̂_c − μ)(μ̂_c − μ)ᵀ`;
/// 3. `Σ_{c1} Σ_{c2} (μ̂_{c1} − μ̂_{c2})(μ̂_{c1} − μ̂_{c2})ᵀ` over ordered pairs;
/// 4. `Σ_{c1} Σ_{c2≠c1} Σ_k p_{c1,k} (x_{c1,k} − μ̂_{c2})(x_{c1,k} − μ̂_{c2})ᵀ`,
///
/// where `μ̂_c = X_c p_c` and `μ` is the plain total mean.
pub fn swlda_between(
    partition: &ClassPartition,
    stats: &ClassStats,
    saliency: &[SaliencyResult],
    between: u8,
) -> Result<DMatrix<f64>> {
    if between == 1 {
        return Ok(classic_between(stats));
    }
    check_saliency(partition, saliency)?;
    let reps: Vec<DVector<f64>> = saliency
        .iter()
        .map(crate::saliency::class_representation)
        .collect();
    let c = partition.n_classes();
    let d = stats.dim();
    let mut s = DMatrix::zeros(d, d);
    match between {
        2 => {
            for m in &reps {
                s += outer(&(m - &stats.total_mean));
            }
        }
        3 => {
            for a in 0..c {
                for b in 0..c {
                    s += outer(&(&reps[a] - &reps[b]));
                }
            }
        }
        4 => {
            for (a, sal) in saliency.iter().enumerate().take(c) {
                for (b, rep) in reps.iter().enumerate() {
                    if a != b {
                        s += weighted_scatter(&partition.samples[a], rep, &sal.p);
                    }
                }
            }
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "between-class index must be in 1..=4, got {other}"
            )))
        }
    }
    Ok(s)
}

/// Builds the pair for `variant`. Saliency results are required for the
/// saliency-weighted variants and ignored otherwise.
pub fn build_pair(
    variant: Variant,
    partition: &ClassPartition,
    stats: &ClassStats,
    saliency: Option<&[SaliencyResult]>,
) -> Result<ScatterPair> {
    let c = stats.n_classes();
    match variant {
        Variant::Lda => classic_scatters(partition, stats),
        Variant::Loog => assemble(
            variant,
            loog_between(stats, &reciprocal_weight)?,
            classic_within(partition, stats),
            c,
        ),
        Variant::Tang => assemble(
            variant,
            loog_between(stats, &reciprocal_weight)?,
            tang_within(partition, stats)?,
            c,
        ),
        Variant::Jarchi => {
            let classic = classic_scatters(partition, stats)?;
            let deltas = jarchi_deltas(stats, &classic)?;
            jarchi_scatters(partition, stats, &deltas)
        }
        Variant::Swlda { between, within } => {
            let saliency = saliency.ok_or_else(|| {
                Error::InvalidArgument(format!("{variant} requires saliency weights"))
            })?;
            assemble(
                variant,
                swlda_between(partition, stats, saliency, between)?,
                swlda_within(partition, stats, saliency, within)?,
                c,
            )
        }
    }
}
