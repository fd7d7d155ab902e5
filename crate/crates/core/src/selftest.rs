//! Built-in oracle suite run by `salda self-test`.
//!
//! The [`oracle`] module recomputes every scatter matrix, the saliency solve
//! and the pencil residuals with plain nested loops over `Vec<Vec<f64>>`,
//! sharing no code with the nalgebra paths it checks.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::partition_by_class;
use crate::error::Result;
use crate::graph::{build_class_graph, GraphKind, KernelKind};
use crate::linalg;
use crate::saliency::{misclassification_prior, solve_saliency, SaliencyResult};
use crate::scatter::{self, assemble_with, ClassStats, Variant};
use crate::solver::solve_pencil;

#[allow(clippy::needless_range_loop)]
pub mod oracle {
    //! Naive reference implementations.

    pub type Mat = Vec<Vec<f64>>;

    pub fn zeros(n: usize, m: usize) -> Mat {
        vec![vec![0.0; m]; n]
    }

    pub fn from_dmatrix(m: &nalgebra::DMatrix<f64>) -> Mat {
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
    }

    pub fn max_abs_diff(a: &Mat, b: &nalgebra::DMatrix<f64>) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..a.len() {
            for j in 0..a[i].len() {
                worst = worst.max((a[i][j] - b[(i, j)]).abs());
            }
        }
        worst
    }

    fn add_outer(acc: &mut Mat, u: &[f64], v: &[f64], w: f64) {
        for i in 0..u.len() {
            for j in 0..v.len() {
                acc[i][j] += w * u[i] * v[j];
            }
        }
    }

    fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x - y).collect()
    }

    /// Rows of class `c`, in order.
    pub fn class_rows(rows: &[Vec<f64>], labels: &[usize], c: usize) -> Vec<Vec<f64>> {
        rows.iter()
            .zip(labels)
            .filter(|(_, &l)| l == c)
            .map(|(r, _)| r.clone())
            .collect()
    }

    pub fn mean(rows: &[Vec<f64>]) -> Vec<f64> {
        let mut m = vec![0.0; rows[0].len()];
        for r in rows {
            for j in 0..m.len() {
                m[j] += r[j];
            }
        }
        m.iter().map(|v| v / rows.len() as f64).collect()
    }

    pub fn weighted_mean(rows: &[Vec<f64>], p: &[f64]) -> Vec<f64> {
        let mut m = vec![0.0; rows[0].len()];
        for (r, &w) in rows.iter().zip(p) {
            for j in 0..m.len() {
                m[j] += w * r[j];
            }
        }
        m
    }

    pub fn dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }

    /// A labeled sample set with per-class sample weights.
    pub struct Instance<'a> {
        pub rows: &'a [Vec<f64>],
        pub labels: &'a [usize],
        pub n_classes: usize,
        /// Per-class weights, aligned with [`class_rows`].
        pub p: &'a [Vec<f64>],
    }

    impl Instance<'_> {
        fn dim(&self) -> usize {
            self.rows[0].len()
        }

        fn classes(&self) -> Vec<Vec<Vec<f64>>> {
            (0..self.n_classes).map(|c| class_rows(self.rows, self.labels, c)).collect()
        }

        fn means(&self) -> Vec<Vec<f64>> {
            self.classes().iter().map(|x| mean(x)).collect()
        }

        fn priors(&self) -> Vec<f64> {
            self.classes().iter().map(|x| x.len() as f64 / self.rows.len() as f64).collect()
        }

        fn relevance(&self) -> Vec<f64> {
            let m = self.means();
            (0..self.n_classes)
                .map(|c| (0..self.n_classes).filter(|&i| i != c).map(|i| 1.0 / dist(&m[i], &m[c])).sum())
                .collect()
        }

        fn within(&self, weight: impl Fn(usize, usize) -> f64) -> Mat {
            let d = self.dim();
            let mut s = zeros(d, d);
            let classes = self.classes();
            let means = self.means();
            for c in 0..self.n_classes {
                for (k, x) in classes[c].iter().enumerate() {
                    let dev = sub(x, &means[c]);
                    add_outer(&mut s, &dev, &dev, weight(c, k));
                }
            }
            s
        }

        pub fn classic_within(&self) -> Mat {
            self.within(|_, _| 1.0)
        }

        pub fn classic_between(&self) -> Mat {
            let d = self.dim();
            let mu = mean(self.rows);
            let mut s = zeros(d, d);
            for (c, m) in self.means().iter().enumerate() {
                let n_c = self.classes()[c].len() as f64;
                let dev = sub(m, &mu);
                add_outer(&mut s, &dev, &dev, n_c);
            }
            s
        }

        /// Loog with reciprocal-distance weights.
        pub fn loog_between(&self) -> Mat {
            let d = self.dim();
            let m = self.means();
            let pr = self.priors();
            let mut s = zeros(d, d);
            for c in 0..self.n_classes {
                for j in (c + 1)..self.n_classes {
                    let dev = sub(&m[c], &m[j]);
                    add_outer(&mut s, &dev, &dev, pr[c] * pr[j] / dist(&m[c], &m[j]));
                }
            }
            s
        }

        pub fn tang_within(&self) -> Mat {
            let r = self.relevance();
            let pr = self.priors();
            self.within(|c, _| pr[c] * r[c])
        }

        /// `Δ_cj` from the classical total scatter, assumed nonsingular.
        pub fn jarchi_deltas(&self) -> Mat {
            let mut st = self.classic_within();
            let sb = self.classic_between();
            for i in 0..st.len() {
                for j in 0..st.len() {
                    st[i][j] += sb[i][j];
                }
            }
            let inv = inverse(&st).expect("nonsingular total scatter");
            let m = self.means();
            let mut out = zeros(self.n_classes, self.n_classes);
            for c in 0..self.n_classes {
                for j in 0..self.n_classes {
                    if c == j {
                        continue;
                    }
                    let delta = sub(&m[c], &m[j]);
                    let w = mat_vec(&inv, &delta);
                    let num = dot(&w, &delta).powi(2);
                    let den = dot(&w, &mat_vec(&st, &w));
                    out[c][j] = num / den;
                }
            }
            out
        }

        pub fn jarchi_between(&self) -> Mat {
            let deltas = self.jarchi_deltas();
            let m = self.means();
            let classes = self.classes();
            let d = self.dim();
            let mut s = zeros(d, d);
            for c in 0..self.n_classes {
                for j in (c + 1)..self.n_classes {
                    let dev = sub(&m[c], &m[j]);
                    let nn = (classes[c].len() * classes[j].len()) as f64;
                    add_outer(&mut s, &dev, &dev, nn / deltas[c][j]);
                }
            }
            s
        }

        pub fn jarchi_within(&self) -> Mat {
            let deltas = self.jarchi_deltas();
            let pr = self.priors();
            self.within(|c, _| pr[c] / deltas[c].iter().sum::<f64>())
        }

        pub fn swlda_within(&self, j: u8) -> Mat {
            let r = if j == 2 { self.relevance() } else { vec![1.0; self.n_classes] };
            self.within(|c, k| self.p[c][k] * r[c])
        }

        pub fn swlda_between(&self, i: u8) -> Mat {
            if i == 1 {
                return self.classic_between();
            }
            let d = self.dim();
            let classes = self.classes();
            let reps: Vec<Vec<f64>> = (0..self.n_classes).map(|c| weighted_mean(&classes[c], &self.p[c])).collect();
            let mu = mean(self.rows);
            let mut s = zeros(d, d);
            match i {
                2 => {
                    for r in &reps {
                        let dev = sub(r, &mu);
                        add_outer(&mut s, &dev, &dev, 1.0);
                    }
                }
                3 => {
                    for a in 0..self.n_classes {
                        for b in 0..self.n_classes {
                            let dev = sub(&reps[a], &reps[b]);
                            add_outer(&mut s, &dev, &dev, 1.0);
                        }
                    }
                }
                4 => {
                    for a in 0..self.n_classes {
                        for b in 0..self.n_classes {
                            if a == b {
                                continue;
                            }
                            for (k, x) in classes[a].iter().enumerate() {
                                let dev = sub(x, &reps[b]);
                                add_outer(&mut s, &dev, &dev, self.p[a][k]);
                            }
                        }
                    }
                }
                _ => panic!("between index {i}"),
            }
            s
        }
    }

    pub fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    pub fn mat_vec(m: &Mat, v: &[f64]) -> Vec<f64> {
        m.iter().map(|row| dot(row, v)).collect()
    }

    /// Gauss-Jordan inverse with partial pivoting.
    pub fn inverse(m: &Mat) -> Option<Mat> {
        let n = m.len();
        let mut a: Mat = m.to_vec();
        let mut inv = zeros(n, n);
        for (i, row) in inv.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        for col in 0..n {
            let pivot = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
            if a[pivot][col] == 0.0 {
                return None;
            }
            a.swap(col, pivot);
            inv.swap(col, pivot);
            let d = a[col][col];
            for j in 0..n {
                a[col][j] /= d;
                inv[col][j] /= d;
            }
            for r in 0..n {
                if r != col {
                    let f = a[r][col];
                    if f != 0.0 {
                        for j in 0..n {
                            a[r][j] -= f * a[col][j];
                            inv[r][j] -= f * inv[col][j];
                        }
                    }
                }
            }
        }
        Some(inv)
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn det(m: &Mat) -> f64 {
        let n = m.len();
        let mut a: Mat = m.to_vec();
        let mut det = 1.0;
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
                .unwrap();
            if a[pivot][col] == 0.0 {
                return 0.0;
            }
            if pivot != col {
                a.swap(col, pivot);
                det = -det;
            }
            det *= a[col][col];
            for r in (col + 1)..n {
                let f = a[r][col] / a[col][col];
                for j in col..n {
                    a[r][j] -= f * a[col][j];
                }
            }
        }
        det
    }

    /// Saliency by explicit inversion: `q = (D − W + V + εI)⁻¹ 1`, clamp,
    /// normalize. The inverse is reapplied to two residuals formed as
    /// `Σ_j w_ij (q_i − q_j) + (v_i + ε) q_i` to undo its rounding error.
    pub fn saliency(weights: &Mat, v: &[f64], epsilon: f64) -> Vec<f64> {
        let n = v.len();
        let mut h = zeros(n, n);
        for i in 0..n {
            let degree: f64 = weights[i].iter().sum();
            for j in 0..n {
                h[i][j] = -weights[i][j];
            }
            h[i][i] += degree + v[i] + epsilon;
        }
        let inv = inverse(&h).expect("invertible H");
        let mut q: Vec<f64> = inv.iter().map(|row| row.iter().sum::<f64>()).collect();
        for _ in 0..2 {
            let r: Vec<f64> = (0..n)
                .map(|i| {
                    let spread: f64 = (0..n).map(|j| weights[i][j] * (q[i] - q[j])).sum();
                    1.0 - (v[i] + epsilon) * q[i] - spread
                })
                .collect();
            let dq = mat_vec(&inv, &r);
            for i in 0..n {
                q[i] += dq[i];
            }
        }
        let q: Vec<f64> = q.into_iter().map(|x| x.max(0.0)).collect();
        let total: f64 = q.iter().sum();
        q.iter().map(|x| x / total).collect()
    }
}

/// Faults that can be injected to prove the suite detects them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Assemble scatter pairs without the final symmetrization.
    SkipSymmetrization,
}

impl std::str::FromStr for Fault {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "skip-symmetrization" => Ok(Fault::SkipSymmetrization),
            other => Err(crate::Error::InvalidArgument(format!("unknown fault {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SelfTestOptions {
    pub seed: u64,
    pub instances: usize,
    pub fault: Option<Fault>,
}

impl Default for SelfTestOptions {
    fn default() -> Self {
        SelfTestOptions {
            seed: 0,
            instances: 50,
            fault: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub cases: usize,
    /// First failing case with its inputs serialized as JSON.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelfTestReport {
    pub checks: Vec<CheckOutcome>,
}

impl SelfTestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.failure.is_none())
    }

    pub fn first_failure(&self) -> Option<&str> {
        self.checks.iter().find_map(|c| c.failure.as_deref())
    }

    pub fn summary(&self) -> String {
        self.checks
            .iter()
            .map(|c| match &c.failure {
                None => format!("PASS {} ({} cases)\n", c.name, c.cases),
                Some(f) => format!("FAIL {}: {}\n", c.name, f),
            })
            .collect()
    }
}

/// A random labeled instance, serializable for replay.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScatterCase {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
    pub p: Vec<Vec<f64>>,
}

impl ScatterCase {
    /// `N ≤ 20`, `D ≤ 4`, `2 ≤ C ≤ 4`, at least two samples per class and
    /// `N > D + C` so the classical total scatter is nonsingular.
    pub fn random(rng: &mut impl Rng) -> Self {
        let dim = rng.random_range(1..=4usize);
        let n_classes = rng.random_range(2..=4usize);
        let min_n = (2 * n_classes).max(dim + n_classes + 1);
        let n = rng.random_range(min_n..=20);
        let mut labels: Vec<usize> = (0..n).map(|i| i % n_classes).collect();
        for i in (1..n).rev() {
            labels.swap(i, rng.random_range(0..=i));
        }
        let rows = labels
            .iter()
            .map(|&l| (0..dim).map(|j| rng.random_range(-1.0..1.0) + if j == l % dim { 2.0 * l as f64 } else { 0.0 }).collect())
            .collect();
        let p = (0..n_classes)
            .map(|c| {
                let size = labels.iter().filter(|&&l| l == c).count();
                let raw: Vec<f64> = (0..size).map(|_| rng.random_range(0.05..1.0)).collect();
                let total: f64 = raw.iter().sum();
                raw.iter().map(|v| v / total).collect()
            })
            .collect();
        ScatterCase {
            rows,
            labels,
            n_classes,
            p,
        }
    }

    pub fn features(&self) -> DMatrix<f64> {
        let d = self.rows[0].len();
        DMatrix::from_row_iterator(self.rows.len(), d, self.rows.iter().flatten().copied())
    }

    pub fn saliency(&self, partition: &crate::dataset::ClassPartition) -> Vec<SaliencyResult> {
        self.p
            .iter()
            .enumerate()
            .map(|(c, p)| {
                let rep = crate::saliency::weighted_mean(&partition.samples[c], p);
                SaliencyResult {
                    p: p.clone(),
                    representation: rep.iter().copied().collect(),
                    h_condition: f64::NAN,
                    regularized: false,
                    epsilon: 0.0,
                }
            })
            .collect()
    }

    pub fn oracle(&self) -> oracle::Instance<'_> {
        oracle::Instance {
            rows: &self.rows,
            labels: &self.labels,
            n_classes: self.n_classes,
            p: &self.p,
        }
    }
}

/// Every scatter builder of the library next to its oracle, for one case.
/// Returns `(name, library matrix, oracle matrix)`.
pub fn scatter_comparisons(case: &ScatterCase, symmetrize: bool) -> Result<Vec<(String, DMatrix<f64>, oracle::Mat)>> {
    let x = case.features();
    let partition = partition_by_class(&x, &case.labels, case.n_classes)?;
    let stats = ClassStats::from_partition(&partition);
    let sal = case.saliency(&partition);
    let o = case.oracle();
    let pair = |s_b, s_w| assemble_with(Variant::Lda, s_b, s_w, case.n_classes, symmetrize);
    let mut out = Vec::new();

    let classic = pair(scatter::classic_between(&stats), scatter::classic_within(&partition, &stats))?;
    out.push(("classic S_B".to_string(), classic.s_b.clone(), o.classic_between()));
    out.push(("classic S_W".to_string(), classic.s_w.clone(), o.classic_within()));

    let tang = pair(
        scatter::loog_between(&stats, &scatter::reciprocal_weight)?,
        scatter::tang_within(&partition, &stats)?,
    )?;
    out.push(("loog S_b".to_string(), tang.s_b, o.loog_between()));
    out.push(("tang S_w".to_string(), tang.s_w, o.tang_within()));

    let deltas = scatter::jarchi_deltas(&stats, &classic)?;
    let jarchi = scatter::jarchi_scatters(&partition, &stats, &deltas)?;
    out.push(("jarchi S_b".to_string(), jarchi.s_b, o.jarchi_between()));
    out.push(("jarchi S_w".to_string(), jarchi.s_w, o.jarchi_within()));

    for j in 1..=2u8 {
        let s_w = scatter::swlda_within(&partition, &stats, &sal, j)?;
        let s_b = scatter::swlda_between(&partition, &stats, &sal, 1)?;
        let p = pair(s_b, s_w)?;
        out.push((format!("S_w({j})"), p.s_w, o.swlda_within(j)));
    }
    for i in 1..=4u8 {
        let s_b = scatter::swlda_between(&partition, &stats, &sal, i)?;
        let s_w = scatter::swlda_within(&partition, &stats, &sal, 1)?;
        let p = pair(s_b, s_w)?;
        out.push((format!("S_b({i})"), p.s_b, o.swlda_between(i)));
    }
    Ok(out)
}

/// Tolerance for library-vs-oracle scatter entries.
pub const SCATTER_TOLERANCE: f64 = 1e-10;
/// Tolerance for library-vs-oracle saliency weights.
pub const SALIENCY_TOLERANCE: f64 = 1e-9;
/// Relative eigen-residual bound.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

fn replay<T: Serialize>(case: &T) -> String {
    serde_json::to_string(case).unwrap_or_else(|e| format!("<unserializable: {e}>"))
}

fn check_scatter(rng: &mut ChaCha8Rng, opts: &SelfTestOptions) -> CheckOutcome {
    let symmetrize = opts.fault != Some(Fault::SkipSymmetrization);
    for i in 0..opts.instances {
        let case = ScatterCase::random(rng);
        let fail = |msg: String| CheckOutcome {
            name: "scatter oracle equivalence",
            cases: i + 1,
            failure: Some(format!("case {i}: {msg}; replay: {}", replay(&case))),
        };
        let comparisons = match scatter_comparisons(&case, symmetrize) {
            Ok(c) => c,
            Err(e) => return fail(e.to_string()),
        };
        for (name, got, want) in comparisons {
            let skew = linalg::asymmetry(&got);
            if skew != 0.0 {
                return fail(format!("{name} not exactly symmetric (skew {skew:e})"));
            }
            let diff = oracle::max_abs_diff(&want, &got);
            if diff > SCATTER_TOLERANCE {
                return fail(format!("{name} differs from oracle by {diff:e}"));
            }
        }
    }
    CheckOutcome {
        name: "scatter oracle equivalence",
        cases: opts.instances,
        failure: None,
    }
}

/// A random class with rival class means, serializable for replay.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SaliencyCase {
    pub samples: Vec<Vec<f64>>,
    pub rival_means: Vec<Vec<f64>>,
    pub knn: bool,
}

impl SaliencyCase {
    /// `N_c ≤ 15` samples around the origin with rival means close enough that
    /// some samples get a nonzero prior.
    pub fn random(rng: &mut impl Rng) -> Self {
        let dim = rng.random_range(1..=4usize);
        let n = rng.random_range(1..=15usize);
        let samples = (0..n).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let rivals = rng.random_range(1..=3usize);
        let rival_means = (0..rivals)
            .map(|_| (0..dim).map(|_| rng.random_range(-1.5..1.5)).collect())
            .collect();
        SaliencyCase {
            samples,
            rival_means,
            knn: rng.random_bool(0.5),
        }
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let d = self.samples[0].len();
        DMatrix::from_iterator(d, self.samples.len(), self.samples.iter().flatten().copied())
    }

    /// Library solve plus the oracle weights.
    pub fn solve(&self, kernel: KernelKind) -> Result<(SaliencyResult, Vec<f64>)> {
        let x = self.matrix();
        let mut means = vec![x.column_sum() / x.ncols() as f64];
        means.extend(self.rival_means.iter().map(|m| DVector::from_column_slice(m)));
        let kind = if self.knn { GraphKind::Knn } else { GraphKind::Full };
        let graph = build_class_graph(&x, kind, kernel)?;
        let prior = misclassification_prior(&x, &means, 0)?;
        let result = solve_saliency(&x, &graph, &prior, 0.0)?;
        let want = oracle::saliency(&oracle::from_dmatrix(&graph.weights), &prior.v, result.epsilon);
        Ok((result, want))
    }
}

fn check_saliency(rng: &mut ChaCha8Rng, opts: &SelfTestOptions) -> CheckOutcome {
    let name = "saliency dense-inverse equivalence";
    for i in 0..opts.instances {
        let case = SaliencyCase::random(rng);
        let fail = |msg: String| CheckOutcome {
            name,
            cases: i + 1,
            failure: Some(format!("case {i}: {msg}; replay: {}", replay(&case))),
        };
        let (got, want) = match case.solve(KernelKind::Paper) {
            Ok(r) => r,
            Err(e) => return fail(e.to_string()),
        };
        let sum: f64 = got.p.iter().sum();
        if (sum - 1.0).abs() > SALIENCY_TOLERANCE || got.p.iter().any(|&v| v < 0.0) {
            return fail(format!("p is not a distribution: {:?}", got.p));
        }
        let diff = got.p.iter().zip(&want).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if diff > SALIENCY_TOLERANCE {
            return fail(format!("p differs from oracle by {diff:e}"));
        }
    }
    CheckOutcome {
        name,
        cases: opts.instances,
        failure: None,
    }
}

/// A random PSD pencil `(S_b, S_t = S_b + S_w)`, serializable for replay.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PencilCase {
    pub s_b: Vec<Vec<f64>>,
    pub s_w: Vec<Vec<f64>>,
}

impl PencilCase {
    /// `D ≤ 10`; `S_b` has rank at most `D`, `S_w` is occasionally rank deficient.
    pub fn random(rng: &mut impl Rng) -> Self {
        let d = rng.random_range(1..=10usize);
        let gram = |rank: usize, rng: &mut dyn rand::RngCore| {
            let a: Vec<Vec<f64>> = (0..d)
                .map(|_| (0..rank).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            (0..d)
                .map(|i| (0..d).map(|j| (0..rank).map(|k| a[i][k] * a[j][k]).sum()).collect())
                .collect::<Vec<Vec<f64>>>()
        };
        let rb = rng.random_range(1..=d);
        let rw = if rng.random_bool(0.2) { rng.random_range(1..=d) } else { d + 2 };
        let s_b = gram(rb, rng);
        let s_w = gram(rw, rng);
        PencilCase { s_b, s_w }
    }

    pub fn matrices(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let d = self.s_b.len();
        let b = DMatrix::from_fn(d, d, |i, j| self.s_b[i][j]);
        let w = DMatrix::from_fn(d, d, |i, j| self.s_w[i][j]);
        let t = &b + &w;
        (b, t)
    }
}

/// `max_k ‖S_b v_k − λ_k (S_t + εI) v_k‖ / (‖S_b‖ + λ_k ‖S_t‖)` over all returned pairs.
pub fn worst_residual(s_b: &DMatrix<f64>, s_t: &DMatrix<f64>, p: &crate::solver::Projection) -> f64 {
    let d = s_b.nrows();
    let reg = s_t + DMatrix::identity(d, d) * p.regularization.unwrap_or(0.0);
    let nb = linalg::sym_norm2(s_b);
    let nt = linalg::sym_norm2(s_t);
    let mut worst = 0.0f64;
    for (k, &lambda) in p.eigenvalues.iter().enumerate() {
        let v = p.w.column(k);
        let r = (s_b * v - (&reg * v) * lambda).norm();
        worst = worst.max(r / (nb + lambda.abs() * nt));
    }
    worst
}

/// Generalized Rayleigh quotient `vᵀ A v / vᵀ B v`.
pub fn rayleigh(a: &DMatrix<f64>, b: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    v.dot(&(a * v)) / v.dot(&(b * v))
}

fn check_eigen(rng: &mut ChaCha8Rng, opts: &SelfTestOptions) -> CheckOutcome {
    let name = "pencil eigen residuals";
    for i in 0..opts.instances {
        let case = PencilCase::random(rng);
        let fail = |msg: String| CheckOutcome {
            name,
            cases: i + 1,
            failure: Some(format!("case {i}: {msg}; replay: {}", replay(&case))),
        };
        let (s_b, s_t) = case.matrices();
        let d = s_b.nrows();
        let p = match solve_pencil(&s_b, &s_t, d + 1, Some(d), 0.0) {
            Ok(p) => p,
            Err(e) => return fail(e.to_string()),
        };
        let r = worst_residual(&s_b, &s_t, &p);
        if r > RESIDUAL_TOLERANCE {
            return fail(format!("relative residual {r:e}"));
        }
        let reg = &s_t + DMatrix::identity(d, d) * p.regularization.unwrap_or(0.0);
        let top = rayleigh(&s_b, &reg, &p.w.column(0).into_owned());
        for _ in 0..200 {
            let v = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
            let q = rayleigh(&s_b, &reg, &v);
            if q > top * (1.0 + 1e-12) + 1e-15 {
                return fail(format!("random direction beats top eigenvector: {q} > {top}"));
            }
        }
    }
    CheckOutcome {
        name,
        cases: opts.instances,
        failure: None,
    }
}

/// Runs the whole suite. Deterministic for a given seed.
pub fn self_test(opts: &SelfTestOptions) -> SelfTestReport {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let checks = vec![
        check_scatter(&mut rng, opts),
        check_saliency(&mut rng, opts),
        check_eigen(&mut rng, opts),
    ];
    SelfTestReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn passes_clean() {
        let report = self_test(&SelfTestOptions::default());
        assert!(report.passed(), "{}", report.summary());
    }

    #[test]
    fn detects_skipped_symmetrization() {
        let report = self_test(&SelfTestOptions {
            fault: Some(Fault::SkipSymmetrization),
            ..Default::default()
        });
        assert!(!report.passed());
        let msg = report.first_failure().unwrap();
        assert!(msg.contains("not exactly symmetric"), "{msg}");
        assert!(msg.contains("replay: {"), "{msg}");
    }

    #[test]
    fn failures_are_reproducible() {
        let opts = SelfTestOptions {
            seed: 5,
            fault: Some(Fault::SkipSymmetrization),
            ..Default::default()
        };
        assert_eq!(self_test(&opts), self_test(&opts));
    }

    #[test]
    fn oracle_inverse_and_det() {
        let m = vec![vec![4.0, 1.0], vec![2.0, 3.0]];
        assert!((oracle::det(&m) - 10.0).abs() < 1e-12);
        let inv = oracle::inverse(&m).unwrap();
        assert!((inv[0][0] - 0.3).abs() < 1e-12 && (inv[1][0] + 0.2).abs() < 1e-12);
    }
}
