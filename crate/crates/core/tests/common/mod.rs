//! Reference computations for integration tests, written from the
//! definitions with explicit loops over flat row-major arrays.

#![allow(dead_code, clippy::needless_range_loop)]

use nalgebra::DMatrix;
use rand::Rng;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Sq {
    pub n: usize,
    pub a: Vec<f64>,
}

impl Sq {
    pub fn zeros(n: usize) -> Self {
        Sq { n, a: vec![0.0; n * n] }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] += v;
    }

    /// `self += w · u vᵀ`
    pub fn rank1(&mut self, u: &[f64], v: &[f64], w: f64) {
        for i in 0..self.n {
            for j in 0..self.n {
                self.add(i, j, w * u[i] * v[j]);
            }
        }
    }

    pub fn plus(&self, other: &Sq) -> Sq {
        Sq {
            n: self.n,
            a: self.a.iter().zip(&other.a).map(|(x, y)| x + y).collect(),
        }
    }

    pub fn max_diff(&self, m: &DMatrix<f64>) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in 0..self.n {
                worst = worst.max((self.get(i, j) - m[(i, j)]).abs());
            }
        }
        worst
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j) * v[j]).sum()).collect()
    }
}

pub fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sqdist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve(m: &Sq, b: &[f64]) -> Vec<f64> {
    let n = m.n;
    let mut a = m.a.clone();
    let mut x = b.to_vec();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs())).unwrap();
        for j in 0..n {
            a.swap(k * n + j, p * n + j);
        }
        x.swap(k, p);
        for i in (k + 1)..n {
            let f = a[i * n + k] / a[k * n + k];
            for j in k..n {
                a[i * n + j] -= f * a[k * n + j];
            }
            x[i] -= f * x[k];
        }
    }
    for k in (0..n).rev() {
        let s: f64 = ((k + 1)..n).map(|j| a[k * n + j] * x[j]).sum();
        x[k] = (x[k] - s) / a[k * n + k];
    }
    x
}

/// Explicit inverse, column by column.
pub fn inverse(m: &Sq) -> Sq {
    let n = m.n;
    let mut inv = Sq::zeros(n);
    for c in 0..n {
        let mut e = vec![0.0; n];
        e[c] = 1.0;
        let col = solve(m, &e);
        for r in 0..n {
            inv.a[r * n + c] = col[r];
        }
    }
    inv
}

/// Determinant via LU with partial pivoting.
pub fn det(m: &Sq) -> f64 {
    let n = m.n;
    let mut a = m.a.clone();
    let mut d = 1.0;
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs())).unwrap();
        if a[p * n + k] == 0.0 {
            return 0.0;
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            d = -d;
        }
        d *= a[k * n + k];
        for i in (k + 1)..n {
            let f = a[i * n + k] / a[k * n + k];
            for j in k..n {
                a[i * n + j] -= f * a[k * n + j];
            }
        }
    }
    d
}

/// A labeled sample set with per-sample saliency weights (`w[i]` belongs to
/// sample `i` and sums to one within each class).
#[derive(Debug, Clone)]
pub struct Labeled {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
    pub c: usize,
    pub w: Vec<f64>,
}

impl Labeled {
    pub fn random(rng: &mut impl Rng) -> Self {
        let d = rng.random_range(1..=4usize);
        let c = rng.random_range(2..=4usize);
        let n = rng.random_range((2 * c).max(d + c + 1)..=20);
        let mut y: Vec<usize> = (0..n).map(|i| i % c).collect();
        for i in (1..n).rev() {
            y.swap(i, rng.random_range(0..=i));
        }
        let x: Vec<Vec<f64>> = y
            .iter()
            .map(|&l| (0..d).map(|j| rng.random_range(-2.0..2.0) + if j == l % d { 3.0 * l as f64 } else { 0.0 }).collect())
            .collect();
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        let mut w = raw.clone();
        for k in 0..c {
            let total: f64 = (0..n).filter(|&i| y[i] == k).map(|i| raw[i]).sum();
            for i in 0..n {
                if y[i] == k {
                    w[i] = raw[i] / total;
                }
            }
        }
        Labeled { x, y, c, w }
    }

    pub fn dim(&self) -> usize {
        self.x[0].len()
    }

    pub fn features(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.x.len(), self.dim(), |i, j| self.x[i][j])
    }

    pub fn members(&self, k: usize) -> Vec<usize> {
        (0..self.y.len()).filter(|&i| self.y[i] == k).collect()
    }

    /// Class weights in the order samples appear, as the library's partition holds them.
    pub fn class_weights(&self, k: usize) -> Vec<f64> {
        self.members(k).iter().map(|&i| self.w[i]).collect()
    }

    fn avg(&self, idx: &[usize], weight: impl Fn(usize) -> f64) -> Vec<f64> {
        let mut m = vec![0.0; self.dim()];
        for &i in idx {
            for j in 0..self.dim() {
                m[j] += weight(i) * self.x[i][j];
            }
        }
        m
    }

    pub fn mean(&self, k: usize) -> Vec<f64> {
        let idx = self.members(k);
        let n = idx.len() as f64;
        self.avg(&idx, |_| 1.0 / n)
    }

    pub fn total_mean(&self) -> Vec<f64> {
        let idx: Vec<usize> = (0..self.y.len()).collect();
        let n = idx.len() as f64;
        self.avg(&idx, |_| 1.0 / n)
    }

    /// `μ̂_k = Σ_i w_i x_i` over class `k`.
    pub fn rep(&self, k: usize) -> Vec<f64> {
        self.avg(&self.members(k), |i| self.w[i])
    }

    pub fn prior(&self, k: usize) -> f64 {
        self.members(k).len() as f64 / self.y.len() as f64
    }

    pub fn relevance(&self, k: usize) -> f64 {
        (0..self.c).filter(|&j| j != k).map(|j| 1.0 / sqdist(&self.mean(j), &self.mean(k)).sqrt()).sum()
    }

    /// `Σ_i a(i) (x_i − μ_{y_i})(x_i − μ_{y_i})ᵀ`
    fn scatter_about_means(&self, a: impl Fn(usize) -> f64) -> Sq {
        let mut s = Sq::zeros(self.dim());
        for i in 0..self.x.len() {
            let dv = diff(&self.x[i], &self.mean(self.y[i]));
            s.rank1(&dv, &dv, a(i));
        }
        s
    }

    pub fn s_w_classic(&self) -> Sq {
        self.scatter_about_means(|_| 1.0)
    }

    pub fn s_b_classic(&self) -> Sq {
        let mu = self.total_mean();
        let mut s = Sq::zeros(self.dim());
        for k in 0..self.c {
            let dv = diff(&self.mean(k), &mu);
            s.rank1(&dv, &dv, self.members(k).len() as f64);
        }
        s
    }

    pub fn s_t_classic(&self) -> Sq {
        self.s_w_classic().plus(&self.s_b_classic())
    }

    pub fn loog(&self) -> Sq {
        let mut s = Sq::zeros(self.dim());
        for a in 0..self.c {
            for b in (a + 1)..self.c {
                let dv = diff(&self.mean(a), &self.mean(b));
                let l = dot(&dv, &dv).sqrt();
                s.rank1(&dv, &dv, self.prior(a) * self.prior(b) / l);
            }
        }
        s
    }

    pub fn tang(&self) -> Sq {
        self.scatter_about_means(|i| self.prior(self.y[i]) * self.relevance(self.y[i]))
    }

    pub fn jarchi_delta(&self, a: usize, b: usize) -> f64 {
        let st = self.s_t_classic();
        let delta = diff(&self.mean(a), &self.mean(b));
        let w = solve(&st, &delta);
        dot(&w, &delta).powi(2) / dot(&w, &st.mul_vec(&w))
    }

    pub fn jarchi_b(&self) -> Sq {
        let mut s = Sq::zeros(self.dim());
        for a in 0..self.c {
            for b in (a + 1)..self.c {
                let dv = diff(&self.mean(a), &self.mean(b));
                let nn = (self.members(a).len() * self.members(b).len()) as f64;
                s.rank1(&dv, &dv, nn / self.jarchi_delta(a, b));
            }
        }
        s
    }

    pub fn jarchi_w(&self) -> Sq {
        let sums: Vec<f64> = (0..self.c)
            .map(|a| (0..self.c).filter(|&b| b != a).map(|b| self.jarchi_delta(a, b)).sum())
            .collect();
        self.scatter_about_means(|i| self.prior(self.y[i]) / sums[self.y[i]])
    }

    pub fn sw1(&self) -> Sq {
        self.scatter_about_means(|i| self.w[i])
    }

    pub fn sw2(&self) -> Sq {
        self.scatter_about_means(|i| self.w[i] * self.relevance(self.y[i]))
    }

    pub fn sb2(&self) -> Sq {
        let mu = self.total_mean();
        let mut s = Sq::zeros(self.dim());
        for k in 0..self.c {
            let dv = diff(&self.rep(k), &mu);
            s.rank1(&dv, &dv, 1.0);
        }
        s
    }

    pub fn sb3(&self) -> Sq {
        let mut s = Sq::zeros(self.dim());
        for a in 0..self.c {
            for b in 0..self.c {
                let dv = diff(&self.rep(a), &self.rep(b));
                s.rank1(&dv, &dv, 1.0);
            }
        }
        s
    }

    pub fn sb4(&self) -> Sq {
        let mut s = Sq::zeros(self.dim());
        for i in 0..self.x.len() {
            for b in (0..self.c).filter(|&b| b != self.y[i]) {
                let dv = diff(&self.x[i], &self.rep(b));
                s.rank1(&dv, &dv, self.w[i]);
            }
        }
        s
    }
}

/// Heat-kernel affinity of one class, from the definitions: `σ` is the mean
/// pairwise distance, the kernel is `exp(−t / 2σ²)` with `t` the distance
/// (or its square), and k-NN edges are kept when either endpoint lists the other.
pub fn affinity(points: &[Vec<f64>], knn: bool, squared: bool) -> Sq {
    let n = points.len();
    let dist = |i: usize, j: usize| sqdist(&points[i], &points[j]).sqrt();
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            sum += dist(i, j);
        }
    }
    let sigma = if n > 1 { sum / (n * (n - 1) / 2) as f64 } else { 1.0 };
    let sigma = if sigma > 0.0 { sigma } else { 1.0 };
    let k = ((n / 10).clamp(1, 5)).min(n.saturating_sub(1));
    let neighbours = |i: usize| -> Vec<usize> {
        let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        others.sort_by(|&a, &b| dist(i, a).total_cmp(&dist(i, b)).then(a.cmp(&b)));
        others.truncate(k);
        others
    };
    let mut w = Sq::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let linked = !knn || neighbours(i).contains(&j) || neighbours(j).contains(&i);
            if linked {
                let t = if squared { dist(i, j).powi(2) } else { dist(i, j) };
                w.a[i * n + j] = (-t / (2.0 * sigma * sigma)).exp();
            }
        }
    }
    w
}

/// Prior `v_i` from squared distances to the own mean and the nearest rival.
pub fn prior(points: &[Vec<f64>], own: &[f64], rivals: &[Vec<f64>]) -> Vec<f64> {
    points
        .iter()
        .map(|x| {
            let d_own = sqdist(x, own);
            let d_rival = rivals.iter().map(|m| sqdist(x, m)).fold(f64::INFINITY, f64::min);
            if d_own < d_rival {
                0.0
            } else {
                d_own / d_rival
            }
        })
        .collect()
}

/// `p = clamp(inv(D − W + V + εI) 1) / sum`, with the explicit inverse
/// reapplied to two residuals `1 − H q` formed as `Σ_j w_ij (q_i − q_j) + (v_i + ε) q_i`.
pub fn saliency(w: &Sq, v: &[f64], eps: f64) -> Vec<f64> {
    let n = w.n;
    let mut h = Sq::zeros(n);
    for i in 0..n {
        let deg: f64 = (0..n).map(|j| w.get(i, j)).sum();
        for j in 0..n {
            h.a[i * n + j] = -w.get(i, j);
        }
        h.a[i * n + i] += deg + v[i] + eps;
    }
    let inv = inverse(&h);
    let mut q: Vec<f64> = (0..n).map(|i| (0..n).map(|j| inv.get(i, j)).sum::<f64>()).collect();
    for _ in 0..2 {
        let r: Vec<f64> = (0..n)
            .map(|i| 1.0 - (v[i] + eps) * q[i] - (0..n).map(|j| w.get(i, j) * (q[i] - q[j])).sum::<f64>())
            .collect();
        let dq = inv.mul_vec(&r);
        for i in 0..n {
            q[i] += dq[i];
        }
    }
    let q: Vec<f64> = q.into_iter().map(|x| x.max(0.0)).collect();
    let s: f64 = q.iter().sum();
    q.into_iter().map(|x| x / s).collect()
}

/// Well-separated isotropic Gaussian classes, rows as `Vec<f64>`.
pub fn gaussian_rows(rng: &mut impl Rng, means: &[Vec<f64>], per_class: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    use rand_distr::{Distribution, StandardNormal};
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (k, m) in means.iter().enumerate() {
        for _ in 0..per_class {
            x.push(m.iter().map(|v| { let z: f64 = StandardNormal.sample(rng); v + z }).collect::<Vec<f64>>());
            y.push(k);
        }
    }
    (x, y)
}
