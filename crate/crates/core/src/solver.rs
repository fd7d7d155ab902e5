//! Generalized symmetric-definite eigensolver for the discriminant pencil.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{canonical_sign, sym_eigen_desc, sym_eigenvalues_desc, symmetrize};
use crate::scatter::{ScatterPair, Variant};

/// The denominator is treated as positive definite when `λ_min > PD_THRESHOLD · λ_max`.
pub const PD_THRESHOLD: f64 = 1e-10;
/// Ridge `RIDGE_SCALE · trace / D` added to a non-PD denominator.
pub const RIDGE_SCALE: f64 = 1e-6;
/// Eigenvalues of `S_b` below `RANK_TOLERANCE · ‖S_b‖` do not count toward its rank.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Learned projection, one discriminant direction per column.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Projection {
    /// `D × d`.
    pub w: DMatrix<f64>,
    /// Descending generalized eigenvalues of the kept directions.
    pub eigenvalues: Vec<f64>,
    pub dims: usize,
    /// Ridge added to the denominator, if any.
    pub regularization: Option<f64>,
    pub variant: Option<Variant>,
}

impl Projection {
    pub fn input_dim(&self) -> usize {
        self.w.nrows()
    }

    /// Maps `N × D` rows to `N × d`.
    pub fn project(&self, data: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if data.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: data.ncols(),
            });
        }
        Ok(data * &self.w)
    }

    /// `Wᵀ v` for a single vector.
    pub fn project_vector(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        if v.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: v.len(),
            });
        }
        Ok(self.w.tr_mul(v))
    }
}

/// Free-function form of [`Projection::project`].
pub fn project(projection: &Projection, data: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    projection.project(data)
}

/// Solves `S_b v = λ (B + εI) v` for the pair's pencil, where `B` is
/// [`ScatterPair::denominator`], and keeps the top `dims` directions.
///
/// `dims` defaults to `min(C − 1, rank S_b, D)`.
pub fn solve_fisher(pair: &ScatterPair, dims: Option<usize>, epsilon: f64) -> Result<Projection> {
    let mut p = solve_pencil(&pair.s_b, pair.denominator(), pair.n_classes, dims, epsilon)?;
    p.variant = Some(pair.variant);
    Ok(p)
}

/// Generalized eigenproblem on an explicit pencil `(a, b)`.
///
/// `b` is used as is when numerically positive definite, otherwise with a
/// ridge `ε = max(epsilon, 1e-6·trace(b)/D)`. Eigenvectors are
/// `(b + εI)`-orthonormal with the first significant component positive.
pub fn solve_pencil(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    n_classes: usize,
    dims: Option<usize>,
    epsilon: f64,
) -> Result<Projection> {
    let d = a.nrows();
    if a.ncols() != d || b.nrows() != d || b.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: if b.nrows() != d { b.nrows() } else { b.ncols() },
        });
    }
    if d == 0 {
        return Err(Error::InvalidArgument("empty pencil".into()));
    }
    if let Some(k) = dims {
        if k == 0 || k > d {
            return Err(Error::InvalidArgument(format!(
                "requested {k} dimensions, input has {d}"
            )));
        }
    }
    if epsilon < 0.0 || !epsilon.is_finite() {
        return Err(Error::InvalidArgument(format!("epsilon must be >= 0, got {epsilon}")));
    }

    let a = symmetrize(a);
    let b = symmetrize(b);
    let a_eig = sym_eigenvalues_desc(&a);
    let b_eig = sym_eigenvalues_desc(&b);
    let a_norm = a_eig[0].abs().max(a_eig[d - 1].abs());
    let b_norm = b_eig[0].abs().max(b_eig[d - 1].abs());
    if a_norm == 0.0 || a_norm <= 1e-13 * b_norm {
        return Err(Error::NoBetweenClassSignal);
    }
    let rank = a_eig.iter().filter(|&&v| v > RANK_TOLERANCE * a_norm).count();
    let dims = dims.unwrap_or_else(|| n_classes.saturating_sub(1).min(rank).min(d).max(1));

    let ridge = |eps_floor: f64| {
        let scale = if b.trace() > 0.0 { b.trace() } else { a.trace() };
        epsilon.max(RIDGE_SCALE * scale / d as f64).max(eps_floor)
    };
    let mut eps = if b_eig[d - 1] > PD_THRESHOLD * b_eig[0] && b_eig[0] > 0.0 {
        0.0
    } else {
        ridge(0.0)
    };
    let chol = loop {
        let reg = if eps > 0.0 { &b + DMatrix::identity(d, d) * eps } else { b.clone() };
        match reg.cholesky() {
            Some(ch) => break ch,
            None if eps == 0.0 => eps = ridge(0.0),
            None => eps = ridge(eps * 10.0),
        }
    };
    let l = chol.l();

    // C = L⁻¹ A L⁻ᵀ
    let y = l
        .solve_lower_triangular(&a)
        .ok_or_else(|| Error::InvalidArgument("singular Cholesky factor".into()))?;
    let c = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| Error::InvalidArgument("singular Cholesky factor".into()))?;
    let (values, vectors) = sym_eigen_desc(&c);

    let lt = l.transpose();
    let mut w = DMatrix::zeros(d, dims);
    for k in 0..dims {
        let mut v = lt
            .solve_upper_triangular(&vectors.column(k).into_owned())
            .ok_or_else(|| Error::InvalidArgument("singular Cholesky factor".into()))?;
        canonical_sign(&mut v);
        w.set_column(k, &v);
    }
    Ok(Projection {
        w,
        eigenvalues: values.iter().take(dims).copied().collect(),
        dims,
        regularization: (eps > 0.0).then_some(eps),
        variant: None,
    })
}
