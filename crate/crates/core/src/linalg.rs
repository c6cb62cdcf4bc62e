//! Dense symmetric linear algebra: eigendecomposition, signed spectral
//! splitting, pseudoinverse, PSD square root and range membership.
//!
//! Every routine works on small dense matrices (n ≤ ~60) and is pure.
//! Zero tolerances are scale relative: a tolerance `tol` passed to these
//! functions means `tol · max(1, |λ|_max)` in absolute terms.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Default relative zero tolerance for eigenvalues.
pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(&'static str),
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:e})")]
    NotPsd { min_eig: f64 },
}

/// A real symmetric matrix. Input is symmetrized as `(A + Aᵀ)/2` on
/// construction, so `get(i, j) == get(j, i)` holds bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    m: DMatrix<f64>,
}

impl SymMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self, LinalgError> {
        if m.nrows() != m.ncols() {
            return Err(LinalgError::InvalidMatrix("not square"));
        }
        if m.nrows() == 0 {
            return Err(LinalgError::InvalidMatrix("empty"));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::InvalidMatrix("non-finite entry"));
        }
        let n = m.nrows();
        let mut s = m.clone();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        Ok(Self { m: s })
    }

    /// Builds from row slices; every row must have length `rows.len()`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(LinalgError::InvalidMatrix("ragged rows"));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn from_diag(d: &[f64]) -> Result<Self, LinalgError> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn identity(n: usize) -> Self {
        assert!(n >= 1);
        Self { m: DMatrix::identity(n, n) }
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1);
        Self { m: DMatrix::zeros(n, n) }
    }

    /// True when the raw input was not symmetric to begin with.
    pub fn is_asymmetric(m: &DMatrix<f64>) -> bool {
        m.nrows() == m.ncols()
            && (0..m.nrows()).any(|i| (0..i).any(|j| m[(i, j)] != m[(j, i)]))
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.norm()
    }

    pub fn is_zero(&self) -> bool {
        self.m.iter().all(|v| *v == 0.0)
    }

    /// Trace inner product `A·B = tr(AB)`.
    pub fn inner(&self, other: &SymMatrix) -> f64 {
        self.m.dot(&other.m)
    }

    /// `xᵀ A x`.
    pub fn quad_form(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.m * x))
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.m * x
    }
}

/// Eigenvalues (ascending) and matching orthonormal eigenvectors stored as
/// the columns of `vectors`, so `A = V diag(λ) Vᵀ`.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl Eigen {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// Absolute zero cutoff for a relative tolerance.
    pub fn cutoff(&self, tol: f64) -> f64 {
        tol * self.max_abs().max(1.0)
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

pub fn eig_sym(a: &SymMatrix) -> Result<Eigen, LinalgError> {
    eig_dense(a.as_matrix())
}

/// Eigendecomposition of a dense matrix assumed symmetric (only used on
/// matrices assembled internally, e.g. evaluated LMI blocks).
pub fn eig_dense(a: &DMatrix<f64>) -> Result<Eigen, LinalgError> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::InvalidMatrix("non-finite entry"));
    }
    let se = SymmetricEigen::new(a.clone());
    let n = a.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    let values = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| se.eigenvectors[(r, order[c])]);
    Ok(Eigen { values, vectors })
}

/// Smallest eigenvalue of a symmetric dense matrix; `+∞` for an empty one.
pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return f64::INFINITY;
    }
    eig_dense(a).map(|e| e.min()).unwrap_or(f64::NAN)
}

/// `Q = LᵀL − MᵀM` from the spectral decomposition.
#[derive(Debug, Clone)]
pub struct EigenSplit {
    /// `r × n`, rows `√λ vᵀ` for λ > tol, descending |λ|.
    pub l: DMatrix<f64>,
    /// `s × n`, rows `√(−λ) vᵀ` for λ < −tol, descending |λ|.
    pub m: DMatrix<f64>,
    pub zero_tolerance: f64,
}

impl EigenSplit {
    pub fn pos_count(&self) -> usize {
        self.l.nrows()
    }

    pub fn neg_count(&self) -> usize {
        self.m.nrows()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.l.transpose() * &self.l - self.m.transpose() * &self.m
    }
}

pub fn split_signed(a: &SymMatrix, tol: f64) -> Result<EigenSplit, LinalgError> {
    let e = eig_sym(a)?;
    let cut = e.cutoff(tol);
    let n = a.n();
    let mut pos: Vec<usize> = (0..n).filter(|&i| e.values[i] > cut).collect();
    let mut neg: Vec<usize> = (0..n).filter(|&i| e.values[i] < -cut).collect();
    pos.sort_by(|&i, &j| e.values[j].abs().total_cmp(&e.values[i].abs()));
    neg.sort_by(|&i, &j| e.values[j].abs().total_cmp(&e.values[i].abs()));
    let rows = |idx: &[usize]| {
        DMatrix::from_fn(idx.len(), n, |r, c| {
            libm::sqrt(e.values[idx[r]].abs()) * e.vectors[(c, idx[r])]
        })
    };
    Ok(EigenSplit { l: rows(&pos), m: rows(&neg), zero_tolerance: cut })
}

/// `n × n` factor `B = diag(√max(λ,0)) Vᵀ` with rows in ascending
/// eigenvalue order (rows of clipped eigenvalues are zero); `BᵀB = A₊`.
pub fn spectral_factor(a: &SymMatrix, tol: f64) -> Result<DMatrix<f64>, LinalgError> {
    let e = eig_sym(a)?;
    let cut = e.cutoff(tol);
    let n = a.n();
    Ok(DMatrix::from_fn(n, n, |r, c| {
        let lam = e.values[r];
        if lam > cut {
            libm::sqrt(lam) * e.vectors[(c, r)]
        } else {
            0.0
        }
    }))
}

/// Moore–Penrose pseudoinverse.
pub fn pinv(a: &SymMatrix, tol: f64) -> Result<SymMatrix, LinalgError> {
    let e = eig_sym(a)?;
    let cut = e.cutoff(tol);
    let inv: Vec<f64> =
        e.values.iter().map(|&l| if l.abs() > cut { 1.0 / l } else { 0.0 }).collect();
    let d = DMatrix::from_diagonal(&DVector::from_vec(inv));
    SymMatrix::new(&e.vectors * d * e.vectors.transpose())
}

/// Symmetric PSD square root; eigenvalues in `[−1e−6·max(1,‖A‖_F), 0)` are
/// clamped to zero.
pub fn psd_sqrt(a: &SymMatrix) -> Result<SymMatrix, LinalgError> {
    let e = eig_sym(a)?;
    let slack = 1e-6 * a.frobenius_norm().max(1.0);
    if e.min() < -slack {
        return Err(LinalgError::NotPsd { min_eig: e.min() });
    }
    let d: Vec<f64> = e.values.iter().map(|&l| libm::sqrt(l.max(0.0))).collect();
    let d = DMatrix::from_diagonal(&DVector::from_vec(d));
    SymMatrix::new(&e.vectors * d * e.vectors.transpose())
}

/// `‖Q Q† c − c‖ ≤ tol · max(1, ‖c‖)`.
pub fn in_range(q: &SymMatrix, c: &DVector<f64>, tol: f64) -> Result<bool, LinalgError> {
    let p = pinv(q, DEFAULT_TOL)?;
    let r = q.mul_vec(&p.mul_vec(c)) - c;
    Ok(r.norm() <= tol * c.norm().max(1.0))
}

/// `λ_min ≥ −tol·max(1, |λ|_max)`.
pub fn is_psd(a: &SymMatrix, tol: f64) -> Result<bool, LinalgError> {
    let e = eig_sym(a)?;
    Ok(e.min() >= -e.cutoff(tol))
}
