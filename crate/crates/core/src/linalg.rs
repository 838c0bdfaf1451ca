//! Dense and matrix-free linear-algebra substrate.
//!
//! Everything downstream works against [`LinearOperator`], so solvers never
//! need an explicit matrix. [`DenseMatrix`] is the explicit backing used by
//! the 1-D test problems and by the brute-force reference solvers
//! ([`pseudoinverse_solve`], [`dense_lstsq`]), which exist to be compared
//! against, not to be fast.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Dense vector with all-finite entries, enforced on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector(Vec<f64>);

impl Vector {
    /// Wraps `data`, rejecting NaN and infinite entries.
    pub fn new(data: Vec<f64>) -> Result<Self> {
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("vector entry"));
        }
        Ok(Vector(data))
    }

    pub fn from_slice(data: &[f64]) -> Result<Self> {
        Self::new(data.to_vec())
    }

    pub fn zeros(n: usize) -> Self {
        Vector(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        norm2(&self.0)
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        assert_eq!(self.len(), other.len(), "dot: length mismatch");
        dot(&self.0, &other.0)
    }

    pub fn scaled(&self, c: f64) -> Vector {
        Vector(self.0.iter().map(|v| c * v).collect())
    }

    /// Returns `self - other`.
    pub fn sub(&self, other: &Vector) -> Vector {
        assert_eq!(self.len(), other.len(), "sub: length mismatch");
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// Returns `self + other`.
    pub fn add(&self, other: &Vector) -> Vector {
        assert_eq!(self.len(), other.len(), "add: length mismatch");
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl std::ops::Deref for Vector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y += c * x`.
pub fn axpy(c: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += c * xi;
    }
}

/// A linear map together with its adjoint, the only access the iterative
/// methods get to the system matrix.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `out = A x`; `x.len() == ncols`, `out.len() == nrows`.
    fn forward_into(&self, x: &[f64], out: &mut [f64]);
    /// `out = A^T y`; `y.len() == nrows`, `out.len() == ncols`.
    fn transpose_into(&self, y: &[f64], out: &mut [f64]);
}

/// `A x` with dimension checking.
pub fn apply<O: LinearOperator + ?Sized>(op: &O, x: &Vector) -> Result<Vector> {
    if x.len() != op.ncols() {
        return Err(Error::DimensionMismatch {
            context: "apply",
            expected: op.ncols(),
            actual: x.len(),
        });
    }
    let mut out = vec![0.0; op.nrows()];
    op.forward_into(x, &mut out);
    Vector::new(out)
}

/// `A^T y` with dimension checking.
pub fn apply_transpose<O: LinearOperator + ?Sized>(op: &O, y: &Vector) -> Result<Vector> {
    if y.len() != op.nrows() {
        return Err(Error::DimensionMismatch {
            context: "apply_transpose",
            expected: op.nrows(),
            actual: y.len(),
        });
    }
    let mut out = vec![0.0; op.ncols()];
    op.transpose_into(y, &mut out);
    Vector::new(out)
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        DenseMatrix {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    /// Builds from row-major data; checks the length and entry finiteness.
    pub fn from_row_major(nrows: usize, ncols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != nrows * ncols {
            return Err(Error::DimensionMismatch {
                context: "from_row_major",
                expected: nrows * ncols,
                actual: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entry"));
        }
        Ok(DenseMatrix { nrows, ncols, data })
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(nrows * ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { nrows, ncols, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    /// Column-stack of unit-length basis vectors (or any equal-length vectors).
    pub fn from_columns(cols: &[Vector]) -> Self {
        if cols.is_empty() {
            return DenseMatrix::zeros(0, 0);
        }
        let m = cols[0].len();
        assert!(
            cols.iter().all(|c| c.len() == m),
            "from_columns: ragged columns"
        );
        Self::from_fn(m, cols.len(), |i, j| cols[j][i])
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.ncols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.ncols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.nrows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        Self::from_fn(self.ncols, self.nrows, |i, j| self.get(j, i))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "matvec: length mismatch");
        (0..self.nrows).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn tr_matvec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.nrows, "tr_matvec: length mismatch");
        let mut out = vec![0.0; self.ncols];
        for i in 0..self.nrows {
            axpy(y[i], self.row(i), &mut out);
        }
        out
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.ncols, rhs.nrows, "matmul: inner dimension mismatch");
        DenseMatrix::from_fn(self.nrows, rhs.ncols, |i, j| {
            (0..self.ncols).map(|l| self.get(i, l) * rhs.get(l, j)).sum()
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut sv: Vec<f64> = self.to_na().singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        sv
    }

    fn to_na(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.nrows, self.ncols, &self.data)
    }
}

impl LinearOperator for DenseMatrix {
    fn nrows(&self) -> usize {
        self.nrows
    }
    fn ncols(&self) -> usize {
        self.ncols
    }
    fn forward_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.matvec(x));
    }
    fn transpose_into(&self, y: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.tr_matvec(y));
    }
}

/// Minimum-norm least-squares solution through the full SVD, truncating
/// singular values below `nrows * eps * sigma_max`. Brute-force reference,
/// used by tests and by nothing on the iterative path.
pub fn pseudoinverse_solve(a: &DenseMatrix, b: &Vector) -> Result<Vector> {
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            context: "pseudoinverse_solve",
            expected: a.nrows(),
            actual: b.len(),
        });
    }
    let svd = a.to_na().svd(true, true);
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let tol = a.nrows() as f64 * f64::EPSILON * sigma_max;
    let rhs = DVector::from_column_slice(b.as_slice());
    let x = svd.solve(&rhs, tol).map_err(|_| Error::SvdFailed)?;
    Vector::new(x.iter().copied().collect())
}

/// Thin QR factorization `a = q * r` of a matrix with `nrows >= ncols`:
/// `q` is `nrows x ncols` with orthonormal columns, `r` is `ncols x ncols`
/// upper triangular. No rank check; callers inspect `r` themselves.
pub fn qr_thin(a: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    if a.nrows() < a.ncols() {
        return Err(Error::InvalidParam {
            name: "a",
            reason: format!("qr_thin needs nrows >= ncols, got {}x{}", a.nrows(), a.ncols()),
        });
    }
    let qr = a.to_na().qr();
    let q = qr.q();
    let r = qr.r();
    let qd = DenseMatrix::from_fn(a.nrows(), a.ncols(), |i, j| q[(i, j)]);
    let rd = DenseMatrix::from_fn(a.ncols(), a.ncols(), |i, j| r[(i, j)]);
    Ok((qd, rd))
}

/// Back-substitution for a square upper-triangular system. A diagonal entry
/// at or below `max(dims) * eps * max |r_jj|` is reported as rank deficiency.
pub fn solve_upper_triangular(r: &DenseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = r.ncols();
    if r.nrows() != n {
        return Err(Error::DimensionMismatch {
            context: "solve_upper_triangular",
            expected: n,
            actual: r.nrows(),
        });
    }
    if rhs.len() != n {
        return Err(Error::DimensionMismatch {
            context: "solve_upper_triangular",
            expected: n,
            actual: rhs.len(),
        });
    }
    let rmax = (0..n).map(|j| r.get(j, j).abs()).fold(0.0_f64, f64::max);
    let tol = n as f64 * f64::EPSILON * rmax;
    let mut x = vec![0.0; n];
    for j in (0..n).rev() {
        let diag = r.get(j, j);
        if diag.abs() <= tol {
            return Err(Error::RankDeficient { index: j, value: diag.abs() });
        }
        let mut s = rhs[j];
        for i in j + 1..n {
            s -= r.get(j, i) * x[i];
        }
        x[j] = s / diag;
    }
    Ok(x)
}

/// Least-squares solution of an overdetermined full-column-rank system via
/// Householder QR. Rank deficiency is reported as an error rather than
/// silently regularized.
pub fn dense_lstsq(a: &DenseMatrix, b: &Vector) -> Result<Vector> {
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            context: "dense_lstsq",
            expected: a.nrows(),
            actual: b.len(),
        });
    }
    if a.nrows() < a.ncols() {
        return Err(Error::InvalidParam {
            name: "a",
            reason: format!("underdetermined system ({} rows < {} cols)", a.nrows(), a.ncols()),
        });
    }
    let qr = a.to_na().qr();
    let r = qr.r();
    let rmax = (0..a.ncols()).map(|j| r[(j, j)].abs()).fold(0.0_f64, f64::max);
    let tol = a.nrows().max(a.ncols()) as f64 * f64::EPSILON * rmax;
    for j in 0..a.ncols() {
        if r[(j, j)].abs() <= tol {
            return Err(Error::RankDeficient {
                index: j,
                value: r[(j, j)].abs(),
            });
        }
    }
    let mut rhs = DVector::from_column_slice(b.as_slice());
    qr.q_tr_mul(&mut rhs);
    let y = r
        .rows(0, a.ncols())
        .solve_upper_triangular(&rhs.rows(0, a.ncols()))
        .ok_or(Error::RankDeficient { index: 0, value: 0.0 })?;
    Vector::new(y.iter().copied().collect())
}
