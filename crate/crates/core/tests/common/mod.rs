//! Shared helpers for the integration tests.
//!
//! The oracle routines here (Krylov bases, Gram-Schmidt QR, least squares)
//! are written directly against plain slices so the checks stay independent
//! of the recurrence-based implementations they judge.

#![allow(dead_code)]

use gkreg::{apply_noise, DenseMatrix, NoiseSpec, NoisySystem, TestProblem, Vector};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Orthonormal basis of the Krylov space span{start, M start, M^2 start, ..}
/// built by explicit Gram-Schmidt with a second pass; the first `j` vectors
/// span the `j`-dimensional Krylov space. Stops early if the space becomes
/// invariant.
pub fn krylov_basis(mul: &dyn Fn(&[f64]) -> Vec<f64>, start: &[f64], k: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut next = start.to_vec();
    for _ in 0..k {
        let mut v = next;
        for _pass in 0..2 {
            for u in &basis {
                let c = dot(&v, u);
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= c * ui;
                }
            }
        }
        let nv = norm(&v);
        if nv < 1e-13 * norm(start).max(1.0) {
            break;
        }
        for vi in v.iter_mut() {
            *vi /= nv;
        }
        next = mul(&v);
        basis.push(v);
    }
    basis
}

/// Relative distance of `v` from the span of the (orthonormal) basis.
pub fn span_residual(basis: &[Vec<f64>], v: &[f64]) -> f64 {
    let mut r = v.to_vec();
    for _pass in 0..2 {
        for u in basis {
            let c = dot(&r, u);
            for (ri, ui) in r.iter_mut().zip(u) {
                *ri -= c * ui;
            }
        }
    }
    norm(&r) / norm(v)
}

/// Two-pass Gram-Schmidt QR of the given columns; returns orthonormal
/// columns and the triangular coefficients (`r[j]` holds the components of
/// column `j` along `q_0..=q_j`).
pub fn mgs_qr(cols: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(cols.len());
    let mut r: Vec<Vec<f64>> = Vec::with_capacity(cols.len());
    for col in cols {
        let mut v = col.clone();
        let mut coeffs = vec![0.0; q.len() + 1];
        for _pass in 0..2 {
            for (i, u) in q.iter().enumerate() {
                let c = dot(&v, u);
                coeffs[i] += c;
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= c * ui;
                }
            }
        }
        let nv = norm(&v);
        coeffs[q.len()] = nv;
        assert!(nv > 0.0, "rank-deficient oracle matrix");
        q.push(v.iter().map(|x| x / nv).collect());
        r.push(coeffs);
    }
    (q, r)
}

/// Least-squares solution of min ||rhs - cols * z|| through the QR factors.
pub fn lstsq_cols(cols: &[Vec<f64>], rhs: &[f64]) -> Vec<f64> {
    let k = cols.len();
    let (q, r) = mgs_qr(cols);
    let c: Vec<f64> = q.iter().map(|u| dot(u, rhs)).collect();
    let mut z = vec![0.0; k];
    for j in (0..k).rev() {
        let mut acc = c[j];
        for (i, zi) in z.iter().enumerate().skip(j + 1) {
            // r[i][j] = component of column i along q_j for i > j.
            acc -= r[i][j] * zi;
        }
        z[j] = acc / r[j][j];
    }
    z
}

/// Frobenius distance between two dense matrices.
pub fn frobenius_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    assert_eq!(a.nrows(), b.nrows());
    assert_eq!(a.ncols(), b.ncols());
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let d = a.get(i, j) - b.get(i, j);
            acc += d * d;
        }
    }
    acc.sqrt()
}

/// White noise at the given relative level, fixed seed.
pub fn noisy(problem: &TestProblem, level: f64, seed: u64) -> NoisySystem {
    apply_noise(&NoiseSpec::white(level, seed), &problem.b_exact).unwrap()
}

/// Forward map `v -> A A^T v` for Krylov spaces of the data side.
pub fn normal_rows_mul(a: &DenseMatrix) -> impl Fn(&[f64]) -> Vec<f64> + '_ {
    move |v: &[f64]| a.matvec(&a.tr_matvec(v))
}

/// Forward map `v -> A^T A v` for Krylov spaces of the solution side.
pub fn normal_cols_mul(a: &DenseMatrix) -> impl Fn(&[f64]) -> Vec<f64> + '_ {
    move |v: &[f64]| a.tr_matvec(&a.matvec(v))
}

pub fn as_vector(v: Vec<f64>) -> Vector {
    Vector::new(v).unwrap()
}

/// Compensated (double-double) arithmetic for the oracle side.
///
/// Explicit Krylov constructions in plain f64 lose roughly half their digits
/// to cancellation once consecutive iterates become nearly dependent, which
/// happens within a dozen steps on severely ill-posed problems. The judged
/// recurrences avoid the worst of that cancellation, so a trustworthy oracle
/// must carry more precision than they do: everything here runs on ~31
/// significant digits and rounds only at the very end.
pub mod dd {
    use gkreg::DenseMatrix;

    #[derive(Debug, Clone, Copy)]
    pub struct Dd {
        pub hi: f64,
        pub lo: f64,
    }

    /// Error-free sum assuming |a| >= |b|.
    fn quick_two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        Dd { hi: s, lo: b - (s - a) }
    }

    /// Error-free sum of arbitrary a, b (Knuth).
    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        Dd { hi: s, lo: (a - (s - bb)) + (b - bb) }
    }

    /// Error-free product via fused multiply-add.
    fn two_prod(a: f64, b: f64) -> Dd {
        let p = a * b;
        Dd { hi: p, lo: a.mul_add(b, -p) }
    }

    impl Dd {
        pub fn from(a: f64) -> Dd {
            Dd { hi: a, lo: 0.0 }
        }

        pub fn zero() -> Dd {
            Dd { hi: 0.0, lo: 0.0 }
        }

        pub fn to_f64(self) -> f64 {
            self.hi + self.lo
        }

        pub fn neg(self) -> Dd {
            Dd { hi: -self.hi, lo: -self.lo }
        }

        pub fn add(self, o: Dd) -> Dd {
            let s = two_sum(self.hi, o.hi);
            quick_two_sum(s.hi, s.lo + self.lo + o.lo)
        }

        pub fn sub(self, o: Dd) -> Dd {
            self.add(o.neg())
        }

        pub fn mul(self, o: Dd) -> Dd {
            let p = two_prod(self.hi, o.hi);
            quick_two_sum(p.hi, p.lo + self.hi * o.lo + self.lo * o.hi)
        }

        pub fn mul_f(self, o: f64) -> Dd {
            let p = two_prod(self.hi, o);
            quick_two_sum(p.hi, p.lo + self.lo * o)
        }

        /// Long division: three f64 quotient digits, renormalized.
        pub fn div(self, o: Dd) -> Dd {
            let q1 = self.hi / o.hi;
            let r1 = self.sub(o.mul_f(q1));
            let q2 = r1.hi / o.hi;
            let r2 = r1.sub(o.mul_f(q2));
            let q3 = r2.hi / o.hi;
            quick_two_sum(q1, q2).add(Dd::from(q3))
        }

        /// One Newton correction on the f64 square root.
        pub fn sqrt(self) -> Dd {
            if self.hi == 0.0 && self.lo == 0.0 {
                return Dd::zero();
            }
            assert!(self.hi > 0.0, "sqrt of negative double-double");
            let x = self.hi.sqrt();
            let xd = Dd::from(x);
            let corr = self.sub(xd.mul(xd)).to_f64() / (2.0 * x);
            xd.add(Dd::from(corr))
        }
    }

    pub fn widen(v: &[f64]) -> Vec<Dd> {
        v.iter().map(|&x| Dd::from(x)).collect()
    }

    pub fn narrow(v: &[Dd]) -> Vec<f64> {
        v.iter().map(|x| x.to_f64()).collect()
    }

    pub fn vdot(a: &[Dd], b: &[Dd]) -> Dd {
        assert_eq!(a.len(), b.len());
        let mut acc = Dd::zero();
        for (x, y) in a.iter().zip(b) {
            acc = acc.add(x.mul(*y));
        }
        acc
    }

    pub fn vnorm(a: &[Dd]) -> Dd {
        vdot(a, a).sqrt()
    }

    /// `y += c * x` elementwise.
    pub fn vaxpy(c: Dd, x: &[Dd], y: &mut [Dd]) {
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = yi.add(c.mul(*xi));
        }
    }

    pub fn vscale(c: Dd, x: &mut [Dd]) {
        for xi in x.iter_mut() {
            *xi = xi.mul(c);
        }
    }

    /// `A x` with f64 matrix entries and double-double vector.
    pub fn matvec(a: &DenseMatrix, x: &[Dd]) -> Vec<Dd> {
        assert_eq!(x.len(), a.ncols());
        (0..a.nrows())
            .map(|i| {
                let row = a.row(i);
                let mut acc = Dd::zero();
                for (aij, xj) in row.iter().zip(x) {
                    acc = acc.add(xj.mul_f(*aij));
                }
                acc
            })
            .collect()
    }

    /// `A^T y` with f64 matrix entries and double-double vector.
    pub fn tr_matvec(a: &DenseMatrix, y: &[Dd]) -> Vec<Dd> {
        assert_eq!(y.len(), a.nrows());
        let mut out = vec![Dd::zero(); a.ncols()];
        for i in 0..a.nrows() {
            let row = a.row(i);
            for (oj, aij) in out.iter_mut().zip(row) {
                *oj = oj.add(y[i].mul_f(*aij));
            }
        }
        out
    }

    /// Orthonormal double-double basis of span{start, M start, M^2 start, ..},
    /// Gram-Schmidt with a second pass, same shape as the f64 version.
    pub fn krylov_basis(mul: &dyn Fn(&[Dd]) -> Vec<Dd>, start: &[Dd], k: usize) -> Vec<Vec<Dd>> {
        let scale = vnorm(start).hi.max(1.0);
        let mut basis: Vec<Vec<Dd>> = Vec::new();
        let mut next = start.to_vec();
        for _ in 0..k {
            let mut v = next;
            for _pass in 0..2 {
                for u in &basis {
                    let c = vdot(&v, u);
                    vaxpy(c.neg(), u, &mut v);
                }
            }
            let nv = vnorm(&v);
            if nv.hi < 1e-26 * scale {
                break;
            }
            vscale(Dd::from(1.0).div(nv), &mut v);
            next = mul(&v);
            basis.push(v);
        }
        basis
    }

    /// Relative distance of an f64 vector from the span of an orthonormal
    /// double-double basis.
    pub fn span_residual(basis: &[Vec<Dd>], v: &[f64]) -> f64 {
        let mut rem = widen(v);
        for _pass in 0..2 {
            for u in basis {
                let c = vdot(&rem, u);
                vaxpy(c.neg(), u, &mut rem);
            }
        }
        vnorm(&rem).hi / super::norm(v).max(f64::MIN_POSITIVE)
    }

    /// min ||rhs - cols * z|| via Gram-Schmidt QR carried in double-double.
    pub fn lstsq_cols(cols: &[Vec<Dd>], rhs: &[Dd]) -> Vec<Dd> {
        let k = cols.len();
        let mut q: Vec<Vec<Dd>> = Vec::with_capacity(k);
        // r[j][i] = component of column j along q_i (i <= j), r[j][j] = norm.
        let mut r: Vec<Vec<Dd>> = Vec::with_capacity(k);
        for col in cols {
            let mut v = col.clone();
            let mut coeffs = vec![Dd::zero(); q.len() + 1];
            for _pass in 0..2 {
                for (i, u) in q.iter().enumerate() {
                    let c = vdot(&v, u);
                    coeffs[i] = coeffs[i].add(c);
                    vaxpy(c.neg(), u, &mut v);
                }
            }
            let nv = vnorm(&v);
            assert!(nv.hi > 0.0, "rank-deficient oracle matrix");
            coeffs[q.len()] = nv;
            vscale(Dd::from(1.0).div(nv), &mut v);
            q.push(v);
            r.push(coeffs);
        }
        let c: Vec<Dd> = q.iter().map(|u| vdot(u, rhs)).collect();
        let mut z = vec![Dd::zero(); k];
        for j in (0..k).rev() {
            let mut acc = c[j];
            for (i, zi) in z.iter().enumerate().skip(j + 1) {
                acc = acc.sub(r[i][j].mul(*zi));
            }
            z[j] = acc.div(r[j][j]);
        }
        z
    }

    /// Square solve by Gaussian elimination with partial pivoting.
    pub fn solve_square(g: &[Vec<Dd>], rhs: &[Dd]) -> Vec<Dd> {
        let n = rhs.len();
        assert!(g.len() == n && g.iter().all(|row| row.len() == n));
        let mut a: Vec<Vec<Dd>> = g.to_vec();
        let mut b = rhs.to_vec();
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&i, &j| a[i][col].hi.abs().partial_cmp(&a[j][col].hi.abs()).unwrap())
                .unwrap();
            assert!(a[piv][col].hi.abs() > 0.0, "singular oracle system");
            a.swap(col, piv);
            b.swap(col, piv);
            for row in col + 1..n {
                let f = a[row][col].div(a[col][col]);
                for j in col..n {
                    let t = f.mul(a[col][j]);
                    a[row][j] = a[row][j].sub(t);
                }
                let t = f.mul(b[col]);
                b[row] = b[row].sub(t);
            }
        }
        let mut x = vec![Dd::zero(); n];
        for row in (0..n).rev() {
            let mut acc = b[row];
            for j in row + 1..n {
                acc = acc.sub(a[row][j].mul(x[j]));
            }
            x[row] = acc.div(a[row][row]);
        }
        x
    }
}
