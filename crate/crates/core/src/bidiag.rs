//! Iterative lower bidiagonalization of a linear operator.
//!
//! Starting from `s_1 = b / ||b||`, each step produces one left vector `w_k`
//! and one right vector `s_{k+1}` together with the positive coefficients
//! `alpha_k`, `beta_{k+1}` of the lower bidiagonal projected matrix:
//!
//! ```text
//!   alpha_k * w_k     = A^T s_k   - beta_k  * w_{k-1}     (w_0 = 0)
//!   beta_{k+1} s_{k+1} = A   w_k  - alpha_k * s_k
//! ```
//!
//! The process stops when a coefficient falls below the breakdown tolerance
//! or the subspace dimension is exhausted. Bases are stored in full so that
//! diagnostics can study their conditioning after the fact.

use crate::error::{Error, Result};
use crate::linalg::{apply, apply_transpose, axpy, dot, norm2, DenseMatrix, LinearOperator, Vector};

/// Reorthogonalization policy for newly generated basis vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReorthMode {
    /// Plain three-term recurrences; orthogonality degrades in finite
    /// precision once small coefficients appear.
    None,
    /// Two passes of modified Gram-Schmidt against every stored vector of the
    /// same side, applied after the recurrence subtraction.
    FullDouble,
}

/// Why the process stopped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    /// `alpha_{step}` fell below the breakdown tolerance; nothing from the
    /// failed step is stored.
    AlphaBreakdown { step: usize, value: f64 },
    /// `beta_{step+1}` fell below the breakdown tolerance; `alpha_step`,
    /// `w_step`, and the tiny `beta_{step+1}` are stored, the unnormalizable
    /// `s_{step+1}` is not.
    BetaBreakdown { step: usize, value: f64 },
    /// `k` reached `min(m, n)`.
    FullDimension,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Termination::AlphaBreakdown { step, value } => {
                write!(f, "alpha_{step} = {value:.3e} below breakdown tolerance")
            }
            Termination::BetaBreakdown { step, value } => {
                write!(f, "beta_{} = {value:.3e} below breakdown tolerance", step + 1)
            }
            Termination::FullDimension => write!(f, "reached min(m, n) steps"),
        }
    }
}

/// Snapshot of a (possibly finished) bidiagonalization run.
///
/// After `k` completed steps: `alphas` holds `alpha_1..alpha_k`, `betas` holds
/// `beta_1..beta_{k+1}`, `w` holds `w_1..w_k`, and `s` holds `s_1..s_{k+1}`
/// (one fewer column if the last step ended in a beta breakdown).
#[derive(Debug, Clone)]
pub struct BidiagState {
    m: usize,
    n: usize,
    mode: ReorthMode,
    b: Vector,
    alphas: Vec<f64>,
    betas: Vec<f64>,
    s_cols: Vec<Vector>,
    w_cols: Vec<Vector>,
    termination: Option<Termination>,
    tol_breakdown: f64,
}

/// Normalizes `b` into `s_1` and records the starting norm `beta_1`.
pub fn bidiag_init<O: LinearOperator + ?Sized>(
    op: &O,
    b: &Vector,
    mode: ReorthMode,
) -> Result<BidiagState> {
    if b.len() != op.nrows() {
        return Err(Error::DimensionMismatch {
            context: "bidiag_init",
            expected: op.nrows(),
            actual: b.len(),
        });
    }
    let beta1 = b.norm();
    if beta1 == 0.0 {
        return Err(Error::ZeroRhs);
    }
    let s1 = b.scaled(1.0 / beta1);
    Ok(BidiagState {
        m: op.nrows(),
        n: op.ncols(),
        mode,
        b: b.clone(),
        alphas: Vec::new(),
        betas: vec![beta1],
        s_cols: vec![s1],
        w_cols: Vec::new(),
        termination: None,
        tol_breakdown: op.nrows() as f64 * f64::EPSILON * beta1,
    })
}

/// Runs `bidiag_init` and then steps until `kmax` steps are done or the
/// process terminates on its own.
pub fn bidiagonalize<O: LinearOperator + ?Sized>(
    op: &O,
    b: &Vector,
    mode: ReorthMode,
    kmax: usize,
) -> Result<BidiagState> {
    let mut state = bidiag_init(op, b, mode)?;
    while state.termination.is_none() && state.k() < kmax {
        state.step(op)?;
    }
    Ok(state)
}

impl BidiagState {
    /// Number of completed steps.
    pub fn k(&self) -> usize {
        self.alphas.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> ReorthMode {
        self.mode
    }

    /// `alpha_1..alpha_k`; `alphas()[i]` is `alpha_{i+1}`.
    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// `beta_1..beta_{k+1}`; `betas()[i]` is `beta_{i+1}`.
    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn beta1(&self) -> f64 {
        self.betas[0]
    }

    /// The right-hand side the process was started from.
    pub fn rhs(&self) -> &Vector {
        &self.b
    }

    pub fn termination(&self) -> Option<Termination> {
        self.termination
    }

    pub fn is_terminated(&self) -> bool {
        self.termination.is_some()
    }

    pub fn tol_breakdown(&self) -> f64 {
        self.tol_breakdown
    }

    /// Stored columns `s_1..`; usually `k + 1` of them.
    pub fn s_count(&self) -> usize {
        self.s_cols.len()
    }

    /// `s_{i+1}` (0-based storage index).
    pub fn s_col(&self, i: usize) -> &Vector {
        &self.s_cols[i]
    }

    /// `w_{i+1}` (0-based storage index).
    pub fn w_col(&self, i: usize) -> &Vector {
        &self.w_cols[i]
    }

    /// First `count` columns `s_1..s_count` as a dense m-by-count matrix.
    pub fn s_matrix(&self, count: usize) -> DenseMatrix {
        assert!(count <= self.s_cols.len(), "s_matrix: not enough columns");
        DenseMatrix::from_columns(&self.s_cols[..count])
    }

    /// First `count` columns `w_1..w_count` as a dense n-by-count matrix.
    pub fn w_matrix(&self, count: usize) -> DenseMatrix {
        assert!(count <= self.w_cols.len(), "w_matrix: not enough columns");
        DenseMatrix::from_columns(&self.w_cols[..count])
    }

    /// The k-by-k lower bidiagonal projected matrix (diagonal `alpha`,
    /// subdiagonal `beta_2..beta_k`).
    pub fn l_matrix(&self, k: usize) -> Result<DenseMatrix> {
        if k == 0 || k > self.k() {
            return Err(Error::KOutOfRange { k, have: self.k() });
        }
        let mut l = DenseMatrix::zeros(k, k);
        for j in 0..k {
            l.set(j, j, self.alphas[j]);
            if j + 1 < k {
                l.set(j + 1, j, self.betas[j + 1]);
            }
        }
        Ok(l)
    }

    /// The (k+1)-by-k matrix equal to `l_matrix(k)` with the extra row
    /// `beta_{k+1} e_k^T` appended; its top k rows equal `l_matrix(k)` exactly.
    pub fn l_ext_matrix(&self, k: usize) -> Result<DenseMatrix> {
        let l = self.l_matrix(k)?;
        let mut ext = DenseMatrix::zeros(k + 1, k);
        for i in 0..k {
            for j in 0..k {
                ext.set(i, j, l.get(i, j));
            }
        }
        ext.set(k, k - 1, self.betas[k]);
        Ok(ext)
    }

    /// Both projected matrices at the current step count.
    pub fn matrices(&self) -> Result<(DenseMatrix, DenseMatrix)> {
        Ok((self.l_matrix(self.k())?, self.l_ext_matrix(self.k())?))
    }

    /// Runs one step of the coupled recurrences, appending `alpha_{k+1}`,
    /// `w_{k+1}`, `beta_{k+2}`, `s_{k+2}` (less on breakdown; see
    /// [`Termination`]).
    pub fn step<O: LinearOperator + ?Sized>(&mut self, op: &O) -> Result<()> {
        if let Some(t) = self.termination {
            return Err(Error::Terminated(t.to_string()));
        }
        let k = self.k();

        // w side: alpha_{k+1} w_{k+1} = A^T s_{k+1} - beta_{k+1} w_k.
        let mut t = apply_transpose(op, &self.s_cols[k])?.into_vec();
        if k > 0 {
            axpy(-self.betas[k], &self.w_cols[k - 1], &mut t);
        }
        if self.mode == ReorthMode::FullDouble {
            reorthogonalize(&mut t, &self.w_cols);
        }
        let alpha = norm2(&t);
        if alpha <= self.tol_breakdown {
            self.termination = Some(Termination::AlphaBreakdown { step: k + 1, value: alpha });
            return Ok(());
        }
        let w_new = Vector::new(t.iter().map(|v| v / alpha).collect())?;

        // s side: beta_{k+2} s_{k+2} = A w_{k+1} - alpha_{k+1} s_{k+1}.
        let mut u = apply(op, &w_new)?.into_vec();
        axpy(-alpha, &self.s_cols[k], &mut u);
        if self.mode == ReorthMode::FullDouble {
            reorthogonalize(&mut u, &self.s_cols);
        }
        let beta = norm2(&u);

        self.alphas.push(alpha);
        self.w_cols.push(w_new);
        self.betas.push(beta);
        if beta <= self.tol_breakdown {
            self.termination = Some(Termination::BetaBreakdown { step: k + 1, value: beta });
            return Ok(());
        }
        self.s_cols.push(Vector::new(u.iter().map(|v| v / beta).collect())?);
        if self.k() == self.m.min(self.n) {
            self.termination = Some(Termination::FullDimension);
        }
        Ok(())
    }
}

/// Two passes of modified Gram-Schmidt of `t` against `basis`.
fn reorthogonalize(t: &mut [f64], basis: &[Vector]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(t, q);
            axpy(-c, q, t);
        }
    }
}
