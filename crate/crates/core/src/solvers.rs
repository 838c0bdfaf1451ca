//! Projected solvers on top of a bidiagonalization snapshot.
//!
//! All three methods produce iterates `x_k = W_k y_k`; they differ in the
//! small projected problem that defines `y_k`:
//!
//! * CRAIG: forward substitution on the square lower bidiagonal system
//!   `L_k y = beta_1 e_1` (Galerkin on the normal equations of the first
//!   kind),
//! * LSQR: `min || beta_1 e_1 - L_{k+} y ||` via incremental Givens QR
//!   (residual-norm minimizer over the same subspace),
//! * LSMR: `min || beta_1 alpha_1 e_1 - L_{k+1}^T L_{k+} y ||`, solved as a
//!   small dense least-squares problem (minimizer of `||A^T r||`).
//!
//! Every solve also reports the projected residual coefficients
//! `p = beta_1 e_1 - L_{k+} y`, so `r_k = S_{k+1} p` without touching the
//! operator; trace assembly recomputes residuals with the operator to keep
//! the reported norms honest in the face of orthogonality loss.

use crate::bidiag::BidiagState;
use crate::error::{Error, Result};
use crate::factors::phi_factors;
use crate::linalg::{
    apply, apply_transpose, axpy, dense_lstsq, norm2, qr_thin, solve_upper_triangular, DenseMatrix,
    LinearOperator, Vector,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Craig,
    Lsqr,
    Lsmr,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Craig => "craig",
            Method::Lsqr => "lsqr",
            Method::Lsmr => "lsmr",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Method> {
        match s.to_ascii_lowercase().as_str() {
            "craig" => Ok(Method::Craig),
            "lsqr" => Ok(Method::Lsqr),
            "lsmr" => Ok(Method::Lsmr),
            other => Err(Error::InvalidParam {
                name: "method",
                reason: format!("unknown method '{other}' (craig, lsqr, lsmr)"),
            }),
        }
    }
}

/// One solver iterate together with its projected quantities.
#[derive(Debug, Clone)]
pub struct SolverStep {
    pub k: usize,
    /// `x_k = W_k y_k`.
    pub x: Vector,
    /// Projected solution, length k.
    pub y: Vec<f64>,
    /// Projected residual coefficients `beta_1 e_1 - L_{k+} y`, length k + 1;
    /// the residual is their combination `S_{k+1} p` of left basis vectors.
    pub p: Vec<f64>,
    /// `||p||`, which equals `||b - A x_k||` while the basis is orthonormal.
    pub resnorm_projected: f64,
}

fn check_k(state: &BidiagState, k: usize) -> Result<()> {
    if k == 0 || k > state.k() {
        return Err(Error::KOutOfRange { k, have: state.k() });
    }
    Ok(())
}

/// `beta_1 e_1 - L_{k+} y` from the recurrence coefficients, in O(k).
fn projected_residual(state: &BidiagState, y: &[f64]) -> Vec<f64> {
    let k = y.len();
    let alphas = state.alphas();
    let betas = state.betas();
    let mut p = vec![0.0; k + 1];
    p[0] = betas[0] - alphas[0] * y[0];
    for i in 1..k {
        p[i] = -(betas[i] * y[i - 1] + alphas[i] * y[i]);
    }
    p[k] = -betas[k] * y[k - 1];
    p
}

fn combine_x(state: &BidiagState, y: &[f64]) -> Vector {
    let mut x = vec![0.0; state.n()];
    for (j, yj) in y.iter().enumerate() {
        axpy(*yj, state.w_col(j), &mut x);
    }
    Vector::new(x).expect("basis combination stays finite")
}

/// Combination `S_{k+1} p` of stored left basis vectors; reconstructs the
/// residual vector from projected coefficients.
pub fn residual_vector(state: &BidiagState, p: &[f64]) -> Result<Vector> {
    if p.len() > state.s_count() {
        return Err(Error::KOutOfRange { k: p.len(), have: state.s_count() });
    }
    let mut r = vec![0.0; state.m()];
    for (i, pi) in p.iter().enumerate() {
        axpy(*pi, state.s_col(i), &mut r);
    }
    Vector::new(r)
}

/// Galerkin iterate: forward substitution on `L_k y = beta_1 e_1`.
pub fn craig_solve(state: &BidiagState, k: usize) -> Result<SolverStep> {
    check_k(state, k)?;
    let alphas = state.alphas();
    let betas = state.betas();
    let mut y = Vec::with_capacity(k);
    y.push(betas[0] / alphas[0]);
    for j in 1..k {
        let prev = y[j - 1];
        y.push(-betas[j] * prev / alphas[j]);
    }
    let p = projected_residual(state, &y);
    Ok(SolverStep {
        k,
        x: combine_x(state, &y),
        resnorm_projected: norm2(&p),
        y,
        p,
    })
}

/// Residual minimizer: Givens QR of the (k+1)-by-k lower bidiagonal matrix,
/// then back substitution on its upper bidiagonal R factor.
pub fn lsqr_solve(state: &BidiagState, k: usize) -> Result<SolverStep> {
    check_k(state, k)?;
    let alphas = state.alphas();
    let betas = state.betas();
    // Rotate column by column: rho/theta form R, phis the rotated rhs.
    let mut rho = vec![0.0; k];
    let mut theta = vec![0.0; k]; // theta[j] couples y_j to y_{j+1} (theta[k-1] unused)
    let mut phi = vec![0.0; k];
    let mut rhobar = alphas[0];
    let mut phibar = betas[0];
    for j in 0..k {
        let beta_next = betas[j + 1];
        let r = rhobar.hypot(beta_next);
        let c = rhobar / r;
        let s = beta_next / r;
        rho[j] = r;
        phi[j] = c * phibar;
        phibar = -s * phibar;
        if j + 1 < k {
            let alpha_next = alphas[j + 1];
            theta[j] = s * alpha_next;
            rhobar = c * alpha_next;
        }
    }
    let mut y = vec![0.0; k];
    y[k - 1] = phi[k - 1] / rho[k - 1];
    for j in (0..k - 1).rev() {
        y[j] = (phi[j] - theta[j] * y[j + 1]) / rho[j];
    }
    let p = projected_residual(state, &y);
    Ok(SolverStep {
        k,
        x: combine_x(state, &y),
        resnorm_projected: norm2(&p),
        y,
        p,
    })
}

/// Minimizer of the transposed residual: small dense least squares on
/// `L_{k+1}^T L_{k+}`.
///
/// Forming that product explicitly would square the condition number of the
/// bidiagonal factor and lose half the working precision, so the solve goes
/// through a thin QR of `L_{k+}` instead: with `L_{k+} = Q R`, minimize over
/// `z = R y` against the well-conditioned matrix `L_{k+1}^T Q`, then back
/// substitution recovers `y`.
///
/// Needs `alpha_{k+1}`, so `k` must stay one step behind the bidiagonalization
/// unless it has terminated, in which case the coefficients beyond the
/// breakdown point are exactly zero and `k = state.k()` is admissible.
pub fn lsmr_solve(state: &BidiagState, k: usize) -> Result<SolverStep> {
    check_k(state, k)?;
    let alpha_next = if k < state.k() {
        state.alphas()[k]
    } else if state.is_terminated() {
        0.0
    } else {
        return Err(Error::NeedsOneMoreStep { k });
    };
    let alphas = state.alphas();
    let betas = state.betas();
    // L_{k+1}: (k+1) x (k+1) lower bidiagonal, diagonal alpha_1..alpha_{k+1}.
    let mut l_next = DenseMatrix::zeros(k + 1, k + 1);
    for j in 0..=k {
        l_next.set(j, j, if j < k { alphas[j] } else { alpha_next });
        if j >= 1 {
            l_next.set(j, j - 1, betas[j]);
        }
    }
    let l_ext = state.l_ext_matrix(k)?;
    let (q, r) = qr_thin(&l_ext)?;
    let m_small = l_next.transpose().matmul(&q);
    let mut rhs = vec![0.0; k + 1];
    rhs[0] = betas[0] * alphas[0];
    let z = dense_lstsq(&m_small, &Vector::new(rhs)?)?.into_vec();
    let y = solve_upper_triangular(&r, &z)?;
    let p = projected_residual(state, &y);
    Ok(SolverStep {
        k,
        x: combine_x(state, &y),
        resnorm_projected: norm2(&p),
        y,
        p,
    })
}

/// The right-hand side `b - s_{k+1} / phi_k(0)` that the CRAIG iterate solves
/// exactly.
pub fn craig_modified_rhs(state: &BidiagState, k: usize) -> Result<Vector> {
    if k > state.k() || k + 1 > state.s_count() {
        return Err(Error::KOutOfRange { k, have: state.k() });
    }
    let phi = phi_factors(state);
    Ok(state.rhs().sub(&state.s_col(k).scaled(1.0 / phi[k])))
}

/// Coefficients `c_k (phi_0(0), .., phi_k(0))` with `c_k = 1 / sum phi_l(0)^2`
/// expressing the LSQR residual in the left basis:
/// `r_k = sum_l coeff_l s_{l+1}`.
pub fn lsqr_residual_coefficients(phi0: &[f64], k: usize) -> Result<Vec<f64>> {
    if k + 1 > phi0.len() {
        return Err(Error::KOutOfRange { k, have: phi0.len().saturating_sub(1) });
    }
    let total: f64 = phi0[..=k].iter().map(|v| v * v).sum();
    Ok(phi0[..=k].iter().map(|v| v / total).collect())
}

/// Coefficients of the LSMR residual in the left basis:
/// `coeff_l = c_k phi_l(0) sum_{j=l..k} 1 / (alpha_{j+1} phi_j(0)) * psi_j(0)`
/// with `c_k = 1 / sum psi_l(0)^2`. The suffix sums have positive terms, so
/// they decrease strictly as `l` grows.
pub fn lsmr_residual_coefficients(
    phi0: &[f64],
    psi0: &[f64],
    alphas: &[f64],
    k: usize,
) -> Result<Vec<f64>> {
    if k + 1 > phi0.len() || k + 1 > psi0.len() {
        return Err(Error::KOutOfRange {
            k,
            have: phi0.len().min(psi0.len()).saturating_sub(1),
        });
    }
    if alphas.len() < k + 1 {
        return Err(Error::NeedsOneMoreStep { k });
    }
    let c: f64 = 1.0 / psi0[..=k].iter().map(|v| v * v).sum::<f64>();
    // Suffix sums of 1 / (alpha_{j+1} phi_j) * psi_j, built from the tail.
    let mut suffix = vec![0.0; k + 1];
    let mut acc = 0.0;
    for j in (0..=k).rev() {
        acc += psi0[j] / (alphas[j] * phi0[j]);
        suffix[j] = acc;
    }
    Ok((0..=k).map(|l| c * phi0[l] * suffix[l]).collect())
}

/// Per-iteration history of one method over a finished bidiagonalization.
/// Residual norms are recomputed with the operator (`||b - A x_k||`), not
/// read off the projected problem.
#[derive(Debug, Clone)]
pub struct SolverTrace {
    pub method: Method,
    /// Iteration numbers, `1..=K`.
    pub ks: Vec<usize>,
    pub xs: Vec<Vector>,
    /// `||b - A x_k||`.
    pub resnorms: Vec<f64>,
    /// `||A^T (b - A x_k)||`.
    pub atresnorms: Vec<f64>,
    /// `||x_k - x_true||` when the ground truth is known.
    pub errnorms: Option<Vec<f64>>,
    pub ys: Vec<Vec<f64>>,
    pub ps: Vec<Vec<f64>>,
}

impl SolverTrace {
    /// Iteration (1-based) with the smallest residual norm.
    pub fn argmin_resnorm(&self) -> Option<usize> {
        argmin(&self.resnorms).map(|i| self.ks[i])
    }

    /// Iteration (1-based) with the smallest error norm.
    pub fn argmin_errnorm(&self) -> Option<usize> {
        self.errnorms.as_ref().and_then(|e| argmin(e)).map(|i| self.ks[i])
    }
}

fn argmin(v: &[f64]) -> Option<usize> {
    if v.is_empty() {
        return None;
    }
    let mut best = 0;
    for i in 1..v.len() {
        if v[i] < v[best] {
            best = i;
        }
    }
    Some(best)
}

/// Runs `method` for every admissible k of the snapshot and records actual
/// residual norms through the operator.
pub fn solver_trace<O: LinearOperator + ?Sized>(
    op: &O,
    state: &BidiagState,
    method: Method,
    x_true: Option<&Vector>,
) -> Result<SolverTrace> {
    let kmax = match method {
        Method::Craig | Method::Lsqr => state.k(),
        Method::Lsmr => {
            if state.is_terminated() {
                state.k()
            } else {
                state.k().saturating_sub(1)
            }
        }
    };
    let b = state.rhs();
    let mut trace = SolverTrace {
        method,
        ks: Vec::new(),
        xs: Vec::new(),
        resnorms: Vec::new(),
        atresnorms: Vec::new(),
        errnorms: x_true.map(|_| Vec::new()),
        ys: Vec::new(),
        ps: Vec::new(),
    };
    for k in 1..=kmax {
        let step = match method {
            Method::Craig => craig_solve(state, k)?,
            Method::Lsqr => lsqr_solve(state, k)?,
            Method::Lsmr => lsmr_solve(state, k)?,
        };
        let r = b.sub(&apply(op, &step.x)?);
        trace.resnorms.push(r.norm());
        trace.atresnorms.push(apply_transpose(op, &r)?.norm());
        if let (Some(errs), Some(xt)) = (trace.errnorms.as_mut(), x_true) {
            errs.push(step.x.sub(xt).norm());
        }
        trace.ks.push(k);
        trace.xs.push(step.x);
        trace.ys.push(step.y);
        trace.ps.push(step.p);
    }
    Ok(trace)
}
