//! Solver correctness against dense subspace oracles, plus the residual
//! identities that couple the three methods.
//!
//! The oracles here never touch the bidiagonal recurrences: they build the
//! Krylov subspaces explicitly, solve the projected problems directly, and
//! compare solutions. The subspace constructions run in compensated
//! double-double arithmetic (see `common::dd`) because explicit
//! Gram-Schmidt in f64 loses more accuracy at depth than the recurrences
//! under test, which would make the oracle the weaker side.

mod common;

use common::dd::{self, Dd};
use common::*;
use gkreg::{
    bidiagonalize, craig_modified_rhs, craig_solve, detect_noise_revealing, lsmr_residual_coefficients,
    lsmr_solve, lsqr_residual_coefficients, lsqr_solve, make_phillips, make_shaw, phi_factors,
    psi_factors, residual_vector, solver_trace, BidiagState, DenseMatrix, Method, ReorthMode,
};

fn shaw100() -> (DenseMatrix, gkreg::Vector, BidiagState) {
    let p = make_shaw(100).unwrap();
    let sys = noisy(&p, 1e-3, 7);
    let a = p.op.to_dense();
    let state = bidiagonalize(&p.op, &sys.b, ReorthMode::FullDouble, 13).unwrap();
    (a, sys.b, state)
}

fn shaw400(kmax: usize, mode: ReorthMode) -> (DenseMatrix, gkreg::NoisySystem, BidiagState, gkreg::TestProblem) {
    let p = make_shaw(400).unwrap();
    let sys = noisy(&p, 1e-3, 0);
    let a = p.op.to_dense();
    let state = bidiagonalize(&p.op, &sys.b, mode, kmax).unwrap();
    (a, sys, state, p)
}

#[test]
fn craig_matches_dense_galerkin_oracle() {
    let (a, b, state) = shaw100();
    let mul = |v: &[Dd]| dd::matvec(&a, &dd::tr_matvec(&a, v));
    let b_dd = dd::widen(b.as_slice());
    let basis = dd::krylov_basis(&mul, &b_dd, 12);
    for k in 1..=12 {
        let u = &basis[..k];
        // Galerkin system on the explicit basis: (U^T A A^T U) c = U^T b.
        let g: Vec<Vec<Dd>> = u
            .iter()
            .map(|ui| {
                let w = mul(ui);
                u.iter().map(|uj| dd::vdot(uj, &w)).collect()
            })
            .collect();
        let rhs: Vec<Dd> = u.iter().map(|ui| dd::vdot(ui, &b_dd)).collect();
        let c = dd::solve_square(&g, &rhs);
        let mut y = vec![Dd::zero(); a.nrows()];
        for (cj, uj) in c.iter().zip(u) {
            dd::vaxpy(*cj, uj, &mut y);
        }
        let x_oracle = dd::narrow(&dd::tr_matvec(&a, &y));
        let x = craig_solve(&state, k).unwrap().x;
        let diff = norm(&x.sub(&as_vector(x_oracle.clone())));
        assert!(
            diff <= 1e-8 * norm(&x_oracle),
            "CRAIG k={k}: differs from Galerkin oracle by {:e} (rel)",
            diff / norm(&x_oracle)
        );
    }
}

#[test]
fn lsqr_matches_dense_subspace_argmin_oracle() {
    let (a, b, state) = shaw100();
    let mul = |v: &[Dd]| dd::tr_matvec(&a, &dd::matvec(&a, v));
    let b_dd = dd::widen(b.as_slice());
    let start = dd::tr_matvec(&a, &b_dd);
    let basis = dd::krylov_basis(&mul, &start, 12);
    for k in 1..=12 {
        let v = &basis[..k];
        let cols: Vec<Vec<Dd>> = v.iter().map(|vj| dd::matvec(&a, vj)).collect();
        let z = dd::lstsq_cols(&cols, &b_dd);
        let mut acc = vec![Dd::zero(); a.ncols()];
        for (zj, vj) in z.iter().zip(v) {
            dd::vaxpy(*zj, vj, &mut acc);
        }
        let x_oracle = dd::narrow(&acc);
        let x = lsqr_solve(&state, k).unwrap().x;
        let diff = norm(&x.sub(&as_vector(x_oracle.clone())));
        assert!(
            diff <= 1e-8 * norm(&x_oracle),
            "LSQR k={k}: differs from subspace argmin oracle by {:e} (rel)",
            diff / norm(&x_oracle)
        );
    }
}

#[test]
fn lsmr_matches_dense_subspace_minimizer_oracle() {
    let (a, b, state) = shaw100();
    let mul = |v: &[Dd]| dd::tr_matvec(&a, &dd::matvec(&a, v));
    let b_dd = dd::widen(b.as_slice());
    let start = dd::tr_matvec(&a, &b_dd);
    let basis = dd::krylov_basis(&mul, &start, 12);
    for k in 1..=12 {
        let v = &basis[..k];
        // min over the subspace of ||A^T b - A^T A V z||.
        let cols: Vec<Vec<Dd>> = v.iter().map(|vj| mul(vj)).collect();
        let z = dd::lstsq_cols(&cols, &start);
        let mut acc = vec![Dd::zero(); a.ncols()];
        for (zj, vj) in z.iter().zip(v) {
            dd::vaxpy(*zj, vj, &mut acc);
        }
        let x_oracle = dd::narrow(&acc);
        let x = lsmr_solve(&state, k).unwrap().x;
        let diff = norm(&x.sub(&as_vector(x_oracle.clone())));
        assert!(
            diff <= 1e-8 * norm(&x_oracle),
            "LSMR k={k}: differs from subspace minimizer oracle by {:e} (rel)",
            diff / norm(&x_oracle)
        );
    }
}

#[test]
fn craig_residual_norm_and_direction_identities() {
    let (a, sys, state, _) = shaw400(15, ReorthMode::FullDouble);
    let phi = phi_factors(&state);
    let afro = a.frobenius_norm();
    let bnorm = sys.b.norm();
    for k in 1..=state.k().min(15) {
        let x = craig_solve(&state, k).unwrap().x;
        let r = sys.b.sub(&as_vector(a.matvec(x.as_slice())));
        let rnorm = norm(&r);
        // The identities are exact in the algebra, but this check evaluates
        // b - A x in working precision: once the iterates have
        // semiconvergently diverged, that evaluation alone carries an
        // absolute rounding floor proportional to ||A|| ||x_k|| + ||b||.
        let floor = a.nrows() as f64 * f64::EPSILON * (afro * norm(x.as_slice()) + bnorm);
        let predicted = 1.0 / phi[k].abs();
        assert!(
            (rnorm - predicted).abs() <= 1e-8 * rnorm + floor,
            "k={k}: ||r|| = {rnorm:e} but 1/|phi_k| = {predicted:e}"
        );
        // r_k = (-1)^k ||r_k|| s_{k+1}
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let dir_diff = norm(&r.sub(&state.s_col(k).scaled(sign * rnorm)));
        assert!(
            dir_diff <= 1e-8 * rnorm + floor,
            "k={k}: direction off by {:e}",
            dir_diff / rnorm
        );
    }
}

#[test]
fn lsqr_transposed_residual_aligns_with_next_right_vector() {
    let (a, sys, state, _) = shaw400(15, ReorthMode::FullDouble);
    let psi = psi_factors(&state);
    let afro = a.frobenius_norm();
    let bnorm = sys.b.norm();
    for k in 1..state.k().min(15) {
        let x = lsqr_solve(&state, k).unwrap().x;
        let r = sys.b.sub(&as_vector(a.matvec(x.as_slice())));
        let atr = a.tr_matvec(r.as_slice());
        let atr_norm = norm(&atr);
        // Same working-precision floor as the CRAIG identity check, pushed
        // through the extra multiplication by A^T.
        let floor =
            a.nrows() as f64 * f64::EPSILON * afro * (afro * norm(x.as_slice()) + bnorm);
        let predicted = 1.0 / psi[k].abs();
        assert!(
            (atr_norm - predicted).abs() <= 1e-8 * atr_norm + floor,
            "k={k}: ||A^T r|| = {atr_norm:e} but 1/|psi_k| = {predicted:e}"
        );
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let mut expected = state.w_col(k).scaled(sign * atr_norm).into_vec();
        for (e, v) in expected.iter_mut().zip(&atr) {
            *e -= v;
        }
        assert!(
            norm(&expected) <= 1e-8 * atr_norm + floor,
            "k={k}: A^T r misaligned with w_{}",
            k + 1
        );
    }
}

#[test]
fn lsqr_residual_reconstruction_from_factors() {
    let (a, sys, state, _) = shaw400(15, ReorthMode::FullDouble);
    let phi = phi_factors(&state);
    let bnorm = sys.b.norm();
    for k in 1..=14 {
        let coeffs = lsqr_residual_coefficients(&phi, k).unwrap();
        let combo = residual_vector(&state, &coeffs).unwrap();
        let x = lsqr_solve(&state, k).unwrap().x;
        let r = sys.b.sub(&as_vector(a.matvec(x.as_slice())));
        assert!(
            norm(&combo.sub(&r)) <= 1e-8 * bnorm,
            "k={k}: LSQR residual reconstruction off by {:e} of ||b||",
            norm(&combo.sub(&r)) / bnorm
        );
    }
}

#[test]
fn lsmr_residual_reconstruction_from_factors() {
    let (a, sys, state, _) = shaw400(15, ReorthMode::FullDouble);
    let phi = phi_factors(&state);
    let psi = psi_factors(&state);
    let bnorm = sys.b.norm();
    for k in 1..=10 {
        let coeffs = lsmr_residual_coefficients(&phi, &psi, state.alphas(), k).unwrap();
        // The suffix structure: coeff_l / phi_l is positive and strictly
        // decreasing in l.
        let ratios: Vec<f64> = coeffs.iter().zip(&phi).map(|(c, p)| c / p).collect();
        for (l, w) in ratios.windows(2).enumerate() {
            assert!(w[0] > 0.0 && w[1] > 0.0, "suffix sums must stay positive");
            assert!(w[1] < w[0], "suffix sums must decrease, violated at l={l}");
        }
        let combo = residual_vector(&state, &coeffs).unwrap();
        let x = lsmr_solve(&state, k).unwrap().x;
        let r = sys.b.sub(&as_vector(a.matvec(x.as_slice())));
        assert!(
            norm(&combo.sub(&r)) <= 1e-6 * bnorm,
            "k={k}: LSMR residual reconstruction off by {:e} of ||b||",
            norm(&combo.sub(&r)) / bnorm
        );
    }
}

#[test]
fn norm_couplings_hold_tightly_with_reorthogonalization() {
    let (a, _, state, p) = shaw400(15, ReorthMode::FullDouble);
    let craig = solver_trace(&p.op, &state, Method::Craig, None).unwrap();
    let lsqr = solver_trace(&p.op, &state, Method::Lsqr, None).unwrap();
    let lsmr = solver_trace(&p.op, &state, Method::Lsmr, None).unwrap();
    let afro = a.frobenius_norm();
    let b_norm = state.rhs().norm();
    // The trace recomputes residual norms with the operator, so each carries
    // the b - A x evaluation floor; the coupling can only be expected to hold
    // down to that floor once the norms have decayed far below ||b||.
    let eps_m = a.nrows() as f64 * f64::EPSILON;
    // ||r_k(LSQR)|| = (sum_{l<=k} ||r_l(CRAIG)||^{-2})^{-1/2}; the l = 0 term
    // is ||r_0|| = ||b||.
    let mut inv_sq = 1.0 / (b_norm * b_norm);
    for (i, &r_lsqr) in lsqr.resnorms.iter().enumerate() {
        inv_sq += 1.0 / (craig.resnorms[i] * craig.resnorms[i]);
        let predicted = inv_sq.powf(-0.5);
        let floor = eps_m * (afro * norm(lsqr.xs[i].as_slice()) + b_norm);
        assert!(
            (r_lsqr - predicted).abs() <= 1e-8 * r_lsqr + floor,
            "k={}: LSQR/CRAIG coupling off: {r_lsqr:e} vs {predicted:e}",
            i + 1
        );
    }
    // ||A^T r_k(LSMR)|| = (sum_{l<=k} ||A^T r_l(LSQR)||^{-2})^{-1/2}; the
    // l = 0 term is ||A^T b||.
    let atb_norm = norm(&p.op.to_dense().tr_matvec(state.rhs().as_slice()));
    let mut inv_sq_t = 1.0 / (atb_norm * atb_norm);
    for (i, &atr_lsmr) in lsmr.atresnorms.iter().enumerate() {
        inv_sq_t += 1.0 / (lsqr.atresnorms[i] * lsqr.atresnorms[i]);
        let predicted = inv_sq_t.powf(-0.5);
        let floor = eps_m * afro * (afro * norm(lsmr.xs[i].as_slice()) + b_norm);
        assert!(
            (atr_lsmr - predicted).abs() <= 1e-8 * atr_lsmr + floor,
            "k={}: LSMR/LSQR coupling off: {atr_lsmr:e} vs {predicted:e}",
            i + 1
        );
    }
}

#[test]
fn norm_couplings_survive_without_reorthogonalization() {
    let (_, _, state, p) = shaw400(20, ReorthMode::None);
    let craig = solver_trace(&p.op, &state, Method::Craig, None).unwrap();
    let lsqr = solver_trace(&p.op, &state, Method::Lsqr, None).unwrap();
    let b_norm = state.rhs().norm();
    let mut inv_sq = 1.0 / (b_norm * b_norm);
    for (i, &r_lsqr) in lsqr.resnorms.iter().enumerate() {
        inv_sq += 1.0 / (craig.resnorms[i] * craig.resnorms[i]);
        let predicted = inv_sq.powf(-0.5);
        assert!(
            (r_lsqr - predicted).abs() <= 1e-2 * r_lsqr,
            "k={}: coupling drifted beyond 1e-2 without reorthogonalization: {r_lsqr:e} vs {predicted:e}",
            i + 1
        );
    }
}

#[test]
fn lsqr_and_craig_agree_while_the_last_factor_dominates() {
    let (_, _, state, _) = shaw400(15, ReorthMode::FullDouble);
    let phi = phi_factors(&state);
    let mut cumulative = phi[0] * phi[0];
    let mut checked = 0;
    for k in 1..=state.k() {
        cumulative += phi[k] * phi[k];
        if phi[k] * phi[k] / cumulative <= 0.9 {
            continue;
        }
        let x_l = lsqr_solve(&state, k).unwrap().x;
        let x_c = craig_solve(&state, k).unwrap().x;
        let gap = norm(&x_l.sub(&x_c));
        assert!(
            gap <= 0.1 * norm(&x_l),
            "k={k}: dominance holds but solutions differ by {:e} (rel)",
            gap / norm(&x_l)
        );
        checked += 1;
    }
    assert!(checked >= 3, "expected several dominated iterations, found {checked}");
}

#[test]
fn craig_error_minimum_sits_near_its_residual_minimum() {
    let (_, _, state, p) = shaw400(25, ReorthMode::FullDouble);
    let trace = solver_trace(&p.op, &state, Method::Craig, Some(&p.x_true)).unwrap();
    let k_err = trace.argmin_errnorm().unwrap();
    let k_res = trace.argmin_resnorm().unwrap();
    assert!(
        k_err.abs_diff(k_res) <= 2,
        "error minimum k={k_err} vs residual minimum k={k_res}"
    );
}

#[test]
fn modified_rhs_is_what_craig_actually_solves() {
    let (a, sys, state, _) = shaw400(25, ReorthMode::FullDouble);
    let phi = phi_factors(&state);
    let detection = detect_noise_revealing(&phi).unwrap();
    let k_rev = detection.k_rev.expect("this run reveals noise");
    let modified = craig_modified_rhs(&state, k_rev).unwrap();
    let x = craig_solve(&state, k_rev).unwrap().x;
    let ax = as_vector(a.matvec(x.as_slice()));
    assert!(
        norm(&ax.sub(&modified)) <= 1e-8 * sys.b.norm(),
        "A x_k != b - s_{{k+1}}/phi_k at k_rev={k_rev}: {:e}",
        norm(&ax.sub(&modified)) / sys.b.norm()
    );
}

#[test]
fn consistent_system_is_solved_exactly_at_termination() {
    let p = make_phillips(32).unwrap();
    let state = bidiagonalize(&p.op, &p.b_exact, ReorthMode::FullDouble, 32).unwrap();
    assert!(state.is_terminated());
    let step = lsqr_solve(&state, state.k()).unwrap();
    let r = p.b_exact.sub(&as_vector(p.op.to_dense().matvec(step.x.as_slice())));
    assert!(
        norm(&r) <= 1e-10 * p.b_exact.norm(),
        "terminal LSQR residual {:e} of ||b||",
        norm(&r) / p.b_exact.norm()
    );
}
