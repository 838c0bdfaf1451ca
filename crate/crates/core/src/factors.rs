//! Amplification factors of the bidiagonalization and what they reveal about
//! noise propagation.
//!
//! The left basis vectors satisfy `s_{k+1} = phi_k(A A^T) b` for polynomials
//! `phi_k` of degree k, and the right ones `w_{k+1} = psi_k(A^T A) A^T b`.
//! Their absolute terms have closed forms in the bidiagonal coefficients:
//!
//! ```text
//!   phi_k(0) = (-1)^k / beta_{k+1} * prod_{j=1..k} alpha_j / beta_j
//!   psi_0(0) = 1 / (alpha_1 beta_1)
//!   psi_k(0) = (phi_k(0) - beta_{k+1} psi_{k-1}(0)) / alpha_{k+1}
//! ```
//!
//! `|phi_k(0)|` measures how strongly the white-ish component of the data
//! error has been amplified into `s_{k+1}`; its first local maximum marks the
//! iteration where that component visibly takes over (the noise-revealing
//! iteration), and `s_{k+1} / phi_k(0)` is then an estimate of the noise
//! vector itself.

use crate::bidiag::BidiagState;
use crate::error::{Error, Result};
use crate::linalg::Vector;

/// Default plateau parameter for the noise-revealing phase: iterations whose
/// `|phi|` exceeds half the global maximum.
pub const DEFAULT_PLATEAU: f64 = 0.5;

/// Absolute terms `phi_l(0)` for `l = 0..=k` given `k` completed steps.
///
/// Each term follows from the previous by one multiply-divide
/// (`phi_l = -phi_{l-1} * alpha_l / beta_{l+1}`). Magnitudes past 1e+-300
/// switch to a log-domain accumulator so extreme products degrade to
/// signed infinity/zero instead of NaN.
pub fn phi_factors(state: &BidiagState) -> Vec<f64> {
    let alphas = state.alphas();
    let betas = state.betas();
    let k = state.k();
    let mut out = Vec::with_capacity(k + 1);
    let mut val = 1.0 / betas[0];
    let mut ln_abs = -betas[0].ln();
    let mut sign = 1.0_f64;
    out.push(val);
    for l in 1..=k {
        sign = -sign;
        ln_abs += alphas[l - 1].ln() - betas[l].ln();
        let lin = -val * alphas[l - 1] / betas[l];
        val = if lin.abs() >= 1e-300 && lin.abs() <= 1e300 {
            lin
        } else {
            sign * ln_abs.exp()
        };
        out.push(val);
    }
    out
}

/// Absolute terms `psi_l(0)` for `l = 0..k-1` given `k` completed steps
/// (`psi_l` needs `alpha_{l+2}`, so one fewer is available than for `phi`).
/// Empty when no step has completed.
pub fn psi_factors(state: &BidiagState) -> Vec<f64> {
    let alphas = state.alphas();
    let betas = state.betas();
    let k = state.k();
    if k == 0 {
        return Vec::new();
    }
    let phi = phi_factors(state);
    let mut out = Vec::with_capacity(k);
    out.push(1.0 / (alphas[0] * betas[0]));
    for l in 1..k {
        let prev = out[l - 1];
        out.push((phi[l] - betas[l] * prev) / alphas[l]);
    }
    out
}

/// Outcome of scanning an `|phi|` sequence for the noise-revealing iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseRevealing {
    /// Smallest `k >= 1` with `|phi_k| > |phi_{k+1}|`; `None` while the
    /// sequence is still growing (noise not yet revealed).
    pub k_rev: Option<usize>,
    /// Inclusive index range of the contiguous run around the global maximum
    /// where `|phi|` exceeds `plateau * max|phi|`.
    pub phase: (usize, usize),
}

/// Scans with the default plateau parameter.
pub fn detect_noise_revealing(phi0: &[f64]) -> Result<NoiseRevealing> {
    detect_noise_revealing_with(phi0, DEFAULT_PLATEAU)
}

/// Scans `phi0 = [phi_0(0), phi_1(0), ...]` for the first local maximum of
/// magnitude and the surrounding plateau phase.
pub fn detect_noise_revealing_with(phi0: &[f64], plateau: f64) -> Result<NoiseRevealing> {
    if phi0.len() < 2 {
        return Err(Error::InvalidParam {
            name: "phi0",
            reason: format!("need at least two factors to detect a maximum, got {}", phi0.len()),
        });
    }
    if !(plateau > 0.0 && plateau < 1.0) {
        return Err(Error::InvalidParam {
            name: "plateau",
            reason: format!("must lie strictly between 0 and 1, got {plateau}"),
        });
    }
    let mag: Vec<f64> = phi0.iter().map(|v| v.abs()).collect();
    let k_rev = (1..mag.len() - 1).find(|&k| mag[k] > mag[k + 1]);

    let mut argmax = 0;
    for i in 1..mag.len() {
        if mag[i] > mag[argmax] {
            argmax = i;
        }
    }
    let threshold = plateau * mag[argmax];
    let mut lo = argmax;
    while lo > 0 && mag[lo - 1] > threshold {
        lo -= 1;
    }
    let mut hi = argmax;
    while hi + 1 < mag.len() && mag[hi + 1] > threshold {
        hi += 1;
    }
    Ok(NoiseRevealing { k_rev, phase: (lo, hi) })
}

/// Noise-vector estimate `s_{k+1} / phi_k(0)` at iteration `k`.
pub fn noise_estimate(state: &BidiagState, k: usize) -> Result<Vector> {
    if k > state.k() || k + 1 > state.s_count() {
        return Err(Error::KOutOfRange { k, have: state.k() });
    }
    let phi = phi_factors(state);
    Ok(state.s_col(k).scaled(1.0 / phi[k]))
}

/// Size estimate `sqrt(phi_k(0)^-2 - ||eta||^2)` of the perturbation left in
/// `b - eta_est` relative to the exactly solvable system; `None` where the
/// radicand is negative (the estimate overshoots the actual noise there).
pub fn rescaled_noise_floor(phi0: &[f64], eta_norm: f64) -> Vec<Option<f64>> {
    phi0.iter()
        .map(|phi| {
            let r = 1.0 / (phi * phi) - eta_norm * eta_norm;
            if r >= 0.0 {
                Some(r.sqrt())
            } else {
                None
            }
        })
        .collect()
}

/// All factor-side quantities of a run in one place.
#[derive(Debug, Clone)]
pub struct FactorTrace {
    /// `phi_l(0)`, `l = 0..=k`.
    pub phi0: Vec<f64>,
    /// `psi_l(0)`, `l = 0..k-1`.
    pub psi0: Vec<f64>,
    pub k_rev: Option<usize>,
    pub phase: Option<(usize, usize)>,
}

/// Computes both factor sequences and runs detection with the default
/// plateau (detection fields stay `None` when fewer than two factors exist).
pub fn factor_trace(state: &BidiagState) -> FactorTrace {
    let phi0 = phi_factors(state);
    let psi0 = psi_factors(state);
    let detected = detect_noise_revealing(&phi0).ok();
    FactorTrace {
        phi0,
        psi0,
        k_rev: detected.and_then(|d| d.k_rev),
        phase: detected.map(|d| d.phase),
    }
}
