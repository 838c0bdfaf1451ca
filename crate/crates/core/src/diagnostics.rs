//! Spectral and finite-precision diagnostics for basis vectors, residuals,
//! and noise estimates.
//!
//! The frequency-domain helpers all run through an in-repo transform with
//! zero-padding to the next power of two, so diagnosing a vector never pulls
//! in an external dependency. Power values are normalized by the transform
//! length; summed two-sidedly they reproduce the squared vector norm.

use crate::error::{Error, Result};
use crate::fft::{dft_real, next_pow2};
use crate::linalg::{DenseMatrix, Vector};

/// Absolute singular-value threshold under which a basis column counts as
/// numerically dependent (orthonormal columns have singular values near 1).
pub const DEFAULT_BASIS_RANK_TOL: f64 = 0.1;

/// One-sided power spectrum of a real vector.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// `|F_f|^2 / M` for `f = 0..=M/2`, `M` the padded transform length.
    pub power: Vec<f64>,
    pub len_signal: usize,
    pub len_padded: usize,
}

impl Spectrum {
    /// Frequency indices covered by `power`.
    pub fn frequencies(&self) -> impl Iterator<Item = usize> {
        0..self.power.len()
    }

    /// Two-sided multiplicity of a one-sided bin: interior frequencies stand
    /// for a conjugate pair.
    fn weight(&self, f: usize) -> f64 {
        if f == 0 || 2 * f == self.len_padded {
            1.0
        } else {
            2.0
        }
    }

    /// Total signal power; equals `||v||^2` by Parseval's identity.
    pub fn total_power(&self) -> f64 {
        self.power.iter().enumerate().map(|(f, p)| self.weight(f) * p).sum()
    }

    /// Power in the inclusive bin range, counted two-sidedly.
    pub fn band_power(&self, lo: usize, hi: usize) -> f64 {
        (lo..=hi.min(self.power.len().saturating_sub(1)))
            .map(|f| self.weight(f) * self.power[f])
            .sum()
    }

    /// Fraction of the power above the median frequency (bins beyond M/4);
    /// `None` for an all-zero signal.
    pub fn high_frequency_fraction(&self) -> Option<f64> {
        let total = self.total_power();
        if total <= 0.0 {
            return None;
        }
        let half = self.len_padded / 4;
        Some(self.band_power(half + 1, self.power.len() - 1) / total)
    }
}

/// One-sided power spectrum, zero-padded to the next power of two.
pub fn power_spectrum(v: &Vector) -> Result<Spectrum> {
    if v.len() < 2 {
        return Err(Error::Empty("signal"));
    }
    let m = next_pow2(v.len());
    let mut padded = v.as_slice().to_vec();
    padded.resize(m, 0.0);
    let (re, im) = dft_real(&padded);
    let power = (0..=m / 2).map(|f| (re[f] * re[f] + im[f] * im[f]) / m as f64).collect();
    Ok(Spectrum { power, len_signal: v.len(), len_padded: m })
}

/// Running sum of spectral power over frequencies `1..=M/2`, normalized to
/// end at one. The zero-frequency bin is excluded so a mean offset does not
/// mask the shape of the rest of the spectrum.
pub fn cumulative_periodogram(v: &Vector) -> Result<Vec<f64>> {
    let spectrum = power_spectrum(v)?;
    let bins = &spectrum.power[1..];
    let total: f64 = bins.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroVector("signal"));
    }
    let mut acc = 0.0;
    Ok(bins
        .iter()
        .map(|p| {
            acc += p;
            acc / total
        })
        .collect())
}

/// Sup-distance of a cumulative periodogram from the straight diagonal; the
/// classic graphical whiteness statistic. Near zero for white noise, large
/// for signals with lopsided spectra.
pub fn whiteness_distance(cumulative: &[f64]) -> Result<f64> {
    if cumulative.is_empty() {
        return Err(Error::Empty("cumulative periodogram"));
    }
    let j_total = cumulative.len() as f64;
    let mut sup: f64 = 0.0;
    for (j, c) in cumulative.iter().enumerate() {
        sup = sup.max((c - (j + 1) as f64 / j_total).abs());
    }
    Ok(sup)
}

/// Number of singular values of the column collection exceeding `tol`
/// (absolute threshold; orthonormal columns sit near one).
pub fn numerical_rank(columns: &DenseMatrix, tol: f64) -> Result<usize> {
    if columns.ncols() == 0 {
        return Err(Error::Empty("columns"));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidParam {
            name: "tol",
            reason: format!("rank threshold must lie in (0, 1), got {tol}"),
        });
    }
    let sv = columns.singular_values();
    Ok(sv.iter().filter(|s| **s > tol).count())
}

/// Collapses per-iteration pairs `(rank of the computed basis, |factor|)`
/// to one point per distinct rank, keeping the largest magnitude. Plotting
/// factors against basis rank instead of iteration number undoes the
/// stagnation that loss of orthogonality causes.
pub fn shifted_factor_curve(phi0_hat: &[f64], ranks: &[usize]) -> Result<Vec<(usize, f64)>> {
    if phi0_hat.len() != ranks.len() {
        return Err(Error::DimensionMismatch {
            context: "shifted_factor_curve",
            expected: ranks.len(),
            actual: phi0_hat.len(),
        });
    }
    let mut curve: Vec<(usize, f64)> = Vec::new();
    for (&rank, &phi) in ranks.iter().zip(phi0_hat) {
        let mag = phi.abs();
        match curve.iter_mut().find(|(r, _)| *r == rank) {
            Some((_, best)) => *best = best.max(mag),
            None => curve.push((rank, mag)),
        }
    }
    curve.sort_by_key(|&(r, _)| r);
    Ok(curve)
}

/// How well a residual reproduces the noise vector: the Euclidean distance
/// and the high-frequency power fraction of the difference. The fraction is
/// `None` when the difference carries no power to speak of.
#[derive(Debug, Clone, Copy)]
pub struct NoiseMatch {
    pub l2_diff: f64,
    pub highfreq_ratio: Option<f64>,
}

pub fn residual_noise_match(eta: &Vector, r: &Vector) -> Result<NoiseMatch> {
    if eta.len() != r.len() {
        return Err(Error::DimensionMismatch {
            context: "residual_noise_match",
            expected: eta.len(),
            actual: r.len(),
        });
    }
    let diff = eta.sub(r);
    let l2_diff = diff.norm();
    let highfreq_ratio = power_spectrum(&diff)?.high_frequency_fraction();
    Ok(NoiseMatch { l2_diff, highfreq_ratio })
}

/// The smooth part left in a basis vector once the amplified noise is
/// subtracted: `s_{k+1} - phi_k(0) * eta`. Only computable when the noise is
/// known, i.e. on synthetic data.
pub fn lf_component(s_next: &Vector, phi0_k: f64, eta: &Vector) -> Result<Vector> {
    if s_next.len() != eta.len() {
        return Err(Error::DimensionMismatch {
            context: "lf_component",
            expected: s_next.len(),
            actual: eta.len(),
        });
    }
    Ok(s_next.sub(&eta.scaled(phi0_k)))
}
