//! Reproducible noise models for perturbing exact data.
//!
//! Each model returns the perturbed right-hand side together with the exact
//! perturbation it applied, so experiments can compare estimated noise
//! against the truth. All randomness flows through a counter-based ChaCha
//! stream seeded from a single `u64`, which makes every realization
//! reproducible across platforms.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::fft::dft_complex;
use crate::linalg::Vector;

/// Default photon count per ray for the photon-limited model.
pub const DEFAULT_PHOTON_COUNT: f64 = 1e5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKind {
    /// Independent Gaussian entries, rescaled to the requested level exactly.
    White,
    /// Gaussian noise shaped in the frequency domain with weight
    /// `f^(exponent/2)` per bin; negative exponents concentrate power at low
    /// frequencies ("red"), positive ones at high frequencies ("violet"),
    /// zero reproduces [`NoiseKind::White`] exactly.
    Colored { exponent: f64 },
    /// Per-entry Poisson counts of the (nonnegative) data, scaled so the
    /// expected perturbation norm matches the requested level.
    Poisson,
    /// Photon-limited log-transformed counts: the data are treated as
    /// attenuation line integrals, counts `c ~ Pois(n0 exp(-b))` are drawn,
    /// and the perturbed data are `-ln(c / n0)` (zero counts clamped to one
    /// photon). The level parameter is ignored; `n0` sets the noise floor.
    TomoPhoton { n0: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// Relative level: the perturbation norm target is `level * ||b_exact||`.
    pub level: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn white(level: f64, seed: u64) -> Self {
        NoiseSpec { kind: NoiseKind::White, level, seed }
    }
}

/// A perturbed system together with the exact perturbation.
#[derive(Debug, Clone)]
pub struct NoisySystem {
    pub b: Vector,
    pub eta: Vector,
    /// Realized `||eta|| / ||b_exact||`.
    pub level_actual: f64,
}

fn check_level(level: f64) -> Result<()> {
    if !level.is_finite() || level < 0.0 {
        return Err(Error::InvalidParam {
            name: "level",
            reason: format!("noise level must be finite and nonnegative, got {level}"),
        });
    }
    Ok(())
}

fn standard_normal_vec(m: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn rescale_to(target: f64, e: &mut [f64]) {
    let norm = crate::linalg::norm2(e);
    if norm > 0.0 {
        let s = target / norm;
        for v in e.iter_mut() {
            *v *= s;
        }
    }
}

/// Gaussian perturbation with `||eta|| = level * ||b_exact||` exactly.
pub fn white_noise(b_exact: &Vector, level: f64, rng: &mut ChaCha8Rng) -> Result<Vector> {
    check_level(level)?;
    let bnorm = b_exact.norm();
    if bnorm == 0.0 {
        return Err(Error::ZeroVector("b_exact"));
    }
    let mut e = standard_normal_vec(b_exact.len(), rng);
    rescale_to(level * bnorm, &mut e);
    Vector::new(e)
}

/// Frequency-shaped Gaussian perturbation. The white draw is transformed to
/// the frequency domain, each bin `f` is weighted by `ftilde^(exponent/2)`
/// with `ftilde = min(f, m - f)` (keeping the spectrum conjugate-symmetric,
/// hence the realization real), the zero-frequency bin is dropped for
/// nonzero exponents, and the result is rescaled to the requested norm.
pub fn colored_noise(
    b_exact: &Vector,
    level: f64,
    exponent: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vector> {
    if !exponent.is_finite() {
        return Err(Error::InvalidParam {
            name: "exponent",
            reason: "spectral exponent must be finite".into(),
        });
    }
    if exponent == 0.0 {
        return white_noise(b_exact, level, rng);
    }
    check_level(level)?;
    let bnorm = b_exact.norm();
    if bnorm == 0.0 {
        return Err(Error::ZeroVector("b_exact"));
    }
    let m = b_exact.len();
    let e = standard_normal_vec(m, rng);
    let (mut re, mut im) = dft_complex(&e, &vec![0.0; m], false);
    for f in 0..m {
        let ftilde = f.min(m - f) as f64;
        let w = if f == 0 { 0.0 } else { ftilde.powf(exponent / 2.0) };
        re[f] *= w;
        im[f] *= w;
    }
    let (mut shaped, _) = dft_complex(&re, &im, true);
    rescale_to(level * bnorm, &mut shaped);
    Vector::new(shaped)
}

/// Count scale for which Poisson counts of `scale * b` have expected
/// perturbation norm `level * ||b||` after dividing by the scale.
pub fn poisson_scale_for_level(b_exact: &Vector, level: f64) -> Result<f64> {
    check_level(level)?;
    if level == 0.0 {
        return Err(Error::InvalidParam {
            name: "level",
            reason: "the count-based model needs a positive level".into(),
        });
    }
    let l1: f64 = b_exact.iter().map(|v| v.abs()).sum();
    let l2 = b_exact.norm();
    if l2 == 0.0 {
        return Err(Error::ZeroVector("b_exact"));
    }
    Ok(l1 / (level * l2).powi(2))
}

/// Poisson counts of the scaled data, divided back by the scale. The
/// perturbation norm is random; its expectation matches `level * ||b||`.
pub fn poisson_noise(b_exact: &Vector, level: f64, rng: &mut ChaCha8Rng) -> Result<Vector> {
    if let Some(i) = b_exact.iter().position(|v| *v < 0.0) {
        return Err(Error::InvalidParam {
            name: "b_exact",
            reason: format!("count-based noise needs nonnegative data, entry {i} is {}", b_exact[i]),
        });
    }
    let scale = poisson_scale_for_level(b_exact, level)?;
    let b: Vec<f64> = b_exact
        .iter()
        .map(|&v| {
            let lam = scale * v;
            if lam > 0.0 {
                rng.sample(Poisson::new(lam).expect("positive finite rate")) / scale
            } else {
                0.0
            }
        })
        .collect();
    Vector::new(b)
}

/// Photon-limited measurements of attenuation data: draws counts
/// `c ~ Pois(n0 exp(-b))` per entry and returns `-ln(c / n0)`, clamping
/// zero counts to a single photon so the log stays finite.
pub fn tomo_photon_noise(b_exact: &Vector, n0: f64, rng: &mut ChaCha8Rng) -> Result<Vector> {
    if !n0.is_finite() || n0 < 1.0 {
        return Err(Error::InvalidParam {
            name: "n0",
            reason: format!("photon count must be finite and at least 1, got {n0}"),
        });
    }
    let b: Vec<f64> = b_exact
        .iter()
        .map(|&v| {
            let lam = n0 * (-v).exp();
            let count = if lam > 0.0 {
                rng.sample(Poisson::new(lam).expect("positive finite rate"))
            } else {
                0.0
            };
            -(count.max(1.0) / n0).ln()
        })
        .collect();
    Vector::new(b)
}

/// Applies a noise specification to exact data.
pub fn apply_noise(spec: &NoiseSpec, b_exact: &Vector) -> Result<NoisySystem> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let b = match spec.kind {
        NoiseKind::White => {
            let eta = white_noise(b_exact, spec.level, &mut rng)?;
            b_exact.add(&eta)
        }
        NoiseKind::Colored { exponent } => {
            let eta = colored_noise(b_exact, spec.level, exponent, &mut rng)?;
            b_exact.add(&eta)
        }
        NoiseKind::Poisson => poisson_noise(b_exact, spec.level, &mut rng)?,
        NoiseKind::TomoPhoton { n0 } => tomo_photon_noise(b_exact, n0, &mut rng)?,
    };
    let eta = b.sub(b_exact);
    let bnorm = b_exact.norm();
    let level_actual = if bnorm > 0.0 { eta.norm() / bnorm } else { f64::NAN };
    Ok(NoisySystem { b, eta, level_actual })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn smooth_positive(m: usize) -> Vector {
        Vector::new(
            (0..m)
                .map(|i| {
                    let t = i as f64 / m as f64;
                    1.0 + (std::f64::consts::PI * t).sin()
                })
                .collect(),
        )
        .unwrap()
    }

    fn band_power(eta: &[f64], lo_frac: f64, hi_frac: f64) -> f64 {
        let (re, im) = crate::fft::dft_real(eta);
        let m = eta.len();
        let lo = (lo_frac * m as f64) as usize;
        let hi = (hi_frac * m as f64) as usize;
        (lo..=hi.min(m / 2)).map(|f| re[f] * re[f] + im[f] * im[f]).sum()
    }

    #[test]
    fn white_noise_hits_requested_norm_exactly() {
        let b = smooth_positive(128);
        let sys = apply_noise(&NoiseSpec::white(1e-3, 7), &b).unwrap();
        assert!((sys.eta.norm() - 1e-3 * b.norm()).abs() < 1e-15 * b.norm());
        assert!((sys.level_actual - 1e-3).abs() < 1e-12);
    }

    #[test]
    fn same_seed_reproduces_different_seed_does_not() {
        let b = smooth_positive(64);
        let a1 = apply_noise(&NoiseSpec::white(1e-2, 42), &b).unwrap();
        let a2 = apply_noise(&NoiseSpec::white(1e-2, 42), &b).unwrap();
        let a3 = apply_noise(&NoiseSpec::white(1e-2, 43), &b).unwrap();
        assert_eq!(a1.eta.as_slice(), a2.eta.as_slice());
        assert!(a1.eta.sub(&a3.eta).norm() > 0.0);
    }

    #[test]
    fn zero_exponent_reproduces_white_exactly() {
        let b = smooth_positive(64);
        let white = apply_noise(&NoiseSpec::white(1e-2, 5), &b).unwrap();
        let colored = apply_noise(
            &NoiseSpec { kind: NoiseKind::Colored { exponent: 0.0 }, level: 1e-2, seed: 5 },
            &b,
        )
        .unwrap();
        assert_eq!(white.eta.as_slice(), colored.eta.as_slice());
    }

    #[test]
    fn red_noise_concentrates_power_at_low_frequencies() {
        let b = smooth_positive(256);
        let spec = NoiseSpec { kind: NoiseKind::Colored { exponent: -2.0 }, level: 1e-2, seed: 3 };
        let sys = apply_noise(&spec, &b).unwrap();
        assert!((sys.eta.norm() - 1e-2 * b.norm()).abs() < 1e-12);
        let low = band_power(sys.eta.as_slice(), 1.0 / 256.0, 0.125);
        let high = band_power(sys.eta.as_slice(), 0.375, 0.5);
        assert!(low > 5.0 * high, "low {low:.3e} vs high {high:.3e}");
        // Mean-free: the zero-frequency bin was dropped.
        let mean: f64 = sys.eta.iter().sum();
        assert!(mean.abs() < 1e-9);
    }

    #[test]
    fn violet_noise_concentrates_power_at_high_frequencies() {
        let b = smooth_positive(256);
        let spec = NoiseSpec { kind: NoiseKind::Colored { exponent: 2.0 }, level: 1e-2, seed: 3 };
        let sys = apply_noise(&spec, &b).unwrap();
        let low = band_power(sys.eta.as_slice(), 1.0 / 256.0, 0.125);
        let high = band_power(sys.eta.as_slice(), 0.375, 0.5);
        assert!(high > 5.0 * low, "high {high:.3e} vs low {low:.3e}");
    }

    #[test]
    fn poisson_noise_calibration_is_close_on_average() {
        let b = smooth_positive(400);
        let spec = NoiseSpec { kind: NoiseKind::Poisson, level: 1e-2, seed: 11 };
        let sys = apply_noise(&spec, &b).unwrap();
        assert!(
            sys.level_actual > 0.7e-2 && sys.level_actual < 1.3e-2,
            "realized level {} too far from 1e-2",
            sys.level_actual
        );
        assert!(sys.b.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn poisson_rejects_negative_data() {
        let b = Vector::new(vec![1.0, -0.5, 2.0]).unwrap();
        let spec = NoiseSpec { kind: NoiseKind::Poisson, level: 1e-2, seed: 0 };
        assert!(apply_noise(&spec, &b).is_err());
    }

    #[test]
    fn photon_noise_shrinks_with_the_photon_count() {
        let b = Vector::new((0..100).map(|i| 0.5 + 0.3 * (i as f64 * 0.1).sin()).collect()).unwrap();
        let loud = apply_noise(&NoiseSpec { kind: NoiseKind::TomoPhoton { n0: 1e3 }, level: 0.0, seed: 2 }, &b)
            .unwrap();
        let quiet = apply_noise(&NoiseSpec { kind: NoiseKind::TomoPhoton { n0: 1e7 }, level: 0.0, seed: 2 }, &b)
            .unwrap();
        assert!(quiet.eta.norm() < loud.eta.norm());
        assert!(quiet.eta.norm() > 0.0);
    }

    #[test]
    fn photon_noise_survives_total_absorption() {
        // Attenuation so strong that many rays see zero photons; the clamp
        // keeps the log finite.
        let b = Vector::new(vec![20.0; 32]).unwrap();
        let sys = apply_noise(&NoiseSpec { kind: NoiseKind::TomoPhoton { n0: 100.0 }, level: 0.0, seed: 9 }, &b)
            .unwrap();
        assert!(sys.b.iter().all(|v| v.is_finite()));
        // With at most one photon recorded, the measured value is ln(n0).
        assert!(sys.b.iter().all(|v| *v <= 100.0_f64.ln() + 1e-12));
    }

    #[test]
    fn scale_matches_closed_form() {
        let b = Vector::new(vec![3.0, 4.0]).unwrap();
        // l1 = 7, l2 = 5, level = 0.1 -> scale = 7 / 0.25 = 28.
        let s = poisson_scale_for_level(&b, 0.1).unwrap();
        assert!((s - 28.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_levels_are_rejected() {
        let b = smooth_positive(8);
        assert!(apply_noise(&NoiseSpec::white(-1.0, 0), &b).is_err());
        assert!(apply_noise(&NoiseSpec::white(f64::NAN, 0), &b).is_err());
        let zero_level_counts = NoiseSpec { kind: NoiseKind::Poisson, level: 0.0, seed: 0 };
        assert!(apply_noise(&zero_level_counts, &b).is_err());
    }
}
