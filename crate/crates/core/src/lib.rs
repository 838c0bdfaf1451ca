//! Matrix-free Golub-Kahan bidiagonalization with noise-propagation
//! diagnostics.
//!
//! The crate builds a shared two-sided Krylov basis for a linear operator and
//! right-hand side, then exposes three projected solvers (CRAIG, LSQR, LSMR)
//! together with the amplification factors that govern how the noise part of
//! the data travels into the basis vectors. Those factors make semiconvergence
//! observable without knowing the exact solution: the iteration at which they
//! stop growing marks the basis vector that carries the (scaled) noise, which
//! in turn yields an estimate of the noise vector itself.
//!
//! Everything runs against the [`linalg::LinearOperator`] trait, so operators
//! only need matrix-vector products with themselves and their transpose;
//! dense matrices are provided for small problems and oracle checks, a sparse
//! parallel-beam tomography operator for a realistic large one.

pub mod bidiag;
pub mod diagnostics;
pub mod error;
pub mod factors;
pub mod fft;
pub mod linalg;
pub mod mtx;
pub mod noise;
pub mod problems;
pub mod solvers;
pub mod tomo;

pub use bidiag::{bidiag_init, bidiagonalize, BidiagState, ReorthMode, Termination};
pub use diagnostics::{
    cumulative_periodogram, lf_component, numerical_rank, power_spectrum, residual_noise_match,
    shifted_factor_curve, whiteness_distance, NoiseMatch, Spectrum, DEFAULT_BASIS_RANK_TOL,
};
pub use error::{Error, Result};
pub use factors::{
    detect_noise_revealing, detect_noise_revealing_with, factor_trace, noise_estimate,
    phi_factors, psi_factors, rescaled_noise_floor, FactorTrace, NoiseRevealing,
};
pub use linalg::{
    apply, apply_transpose, dense_lstsq, pseudoinverse_solve, DenseMatrix, LinearOperator, Vector,
};
pub use noise::{apply_noise, NoiseKind, NoiseSpec, NoisySystem, DEFAULT_PHOTON_COUNT};
pub use problems::{
    angle_range, make_foxgood, make_gravity, make_paralleltomo, make_phillips, make_shaw,
    ProblemOperator, TestProblem,
};
pub use solvers::{
    craig_modified_rhs, craig_solve, lsmr_residual_coefficients, lsmr_solve,
    lsqr_residual_coefficients, lsqr_solve, residual_vector, solver_trace, Method, SolverStep,
    SolverTrace,
};
pub use tomo::{shepp_logan, TomoOperator};
