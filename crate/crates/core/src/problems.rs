//! Classical ill-posed test problems with known exact solutions.
//!
//! Each generator discretizes a first-kind Fredholm integral equation (or a
//! tomographic projection) and returns the operator together with the exact
//! solution and the consistent right-hand side `b = A x`, so noise can be
//! added in a controlled way. The dense generators follow the standard
//! midpoint/Galerkin discretizations used throughout the inverse-problems
//! literature, which keeps singular-value behavior comparable with published
//! experiments.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{apply, DenseMatrix, LinearOperator, Vector};
use crate::tomo::{shepp_logan, TomoOperator};

/// Operator payload of a test problem: small dense kernels or the sparse
/// projection operator.
#[derive(Debug, Clone)]
pub enum ProblemOperator {
    Dense(DenseMatrix),
    Tomo(TomoOperator),
}

impl LinearOperator for ProblemOperator {
    fn nrows(&self) -> usize {
        match self {
            ProblemOperator::Dense(a) => a.nrows(),
            ProblemOperator::Tomo(a) => a.nrows(),
        }
    }

    fn ncols(&self) -> usize {
        match self {
            ProblemOperator::Dense(a) => a.ncols(),
            ProblemOperator::Tomo(a) => a.ncols(),
        }
    }

    fn forward_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            ProblemOperator::Dense(a) => a.forward_into(x, out),
            ProblemOperator::Tomo(a) => a.forward_into(x, out),
        }
    }

    fn transpose_into(&self, y: &[f64], out: &mut [f64]) {
        match self {
            ProblemOperator::Dense(a) => a.transpose_into(y, out),
            ProblemOperator::Tomo(a) => a.transpose_into(y, out),
        }
    }
}

impl ProblemOperator {
    /// Dense copy of the operator; used by oracle checks on small instances.
    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            ProblemOperator::Dense(a) => a.clone(),
            ProblemOperator::Tomo(a) => {
                let mut dense = DenseMatrix::zeros(a.nrows(), a.ncols());
                for i in 0..a.nrows() {
                    for &(j, w) in a.row(i) {
                        dense.set(i, j, w);
                    }
                }
                dense
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct TestProblem {
    pub name: String,
    pub op: ProblemOperator,
    pub x_true: Vector,
    /// Consistent data `A x_true`.
    pub b_exact: Vector,
}

impl TestProblem {
    fn from_parts(name: &str, op: ProblemOperator, x_true: Vector) -> Result<TestProblem> {
        let b_exact = apply(&op, &x_true)?;
        Ok(TestProblem { name: name.to_string(), op, x_true, b_exact })
    }
}

fn require(cond: bool, name: &'static str, reason: String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParam { name, reason })
    }
}

/// One-dimensional image restoration: the kernel
/// `(cos s + cos t)^2 (sin u / u)^2` with `u = pi (sin s + sin t)` on
/// `[-pi/2, pi/2]^2`, discretized by the midpoint rule. Severely ill-posed;
/// `n` must be even.
pub fn make_shaw(n: usize) -> Result<TestProblem> {
    require(n >= 4 && n % 2 == 0, "n", format!("shaw needs an even n >= 4, got {n}"))?;
    let h = PI / n as f64;
    let grid: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * h - PI / 2.0).collect();
    let a = DenseMatrix::from_fn(n, n, |i, j| {
        let (s, t) = (grid[i], grid[j]);
        let u = PI * (s.sin() + t.sin());
        let sinc = if u.abs() < 1e-8 { 1.0 } else { u.sin() / u };
        let c = s.cos() + t.cos();
        h * c * c * sinc * sinc
    });
    let x_true = Vector::new(
        grid.iter()
            .map(|&t| 2.0 * (-6.0 * (t - 0.8).powi(2)).exp() + (-2.0 * (t + 0.5).powi(2)).exp())
            .collect(),
    )?;
    TestProblem::from_parts("shaw", ProblemOperator::Dense(a), x_true)
}

/// Phillips' smooth test problem: the convolution kernel
/// `1 + cos(pi (s - t) / 3)` on `[-6, 6]`, Galerkin-discretized with box
/// functions into an exactly symmetric Toeplitz matrix. Mildly ill-posed;
/// `n` must be a multiple of 4.
pub fn make_phillips(n: usize) -> Result<TestProblem> {
    require(n >= 8 && n % 4 == 0, "n", format!("phillips needs n divisible by 4, n >= 8, got {n}"))?;
    let n4 = n / 4;
    let h = 12.0 / n as f64;
    let theta = 4.0 * PI / n as f64;
    // First row of the Toeplitz matrix; entries beyond one third of the row
    // vanish because the kernel has bounded support.
    let cos_at = |j: isize| ((j as f64) * theta).cos();
    let mut r1 = vec![0.0; n];
    let scale = 9.0 / (h * PI * PI);
    for i in 1..=n4 {
        let i = i as isize;
        r1[(i - 1) as usize] = h + scale * (2.0 * cos_at(i - 1) - cos_at(i - 2) - cos_at(i));
    }
    r1[n4] = h / 2.0 + scale * (cos_at(1) - 1.0);
    let a = DenseMatrix::from_fn(n, n, |i, j| r1[i.abs_diff(j)]);
    // Hat-shaped exact solution supported on the middle half, mirrored so it
    // is exactly symmetric about the center.
    let mut x = vec![0.0; n];
    let sin_at = |k: usize| ((k as f64) * h * PI / 3.0).sin();
    for k in 0..n4 {
        x[2 * n4 + k] = (h + sin_at(k + 1) - sin_at(k)) / h.sqrt();
    }
    for k in 0..n4 {
        x[n4 + k] = x[3 * n4 - 1 - k];
    }
    TestProblem::from_parts("phillips", ProblemOperator::Dense(a), Vector::new(x)?)
}

/// One-dimensional gravity surveying: depth-`0.25` point sources under a
/// unit line, midpoint rule, giving an exactly Toeplitz positive kernel.
pub fn make_gravity(n: usize) -> Result<TestProblem> {
    require(n >= 4, "n", format!("gravity needs n >= 4, got {n}"))?;
    let h = 1.0 / n as f64;
    let depth = 0.25;
    // Kernel depends on s - t = (i - j) h only; evaluating through the index
    // difference keeps the Toeplitz structure bitwise exact.
    let kernel: Vec<f64> = (0..n)
        .map(|d| {
            let dist = d as f64 * h;
            h * depth * (depth * depth + dist * dist).powf(-1.5)
        })
        .collect();
    let a = DenseMatrix::from_fn(n, n, |i, j| kernel[i.abs_diff(j)]);
    let x_true = Vector::new(
        (0..n)
            .map(|j| {
                let t = (j as f64 + 0.5) * h;
                (PI * t).sin() + 0.5 * (2.0 * PI * t).sin()
            })
            .collect(),
    )?;
    TestProblem::from_parts("gravity", ProblemOperator::Dense(a), x_true)
}

/// Fox-Goodwin's equation: kernel `sqrt(s^2 + t^2)` on the unit square,
/// midpoint rule, exact solution `x(t) = t`. Severely ill-posed without the
/// square-integrable-derivative smoothness that typically rescues moderate
/// problems.
pub fn make_foxgood(n: usize) -> Result<TestProblem> {
    require(n >= 4, "n", format!("foxgood needs n >= 4, got {n}"))?;
    let h = 1.0 / n as f64;
    let grid: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * h).collect();
    let a = DenseMatrix::from_fn(n, n, |i, j| h * (grid[i] * grid[i] + grid[j] * grid[j]).sqrt());
    let x_true = Vector::new(grid.clone())?;
    TestProblem::from_parts("foxgood", ProblemOperator::Dense(a), x_true)
}

/// Parallel-beam tomography of the standard head phantom: `nrays` rays per
/// angle across an `nx`-by-`nx` image.
pub fn make_paralleltomo(nx: usize, angles_deg: &[f64], nrays: usize) -> Result<TestProblem> {
    let op = TomoOperator::new(nx, angles_deg, nrays)?;
    let x_true = shepp_logan(nx);
    TestProblem::from_parts("paralleltomo", ProblemOperator::Tomo(op), x_true)
}

/// Evenly spaced angles `start, start + step, ..` up to and including `stop`
/// when it lies on the grid; mirrors the colon syntax common in experiment
/// scripts.
pub fn angle_range(start: f64, step: f64, stop: f64) -> Result<Vec<f64>> {
    if !(start.is_finite() && step.is_finite() && stop.is_finite()) || step <= 0.0 {
        return Err(Error::InvalidParam {
            name: "angles",
            reason: format!("need finite start/stop and positive step, got {start}:{step}:{stop}"),
        });
    }
    let count = ((stop - start) / step).floor() as usize + 1;
    Ok((0..count).map(|k| start + step * k as f64).collect())
}
