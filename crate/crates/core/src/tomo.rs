//! Sparse parallel-beam tomography operator and a standard head phantom.
//!
//! The image lives on an `nx`-by-`nx` grid of unit cells covering the square
//! `[-nx/2, nx/2]^2`; pixel `(i, j)` (row `i` counted from the bottom, column
//! `j` from the left) is flattened to index `i * nx + j`. For each projection
//! angle `theta` a fan of parallel rays with offsets spread over the full
//! diagonal is traced through the grid; the matrix entry for a (ray, pixel)
//! pair is the intersection length divided by `nx`, so a ray through the
//! middle of the grid has row sum close to one.
//!
//! Rows are stored sparsely and never materialized as a dense matrix, which
//! keeps products at `O(nnz)`.

use crate::error::{Error, Result};
use crate::linalg::LinearOperator;
use crate::Vector;

#[derive(Debug, Clone)]
pub struct TomoOperator {
    nx: usize,
    nrays: usize,
    angles_deg: Vec<f64>,
    /// Per-ray sparse rows of (pixel index, length / nx).
    rows: Vec<Vec<(usize, f64)>>,
}

impl TomoOperator {
    /// Traces `nrays` parallel rays per angle (degrees) across an `nx * nx`
    /// pixel grid. Ray offsets cover the grid diagonal, so edge rays at
    /// axis-aligned angles miss the grid and produce empty rows, exactly as a
    /// physical detector wider than the object would.
    pub fn new(nx: usize, angles_deg: &[f64], nrays: usize) -> Result<TomoOperator> {
        if nx < 2 {
            return Err(Error::InvalidParam {
                name: "nx",
                reason: format!("grid needs at least 2 pixels per side, got {nx}"),
            });
        }
        if angles_deg.is_empty() {
            return Err(Error::Empty("angles"));
        }
        if nrays == 0 {
            return Err(Error::Empty("rays"));
        }
        if let Some(bad) = angles_deg.iter().find(|a| !a.is_finite()) {
            return Err(Error::InvalidParam {
                name: "angles",
                reason: format!("angles must be finite, got {bad}"),
            });
        }
        let span = 2.0_f64.sqrt() * nx as f64;
        let offsets: Vec<f64> = if nrays == 1 {
            vec![0.0]
        } else {
            (0..nrays)
                .map(|r| -span / 2.0 + span * r as f64 / (nrays - 1) as f64)
                .collect()
        };
        let mut rows = Vec::with_capacity(angles_deg.len() * nrays);
        for &angle in angles_deg {
            let (sin, cos) = angle.to_radians().sin_cos();
            for &offset in &offsets {
                rows.push(trace_ray(nx, (offset * cos, offset * sin), (-sin, cos)));
            }
        }
        Ok(TomoOperator { nx, nrays, angles_deg: angles_deg.to_vec(), rows })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nrays(&self) -> usize {
        self.nrays
    }

    pub fn angles_deg(&self) -> &[f64] {
        &self.angles_deg
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }
}

/// Grid-crossing traversal: collects the parameters where the ray crosses
/// pixel boundaries, then reads off one (pixel, length) pair per segment.
fn trace_ray(nx: usize, base: (f64, f64), dir: (f64, f64)) -> Vec<(usize, f64)> {
    const PARALLEL: f64 = 1e-12;
    let half = nx as f64 / 2.0;
    let (p, d) = ([base.0, base.1], [dir.0, dir.1]);
    let mut smin = f64::NEG_INFINITY;
    let mut smax = f64::INFINITY;
    for axis in 0..2 {
        if d[axis].abs() < PARALLEL {
            if p[axis] <= -half || p[axis] >= half {
                return Vec::new();
            }
        } else {
            let s1 = (-half - p[axis]) / d[axis];
            let s2 = (half - p[axis]) / d[axis];
            smin = smin.max(s1.min(s2));
            smax = smax.min(s1.max(s2));
        }
    }
    if smax <= smin + PARALLEL {
        return Vec::new();
    }
    let mut crossings = vec![smin, smax];
    for axis in 0..2 {
        if d[axis].abs() < PARALLEL {
            continue;
        }
        for line in 0..=nx {
            let c = -half + line as f64;
            let s = (c - p[axis]) / d[axis];
            if s > smin + PARALLEL && s < smax - PARALLEL {
                crossings.push(s);
            }
        }
    }
    crossings.sort_by(|a, b| a.partial_cmp(b).expect("finite parameters"));
    let mut entries = Vec::with_capacity(crossings.len());
    let scale = 1.0 / nx as f64;
    for w in crossings.windows(2) {
        let len = w[1] - w[0];
        if len <= PARALLEL {
            continue;
        }
        let smid = 0.5 * (w[0] + w[1]);
        let x = p[0] + smid * d[0];
        let y = p[1] + smid * d[1];
        let jx = (x + half).floor() as isize;
        let iy = (y + half).floor() as isize;
        if jx < 0 || iy < 0 || jx >= nx as isize || iy >= nx as isize {
            continue;
        }
        entries.push((iy as usize * nx + jx as usize, len * scale));
    }
    entries
}

impl LinearOperator for TomoOperator {
    fn nrows(&self) -> usize {
        self.rows.len()
    }

    fn ncols(&self) -> usize {
        self.nx * self.nx
    }

    fn forward_into(&self, x: &[f64], out: &mut [f64]) {
        for (ray, row) in self.rows.iter().enumerate() {
            out[ray] = row.iter().map(|&(col, w)| w * x[col]).sum();
        }
    }

    fn transpose_into(&self, y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (ray, row) in self.rows.iter().enumerate() {
            let yi = y[ray];
            if yi != 0.0 {
                for &(col, w) in row {
                    out[col] += w * yi;
                }
            }
        }
    }
}

/// Ellipse parameters: additive intensity, semi-axes, center, rotation.
struct Ellipse {
    value: f64,
    a: f64,
    b: f64,
    x0: f64,
    y0: f64,
    phi_deg: f64,
}

/// The widely used high-contrast variant of the Shepp-Logan head phantom,
/// rasterized at pixel centers on the unit square. All pixel values are
/// nonnegative.
pub fn shepp_logan(nx: usize) -> Vector {
    let ellipses = [
        Ellipse { value: 1.0, a: 0.69, b: 0.92, x0: 0.0, y0: 0.0, phi_deg: 0.0 },
        Ellipse { value: -0.8, a: 0.6624, b: 0.874, x0: 0.0, y0: -0.0184, phi_deg: 0.0 },
        Ellipse { value: -0.2, a: 0.11, b: 0.31, x0: 0.22, y0: 0.0, phi_deg: -18.0 },
        Ellipse { value: -0.2, a: 0.16, b: 0.41, x0: -0.22, y0: 0.0, phi_deg: 18.0 },
        Ellipse { value: 0.1, a: 0.21, b: 0.25, x0: 0.0, y0: 0.35, phi_deg: 0.0 },
        Ellipse { value: 0.1, a: 0.046, b: 0.046, x0: 0.0, y0: 0.1, phi_deg: 0.0 },
        Ellipse { value: 0.1, a: 0.046, b: 0.046, x0: 0.0, y0: -0.1, phi_deg: 0.0 },
        Ellipse { value: 0.1, a: 0.046, b: 0.023, x0: -0.08, y0: -0.605, phi_deg: 0.0 },
        Ellipse { value: 0.1, a: 0.023, b: 0.023, x0: 0.0, y0: -0.605, phi_deg: 0.0 },
        Ellipse { value: 0.1, a: 0.023, b: 0.046, x0: 0.06, y0: -0.605, phi_deg: 0.0 },
    ];
    let mut img = vec![0.0; nx * nx];
    for i in 0..nx {
        let y = (2 * i + 1) as f64 / nx as f64 - 1.0;
        for j in 0..nx {
            let x = (2 * j + 1) as f64 / nx as f64 - 1.0;
            let mut v = 0.0;
            for e in &ellipses {
                let (sin, cos) = e.phi_deg.to_radians().sin_cos();
                let dx = x - e.x0;
                let dy = y - e.y0;
                let u = (dx * cos + dy * sin) / e.a;
                let w = (-dx * sin + dy * cos) / e.b;
                if u * u + w * w <= 1.0 {
                    v += e.value;
                }
            }
            // Overlap arithmetic keeps the sum nonnegative; clamp the odd
            // -1e-17 from cancellation.
            img[i * nx + j] = v.max(0.0);
        }
    }
    Vector::new(img).expect("phantom values are finite")
}
