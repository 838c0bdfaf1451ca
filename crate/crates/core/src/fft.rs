//! Discrete Fourier transforms used by the noise and diagnostics modules.
//!
//! Power-of-two lengths go through an iterative radix-2 transform; any other
//! length falls back to the direct O(n^2) sum. Both paths share exactly one
//! convention: X[k] = sum_j x[j] * exp(-2*pi*i*j*k/n) for the forward
//! transform, with the 1/n factor on the inverse.

/// Forward transform of a real signal. Returns (re, im) of all n bins.
pub fn dft_real(input: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let im = vec![0.0; input.len()];
    dft_complex(input, &im, false)
}

/// Complex transform; `inverse` selects the conjugate kernel and 1/n scaling.
pub fn dft_complex(re: &[f64], im: &[f64], inverse: bool) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(re.len(), im.len(), "dft: re/im length mismatch");
    let n = re.len();
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    let (mut out_re, mut out_im) = if n.is_power_of_two() {
        radix2(re, im, inverse)
    } else {
        naive(re, im, inverse)
    };
    if inverse {
        let scale = 1.0 / n as f64;
        for v in out_re.iter_mut().chain(out_im.iter_mut()) {
            *v *= scale;
        }
    }
    (out_re, out_im)
}

/// Smallest power of two >= n (n = 0 maps to 1).
pub fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

fn naive(re: &[f64], im: &[f64], inverse: bool) -> (Vec<f64>, Vec<f64>) {
    let n = re.len();
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut out_re = vec![0.0; n];
    let mut out_im = vec![0.0; n];
    for k in 0..n {
        let mut sr = 0.0;
        let mut si = 0.0;
        for j in 0..n {
            // Reduce j*k mod n before the trig call to keep the angle small.
            let ang = sign * 2.0 * std::f64::consts::PI * ((j * k) % n) as f64 / n as f64;
            let (s, c) = ang.sin_cos();
            sr += re[j] * c - im[j] * s;
            si += re[j] * s + im[j] * c;
        }
        out_re[k] = sr;
        out_im[k] = si;
    }
    (out_re, out_im)
}

fn radix2(re: &[f64], im: &[f64], inverse: bool) -> (Vec<f64>, Vec<f64>) {
    let n = re.len();
    let mut xr = re.to_vec();
    let mut xi = im.to_vec();
    // Bit-reversal permutation.
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            xr.swap(i, j);
            xi.swap(i, j);
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let ang = sign * 2.0 * std::f64::consts::PI / len as f64;
        let (wl_s, wl_c) = ang.sin_cos();
        for start in (0..n).step_by(len) {
            let mut wr = 1.0;
            let mut wi = 0.0;
            for off in 0..len / 2 {
                let a = start + off;
                let b = a + len / 2;
                let tr = xr[b] * wr - xi[b] * wi;
                let ti = xr[b] * wi + xi[b] * wr;
                xr[b] = xr[a] - tr;
                xi[b] = xi[a] - ti;
                xr[a] += tr;
                xi[a] += ti;
                let nwr = wr * wl_c - wi * wl_s;
                wi = wr * wl_s + wi * wl_c;
                wr = nwr;
            }
        }
        len <<= 1;
    }
    (xr, xi)
}
