//! Uniform-grid quadrature used by the model rate computations.

use crate::linalg::C64;

/// Running trapezoid integral `∫₀^{t_i} x`, starting at 0.
pub fn cumulative_trapezoid(x: &[C64], h: f64) -> Vec<C64> {
    let mut out = Vec::with_capacity(x.len());
    let mut acc = C64::new(0.0, 0.0);
    for (i, &v) in x.iter().enumerate() {
        if i > 0 {
            acc += (x[i - 1] + v) * (0.5 * h);
        }
        out.push(acc);
    }
    out
}

/// Volterra convolution `y_i = ∫₀^{t_i} k(t_i − s) x(s) ds` by the trapezoid
/// rule, with `kernel[j] = k(j·h)`.
pub fn volterra_convolution(kernel: &[C64], x: &[C64], h: f64) -> Vec<C64> {
    assert!(kernel.len() >= x.len(), "kernel shorter than signal");
    let n = x.len();
    let mut out = vec![C64::new(0.0, 0.0); n];
    for i in 1..n {
        let mut acc = 0.5 * (kernel[i] * x[0] + kernel[0] * x[i]);
        for j in 1..i {
            acc += kernel[i - j] * x[j];
        }
        out[i] = acc * h;
    }
    out
}
