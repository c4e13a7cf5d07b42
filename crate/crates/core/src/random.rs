//! Random matrix ensembles used by tests, sweeps and the CLI.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c, ComplexMatrix, C64};

/// Standard complex Gaussian sample, `E|z|² = 1`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Complex Ginibre matrix: i.i.d. standard complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// Gaussian unitary ensemble sample `(G + G†)/2`.
pub fn gue<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(n, n, rng);
    (&g + &g.adjoint()).scale_real(0.5)
}

/// Random Hermitian matrix (GUE).
pub fn hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    gue(n, rng)
}

/// Full-rank random density matrix `G G† / Tr[G G†]`.
pub fn density_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(n, n, rng);
    let rho = &g * &g.adjoint();
    let tr = rho.trace().re;
    rho.scale_real(1.0 / tr)
}

/// `n × k` matrix with orthonormal columns (`k ≤ n`), from the QR factor of
/// a Ginibre sample.
pub fn isometry<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> ComplexMatrix {
    assert!(k <= n, "isometry needs k <= n");
    if k == 0 {
        return ComplexMatrix::zeros(n, 0);
    }
    let g = ginibre(n, k, rng);
    let q = g.into_nalgebra().qr().q();
    ComplexMatrix::from_nalgebra(q)
}

/// `m × n` matrix `U diag(s) V†` with Haar-like isometries and prescribed
/// singular values (`s.len() ≤ min(m, n)`).
pub fn with_singular_values<R: Rng + ?Sized>(
    m: usize,
    n: usize,
    s: &[f64],
    rng: &mut R,
) -> ComplexMatrix {
    let k = s.len();
    assert!(k <= m.min(n), "too many singular values");
    let u = isometry(m, k, rng);
    let v = isometry(n, k, rng);
    let d: Vec<C64> = s.iter().map(|&x| c(x, 0.0)).collect();
    &(&u * &ComplexMatrix::from_diagonal(&d)) * &v.adjoint()
}

/// `m × n` matrix of the given rank with singular values in `[0.1, 1.35]`.
pub fn with_rank<R: Rng + ?Sized>(m: usize, n: usize, rank: usize, rng: &mut R) -> ComplexMatrix {
    let s: Vec<f64> = (0..rank).map(|_| rng.random_range(0.1..=1.35)).collect();
    with_singular_values(m, n, &s, rng)
}
