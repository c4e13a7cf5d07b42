//! Dense complex linear algebra.
//!
//! [`ComplexMatrix`] is the carrier for states, Hamiltonians and vectorized
//! superoperators. Storage, products, LU and the Padé exponential come from
//! `nalgebra`; SVD and eigenvalues go through LAPACK. The Moore-Penrose
//! pseudoinverse and its power series are built on top.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use nalgebra::DMatrix;
use ndarray::Array2;
use ndarray_linalg::{Eig, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Dense matrix of double-precision complex numbers.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    inner: DMatrix<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows(), self.cols())?;
        for i in 0..self.rows() {
            write!(f, "  ")?;
            for j in 0..self.cols() {
                let z = self[(i, j)];
                write!(f, "{:+.4e}{:+.4e}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries, rejecting non-finite values.
    pub fn new(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::InvalidMatrix(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if let Some(pos) = entries.iter().position(|z| !z.is_finite()) {
            return Err(Error::InvalidMatrix(format!(
                "non-finite entry at ({}, {})",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Self {
            inner: DMatrix::from_row_slice(rows, cols, &entries),
        })
    }

    /// Row-major real entries.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        Self::new(rows, cols, entries.iter().map(|&x| c(x, 0.0)).collect())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        Self {
            inner: DMatrix::from_fn(rows, cols, |i, j| f(i, j)),
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            inner: DMatrix::zeros(rows, cols),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: DMatrix::identity(n, n),
        }
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { diag[i] } else { ZERO })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { c(diag[i], 0.0) } else { ZERO })
    }

    pub fn from_nalgebra(inner: DMatrix<C64>) -> Self {
        Self { inner }
    }

    pub fn as_nalgebra(&self) -> &DMatrix<C64> {
        &self.inner
    }

    pub fn into_nalgebra(self) -> DMatrix<C64> {
        self.inner
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.inner.shape()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn to_row_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.inner[(i, j)]);
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.inner.iter().all(|z| z.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        Self {
            inner: self.inner.adjoint(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            inner: self.inner.transpose(),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            inner: self.inner.map(|z| z.conj()),
        }
    }

    pub fn trace(&self) -> C64 {
        let n = self.rows().min(self.cols());
        (0..n).map(|i| self.inner[(i, i)]).sum()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        let n = self.rows().min(self.cols());
        (0..n).map(|i| self.inner[(i, i)]).collect()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            inner: &self.inner * s,
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(c(s, 0.0))
    }

    pub fn map(&self, f: impl FnMut(C64) -> C64) -> Self {
        Self {
            inner: self.inner.map(f),
        }
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        Self {
            inner: self.inner.kronecker(&other.inner),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.inner.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entry-wise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.shape(), other.shape(), "shape mismatch in max_abs_diff");
        self.inner
            .iter()
            .zip(other.inner.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Maximum entry deviation from Hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self * other - other * self
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        self * other + other * self
    }

    /// Matrix exponential (scaling-and-squaring Padé).
    pub fn expm(&self) -> Self {
        assert!(self.is_square(), "expm of a non-square matrix");
        if self.rows() == 0 {
            return self.clone();
        }
        Self {
            inner: self.inner.exp(),
        }
    }

    pub fn determinant(&self) -> C64 {
        assert!(self.is_square(), "determinant of a non-square matrix");
        self.inner.clone().lu().determinant()
    }

    /// Inverse via LU with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::DimensionError(format!(
                "cannot invert a {}x{} matrix",
                self.rows(),
                self.cols()
            )));
        }
        let inv = self
            .inner
            .clone()
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::InvalidMatrix("matrix is singular".into()))?;
        if inv.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidMatrix("matrix is numerically singular".into()));
        }
        Ok(Self { inner: inv })
    }

    /// Eigenvalues of a square matrix.
    pub fn eigenvalues(&self) -> Vec<C64> {
        assert!(self.is_square(), "eigenvalues of a non-square matrix");
        if self.rows() == 0 {
            return Vec::new();
        }
        let (vals, _) = to_ndarray(self).eig().expect("LAPACK eigenvalue solver failed");
        vals.to_vec()
    }

    /// Column `j` as a vector.
    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows()).map(|i| self.inner[(i, j)]).collect()
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.cols(), "vector length mismatch");
        let mut out = vec![ZERO; self.rows()];
        for j in 0..self.cols() {
            let vj = v[j];
            if vj == ZERO {
                continue;
            }
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.inner[(i, j)] * vj;
            }
        }
        out
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.inner[idx]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut C64 {
        &mut self.inner[idx]
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&ComplexMatrix> for &ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: &ComplexMatrix) -> ComplexMatrix {
                ComplexMatrix { inner: &self.inner $op &rhs.inner }
            }
        }
        impl $trait<ComplexMatrix> for ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: ComplexMatrix) -> ComplexMatrix {
                ComplexMatrix { inner: &self.inner $op &rhs.inner }
            }
        }
        impl $trait<&ComplexMatrix> for ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: &ComplexMatrix) -> ComplexMatrix {
                ComplexMatrix { inner: &self.inner $op &rhs.inner }
            }
        }
        impl $trait<ComplexMatrix> for &ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: ComplexMatrix) -> ComplexMatrix {
                ComplexMatrix { inner: &self.inner $op &rhs.inner }
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl Mul<C64> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: C64) -> ComplexMatrix {
        self.scale(rhs)
    }
}

impl Mul<C64> for ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: C64) -> ComplexMatrix {
        ComplexMatrix {
            inner: self.inner * rhs,
        }
    }
}

impl Neg for ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix { inner: -self.inner }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix {
            inner: -&self.inner,
        }
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        self.inner += &rhs.inner;
    }
}

impl SubAssign<&ComplexMatrix> for ComplexMatrix {
    fn sub_assign(&mut self, rhs: &ComplexMatrix) {
        self.inner -= &rhs.inner;
    }
}

/// Thin singular value decomposition `a = u · diag(s) · v†`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: ComplexMatrix,
    /// Non-negative, sorted descending.
    pub singular_values: Vec<f64>,
    pub v: ComplexMatrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let d: Vec<C64> = self.singular_values.iter().map(|&s| c(s, 0.0)).collect();
        &(&self.u * &ComplexMatrix::from_diagonal(&d)) * &self.v.adjoint()
    }
}

pub fn svd(a: &ComplexMatrix) -> Result<SvdResult> {
    if !a.is_finite() {
        return Err(Error::InvalidMatrix("non-finite entry".into()));
    }
    let (m, n) = a.shape();
    let k = m.min(n);
    if k == 0 {
        return Ok(SvdResult {
            u: ComplexMatrix::zeros(m, 0),
            singular_values: Vec::new(),
            v: ComplexMatrix::zeros(n, 0),
        });
    }
    let (u, s, v_h) = to_ndarray(a)
        .svd(true, true)
        .map_err(|e| Error::InvalidMatrix(format!("SVD failed: {e}")))?;
    let u = u.expect("u requested");
    let v_h = v_h.expect("v_h requested");
    // LAPACK returns singular values in descending order
    let u = ComplexMatrix::from_fn(m, k, |i, j| u[[i, j]]);
    let v = ComplexMatrix::from_fn(n, k, |i, j| v_h[[j, i]].conj());
    Ok(SvdResult {
        u,
        singular_values: s.iter().map(|&x| x.max(0.0)).collect(),
        v,
    })
}

fn to_ndarray(a: &ComplexMatrix) -> Array2<C64> {
    Array2::from_shape_fn(a.shape(), |(i, j)| a[(i, j)])
}

/// Default relative rank-decision tolerance: `max(rows, cols) · ε`.
pub fn default_rtol(a: &ComplexMatrix) -> f64 {
    a.rows().max(a.cols()) as f64 * f64::EPSILON
}

/// Moore-Penrose pseudoinverse `V D⁺ U†`.
///
/// Singular values at or below `rtol · σ_max` are treated as zero.
pub fn pinv_svd(a: &ComplexMatrix, rtol: f64) -> Result<ComplexMatrix> {
    let dec = svd(a)?;
    let (m, n) = a.shape();
    let smax = dec.singular_values.first().copied().unwrap_or(0.0);
    let cutoff = rtol.max(0.0) * smax;
    let mut out = ComplexMatrix::zeros(n, m);
    for (k, &s) in dec.singular_values.iter().enumerate() {
        if s <= cutoff || s == 0.0 {
            continue;
        }
        let inv = 1.0 / s;
        for i in 0..n {
            let vik = dec.v[(i, k)] * inv;
            for j in 0..m {
                out[(i, j)] += vik * dec.u[(j, k)].conj();
            }
        }
    }
    Ok(out)
}

/// Pseudoinverse with the default rank tolerance.
pub fn pinv(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    pinv_svd(a, default_rtol(a))
}

/// Successive partial sums `Σ_{k=0}^{d} (I − A†A)ᵏ A†` for `d = 0, 1, 2, …`.
///
/// Each step costs one matrix product: `S_{d+1} = (I − A†A) S_d + A†`.
pub struct PinvSeries {
    step: ComplexMatrix,
    a_dag: ComplexMatrix,
    current: Option<ComplexMatrix>,
}

impl PinvSeries {
    pub fn new(a: &ComplexMatrix) -> Self {
        let a_dag = a.adjoint();
        let step = ComplexMatrix::identity(a.cols()) - &a_dag * a;
        Self {
            step,
            a_dag,
            current: None,
        }
    }
}

impl Iterator for PinvSeries {
    type Item = ComplexMatrix;

    fn next(&mut self) -> Option<ComplexMatrix> {
        let next = match &self.current {
            None => self.a_dag.clone(),
            Some(s) => &self.step * s + &self.a_dag,
        };
        self.current = Some(next.clone());
        Some(next)
    }
}

/// Israel–Charnes partial sum `Σ_{k=0}^{depth} (I − A†A)ᵏ A†`.
///
/// No convergence check: for singular values with `|1 − d²| > 1` the partial
/// sums grow without bound and that is returned as-is.
pub fn pinv_series(a: &ComplexMatrix, depth: usize) -> ComplexMatrix {
    PinvSeries::new(a)
        .nth(depth)
        .expect("series iterator is infinite")
}

/// Successive Neumann partial sums `Σ_{k=0}^{d} Σᵏ` for `d = 0, 1, 2, …`.
pub struct NeumannSeries {
    sigma: ComplexMatrix,
    power: ComplexMatrix,
    current: Option<ComplexMatrix>,
}

impl NeumannSeries {
    pub fn new(sigma: &ComplexMatrix) -> Self {
        assert!(sigma.is_square(), "Neumann series needs a square matrix");
        Self {
            sigma: sigma.clone(),
            power: ComplexMatrix::identity(sigma.rows()),
            current: None,
        }
    }
}

impl Iterator for NeumannSeries {
    type Item = ComplexMatrix;

    fn next(&mut self) -> Option<ComplexMatrix> {
        let next = match &self.current {
            None => self.power.clone(),
            Some(s) => {
                self.power = &self.power * &self.sigma;
                s + &self.power
            }
        };
        self.current = Some(next.clone());
        Some(next)
    }
}

/// Largest singular value.
pub fn operator_norm(a: &ComplexMatrix) -> f64 {
    if a.rows() == 0 || a.cols() == 0 {
        return 0.0;
    }
    match to_ndarray(a).svd(false, false) {
        Ok((_, s, _)) => s.iter().copied().fold(0.0, f64::max),
        Err(_) => f64::NAN,
    }
}

/// Hilbert-Schmidt inner product `Tr[x† y]`.
pub fn hs_inner(x: &ComplexMatrix, y: &ComplexMatrix) -> Result<C64> {
    if x.shape() != y.shape() {
        return Err(Error::DimensionError(format!(
            "hs_inner of {:?} and {:?}",
            x.shape(),
            y.shape()
        )));
    }
    Ok(x.inner
        .iter()
        .zip(y.inner.iter())
        .map(|(a, b)| a.conj() * b)
        .sum())
}

/// Solves `a x = b` by LU decomposition.
pub fn lu_solve(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() || a.rows() != b.rows() {
        return Err(Error::DimensionError(format!(
            "lu_solve of {:?} with rhs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    a.inner
        .clone()
        .lu()
        .solve(&b.inner)
        .map(ComplexMatrix::from_nalgebra)
        .ok_or_else(|| Error::InvalidMatrix("matrix is singular".into()))
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::new(2, 2, vec![ZERO, -I, I, ZERO]).unwrap()
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]).unwrap()
}
