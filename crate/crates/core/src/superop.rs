//! Superoperators on a system ⊗ bath Hilbert space.
//!
//! Operators are vectorized by column stacking, `vec(X)[j·n + i] = X[i][j]`,
//! so `vec(A X B) = (Bᵀ ⊗ A) vec(X)`. Joint indices are system-major:
//! `(s, b) ↦ s·d_bath + b`.
//!
//! Explicit superoperator matrices are limited to joint dimension
//! [`MAX_MATERIALIZED_DIM`]; the `apply_*` functions act directly on operators
//! and have no size limit.

use crate::error::{Error, Result};
use crate::linalg::{operator_norm, ComplexMatrix, C64, I, ZERO};

/// Largest joint Hilbert-space dimension for which superoperators are stored
/// as dense matrices.
pub const MAX_MATERIALIZED_DIM: usize = 64;

/// Hermiticity tolerance for Hamiltonians.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Tolerance on trace and Hermiticity of a bath reference state.
pub const STATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpaceDims {
    pub d_sys: usize,
    pub d_bath: usize,
}

impl SpaceDims {
    pub fn new(d_sys: usize, d_bath: usize) -> Result<Self> {
        if d_sys == 0 || d_bath == 0 {
            return Err(Error::DimensionError(format!(
                "space dimensions must be >= 1, got ({d_sys}, {d_bath})"
            )));
        }
        Ok(Self { d_sys, d_bath })
    }

    pub fn joint(&self) -> usize {
        self.d_sys * self.d_bath
    }

    /// Dimension of the vectorized operator space.
    pub fn liouville(&self) -> usize {
        self.joint() * self.joint()
    }

    fn check_joint(&self, x: &ComplexMatrix, what: &str) -> Result<()> {
        let n = self.joint();
        if x.shape() != (n, n) {
            return Err(Error::DimensionError(format!(
                "{what}: expected {n}x{n} operator, got {:?}",
                x.shape()
            )));
        }
        Ok(())
    }
}

/// Linear map on joint-space operators, stored in the vectorized basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperOperator {
    dims: SpaceDims,
    mat: ComplexMatrix,
}

impl SuperOperator {
    pub fn new(dims: SpaceDims, mat: ComplexMatrix) -> Result<Self> {
        check_capacity(dims)?;
        let n = dims.liouville();
        if mat.shape() != (n, n) {
            return Err(Error::DimensionError(format!(
                "superoperator on {dims:?} needs a {n}x{n} matrix, got {:?}",
                mat.shape()
            )));
        }
        Ok(Self { dims, mat })
    }

    /// Materializes a linear map by applying it to the matrix units `|i⟩⟨j|`.
    pub fn from_action(
        dims: SpaceDims,
        mut f: impl FnMut(&ComplexMatrix) -> ComplexMatrix,
    ) -> Result<Self> {
        check_capacity(dims)?;
        let n = dims.joint();
        let mut mat = ComplexMatrix::zeros(n * n, n * n);
        let mut unit = ComplexMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..n {
                unit[(i, j)] = C64::new(1.0, 0.0);
                let image = f(&unit);
                unit[(i, j)] = ZERO;
                let col = j * n + i;
                for q in 0..n {
                    for p in 0..n {
                        mat[(q * n + p, col)] = image[(p, q)];
                    }
                }
            }
        }
        Ok(Self { dims, mat })
    }

    pub fn zero(dims: SpaceDims) -> Result<Self> {
        check_capacity(dims)?;
        let n = dims.liouville();
        Ok(Self {
            dims,
            mat: ComplexMatrix::zeros(n, n),
        })
    }

    pub fn identity(dims: SpaceDims) -> Result<Self> {
        check_capacity(dims)?;
        Ok(Self {
            dims,
            mat: ComplexMatrix::identity(dims.liouville()),
        })
    }

    pub fn dims(&self) -> SpaceDims {
        self.dims
    }

    pub fn mat(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_mat(self) -> ComplexMatrix {
        self.mat
    }

    /// Applies the map to an operator on the joint space.
    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.dims.check_joint(x, "SuperOperator::apply")?;
        let v = vectorize(x)?;
        devectorize(&self.mat.apply(&v), self.dims.joint())
    }

    /// Composition `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.dims, other.dims, "composing superoperators on different spaces");
        Self {
            dims: self.dims,
            mat: &self.mat * &other.mat,
        }
    }

    /// Adjoint with respect to the Hilbert-Schmidt inner product.
    pub fn adjoint(&self) -> Self {
        Self {
            dims: self.dims,
            mat: self.mat.adjoint(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            dims: self.dims,
            mat: self.mat.scale(s),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dims, other.dims);
        Self {
            dims: self.dims,
            mat: &self.mat + &other.mat,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dims, other.dims);
        Self {
            dims: self.dims,
            mat: &self.mat - &other.mat,
        }
    }

    pub fn operator_norm(&self) -> f64 {
        operator_norm(&self.mat)
    }
}

fn check_capacity(dims: SpaceDims) -> Result<()> {
    if dims.joint() > MAX_MATERIALIZED_DIM {
        return Err(Error::CapacityError(format!(
            "joint dimension {} exceeds the dense superoperator limit {MAX_MATERIALIZED_DIM}",
            dims.joint()
        )));
    }
    Ok(())
}

/// Reference state of the bath together with the space it lives in.
#[derive(Debug, Clone, PartialEq)]
pub struct BathState {
    pub dims: SpaceDims,
    pub rho_b: ComplexMatrix,
}

impl BathState {
    pub fn new(d_sys: usize, rho_b: ComplexMatrix) -> Result<Self> {
        let dims = SpaceDims::new(d_sys, rho_b.rows())?;
        if !rho_b.is_square() {
            return Err(Error::DimensionError("bath state must be square".into()));
        }
        let tr = rho_b.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > STATE_TOL {
            return Err(Error::InvalidMatrix(format!("bath state has trace {tr}")));
        }
        if rho_b.hermiticity_defect() > STATE_TOL {
            return Err(Error::InvalidMatrix("bath state is not Hermitian".into()));
        }
        let min_eig = rho_b
            .eigenvalues()
            .iter()
            .map(|z| z.re)
            .fold(f64::INFINITY, f64::min);
        if min_eig < -1e-10 {
            return Err(Error::InvalidMatrix(format!(
                "bath state has negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(Self { dims, rho_b })
    }

    /// `|ψ⟩⟨ψ|` for a normalized vector.
    pub fn pure(d_sys: usize, psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidMatrix("zero state vector".into()));
        }
        let n = psi.len();
        let rho = ComplexMatrix::from_fn(n, n, |i, j| psi[i] * psi[j].conj() / (norm * norm));
        Self::new(d_sys, rho)
    }

    /// Gibbs state `e^{−βH}/Z` of a Hermitian bath Hamiltonian.
    pub fn gibbs(d_sys: usize, h_b: &ComplexMatrix, beta: f64) -> Result<Self> {
        check_hermitian(h_b)?;
        let shift = h_b
            .eigenvalues()
            .iter()
            .map(|z| z.re)
            .fold(f64::INFINITY, f64::min);
        let shifted = h_b - &ComplexMatrix::identity(h_b.rows()).scale_real(shift);
        let w = shifted.scale_real(-beta).expm();
        let z = w.trace().re;
        let mut rho = w.scale_real(1.0 / z);
        rho = (&rho + &rho.adjoint()).scale_real(0.5);
        Self::new(d_sys, rho)
    }

    /// Whether `ρ_B² = ρ_B` within `tol`.
    pub fn is_pure(&self, tol: f64) -> bool {
        (&self.rho_b * &self.rho_b).max_abs_diff(&self.rho_b) <= tol
    }
}

pub fn check_hermitian(h: &ComplexMatrix) -> Result<()> {
    if !h.is_square() {
        return Err(Error::DimensionError(format!(
            "Hamiltonian must be square, got {:?}",
            h.shape()
        )));
    }
    let deviation = h.hermiticity_defect();
    if deviation > HERMITIAN_TOL {
        return Err(Error::InvalidHamiltonian { deviation });
    }
    Ok(())
}

/// Column-stacking vectorization.
pub fn vectorize(x: &ComplexMatrix) -> Result<Vec<C64>> {
    if !x.is_square() {
        return Err(Error::DimensionError(format!(
            "vectorize expects a square matrix, got {:?}",
            x.shape()
        )));
    }
    let n = x.rows();
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            out.push(x[(i, j)]);
        }
    }
    Ok(out)
}

/// Inverse of [`vectorize`] for an `n × n` operator.
pub fn devectorize(v: &[C64], n: usize) -> Result<ComplexMatrix> {
    if v.len() != n * n {
        return Err(Error::DimensionError(format!(
            "cannot reshape {} entries into {n}x{n}",
            v.len()
        )));
    }
    Ok(ComplexMatrix::from_fn(n, n, |i, j| v[j * n + i]))
}

/// `𝓛 = −i[h, ·]`.
pub fn liouvillian(h: &ComplexMatrix, dims: SpaceDims) -> Result<SuperOperator> {
    commutator_superop(h, dims, -I)
}

/// `𝓛† = +i[h, ·]`.
pub fn liouvillian_adjoint(h: &ComplexMatrix, dims: SpaceDims) -> Result<SuperOperator> {
    commutator_superop(h, dims, I)
}

fn commutator_superop(h: &ComplexMatrix, dims: SpaceDims, factor: C64) -> Result<SuperOperator> {
    check_hermitian(h)?;
    dims.check_joint(h, "liouvillian")?;
    check_capacity(dims)?;
    let n = dims.joint();
    let id = ComplexMatrix::identity(n);
    let mat = (id.kron(h) - h.transpose().kron(&id)).scale(factor);
    SuperOperator::new(dims, mat)
}

/// `Tr_B[x]` for `x` on the joint space.
pub fn partial_trace_bath(x: &ComplexMatrix, dims: SpaceDims) -> Result<ComplexMatrix> {
    dims.check_joint(x, "partial_trace_bath")?;
    let (ds, db) = (dims.d_sys, dims.d_bath);
    Ok(ComplexMatrix::from_fn(ds, ds, |s, t| {
        (0..db).map(|b| x[(s * db + b, t * db + b)]).sum()
    }))
}

/// `Tr_S[x]` for `x` on the joint space.
pub fn partial_trace_sys(x: &ComplexMatrix, dims: SpaceDims) -> Result<ComplexMatrix> {
    dims.check_joint(x, "partial_trace_sys")?;
    let (ds, db) = (dims.d_sys, dims.d_bath);
    Ok(ComplexMatrix::from_fn(db, db, |b, c| {
        (0..ds).map(|s| x[(s * db + b, s * db + c)]).sum()
    }))
}

/// `𝓛x = −i[h, x]` without materializing a superoperator.
pub fn apply_liouvillian(h: &ComplexMatrix, x: &ComplexMatrix) -> ComplexMatrix {
    h.commutator(x).scale(-I)
}

/// `𝓛†x = +i[h, x]`.
pub fn apply_liouvillian_adjoint(h: &ComplexMatrix, x: &ComplexMatrix) -> ComplexMatrix {
    h.commutator(x).scale(I)
}

/// `𝓟x = Tr_B[x] ⊗ ρ_B`.
pub fn apply_p(x: &ComplexMatrix, bath: &BathState) -> Result<ComplexMatrix> {
    Ok(partial_trace_bath(x, bath.dims)?.kron(&bath.rho_b))
}

/// `𝓟†x = Tr_B[x (I_S ⊗ ρ_B)] ⊗ I_B`.
pub fn apply_p_adjoint(x: &ComplexMatrix, bath: &BathState) -> Result<ComplexMatrix> {
    let dims = bath.dims;
    dims.check_joint(x, "apply_p_adjoint")?;
    let (ds, db) = (dims.d_sys, dims.d_bath);
    // Tr_B[x (I ⊗ ρ_B)]_{s,t} = Σ_{b,c} x[(s,b),(t,c)] ρ_B[c,b]
    let reduced = ComplexMatrix::from_fn(ds, ds, |s, t| {
        let mut acc = ZERO;
        for b in 0..db {
            for cc in 0..db {
                acc += x[(s * db + b, t * db + cc)] * bath.rho_b[(cc, b)];
            }
        }
        acc
    });
    Ok(reduced.kron(&ComplexMatrix::identity(db)))
}

/// `𝓠x = x − 𝓟x`.
pub fn apply_q(x: &ComplexMatrix, bath: &BathState) -> Result<ComplexMatrix> {
    Ok(x - &apply_p(x, bath)?)
}

pub fn projector_p(bath: &BathState) -> Result<SuperOperator> {
    SuperOperator::from_action(bath.dims, |x| apply_p(x, bath).expect("dims checked"))
}

pub fn projector_p_adjoint(bath: &BathState) -> Result<SuperOperator> {
    SuperOperator::from_action(bath.dims, |x| {
        apply_p_adjoint(x, bath).expect("dims checked")
    })
}

pub fn projector_q(bath: &BathState) -> Result<SuperOperator> {
    let p = projector_p(bath)?;
    Ok(SuperOperator::identity(bath.dims)?.sub(&p))
}

/// Operator norms of the projected-Liouvillian products.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlpReport {
    /// `‖𝓟𝓛𝓟‖`
    pub p_l_p: f64,
    /// `‖𝓟†𝓛†𝓟†‖`
    pub pdag_ldag_pdag: f64,
    /// `‖𝓟†𝓛𝓟‖`
    pub pdag_l_p: f64,
    /// `‖𝓟𝓛𝓟†‖`
    pub p_l_pdag: f64,
}

pub fn plp_relations_check(h: &ComplexMatrix, bath: &BathState) -> Result<PlpReport> {
    let l = liouvillian(h, bath.dims)?;
    let ld = liouvillian_adjoint(h, bath.dims)?;
    let p = projector_p(bath)?;
    let pd = projector_p_adjoint(bath)?;
    Ok(PlpReport {
        p_l_p: p.compose(&l).compose(&p).operator_norm(),
        pdag_ldag_pdag: pd.compose(&ld).compose(&pd).operator_norm(),
        pdag_l_p: pd.compose(&l).compose(&p).operator_norm(),
        p_l_pdag: p.compose(&l).compose(&pd).operator_norm(),
    })
}
