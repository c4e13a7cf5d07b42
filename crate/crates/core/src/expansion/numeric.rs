//! Numeric memory superoperators and generator assembly.
//!
//! `Σ(t) = λ∫_{t₀}^{t} 𝓖₊(t,s) 𝓠𝓛(s)𝓟 𝓤₋(s,t) ds` is evaluated on a uniform
//! grid: the time-ordered exponentials are midpoint-rule products of matrix
//! exponentials, built recursively backward from `s = t`, and the outer
//! integral uses the trapezoid rule. `Σ₁` and `Σ₂` have closed quadrature
//! forms; higher `Σ_m` are Taylor coefficients of the exact `Σ` in `λ`,
//! extracted with a trapezoid contour integral on `|λ| = r`.

use log::{info, warn};
use rayon::prelude::*;

use super::symbolic::{expand_neumann_terms, expand_pinv_terms, NcPolynomial, ScaleBy, SymbolKind};
use crate::error::{Error, Result};
use crate::linalg::{c, pinv, ComplexMatrix, C64, ONE};
use crate::superop::{
    check_hermitian, liouvillian, projector_p, projector_q, BathState, SpaceDims, SuperOperator,
};

impl ScaleBy for ComplexMatrix {
    fn scale_by(&self, s: f64) -> Self {
        self.scale_real(s)
    }
}

/// Relative `|det(I − Σ)|` below which the inverse generator is declared singular.
pub const BREAKDOWN_DET_TOL: f64 = 1e-12;

/// A system ⊗ bath model given by its interaction-picture coupling.
pub trait TclModel: Sync {
    fn dims(&self) -> SpaceDims;
    fn bath(&self) -> &BathState;
    /// `H_I(t)` on the joint space, without the coupling constant.
    fn coupling(&self, t: f64) -> ComplexMatrix;
    fn t0(&self) -> f64 {
        0.0
    }
}

/// `H_I(t) = e^{iH₀t} H_I e^{−iH₀t}` for time-independent `H₀` and `H_I`.
#[derive(Debug, Clone)]
pub struct InteractionPictureModel {
    h0: ComplexMatrix,
    h_int: ComplexMatrix,
    bath: BathState,
}

impl InteractionPictureModel {
    pub fn new(h0: ComplexMatrix, h_int: ComplexMatrix, bath: BathState) -> Result<Self> {
        check_hermitian(&h0)?;
        check_hermitian(&h_int)?;
        let n = bath.dims.joint();
        for (name, h) in [("H0", &h0), ("H_I", &h_int)] {
            if h.shape() != (n, n) {
                return Err(Error::DimensionError(format!(
                    "{name} is {:?}, joint space is {n}",
                    h.shape()
                )));
            }
        }
        Ok(Self { h0, h_int, bath })
    }

    /// Time-independent coupling (`H₀ = 0`).
    pub fn stationary(h_int: ComplexMatrix, bath: BathState) -> Result<Self> {
        let n = bath.dims.joint();
        Self::new(ComplexMatrix::zeros(n, n), h_int, bath)
    }
}

impl TclModel for InteractionPictureModel {
    fn dims(&self) -> SpaceDims {
        self.bath.dims
    }

    fn bath(&self) -> &BathState {
        &self.bath
    }

    fn coupling(&self, t: f64) -> ComplexMatrix {
        if t == 0.0 || self.h0.max_abs() == 0.0 {
            return self.h_int.clone();
        }
        let u = self.h0.scale(c(0.0, t)).expm();
        let h = &(&u * &self.h_int) * &u.adjoint();
        (&h + &h.adjoint()).scale_real(0.5)
    }
}

/// Discretization and coupling parameters for the memory superoperators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionSettings {
    pub lambda: f64,
    /// Grid steps per unit time for the time-ordered products.
    pub steps_per_unit: usize,
    pub min_steps: usize,
    /// Contour nodes for extracting `Σ_m`, `m ≥ 3`.
    pub contour_points: usize,
    pub contour_radius: f64,
}

impl Default for ExpansionSettings {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            steps_per_unit: 400,
            min_steps: 8,
            contour_points: 32,
            contour_radius: 1.0,
        }
    }
}

impl ExpansionSettings {
    pub fn with_lambda(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }

    pub fn steps_for(&self, span: f64) -> usize {
        let n = (span.abs() * self.steps_per_unit as f64).ceil() as usize;
        n.max(self.min_steps).max(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorMethod {
    Tcl,
    TclPlus,
    NonperturbativeInverse,
    NonperturbativePinv,
}

/// Exact and perturbative memory superoperators of one model.
pub struct SigmaFamily<'a, M: TclModel + ?Sized> {
    model: &'a M,
    settings: ExpansionSettings,
    p: SuperOperator,
    q: SuperOperator,
}

impl<'a, M: TclModel + ?Sized> SigmaFamily<'a, M> {
    pub fn new(model: &'a M, settings: ExpansionSettings) -> Result<Self> {
        let p = projector_p(model.bath())?;
        let q = projector_q(model.bath())?;
        Ok(Self {
            model,
            settings,
            p,
            q,
        })
    }

    pub fn settings(&self) -> &ExpansionSettings {
        &self.settings
    }

    pub fn dims(&self) -> SpaceDims {
        self.model.dims()
    }

    pub fn p(&self) -> &SuperOperator {
        &self.p
    }

    pub fn q(&self) -> &SuperOperator {
        &self.q
    }

    /// `𝓛(t) = −i[H_I(t), ·]`.
    pub fn liouvillian_at(&self, t: f64) -> Result<SuperOperator> {
        liouvillian(&self.model.coupling(t), self.model.dims())
    }

    /// Exact `Σ(t)` at the configured coupling.
    pub fn exact(&self, t: f64) -> Result<SuperOperator> {
        let steps = self.settings.steps_for(t - self.model.t0());
        self.exact_with_steps(t, steps)
    }

    pub fn exact_with_steps(&self, t: f64, steps: usize) -> Result<SuperOperator> {
        let mat = self.exact_matrix(c(self.settings.lambda, 0.0), t, steps)?;
        SuperOperator::new(self.dims(), mat)
    }

    /// `Σ(t)` for a complex coupling, as a vectorized matrix.
    pub fn exact_matrix(&self, lambda: C64, t: f64, steps: usize) -> Result<ComplexMatrix> {
        let t0 = self.model.t0();
        let n = self.dims().liouville();
        if t < t0 {
            return Err(Error::InvalidConfig(format!("t = {t} precedes t0 = {t0}")));
        }
        if t == t0 || lambda == c(0.0, 0.0) {
            return Ok(ComplexMatrix::zeros(n, n));
        }
        let steps = steps.max(2);
        let h = (t - t0) / steps as f64;
        let p = self.p.mat();
        let q = self.q.mat();
        let integrand = |s: f64, g: &ComplexMatrix, u: &ComplexMatrix| -> Result<ComplexMatrix> {
            let l = self.liouvillian_at(s)?;
            Ok(&(&(g * q) * &(l.mat() * p)) * u)
        };

        let mut g = ComplexMatrix::identity(n);
        let mut u = ComplexMatrix::identity(n);
        let mut acc = integrand(t, &g, &u)?.scale_real(0.5);
        for j in (0..steps).rev() {
            let s = t0 + j as f64 * h;
            let l_mid = self.liouvillian_at(s + 0.5 * h)?;
            let step_g = (q * l_mid.mat()).scale(lambda * h).expm();
            let step_u = l_mid.mat().scale(-lambda * h).expm();
            g = &g * &step_g;
            u = &step_u * &u;
            let w = if j == 0 { 0.5 } else { 1.0 };
            acc += &integrand(s, &g, &u)?.scale_real(w);
        }
        Ok(acc.scale(lambda * h))
    }

    /// `Σ_m(t)`, the `λᵐ` coefficient of `Σ(t)`.
    pub fn perturbative(&self, m: usize, t: f64) -> Result<SuperOperator> {
        let t0 = self.model.t0();
        let dims = self.dims();
        match m {
            0 => Err(Error::InvalidOrder {
                order: 0,
                reason: "Sigma_0 is not part of the expansion".into(),
            }),
            _ if t == t0 => SuperOperator::zero(dims),
            1 | 2 => {
                let (s1, s2) = self.first_two(t)?;
                Ok(if m == 1 { s1 } else { s2 })
            }
            _ => {
                let steps = self.settings.steps_for(t - t0);
                let mat = self.contour_coefficient(m, t, steps)?;
                SuperOperator::new(dims, mat)
            }
        }
    }

    /// `Σ₁(t) = ∫𝓠𝓛(s)𝓟 ds` and
    /// `Σ₂(t) = ∫ [𝓠𝓛(u)Σ₁(u) − Σ₁(u)𝓛(u)] du`, trapezoid on a uniform grid.
    pub fn first_two(&self, t: f64) -> Result<(SuperOperator, SuperOperator)> {
        let t0 = self.model.t0();
        let dims = self.dims();
        let n = dims.liouville();
        let steps = self.settings.steps_for(t - t0);
        let h = (t - t0) / steps as f64;
        let p = self.p.mat();
        let q = self.q.mat();

        let mut s1 = ComplexMatrix::zeros(n, n);
        let mut s2 = ComplexMatrix::zeros(n, n);
        let l0 = self.liouvillian_at(t0)?.into_mat();
        let mut prev_qlp = &(q * &l0) * p;
        let mut prev_f2 = ComplexMatrix::zeros(n, n);
        for j in 1..=steps {
            let u = t0 + j as f64 * h;
            let l = self.liouvillian_at(u)?.into_mat();
            let qlp = &(q * &l) * p;
            s1 += &(&prev_qlp + &qlp).scale_real(0.5 * h);
            let f2 = &(&(q * &l) * &s1) - &(&s1 * &l);
            s2 += &(&prev_f2 + &f2).scale_real(0.5 * h);
            prev_qlp = qlp;
            prev_f2 = f2;
        }
        Ok((SuperOperator::new(dims, s1)?, SuperOperator::new(dims, s2)?))
    }

    fn contour_coefficient(&self, m: usize, t: f64, steps: usize) -> Result<ComplexMatrix> {
        let k = self.settings.contour_points.max(2 * m + 2);
        let r = self.settings.contour_radius;
        let samples: Vec<Result<ComplexMatrix>> = (0..k)
            .into_par_iter()
            .map(|j| {
                let theta = 2.0 * std::f64::consts::PI * j as f64 / k as f64;
                let z = C64::from_polar(r, theta);
                let sigma = self.exact_matrix(z, t, steps)?;
                Ok(sigma.scale(z.powi(-(m as i32))))
            })
            .collect();
        let n = self.dims().liouville();
        let mut acc = ComplexMatrix::zeros(n, n);
        for s in samples {
            acc += &s?;
        }
        Ok(acc.scale_real(1.0 / k as f64))
    }

    /// `Σ_1 … Σ_max` at one time.
    pub fn perturbative_set(&self, max: usize, t: f64) -> Result<Vec<SuperOperator>> {
        (1..=max).map(|m| self.perturbative(m, t)).collect()
    }

    /// Evaluates a grade-homogeneous polynomial with `Σ_m ↦ sigmas[m−1]`
    /// and `Σ_m† ↦ sigmas[m−1]†`.
    pub fn evaluate_polynomial(
        &self,
        poly: &NcPolynomial,
        sigmas: &[SuperOperator],
    ) -> Result<ComplexMatrix> {
        let n = self.dims().liouville();
        let mut missing = None;
        let value = poly.evaluate(ComplexMatrix::identity(n), |sym| {
            let idx = sym.order.wrapping_sub(1);
            match (sym.kind, sigmas.get(idx)) {
                (SymbolKind::Sigma, Some(s)) => s.mat().clone(),
                (SymbolKind::SigmaDagger, Some(s)) => s.mat().adjoint(),
                (SymbolKind::P, _) => self.p.mat().clone(),
                (SymbolKind::PDagger, _) => self.p.mat().adjoint(),
                _ => {
                    missing = Some(*sym);
                    ComplexMatrix::zeros(n, n)
                }
            }
        });
        if let Some(sym) = missing {
            return Err(Error::InvalidOrder {
                order: sym.order,
                reason: format!("no value bound for symbol {sym}"),
            });
        }
        Ok(value)
    }

    /// Generator `𝓚(t)` on the joint Liouville space.
    pub fn assemble_generator(
        &self,
        method: GeneratorMethod,
        order: usize,
        t: f64,
    ) -> Result<SuperOperator> {
        let lambda = self.settings.lambda;
        let dims = self.dims();
        let n = dims.liouville();
        if lambda == 0.0 {
            return SuperOperator::zero(dims);
        }
        let l = self.liouvillian_at(t)?;
        let pl = self.p.mat() * l.mat();
        let p = self.p.mat();
        let k = match method {
            GeneratorMethod::Tcl | GeneratorMethod::TclPlus => {
                if order < 2 {
                    return Err(Error::InvalidOrder {
                        order,
                        reason: "perturbative generators start at order 2".into(),
                    });
                }
                let polys = match method {
                    GeneratorMethod::Tcl => expand_neumann_terms(order)?,
                    _ => expand_pinv_terms(order)?,
                };
                let sigmas = self.perturbative_set(order - 1, t)?;
                let mut inner = if method == GeneratorMethod::Tcl {
                    ComplexMatrix::identity(n).scale_real(lambda)
                } else {
                    ComplexMatrix::zeros(n, n)
                };
                for (i, poly) in polys.iter().enumerate().skip(1) {
                    let order_n = i + 1;
                    let value = self.evaluate_polynomial(poly, &sigmas)?;
                    inner += &value.scale_real(lambda.powi(order_n as i32));
                }
                &(&pl * &inner) * p
            }
            GeneratorMethod::NonperturbativeInverse => {
                let sigma = self.exact(t)?;
                let a = ComplexMatrix::identity(n) - sigma.mat();
                let det = a.determinant();
                if !(det.norm() >= BREAKDOWN_DET_TOL) {
                    return Err(Error::SingularGenerator {
                        time: t,
                        relative_det: det.norm(),
                    });
                }
                let inv = a.inverse()?;
                (&(&pl * &inv) * p).scale_real(lambda)
            }
            GeneratorMethod::NonperturbativePinv => {
                let sigma = self.exact(t)?;
                let a = ComplexMatrix::identity(n) - sigma.mat();
                let ap = pinv(&a)?;
                (&(&(&pl * &ap) * sigma.mat()) * p).scale_real(lambda)
            }
        };
        SuperOperator::new(dims, k)
    }

    /// `‖Σ(t)‖` along a time grid; logs the first time the norm exceeds 1.
    pub fn sigma_norm_profile(&self, times: &[f64]) -> Result<Vec<f64>> {
        let norms: Vec<f64> = times
            .par_iter()
            .map(|&t| self.exact(t).map(|s| s.operator_norm()))
            .collect::<Result<_>>()?;
        if let Some(i) = norms.iter().position(|&x| x > 1.0) {
            info!("memory superoperator norm exceeds 1 at t = {}", times[i]);
        }
        Ok(norms)
    }

    /// First grid time at which `|det(I − Σ(t))|` drops below the breakdown
    /// tolerance or changes phase through zero.
    pub fn breakdown_time(&self, times: &[f64]) -> Result<Option<f64>> {
        let n = self.dims().liouville();
        let dets: Vec<C64> = times
            .par_iter()
            .map(|&t| {
                let s = self.exact(t)?;
                Ok((ComplexMatrix::identity(n) - s.mat()).determinant())
            })
            .collect::<Result<_>>()?;
        for (i, d) in dets.iter().enumerate() {
            if d.norm() < BREAKDOWN_DET_TOL {
                warn!("I - Sigma singular at t = {}", times[i]);
                return Ok(Some(times[i]));
            }
            if i > 0 && d.re * dets[i - 1].re < 0.0 && d.im.abs() < 1e-12 * d.norm().max(1.0) {
                warn!("det(I - Sigma) changes sign near t = {}", times[i]);
                return Ok(Some(times[i]));
            }
        }
        Ok(None)
    }
}

/// `Tr_B[𝓚(ρ_S ⊗ ρ_B)]`, the reduced action of a joint generator.
pub fn reduced_action(
    k: &SuperOperator,
    bath: &BathState,
    rho_s: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    let joint = rho_s.kron(&bath.rho_b);
    crate::superop::partial_trace_bath(&k.apply(&joint)?, bath.dims)
}

/// Matrix of `ρ_S ↦ Tr_B[𝓚(ρ_S ⊗ ρ_B)]` in the vectorized system basis.
pub fn reduced_generator(k: &SuperOperator, bath: &BathState) -> Result<ComplexMatrix> {
    let ds = bath.dims.d_sys;
    let mut out = ComplexMatrix::zeros(ds * ds, ds * ds);
    let mut unit = ComplexMatrix::zeros(ds, ds);
    for j in 0..ds {
        for i in 0..ds {
            unit[(i, j)] = ONE;
            let image = reduced_action(k, bath, &unit)?;
            unit[(i, j)] = c(0.0, 0.0);
            for qq in 0..ds {
                for pp in 0..ds {
                    out[(qq * ds + pp, j * ds + i)] = image[(pp, qq)];
                }
            }
        }
    }
    Ok(out)
}
