//! Jaynes-Cummings qubit coupled to a Lorentzian bosonic bath.
//!
//! System basis: index 0 is the ground state, index 1 the excited state, and
//! `σ₊ = |1⟩⟨0|`. The bath correlation function at resonance is
//! `f(τ) = (γ₀ν/2) e^{−ν|τ|}` and the coupling `λ` enters as `λ² f`.
//!
//! In the one-excitation sector the exact amplitude obeys
//! `ċ₁ = −λ² ∫₀ᵗ f(t−s) c₁(s) ds`. The TCL rates `Γ = γ + iS = −2ċ₁/c₁` are
//! expanded in `ε = λ²`: with `c₁ = Σ εⁿ c⁽ⁿ⁾`, `c⁽⁰⁾ = 1` and
//! `ċ⁽ⁿ⁾ = −f ∗ c⁽ⁿ⁻¹⁾`,
//!
//! ```text
//! Γ₂ = −2ċ⁽¹⁾
//! Γ₄ = −2[ċ⁽²⁾ − ċ⁽¹⁾c⁽¹⁾]
//! Γ₆ = −2[ċ⁽³⁾ − ċ⁽¹⁾c⁽²⁾ − c⁽¹⁾ċ⁽²⁾ + c⁽¹⁾²ċ⁽¹⁾]
//! ```
//!
//! All convolutions are trapezoid Volterra sums on the trajectory half-step grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::InteractionPictureModel;
use crate::linalg::{c, ComplexMatrix, C64, ONE, ZERO};
use crate::quadrature::{cumulative_trapezoid, volterra_convolution};
use crate::superop::{apply_liouvillian, apply_p, apply_p_adjoint, BathState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JcMethod {
    Exact,
    Tcl,
    #[serde(rename = "tclplus")]
    TclPlus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JcConfig {
    /// Lorentzian strength `γ₀`.
    pub gamma0: f64,
    /// System transition frequency `Ω₀`, also the Lorentzian center.
    pub omega0: f64,
    /// Lorentzian width `ν_B`.
    pub nu_b: f64,
    pub lambda: f64,
    /// Number of modes when the continuum is sampled.
    pub n_modes: usize,
    /// Truncated bath dimension `Tr[I_B]` entering the TCL+ adjoint terms.
    pub bath_dim_cutoff: usize,
    /// Half-width of the sampled band in units of `ν_B`.
    pub window: f64,
    pub t_max: f64,
    pub dt: f64,
    pub order: usize,
    pub method: JcMethod,
    /// Initial excited-state population of the pure initial state `c₀|0⟩ + c₁|1⟩`.
    pub initial_excited_population: f64,
}

impl Default for JcConfig {
    fn default() -> Self {
        Self {
            gamma0: 10.0,
            omega0: 0.0,
            nu_b: 1.0,
            lambda: 0.35,
            n_modes: 400,
            bath_dim_cutoff: 1,
            window: 12.0,
            t_max: 5.0,
            dt: 1e-3,
            order: 2,
            method: JcMethod::Exact,
            initial_excited_population: 1.0,
        }
    }
}

impl JcConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.gamma0 > 0.0) {
            return bad(format!("gamma0 must be > 0, got {}", self.gamma0));
        }
        if !(self.nu_b > 0.0) {
            return bad(format!("nu_b must be > 0, got {}", self.nu_b));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return bad(format!("lambda must be >= 0, got {}", self.lambda));
        }
        if !self.omega0.is_finite() {
            return bad("omega0 must be finite".into());
        }
        if !(self.dt > 0.0) || !(self.t_max > 0.0) {
            return bad(format!("dt and t_max must be > 0, got {} and {}", self.dt, self.t_max));
        }
        if self.n_modes == 0 {
            return bad("n_modes must be >= 1".into());
        }
        if self.bath_dim_cutoff == 0 {
            return bad("bath_dim_cutoff must be >= 1".into());
        }
        if !(self.window > 0.0) {
            return bad("window must be > 0".into());
        }
        if !(0.0..=1.0).contains(&self.initial_excited_population) {
            return bad("initial_excited_population must lie in [0, 1]".into());
        }
        if self.method != JcMethod::Exact && ![2, 4, 6].contains(&self.order) {
            return bad(format!("order must be 2, 4 or 6, got {}", self.order));
        }
        if self.method == JcMethod::TclPlus && self.order != 6 {
            return bad("the TCL+ adjoint terms are defined at order 6".into());
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_max / self.dt).round().max(1.0) as usize
    }

    fn amplitudes0(&self) -> (f64, f64) {
        let p = self.initial_excited_population;
        ((1.0 - p).sqrt(), p.sqrt())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JcTrajectory {
    pub times: Vec<f64>,
    pub rho11: Vec<f64>,
    /// `ρ₀₁ = ⟨0|ρ|1⟩`.
    pub coherence: Vec<C64>,
    /// Time at which a non-finite state appeared; the trajectory stops before it.
    pub diverged_at: Option<f64>,
}

impl JcTrajectory {
    pub fn density_matrix(&self, i: usize) -> ComplexMatrix {
        let p = self.rho11[i];
        let coh = self.coherence[i];
        ComplexMatrix::new(2, 2, vec![c(1.0 - p, 0.0), coh, coh.conj(), c(p, 0.0)])
            .expect("finite state")
    }

    /// `max_t |ρ₁₁ − ρ₁₁'|` over the common prefix.
    pub fn max_population_error(&self, other: &Self) -> f64 {
        self.rho11
            .iter()
            .zip(&other.rho11)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `f(τ) = ∫dω J(ω) e^{i(Ω₀−ω)τ}` for the Lorentzian `J` centered on `Ω₀`.
pub fn bath_correlation(tau: f64, cfg: &JcConfig) -> C64 {
    c(0.5 * cfg.gamma0 * cfg.nu_b * (-cfg.nu_b * tau.abs()).exp(), 0.0)
}

/// Lorentzian spectral density `J(ω) = (γ₀/2π) / (1 + ((ω − Ω₀)/ν)²)`.
pub fn spectral_density(omega: f64, cfg: &JcConfig) -> f64 {
    let x = (omega - cfg.omega0) / cfg.nu_b;
    cfg.gamma0 / (2.0 * std::f64::consts::PI) / (1.0 + x * x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathMode {
    pub omega: f64,
    pub g: f64,
}

/// Midpoint sampling of `J` on `Ω₀ ± W·ν_B` with `g_k² = J(ω_k) Δω`.
pub fn discretize_bath(cfg: &JcConfig) -> Vec<BathMode> {
    let n = cfg.n_modes;
    let width = 2.0 * cfg.window * cfg.nu_b;
    let dw = width / n as f64;
    (0..n)
        .map(|k| {
            let omega = cfg.omega0 - cfg.window * cfg.nu_b + (k as f64 + 0.5) * dw;
            BathMode {
                omega,
                g: (spectral_density(omega, cfg) * dw).sqrt(),
            }
        })
        .collect()
}

/// `Σ_k g_k² e^{i(Ω₀−ω_k)τ}`.
pub fn discrete_correlation(modes: &[BathMode], omega0: f64, tau: f64) -> C64 {
    modes
        .iter()
        .map(|m| C64::from_polar(m.g * m.g, (omega0 - m.omega) * tau))
        .sum()
}

/// Closed-form amplitude `c₁(t)/c₁(0)` for the resonant Lorentzian,
/// `e^{−νt/2}[cosh(dt/2) + (ν/d) sinh(dt/2)]` with `d = √(ν² − 2λ²γ₀ν)`.
pub fn exact_amplitude(t: f64, cfg: &JcConfig) -> C64 {
    let nu = cfg.nu_b;
    let d = c(nu * nu - 2.0 * cfg.lambda * cfg.lambda * cfg.gamma0 * nu, 0.0).sqrt();
    let half = d * (0.5 * t);
    let ratio = if d.norm() < 1e-12 {
        // limit d → 0 of (ν/d) sinh(dt/2)
        c(nu * t / 2.0, 0.0)
    } else {
        half.sinh() * nu / d
    };
    (half.cosh() + ratio) * (-0.5 * nu * t).exp()
}

/// Exact rate `Γ = −2ċ₁/c₁` from the closed-form amplitude.
pub fn exact_rate(t: f64, cfg: &JcConfig) -> C64 {
    let nu = cfg.nu_b;
    let d2 = c(nu * nu - 2.0 * cfg.lambda * cfg.lambda * cfg.gamma0 * nu, 0.0);
    let d = d2.sqrt();
    let half = d * (0.5 * t);
    // ċ₁ e^{νt/2} = sinh(dt/2)(d² − ν²)/(2d)
    let num = if d.norm() < 1e-12 {
        c(0.25 * t * (d2.re - nu * nu), 0.0)
    } else {
        half.sinh() * (d2 - nu * nu) / (d * 2.0)
    };
    let den = exact_amplitude(t, cfg) * (0.5 * nu * t).exp();
    -2.0 * num / den
}

/// One-excitation dynamics integrated with RK4.
///
/// The memory integral of the exponential kernel is carried by an auxiliary
/// variable `z = ∫₀ᵗ e^{−ν(t−s)} c₁(s) ds`, so the integro-differential
/// equation becomes `ż = c₁ − νz`, `ċ₁ = −λ²(γ₀ν/2) z`.
pub fn exact_one_excitation(cfg: &JcConfig) -> Result<JcTrajectory> {
    cfg.validate()?;
    let n = cfg.steps();
    let dt = cfg.dt;
    let a = cfg.lambda * cfg.lambda * 0.5 * cfg.gamma0 * cfg.nu_b;
    let nu = cfg.nu_b;
    let rhs = |y: [C64; 2]| -> [C64; 2] { [-a * y[1], y[0] - nu * y[1]] };
    let (c0, c1_0) = cfg.amplitudes0();
    let mut y = [ONE, ZERO];
    let mut traj = empty_trajectory(n);
    push_amplitude(&mut traj, 0.0, y[0], c0, c1_0);
    for i in 1..=n {
        let k1 = rhs(y);
        let k2 = rhs(axpy(y, k1, 0.5 * dt));
        let k3 = rhs(axpy(y, k2, 0.5 * dt));
        let k4 = rhs(axpy(y, k3, dt));
        for j in 0..2 {
            y[j] += (k1[j] + k2[j] * 2.0 + k3[j] * 2.0 + k4[j]) * (dt / 6.0);
        }
        push_amplitude(&mut traj, i as f64 * dt, y[0], c0, c1_0);
    }
    Ok(traj)
}

fn axpy(y: [C64; 2], k: [C64; 2], h: f64) -> [C64; 2] {
    [y[0] + k[0] * h, y[1] + k[1] * h]
}

fn empty_trajectory(n: usize) -> JcTrajectory {
    JcTrajectory {
        times: Vec::with_capacity(n + 1),
        rho11: Vec::with_capacity(n + 1),
        coherence: Vec::with_capacity(n + 1),
        diverged_at: None,
    }
}

fn push_amplitude(traj: &mut JcTrajectory, t: f64, u: C64, c0: f64, c1_0: f64) {
    let c1 = u * c1_0;
    traj.times.push(t);
    traj.rho11.push(c1.norm_sqr());
    traj.coherence.push(c1.conj() * c0);
}

/// Perturbative rate components on the grid `t_i = i·h`, all per unit of the
/// matching power of `λ`.
#[derive(Debug, Clone)]
pub struct RateTable {
    pub h: f64,
    pub gamma2: Vec<C64>,
    pub gamma4: Vec<C64>,
    pub gamma6: Vec<C64>,
    /// `I(t) = ∫_{t>t₁>…>t₅>0} f(t−t₁) f(t₂−t₃) f(t₄−t₅)`.
    pub adjoint_integral: Vec<C64>,
}

impl RateTable {
    /// Builds all rate components on `[0, t_max]` with step `h`.
    pub fn new(cfg: &JcConfig, t_max: f64, h: f64) -> Self {
        let n = (t_max / h).round() as usize + 1;
        let kernel: Vec<C64> = (0..n)
            .map(|k| bath_correlation(k as f64 * h, cfg))
            .collect();
        let conv = |x: &[C64]| volterra_convolution(&kernel, x, h);
        let neg = |v: Vec<C64>| -> Vec<C64> { v.into_iter().map(|z| -z).collect() };

        let ones = vec![ONE; n];
        let dc1 = neg(conv(&ones));
        let c1 = cumulative_trapezoid(&dc1, h);
        let dc2 = neg(conv(&c1));
        let c2 = cumulative_trapezoid(&dc2, h);
        let dc3 = neg(conv(&c2));

        let gamma2 = dc1.iter().map(|&d| -2.0 * d).collect();
        let gamma4 = (0..n).map(|i| -2.0 * (dc2[i] - dc1[i] * c1[i])).collect();
        let gamma6 = (0..n)
            .map(|i| {
                -2.0 * (dc3[i] - dc1[i] * c2[i] - c1[i] * dc2[i] + c1[i] * c1[i] * dc1[i])
            })
            .collect();

        // A(t₃) = ∫₀^{t₃} F, B(t₁) = ∫₀^{t₁} (f ∗ A), I = f ∗ B
        let big_f = cumulative_trapezoid(&kernel[..n], h);
        let a = cumulative_trapezoid(&big_f, h);
        let b = cumulative_trapezoid(&conv(&a), h);
        let adjoint_integral = conv(&b);

        Self {
            h,
            gamma2,
            gamma4,
            gamma6,
            adjoint_integral,
        }
    }

    pub fn len(&self) -> usize {
        self.gamma2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma2.is_empty()
    }

    /// Cumulative `γ + iS` through the given order at grid index `i`.
    pub fn tcl_rate(&self, order: usize, lambda: f64, i: usize) -> C64 {
        let e = lambda * lambda;
        let mut r = self.gamma2[i] * e;
        if order >= 4 {
            r += self.gamma4[i] * e * e;
        }
        if order >= 6 {
            r += self.gamma6[i] * e * e * e;
        }
        r
    }

    /// Rate correction from the two sixth-order adjoint terms, `4 d_B λ⁶ I(t)`.
    pub fn adjoint_correction(&self, bath_dim: usize, lambda: f64, i: usize) -> C64 {
        self.adjoint_integral[i] * (4.0 * bath_dim as f64 * lambda.powi(6))
    }
}

/// Cumulative `(γ, S)` through `order` at time `t`.
pub fn tcl_rates(order: usize, t: f64, cfg: &JcConfig) -> Result<(f64, f64)> {
    if ![2, 4, 6].contains(&order) {
        return Err(Error::InvalidOrder {
            order,
            reason: "JC rates are implemented at orders 2, 4 and 6".into(),
        });
    }
    if t <= 0.0 {
        return Ok((0.0, 0.0));
    }
    let h = rate_step(t, cfg.dt);
    let table = RateTable::new(cfg, t, h);
    let r = table.tcl_rate(order, cfg.lambda, table.len() - 1);
    Ok((r.re, r.im))
}

/// Rate correction `γ + iS` contributed by the TCL+ adjoint terms at time `t`.
pub fn tclplus_extra_terms6(t: f64, cfg: &JcConfig, truncated_bath_dim: usize) -> Result<C64> {
    if truncated_bath_dim == 0 {
        return Err(Error::InvalidConfig("truncated bath dimension must be >= 1".into()));
    }
    if t <= 0.0 {
        return Ok(ZERO);
    }
    let h = rate_step(t, cfg.dt);
    let table = RateTable::new(cfg, t, h);
    Ok(table.adjoint_correction(truncated_bath_dim, cfg.lambda, table.len() - 1))
}

fn rate_step(t: f64, dt: f64) -> f64 {
    let n = (t / (0.5 * dt)).ceil().max(2.0);
    t / n
}

/// `K_S ρ = −(i/2)S[σ₊σ₋, ρ] + γ(σ₋ρσ₊ − ½{σ₊σ₋, ρ})` for `Γ = γ + iS`.
pub fn reduced_generator_action(rate: C64, rho: &ComplexMatrix) -> ComplexMatrix {
    let (gamma, s) = (rate.re, rate.im);
    let sp = sigma_plus();
    let sm = sp.adjoint();
    let n = &sp * &sm;
    let comm = n.commutator(rho).scale(c(0.0, -0.5 * s));
    let diss = (&(&sm * rho) * &sp) - n.anticommutator(rho).scale_real(0.5);
    comm + diss.scale_real(gamma)
}

pub fn sigma_plus() -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(2, 2);
    m[(1, 0)] = ONE;
    m
}

/// Runs one method; TCL+ uses `cfg.bath_dim_cutoff` for `Tr[I_B]`.
pub fn run_jc(cfg: &JcConfig) -> Result<JcTrajectory> {
    cfg.validate()?;
    match cfg.method {
        JcMethod::Exact => exact_one_excitation(cfg),
        JcMethod::Tcl | JcMethod::TclPlus => {
            let table = RateTable::new(cfg, cfg.steps() as f64 * cfg.dt, 0.5 * cfg.dt);
            Ok(integrate_with_rates(cfg, &table))
        }
    }
}

/// RK4 integration of `ρ̇ = K_S(t)ρ` on the `dt` grid, with rates read from
/// the half-step table.
pub fn integrate_with_rates(cfg: &JcConfig, table: &RateTable) -> JcTrajectory {
    let n = cfg.steps();
    let dt = cfg.dt;
    let rate = |i: usize| -> C64 {
        let mut r = table.tcl_rate(cfg.order, cfg.lambda, i);
        if cfg.method == JcMethod::TclPlus {
            r += table.adjoint_correction(cfg.bath_dim_cutoff, cfg.lambda, i);
        }
        r
    };
    let (c0, c1) = cfg.amplitudes0();
    let mut rho = ComplexMatrix::new(
        2,
        2,
        vec![c(c0 * c0, 0.0), c(c0 * c1, 0.0), c(c0 * c1, 0.0), c(c1 * c1, 0.0)],
    )
    .expect("finite initial state");
    let mut traj = empty_trajectory(n);
    push_state(&mut traj, 0.0, &rho);
    for i in 0..n {
        let (r0, rh, r1) = (rate(2 * i), rate(2 * i + 1), rate(2 * i + 2));
        let k1 = reduced_generator_action(r0, &rho);
        let k2 = reduced_generator_action(rh, &(&rho + &k1.scale_real(0.5 * dt)));
        let k3 = reduced_generator_action(rh, &(&rho + &k2.scale_real(0.5 * dt)));
        let k4 = reduced_generator_action(r1, &(&rho + &k3.scale_real(dt)));
        let incr = &(&k1 + &k2.scale_real(2.0)) + &(&k3.scale_real(2.0) + &k4);
        rho = &rho + &incr.scale_real(dt / 6.0);
        let t = (i + 1) as f64 * dt;
        if !rho.is_finite() {
            traj.diverged_at = Some(t);
            log::warn!("JC trajectory diverged at t = {t}");
            break;
        }
        push_state(&mut traj, t, &rho);
    }
    traj
}

fn push_state(traj: &mut JcTrajectory, t: f64, rho: &ComplexMatrix) {
    traj.times.push(t);
    traj.rho11.push(rho[(1, 1)].re);
    traj.coherence.push(rho[(0, 1)]);
}

/// Joint-space model on the bath `{|vac⟩, |1_k⟩} ⊗ C^spectator` with
/// `H₀ = Ω₀σ₊σ₋ + Σ ω_k b_k†b_k` and `H_I = σ₊⊗B + σ₋⊗B†`. The reference
/// state is the vacuum times the first spectator level.
pub fn truncated_model(
    modes: &[BathMode],
    omega0: f64,
    spectator: usize,
) -> Result<InteractionPictureModel> {
    let k = modes.len();
    let dm = k + 1;
    let d_b = dm * spectator.max(1);
    let id_s = ComplexMatrix::identity(spectator.max(1));
    let mut b = ComplexMatrix::zeros(dm, dm);
    let mut n_b = ComplexMatrix::zeros(dm, dm);
    for (j, m) in modes.iter().enumerate() {
        b[(0, j + 1)] = c(m.g, 0.0);
        n_b[(j + 1, j + 1)] = c(m.omega, 0.0);
    }
    let b = b.kron(&id_s);
    let n_b = n_b.kron(&id_s);
    let sp = sigma_plus();
    let sm = sp.adjoint();
    let h0 = (&sp * &sm).scale_real(omega0).kron(&ComplexMatrix::identity(d_b))
        + ComplexMatrix::identity(2).kron(&n_b);
    let h_int = sp.kron(&b) + sm.kron(&b.adjoint());
    let mut rho_b = ComplexMatrix::zeros(d_b, d_b);
    rho_b[(0, 0)] = ONE;
    let bath = BathState::new(2, rho_b)?;
    InteractionPictureModel::new(h0, h_int, bath)
}

/// The two sixth-order strings kept by the TCL+ generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdjointString {
    /// `𝓟𝓛𝓛𝓟𝓟†𝓛𝓛𝓟𝓛𝓛𝓟`
    WithProjectorPair,
    /// `𝓟𝓛𝓛𝓟†𝓛𝓛𝓟𝓛𝓛𝓟`
    Bare,
}

/// Applies one adjoint string to `σ₊ ⊗ ρ_B`, with the six Liouvillians at
/// `times = [t, t₁, …, t₅]` from left to right.
pub fn apply_adjoint_string(
    model: &InteractionPictureModel,
    which: AdjointString,
    times: [f64; 6],
) -> Result<ComplexMatrix> {
    use crate::expansion::TclModel;
    let bath = model.bath();
    let l = |t: f64, x: &ComplexMatrix| apply_liouvillian(&model.coupling(t), x);
    let x0 = sigma_plus().kron(&bath.rho_b);
    let mut x = apply_p(&x0, bath)?;
    x = l(times[5], &x);
    x = l(times[4], &x);
    x = apply_p(&x, bath)?;
    x = l(times[3], &x);
    x = l(times[2], &x);
    x = apply_p_adjoint(&x, bath)?;
    if which == AdjointString::WithProjectorPair {
        x = apply_p(&x, bath)?;
    }
    x = l(times[1], &x);
    x = l(times[0], &x);
    apply_p(&x, bath)
}

/// Coefficient of `σ₊ ⊗ ρ_B` in `x` and the norm of the remainder.
pub fn eigen_decompose(x: &ComplexMatrix, bath: &BathState) -> (C64, f64) {
    let basis = sigma_plus().kron(&bath.rho_b);
    let norm2: f64 = basis.to_row_major().iter().map(|z| z.norm_sqr()).sum();
    let coeff = crate::linalg::hs_inner(&basis, x).expect("same shape") / norm2;
    let residual = (x - &basis.scale(coeff)).frobenius_norm();
    (coeff, residual)
}
