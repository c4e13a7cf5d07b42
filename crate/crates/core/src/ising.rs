//! Qubit dephasing in a bath of `N` independent qubits.
//!
//! `H_I = σ_z ⊗ B` with the shifted operator `B = Σ g_n σ_n^z − θ I`,
//! `θ = Σ g_n β_n`, and the Gibbs reference `ρ_B = ⊗ (I + β_n σ_n^z)/2`,
//! `β_n = tanh(−Ω_n β/2)`.
//!
//! System basis: index 0 is `σ_z = +1`. Bloch components are
//! `v_x = 2 Re ρ₀₁`, `v_y = −2 Im ρ₀₁`, `v_z = ρ₀₀ − ρ₁₁`, so that
//! `(v_x + i v_y)(t) = (v_x + i v_y)(0) ⟨e^{2iλBt}⟩`.
//!
//! Writing `v_x + i v_y = f e^{−ig} (v_x + i v_y)(0)`, the TCL expansion is the
//! cumulant expansion of `ln⟨e^{2iλBt}⟩` truncated by grade:
//!
//! ```text
//! f = exp(−2Q₂λ²t² + (2/3)(Q₄ − 3Q₂²)λ⁴t⁴)
//! g = (4/3)Q₃λ³t³ − (4/15)(Q₅ − 10Q₂Q₃)λ⁵t⁵
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, ComplexMatrix, C64};

/// Largest bath handled by the basis-sum brute-force paths.
pub const MAX_BRUTE_FORCE_BATH: usize = 12;
pub const DEFAULT_COUPLING_SEED: u64 = 20_250_101;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IsingMethod {
    Exact,
    #[serde(rename = "bruteforce")]
    BruteForce,
    Tcl,
    #[serde(rename = "tclplus")]
    TclPlus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingConfig {
    pub n_bath: usize,
    pub couplings: Vec<f64>,
    /// Site energies `Ω_n`.
    pub omegas: Vec<f64>,
    /// Inverse temperature `1/k_BT`.
    pub beta: f64,
    pub lambda: f64,
    pub t_max: f64,
    pub dt: f64,
    pub order: usize,
    pub method: IsingMethod,
    pub initial_bloch: [f64; 3],
}

impl IsingConfig {
    /// Uniform `Ω_n = 1`, couplings drawn uniformly from `[0.5, 1]` with a
    /// fixed seed. The first `k` couplings are shared by every `N ≥ k`.
    pub fn with_default_couplings(n_bath: usize, beta: f64, seed: u64) -> Self {
        Self {
            n_bath,
            couplings: default_couplings(n_bath, seed),
            omegas: vec![1.0; n_bath],
            beta,
            lambda: 1.0,
            t_max: 1.5,
            dt: 1e-3,
            order: 5,
            method: IsingMethod::Exact,
            initial_bloch: [1.0, 0.0, 0.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_bath == 0 {
            return bad("n_bath must be >= 1".into());
        }
        if self.couplings.len() != self.n_bath || self.omegas.len() != self.n_bath {
            return bad(format!(
                "couplings and omegas must have length n_bath = {}, got {} and {}",
                self.n_bath,
                self.couplings.len(),
                self.omegas.len()
            ));
        }
        if self.couplings.iter().chain(&self.omegas).any(|x| !x.is_finite()) {
            return bad("couplings and omegas must be finite".into());
        }
        if !(self.beta >= 0.0) || !(self.lambda >= 0.0) {
            return bad("beta and lambda must be >= 0".into());
        }
        if !(self.dt > 0.0) || !(self.t_max > 0.0) {
            return bad(format!("dt and t_max must be > 0, got {} and {}", self.dt, self.t_max));
        }
        let norm: f64 = self.initial_bloch.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm <= 1.0 + 1e-12) {
            return bad(format!("|initial_bloch| must be <= 1, got {norm}"));
        }
        match self.method {
            IsingMethod::Tcl if ![2, 4, 5].contains(&self.order) => {
                bad(format!("order must be 2, 4 or 5, got {}", self.order))
            }
            IsingMethod::TclPlus if self.order != 5 => {
                bad("the TCL+ extra term is defined at order 5".into())
            }
            IsingMethod::BruteForce if self.n_bath > MAX_BRUTE_FORCE_BATH => {
                Err(Error::CapacityError(format!(
                    "brute-force evolution is limited to N <= {MAX_BRUTE_FORCE_BATH}, got {}",
                    self.n_bath
                )))
            }
            _ => Ok(()),
        }
    }

    /// Site polarizations `β_n = tanh(−Ω_n β/2)`.
    pub fn polarizations(&self) -> Vec<f64> {
        self.omegas.iter().map(|w| (-w * self.beta / 2.0).tanh()).collect()
    }

    pub fn steps(&self) -> usize {
        (self.t_max / self.dt).round().max(1.0) as usize
    }
}

pub fn default_couplings(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(0.5..=1.0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathMoments {
    pub theta: f64,
    /// `Q₁ … Q₅`, `Q_n = Tr[Bⁿ ρ_B]`.
    pub q: [f64; 5],
    pub tr_b: f64,
    pub tr_b2_rho2: f64,
    pub tr_brho_sq: f64,
}

impl BathMoments {
    pub fn q(&self, n: usize) -> f64 {
        self.q[n - 1]
    }
}

/// Closed-form moments: per-site central moments composed over independent
/// sites, and product-state traces.
pub fn bath_moments(cfg: &IsingConfig) -> Result<BathMoments> {
    cfg.validate_shape()?;
    let beta = cfg.polarizations();
    let theta: f64 = cfg.couplings.iter().zip(&beta).map(|(g, b)| g * b).sum();

    // raw moments of B = Σ X_n, X_n = g_n(σ_n − β_n), indices 0..=5
    let mut total = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    for (&g, &b) in cfg.couplings.iter().zip(&beta) {
        let (p_up, p_down) = ((1.0 + b) / 2.0, (1.0 - b) / 2.0);
        let mut site = [0.0; 6];
        for (k, m) in site.iter_mut().enumerate() {
            *m = g.powi(k as i32)
                * (p_up * (1.0 - b).powi(k as i32) + p_down * (-1.0 - b).powi(k as i32));
        }
        let mut next = [0.0; 6];
        for (k, slot) in next.iter_mut().enumerate() {
            *slot = (0..=k)
                .map(|j| binomial(k, j) * total[j] * site[k - j])
                .sum();
        }
        total = next;
    }
    let q = [total[1], total[2], total[3], total[4], total[5]];

    let n = cfg.n_bath as i32;
    let tr_b = -(2f64.powi(n)) * theta;

    // ρ_n² = m_n (I + b_n σ)/2 with m_n = (1 + β_n²)/2; under the normalized
    // state each site has mean δ_n and second moment (1 − β_n²)²/(2m_n)
    let mut purity = 1.0;
    let mut diag = 0.0;
    let mut mean = 0.0;
    let mut mean_sq = 0.0;
    for (&g, &b) in cfg.couplings.iter().zip(&beta) {
        let m = (1.0 + b * b) / 2.0;
        let delta = b * (1.0 - b * b) / (2.0 * m);
        purity *= m;
        diag += g * g * (1.0 - b * b).powi(2) / (2.0 * m);
        mean += g * delta;
        mean_sq += (g * delta).powi(2);
    }
    let tr_b2_rho2 = purity * (diag + mean * mean - mean_sq);

    Ok(BathMoments {
        theta,
        q,
        tr_b,
        tr_b2_rho2,
        // B and ρ_B are both diagonal
        tr_brho_sq: tr_b2_rho2,
    })
}

impl IsingConfig {
    fn validate_shape(&self) -> Result<()> {
        if self.couplings.len() != self.n_bath || self.omegas.len() != self.n_bath {
            return Err(Error::InvalidConfig(
                "couplings and omegas must have length n_bath".into(),
            ));
        }
        Ok(())
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// The same quantities by explicit sums over the `2^N` diagonal bath basis.
pub fn bath_moments_brute_force(cfg: &IsingConfig) -> Result<BathMoments> {
    cfg.validate_shape()?;
    if cfg.n_bath > MAX_BRUTE_FORCE_BATH {
        return Err(Error::CapacityError(format!(
            "basis sums are limited to N <= {MAX_BRUTE_FORCE_BATH}"
        )));
    }
    let beta = cfg.polarizations();
    let (values, probs) = diagonal_bath(cfg, &beta);
    let theta: f64 = values.iter().zip(&probs).map(|(v, p)| v * p).sum();
    let mut q = [0.0; 5];
    let (mut tr_b, mut tr_b2_rho2, mut tr_brho_sq) = (0.0, 0.0, 0.0);
    for (&v, &p) in values.iter().zip(&probs) {
        let b = v - theta;
        for (k, slot) in q.iter_mut().enumerate() {
            *slot += p * b.powi(k as i32 + 1);
        }
        tr_b += b;
        tr_b2_rho2 += b * b * p * p;
        tr_brho_sq += (b * p) * (b * p);
    }
    Ok(BathMoments {
        theta,
        q,
        tr_b,
        tr_b2_rho2,
        tr_brho_sq,
    })
}

/// Eigenvalues of `Σ g_n σ_n^z` and the Gibbs weights on the diagonal basis.
fn diagonal_bath(cfg: &IsingConfig, beta: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let dim = 1usize << cfg.n_bath;
    let mut values = Vec::with_capacity(dim);
    let mut probs = Vec::with_capacity(dim);
    for state in 0..dim {
        let (mut v, mut p) = (0.0, 1.0);
        for n in 0..cfg.n_bath {
            // bit n set ↔ site n in σ_z = −1
            let s = if state >> (cfg.n_bath - 1 - n) & 1 == 1 { -1.0 } else { 1.0 };
            v += cfg.couplings[n] * s;
            p *= (1.0 + beta[n] * s) / 2.0;
        }
        values.push(v);
        probs.push(p);
    }
    (values, probs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlochTrajectory {
    pub times: Vec<f64>,
    pub vx: Vec<f64>,
    pub vy: Vec<f64>,
    pub vz: Vec<f64>,
}

impl BlochTrajectory {
    fn from_factor(cfg: &IsingConfig, factor: impl Fn(f64) -> C64) -> Self {
        let [vx0, vy0, vz0] = cfg.initial_bloch;
        let z0 = c(vx0, vy0);
        let n = cfg.steps();
        let mut out = Self {
            times: Vec::with_capacity(n + 1),
            vx: Vec::with_capacity(n + 1),
            vy: Vec::with_capacity(n + 1),
            vz: Vec::with_capacity(n + 1),
        };
        for i in 0..=n {
            let t = i as f64 * cfg.dt;
            let z = z0 * factor(t);
            out.times.push(t);
            out.vx.push(z.re);
            out.vy.push(z.im);
            out.vz.push(vz0);
        }
        out
    }

    /// `v_x + i v_y` at sample `i`.
    pub fn transverse(&self, i: usize) -> C64 {
        c(self.vx[i], self.vy[i])
    }

    pub fn max_vx_error(&self, other: &Self) -> f64 {
        self.vx
            .iter()
            .zip(&other.vx)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_transverse_error(&self, other: &Self) -> f64 {
        (0..self.times.len().min(other.times.len()))
            .map(|i| (self.transverse(i) - other.transverse(i)).norm())
            .fold(0.0, f64::max)
    }
}

/// `⟨e^{2iλBt}⟩ = e^{−2iλθt} Π [cos(2λg_n t) + i β_n sin(2λg_n t)]`.
pub fn coherence_factor(cfg: &IsingConfig, beta: &[f64], theta: f64, t: f64) -> C64 {
    let mut z = C64::from_polar(1.0, -2.0 * cfg.lambda * theta * t);
    for (&g, &b) in cfg.couplings.iter().zip(beta) {
        let phase = 2.0 * cfg.lambda * g * t;
        z *= c(phase.cos(), b * phase.sin());
    }
    z
}

pub fn exact_dephasing(cfg: &IsingConfig) -> Result<BlochTrajectory> {
    cfg.validate_shape()?;
    let beta = cfg.polarizations();
    let theta: f64 = cfg.couplings.iter().zip(&beta).map(|(g, b)| g * b).sum();
    Ok(BlochTrajectory::from_factor(cfg, |t| {
        coherence_factor(cfg, &beta, theta, t)
    }))
}

/// Joint evolution summed over the diagonal bath basis:
/// `ρ₀₁(t) = ρ₀₁(0) Σ_b p_b e^{−2iλ(b − θ)t}`.
pub fn brute_force_dephasing(cfg: &IsingConfig) -> Result<BlochTrajectory> {
    if cfg.n_bath > MAX_BRUTE_FORCE_BATH {
        return Err(Error::CapacityError(format!(
            "brute-force evolution is limited to N <= {MAX_BRUTE_FORCE_BATH}, got {}",
            cfg.n_bath
        )));
    }
    cfg.validate_shape()?;
    let beta = cfg.polarizations();
    let (values, probs) = diagonal_bath(cfg, &beta);
    let theta: f64 = values.iter().zip(&probs).map(|(v, p)| v * p).sum();
    Ok(BlochTrajectory::from_factor(cfg, |t| {
        // ρ₀₁ picks up e^{−2iλbt}; v_x + i v_y is its conjugate
        values
            .iter()
            .zip(&probs)
            .map(|(v, p)| C64::from_polar(*p, -2.0 * cfg.lambda * (v - theta) * t))
            .sum::<C64>()
            .conj()
    }))
}

/// `(f, g)` through the requested grade.
pub fn tcl_fg(order: usize, t: f64, moments: &BathMoments, cfg: &IsingConfig) -> Result<(f64, f64)> {
    if ![2, 4, 5].contains(&order) {
        return Err(Error::InvalidOrder {
            order,
            reason: "Ising TCL is implemented at orders 2, 4 and 5".into(),
        });
    }
    let lt = cfg.lambda * t;
    let (q2, q3, q4, q5) = (moments.q(2), moments.q(3), moments.q(4), moments.q(5));
    let mut log_f = -2.0 * q2 * lt.powi(2);
    let mut g = 0.0;
    if order >= 4 {
        log_f += 2.0 / 3.0 * (q4 - 3.0 * q2 * q2) * lt.powi(4);
        g += 4.0 / 3.0 * q3 * lt.powi(3);
    }
    if order >= 5 {
        g -= 4.0 / 15.0 * (q5 - 10.0 * q2 * q3) * lt.powi(5);
    }
    Ok((log_f.exp(), g))
}

/// Phase correction from `2𝓟𝓛𝓟†𝓛𝓛𝓟𝓛𝓛𝓟`:
/// `Δg = −(4/15) Q₂ Tr[B] (Tr[B²ρ_B²] + Tr[(Bρ_B)²]) λ⁵t⁵`.
pub fn tclplus_extra_term5(moments: &BathMoments, t: f64, cfg: &IsingConfig) -> f64 {
    -4.0 / 15.0
        * moments.q(2)
        * moments.tr_b
        * (moments.tr_b2_rho2 + moments.tr_brho_sq)
        * (cfg.lambda * t).powi(5)
}

/// Reduced action of `2𝓟𝓛𝓟†𝓛𝓛𝓟𝓛𝓛𝓟` (unit coupling) on `ρ_S ⊗ ρ_B`:
/// `−16i Q₂ Tr[B](Tr[B²ρ_B²] + Tr[(Bρ_B)²]) [σ_z, ρ_S]`.
pub fn extra_string_action(moments: &BathMoments, rho_s: &ComplexMatrix) -> ComplexMatrix {
    let sz = crate::linalg::pauli_z();
    let k = moments.q(2) * moments.tr_b * (moments.tr_b2_rho2 + moments.tr_brho_sq);
    sz.commutator(rho_s).scale(c(0.0, -16.0 * k))
}

pub fn run_ising(cfg: &IsingConfig) -> Result<BlochTrajectory> {
    cfg.validate()?;
    match cfg.method {
        IsingMethod::Exact => exact_dephasing(cfg),
        IsingMethod::BruteForce => brute_force_dephasing(cfg),
        IsingMethod::Tcl | IsingMethod::TclPlus => {
            let moments = bath_moments(cfg)?;
            let plus = cfg.method == IsingMethod::TclPlus;
            Ok(BlochTrajectory::from_factor(cfg, |t| {
                let (f, mut g) = tcl_fg(cfg.order, t, &moments, cfg).expect("order validated");
                if plus {
                    g += tclplus_extra_term5(&moments, t, cfg);
                }
                C64::from_polar(f, -g)
            }))
        }
    }
}

/// Joint-space operators for explicit superoperator checks: returns
/// `(σ_z ⊗ B, ρ_B)` with dense `2^N` bath matrices.
pub fn joint_operators(cfg: &IsingConfig) -> Result<(ComplexMatrix, ComplexMatrix)> {
    cfg.validate_shape()?;
    if cfg.n_bath > 6 {
        return Err(Error::CapacityError("dense joint operators need N <= 6".into()));
    }
    let beta = cfg.polarizations();
    let (values, probs) = diagonal_bath(cfg, &beta);
    let theta: f64 = values.iter().zip(&probs).map(|(v, p)| v * p).sum();
    let b = ComplexMatrix::from_real_diagonal(&values.iter().map(|v| v - theta).collect::<Vec<_>>());
    let rho_b = ComplexMatrix::from_real_diagonal(&probs);
    Ok((crate::linalg::pauli_z().kron(&b), rho_b))
}

/// Density matrix for a Bloch vector in the `σ_z = +1` first basis.
pub fn bloch_to_density(v: [f64; 3]) -> ComplexMatrix {
    let half = 0.5;
    ComplexMatrix::new(
        2,
        2,
        vec![
            c(half * (1.0 + v[2]), 0.0),
            c(half * v[0], -half * v[1]),
            c(half * v[0], half * v[1]),
            c(half * (1.0 - v[2]), 0.0),
        ],
    )
    .expect("finite Bloch vector")
}

pub fn density_to_bloch(rho: &ComplexMatrix) -> [f64; 3] {
    [
        2.0 * rho[(0, 1)].re,
        -2.0 * rho[(0, 1)].im,
        (rho[(0, 0)] - rho[(1, 1)]).re,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ONE;
    use crate::expansion::{ExpansionSettings, GeneratorMethod, InteractionPictureModel, SigmaFamily};
    use crate::linalg::pauli_z;
    use crate::superop::{apply_liouvillian, apply_p, apply_p_adjoint, partial_trace_bath, BathState};
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};

    fn config(n: usize, beta: f64) -> IsingConfig {
        IsingConfig::with_default_couplings(n, beta, DEFAULT_COUPLING_SEED)
    }

    fn random_config(n: usize, seed: u64, beta: f64) -> IsingConfig {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        IsingConfig {
            couplings: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            omegas: (0..n).map(|_| rng.random_range(0.2..2.0)).collect(),
            ..config(n, beta)
        }
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn default_couplings_are_shared_between_sizes() {
        let small = default_couplings(4, 9);
        let large = default_couplings(15, 9);
        assert_eq!(small[..], large[..4]);
        assert!(large.iter().all(|g| (0.5..=1.0).contains(g)));
    }

    #[test]
    fn infinite_temperature_moments() {
        let cfg = config(5, 0.0);
        let m = bath_moments(&cfg).unwrap();
        let q2: f64 = cfg.couplings.iter().map(|g| g * g).sum();
        assert_eq!(m.theta, 0.0);
        assert_eq!(m.tr_b, 0.0);
        assert!((m.q(2) - q2).abs() < 1e-12);
        assert!(m.q(1).abs() < 1e-15 && m.q(3).abs() < 1e-12 && m.q(5).abs() < 1e-12);
    }

    #[test]
    fn single_site_trace() {
        let cfg = IsingConfig {
            couplings: vec![1.0],
            omegas: vec![1.3],
            beta: 0.8,
            ..config(1, 0.8)
        };
        let b1 = (-1.3f64 * 0.8 / 2.0).tanh();
        let m = bath_moments(&cfg).unwrap();
        assert!((m.tr_b + 2.0 * b1).abs() < 1e-15);
        assert!((m.tr_b2_rho2 - (1.0 - b1 * b1).powi(2) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn moments_match_basis_sums() {
        for n in 1..=10 {
            for (k, beta) in [0.0, 0.7, 3.0].into_iter().enumerate() {
                let cfg = random_config(n, 31 * n as u64 + k as u64, beta);
                let a = bath_moments(&cfg).unwrap();
                let b = bath_moments_brute_force(&cfg).unwrap();
                assert!((a.theta - b.theta).abs() < 1e-12);
                for i in 1..5 {
                    assert!((a.q[i] - b.q[i]).abs() < 1e-10 * b.q[1].abs().max(1.0), "N={n} Q{}", i + 1);
                }
                assert!(a.q[0].abs() < 1e-15 && b.q[0].abs() < 1e-12);
                if beta > 0.0 {
                    assert!(rel(a.tr_b, b.tr_b) < 1e-10);
                }
                assert!(rel(a.tr_b2_rho2, b.tr_b2_rho2) < 1e-10, "N={n}");
                assert!(rel(a.tr_brho_sq, b.tr_brho_sq) < 1e-10);
            }
        }
    }

    #[test]
    fn traces_match_dense_matrices() {
        let cfg = random_config(3, 4, 1.2);
        let m = bath_moments(&cfg).unwrap();
        let (h, rho_b) = joint_operators(&cfg).unwrap();
        let d = rho_b.rows();
        let b = ComplexMatrix::from_fn(d, d, |i, j| h[(i, j)]);
        assert!(((&b * &rho_b).trace().re).abs() < 1e-12);
        assert!(rel(b.trace().re, m.tr_b) < 1e-12);
        let rho2 = &rho_b * &rho_b;
        assert!(rel((&(&b * &b) * &rho2).trace().re, m.tr_b2_rho2) < 1e-12);
        let brho = &b * &rho_b;
        assert!(rel((&brho * &brho).trace().re, m.tr_brho_sq) < 1e-12);
    }

    #[test]
    fn exact_matches_basis_sum_evolution() {
        for n in 1..=8 {
            let cfg = IsingConfig {
                initial_bloch: [0.6, -0.3, 0.5],
                t_max: 2.0,
                dt: 0.01,
                ..random_config(n, n as u64, 0.9)
            };
            let a = exact_dephasing(&cfg).unwrap();
            let b = brute_force_dephasing(&cfg).unwrap();
            assert!(a.max_transverse_error(&b) < 1e-12);
        }
    }

    #[test]
    fn exact_limits() {
        let frozen = IsingConfig {
            lambda: 0.0,
            initial_bloch: [0.3, 0.4, 0.5],
            ..config(4, 1.0)
        };
        let traj = exact_dephasing(&frozen).unwrap();
        assert!(traj.vx.iter().all(|&x| x == 0.3) && traj.vy.iter().all(|&y| y == 0.4));

        // β_n → ∓1: pure bath, phase only
        let cold = config(4, 80.0);
        let traj = exact_dephasing(&cold).unwrap();
        for i in 0..traj.times.len() {
            assert!((traj.transverse(i).norm() - 1.0).abs() < 1e-12);
        }

        let traj = exact_dephasing(&config(4, 1.0)).unwrap();
        for i in 0..traj.times.len() {
            let v2 = traj.vx[i].powi(2) + traj.vy[i].powi(2) + traj.vz[i].powi(2);
            assert!(v2 <= 1.0 + 1e-9);
            assert_eq!(traj.vz[i], 0.0);
        }
    }

    #[test]
    fn brute_force_capacity() {
        let cfg = IsingConfig {
            method: IsingMethod::BruteForce,
            ..config(13, 1.0)
        };
        assert!(matches!(run_ising(&cfg), Err(Error::CapacityError(_))));
    }

    #[test]
    fn tcl_fg_basic_cases() {
        let cfg = config(4, 1.0);
        let m = bath_moments(&cfg).unwrap();
        for order in [2, 4, 5] {
            assert_eq!(tcl_fg(order, 0.0, &m, &cfg).unwrap(), (1.0, 0.0));
        }
        assert!(tcl_fg(3, 1.0, &m, &cfg).is_err());
        let hot = config(4, 0.0);
        let mh = bath_moments(&hot).unwrap();
        for order in [2, 4, 5] {
            assert!(tcl_fg(order, 0.7, &mh, &hot).unwrap().1.abs() < 1e-12);
        }
        assert_eq!(tcl_fg(2, 0.7, &m, &cfg).unwrap().1, 0.0);
    }

    #[test]
    fn cumulant_truncations_match_exact_taylor_series() {
        // ln⟨e^{2iλBt}⟩ − ln(f e^{−ig}) = O((λt)^{order+1})
        let cfg = random_config(5, 77, 0.8);
        let m = bath_moments(&cfg).unwrap();
        let beta = cfg.polarizations();
        for (order, power) in [(2, 3), (4, 5), (5, 6)] {
            let err = |t: f64| {
                let exact = coherence_factor(&cfg, &beta, m.theta, t).ln();
                let (f, g) = tcl_fg(order, t, &m, &cfg).unwrap();
                (exact - c(f.ln(), -g)).norm()
            };
            let (e1, e2) = (err(0.02), err(0.01));
            let observed = (e1 / e2).log2();
            assert!((observed - power as f64).abs() < 0.2, "order {order}: {observed}");
        }
    }

    #[test]
    fn extra_term_vanishes_at_infinite_temperature() {
        let cfg = config(6, 0.0);
        let m = bath_moments(&cfg).unwrap();
        assert_eq!(tclplus_extra_term5(&m, 1.3, &cfg), 0.0);
        let tcl = run_ising(&IsingConfig { method: IsingMethod::Tcl, ..cfg.clone() }).unwrap();
        let plus = run_ising(&IsingConfig { method: IsingMethod::TclPlus, ..cfg }).unwrap();
        assert_eq!(tcl, plus);
    }

    #[test]
    fn extra_term_grows_with_bath_size() {
        // identical sites: Tr[B] carries 2^N while the purity of ρ_B² brings
        // ((1 + β_n²)/2)^N, so the product grows at least like (1 + β_n²)^N
        let site = |n: usize| IsingConfig {
            couplings: vec![0.8; n],
            omegas: vec![1.0; n],
            ..config(n, 1.0)
        };
        let b1 = site(1).polarizations()[0];
        let moments = |n: usize| bath_moments(&site(n)).unwrap();
        let product = |m: &BathMoments| (m.tr_b * (m.tr_b2_rho2 + m.tr_brho_sq)).abs();
        for n in 1..6 {
            let (a, b) = (moments(n), moments(2 * n));
            assert!((b.tr_b / a.tr_b - 2.0 * 2f64.powi(n as i32)).abs() < 1e-9);
            let ratio = product(&b) / product(&a);
            assert!(ratio >= (1.0 + b1 * b1).powi(n as i32), "N={n}: {ratio}");
        }
        let cfg = config(4, 1.0);
        let m = bath_moments(&cfg).unwrap();
        let big = config(15, 1.0);
        let mb = bath_moments(&big).unwrap();
        let t = 0.5;
        assert!(tclplus_extra_term5(&mb, t, &big).abs() > 100.0 * tclplus_extra_term5(&m, t, &cfg).abs());
    }

    fn reduced(x: &ComplexMatrix, d_bath: usize) -> ComplexMatrix {
        partial_trace_bath(x, crate::superop::SpaceDims::new(2, d_bath).unwrap()).unwrap()
    }

    #[test]
    fn extra_string_matches_superoperator_composition() {
        for n in 1..=4 {
            let cfg = random_config(n, 100 + n as u64, 0.9);
            let m = bath_moments(&cfg).unwrap();
            let (h, rho_b) = joint_operators(&cfg).unwrap();
            let bath = BathState::new(2, rho_b.clone()).unwrap();
            let rho_s = bloch_to_density([0.5, 0.4, -0.2]);
            let l = |x: &ComplexMatrix| apply_liouvillian(&h, x);
            let mut x = rho_s.kron(&rho_b);
            x = apply_p(&x, &bath).unwrap();
            x = apply_p(&l(&l(&x)), &bath).unwrap();
            x = apply_p_adjoint(&l(&l(&x)), &bath).unwrap();
            x = apply_p(&l(&x), &bath).unwrap().scale_real(2.0);
            let got = reduced(&x, rho_b.rows());
            let want = extra_string_action(&m, &rho_s);
            let err = got.max_abs_diff(&want) / want.max_abs();
            assert!(err < 1e-10, "N={n}: {err}");
        }
    }

    #[test]
    fn nested_liouvillians_follow_odd_even_split() {
        let cfg = random_config(3, 5, 0.6);
        let (h, rho_b) = joint_operators(&cfg).unwrap();
        let rho_s = bloch_to_density([0.3, -0.6, 0.2]);
        let sz = pauli_z();
        let odd = sz.commutator(&rho_s).scale(c(0.0, 1.0));
        let even = &(&sz * &rho_s) * &sz - rho_s.clone();
        let mut x = rho_s.kron(&rho_b);
        for n in 1..=5 {
            x = apply_liouvillian(&h, &x);
            let r = reduced(&x, rho_b.rows());
            let basis = if n % 2 == 1 { &odd } else { &even };
            let coeff = crate::linalg::hs_inner(basis, &r).unwrap()
                / crate::linalg::hs_inner(basis, basis).unwrap();
            let residual = (&r - &basis.scale(coeff)).frobenius_norm();
            assert!(residual < 1e-10 * r.frobenius_norm().max(1.0), "n={n}");
        }
    }

    #[test]
    fn numeric_tcl_generator_reproduces_cumulant_rates() {
        // ρ̇₀₁ = −(d/dt)[ln f − i g]* ρ₀₁ through order 4
        let cfg = random_config(1, 3, 0.7);
        let (h, rho_b) = joint_operators(&cfg).unwrap();
        let model = InteractionPictureModel::stationary(h, BathState::new(2, rho_b).unwrap()).unwrap();
        let lambda = 0.6;
        let fam = SigmaFamily::new(&model, ExpansionSettings::with_lambda(lambda)).unwrap();
        let m = bath_moments(&cfg).unwrap();
        let t = 0.8;
        let (q2, q3, q4) = (m.q(2), m.q(3), m.q(4));
        let rates = [
            (2, -4.0 * q2 * lambda.powi(2) * t),
            (
                4,
                -4.0 * q2 * lambda.powi(2) * t
                    + 8.0 / 3.0 * (q4 - 3.0 * q2 * q2) * lambda.powi(4) * t.powi(3),
            ),
        ];
        let phase = [(2, 0.0), (4, 4.0 * q3 * lambda.powi(3) * t * t)];
        for ((order, re), (_, g_dot)) in rates.into_iter().zip(phase) {
            let k = fam.assemble_generator(GeneratorMethod::Tcl, order, t).unwrap();
            let mut unit = ComplexMatrix::zeros(2, 2);
            unit[(0, 1)] = ONE;
            let out = crate::expansion::reduced_action(&k, model_bath(&model), &unit).unwrap();
            // ρ₀₁ ∝ conj(f e^{−ig}) ⇒ d ln ρ₀₁/dt = ḟ/f + i ġ
            let want = c(re, g_dot);
            assert!((out[(0, 1)] - want).norm() < 1e-5 * want.norm(), "order {order}: {} vs {want}", out[(0, 1)]);
            assert!(out[(1, 0)].norm() < 1e-10 && out[(0, 0)].norm() < 1e-10);
        }
    }

    fn model_bath(model: &InteractionPictureModel) -> &BathState {
        use crate::expansion::TclModel;
        model.bath()
    }

    #[test]
    fn amplitude_is_shared_by_tcl5_and_tclplus5() {
        let cfg = config(4, 1.0);
        let tcl = run_ising(&IsingConfig { method: IsingMethod::Tcl, ..cfg.clone() }).unwrap();
        let plus = run_ising(&IsingConfig { method: IsingMethod::TclPlus, ..cfg }).unwrap();
        for i in 0..tcl.times.len() {
            assert!((tcl.transverse(i).norm() - plus.transverse(i).norm()).abs() < 1e-12);
        }
        assert!(tcl.max_vx_error(&plus) > 1e-3);
    }

    #[test]
    fn bloch_density_round_trip() {
        let v = [0.2, -0.5, 0.7];
        let back = density_to_bloch(&bloch_to_density(v));
        for k in 0..3 {
            assert!((back[k] - v[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn config_validation() {
        let good = config(3, 1.0);
        assert!(good.validate().is_ok());
        assert!(IsingConfig { couplings: vec![1.0], ..good.clone() }.validate().is_err());
        assert!(IsingConfig { initial_bloch: [1.0, 0.5, 0.0], ..good.clone() }.validate().is_err());
        assert!(IsingConfig { method: IsingMethod::TclPlus, order: 4, ..good.clone() }.validate().is_err());
        assert!(IsingConfig { method: IsingMethod::Tcl, order: 3, ..good }.validate().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn vz_is_constant_and_amplitude_bounded(
            seed in 0u64..1000,
            n in 1usize..7,
            beta in 0.0f64..5.0,
            vz in -0.9f64..0.9,
        ) {
            let cfg = IsingConfig {
                initial_bloch: [(1.0 - vz * vz).sqrt(), 0.0, vz],
                t_max: 1.0,
                dt: 0.05,
                ..random_config(n, seed, beta)
            };
            for method in [IsingMethod::Exact, IsingMethod::Tcl, IsingMethod::TclPlus] {
                let traj = run_ising(&IsingConfig { method, ..cfg.clone() }).unwrap();
                prop_assert!(traj.vz.iter().all(|&z| z == vz));
            }
            let exact = exact_dephasing(&cfg).unwrap();
            for i in 0..exact.times.len() {
                prop_assert!(exact.transverse(i).norm() <= (1.0 - vz * vz).sqrt() + 1e-12);
            }
        }
    }
}
