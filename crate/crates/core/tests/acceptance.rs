//! Acceptance checks, one line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so every line is printed even
//! when earlier criteria fail. The process exits non-zero if any check fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tclplus_core::convergence::{
    self, single_matrix_curves, threshold_sweep, Ensemble, SeriesKind, SweepSettings,
};
use tclplus_core::expansion::{
    expand_neumann_terms, expand_pinv_terms, ExpansionSettings, NcPolynomial, SigmaFamily,
    SymbolKind, TclModel,
};
use tclplus_core::ising::{
    self, bath_moments, bloch_to_density, density_to_bloch, exact_dephasing, joint_operators,
    run_ising, IsingConfig, IsingMethod, DEFAULT_COUPLING_SEED,
};
use tclplus_core::jc::{
    self, apply_adjoint_string, discretize_bath, eigen_decompose, run_jc, sigma_plus,
    tclplus_extra_terms6, truncated_model, AdjointString, JcConfig, JcMethod,
};
use tclplus_core::linalg::{
    c, default_rtol, hs_inner, operator_norm, pauli_x, pauli_z, pinv_svd, ComplexMatrix,
    PinvSeries, C64,
};
use tclplus_core::random;
use tclplus_core::superop::{
    apply_liouvillian, apply_liouvillian_adjoint, apply_p, apply_p_adjoint, liouvillian,
    liouvillian_adjoint, partial_trace_bath, plp_relations_check, projector_p,
    projector_p_adjoint, BathState, SpaceDims, SuperOperator,
};

struct Outcome {
    pass: bool,
    detail: String,
    /// Wall-clock budget, if the criterion has one.
    budget: Option<Duration>,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Self {
            pass,
            detail,
            budget: None,
        }
    }

    fn within(mut self, secs: u64) -> Self {
        self.budget = Some(Duration::from_secs(secs));
        self
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("Israel-Charnes series reaches pinv_svd", c1_series_identity),
        ("four Moore-Penrose conditions", c2_penrose_conditions),
        ("TCL and TCL+ term tables", c3_term_tables),
        ("adjoint pairings of P and L", c4_adjoints),
        ("projected Liouvillian relations", c5_plp_relations),
        ("Ising product formula vs joint evolution", c6_ising_oracle),
        ("Ising bath traces", c7_ising_traces),
        ("Ising TCL+ frequency divergence", c8_ising_divergence),
        ("JC TCL+ growth with bath dimension", c9_jc_bath_dimension),
        ("depth-constant thresholds", c10_thresholds),
        ("JC eigenoperator property", c11_eigenoperator),
        ("weak-coupling scaling of TCL2", c12_weak_coupling),
    ];
    let mut failed = Vec::new();
    for (i, (title, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        let start = Instant::now();
        let mut out = run();
        let elapsed = start.elapsed();
        if let Some(budget) = out.budget {
            if elapsed > budget {
                out.pass = false;
                out.detail += &format!("; over the {}s budget", budget.as_secs());
            }
        }
        let status = if out.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {n:>2} {status} {title} ({:.1}s): {}",
            elapsed.as_secs_f64(),
            out.detail
        );
        if !out.pass {
            failed.push(n);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 12 criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

// 1 -------------------------------------------------------------------------

fn c1_series_identity() -> Outcome {
    const MAX_DEPTH: usize = 10_000;
    let mut rng = rng(101);
    let mut worst = 0.0f64;
    let mut deepest = 0;
    let mut failures = 0;
    for k in 0..200 {
        let rank = 5 - k % 3;
        let a = random::with_rank(5, 5, rank, &mut rng);
        let target = pinv_svd(&a, default_rtol(&a)).expect("finite matrix");
        let mut reached = None;
        for (d, partial) in PinvSeries::new(&a).take(MAX_DEPTH + 1).enumerate() {
            if d % 10 == 0 || d == MAX_DEPTH {
                let err = operator_norm(&(&partial - &target));
                if err < 1e-8 {
                    reached = Some((d, err));
                    break;
                }
            }
        }
        match reached {
            Some((d, err)) => {
                worst = worst.max(err);
                deepest = deepest.max(d);
            }
            None => failures += 1,
        }
    }
    Outcome::new(
        failures == 0,
        format!("{failures}/200 not converged by depth 10^4, deepest needed {deepest}, worst error {worst:.2e}"),
    )
    .within(30)
}

// 2 -------------------------------------------------------------------------

fn c2_penrose_conditions() -> Outcome {
    let mut rng = rng(202);
    let shapes = [(5, 5), (4, 6), (7, 3), (6, 6), (3, 8)];
    let mut worst = [0.0f64; 4];
    let mut deficient = 0;
    for k in 0..200 {
        let (m, n) = shapes[k % shapes.len()];
        let rank = rng.random_range(0..=m.min(n));
        if rank < m.min(n) {
            deficient += 1;
        }
        let a = random::with_rank(m, n, rank, &mut rng);
        let x = pinv_svd(&a, default_rtol(&a)).expect("finite matrix");
        let ax = &a * &x;
        let xa = &x * &a;
        let res = [
            (&ax * &a).max_abs_diff(&a),
            (&xa * &x).max_abs_diff(&x),
            ax.hermiticity_defect(),
            xa.hermiticity_defect(),
        ];
        for (w, r) in worst.iter_mut().zip(res) {
            *w = w.max(r);
        }
    }
    let pass = worst.iter().all(|&r| r < 1e-10);
    Outcome::new(
        pass,
        format!(
            "{deficient}/200 rank-deficient; max residuals AXA {:.1e}, XAX {:.1e}, (AX)† {:.1e}, (XA)† {:.1e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

// 3 -------------------------------------------------------------------------

fn names(p: &NcPolynomial) -> Vec<(i64, Vec<String>)> {
    p.terms().iter().map(|m| (m.coeff, m.factor_names())).collect()
}

fn list(items: &[&[&str]]) -> Vec<(i64, Vec<String>)> {
    items
        .iter()
        .map(|f| (1, f.iter().map(|s| s.to_string()).collect()))
        .collect()
}

/// Truncated product of matrix-valued power series in λ.
fn series_mul(a: &[ComplexMatrix], b: &[ComplexMatrix]) -> Vec<ComplexMatrix> {
    let n = a.len();
    let dim = a[0].rows();
    (0..n)
        .map(|g| {
            let mut acc = ComplexMatrix::zeros(dim, dim);
            for i in 0..=g {
                acc += &(&a[i] * &b[g - i]);
            }
            acc
        })
        .collect()
}

fn series_add(a: &[ComplexMatrix], b: &[ComplexMatrix]) -> Vec<ComplexMatrix> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn series_sub(a: &[ComplexMatrix], b: &[ComplexMatrix]) -> Vec<ComplexMatrix> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Grade coefficients of `Σ_k Xᵏ tail` with `X` lacking a grade-0 part.
fn geometric(x: &[ComplexMatrix], tail: &[ComplexMatrix]) -> Vec<ComplexMatrix> {
    let mut acc = tail.to_vec();
    let mut power = tail.to_vec();
    for _ in 1..x.len() {
        power = series_mul(x, &power);
        acc = series_add(&acc, &power);
    }
    acc
}

fn c3_term_tables() -> Outcome {
    let neumann = expand_neumann_terms(4).expect("order 4");
    let pinv = expand_pinv_terms(4).expect("order 4");
    let tcl_lists = [
        list(&[]),
        list(&[&["S1"]]),
        list(&[&["S1", "S1"], &["S2"]]),
        list(&[&["S1", "S1", "S1"], &["S1", "S2"], &["S2", "S1"], &["S3"]]),
    ];
    let mut lists_ok = true;
    for (n, want) in tcl_lists.iter().enumerate() {
        let mut got = names(&neumann[n]);
        let mut want = want.clone();
        got.sort();
        want.sort();
        lists_ok &= got == want;
        if n < 3 {
            lists_ok &= names(&pinv[n]) == names(&neumann[n]);
        }
    }

    // matrix substitution with independent Σ_m and Σ_m† values
    let dim = 4;
    let grades = 4;
    let mut rng = rng(303);
    let scale = 0.4;
    let mut s = vec![ComplexMatrix::zeros(dim, dim)];
    let mut t = vec![ComplexMatrix::zeros(dim, dim)];
    for _ in 1..grades {
        s.push(random::ginibre(dim, dim, &mut rng).scale_real(scale));
        t.push(random::ginibre(dim, dim, &mut rng).scale_real(scale));
    }
    let mut one = vec![ComplexMatrix::zeros(dim, dim); grades];
    one[0] = ComplexMatrix::identity(dim);
    let x = series_sub(&series_add(&t, &s), &series_mul(&t, &s));
    let tail = series_mul(&series_sub(&one, &t), &s);
    let oracle_pinv = geometric(&x, &tail);
    let oracle_neumann = geometric(&s, &s);

    let bind = |sym: &tclplus_core::expansion::NcSymbol| match sym.kind {
        SymbolKind::Sigma => s[sym.order].clone(),
        SymbolKind::SigmaDagger => t[sym.order].clone(),
        _ => unreachable!("term tables only hold memory symbols"),
    };
    let mut coeff_err = 0.0f64;
    for g in 0..grades {
        let id = ComplexMatrix::identity(dim);
        let p = pinv[g].evaluate(id.clone(), bind);
        let q = neumann[g].evaluate(id, bind);
        coeff_err = coeff_err
            .max(p.max_abs_diff(&oracle_pinv[g]))
            .max(q.max_abs_diff(&oracle_neumann[g]));
    }
    let daggered_oracle = (&oracle_pinv[3] - &oracle_neumann[3]).max_abs();
    let net_daggered = pinv[3].daggered_terms().len();
    let cancelled: Vec<String> = pinv[3]
        .cancelled()
        .iter()
        .filter(|(f, _)| f.iter().any(|s| s.is_dagger()))
        .map(|(f, tally)| {
            let names: Vec<String> = f.iter().map(|s| s.name()).collect();
            format!("{}(+{}/-{})", names.join(""), tally.positive, tally.negative)
        })
        .collect();

    let pass = lists_ok && coeff_err < 1e-10 && daggered_oracle < 1e-10 && net_daggered == 0;
    Outcome::new(
        pass,
        format!(
            "lists match {lists_ok}; polynomial vs matrix oracle {coeff_err:.1e}; order-4 daggered \
             value {daggered_oracle:.1e} with {net_daggered} net daggered terms; cancelled {}",
            cancelled.join(" ")
        ),
    )
}

// 4 -------------------------------------------------------------------------

fn c4_adjoints() -> Outcome {
    let mut rng = rng(404);
    let mut worst_p = 0.0f64;
    let mut worst_l = 0.0f64;
    let mut worst_mat = 0.0f64;
    for _ in 0..100 {
        let bath = BathState::new(2, random::density_matrix(3, &mut rng)).expect("state");
        let h = random::hermitian(6, &mut rng);
        let v = random::ginibre(6, 6, &mut rng);
        let w = random::ginibre(6, 6, &mut rng);
        let lhs = hs_inner(&apply_p(&v, &bath).unwrap(), &w).unwrap();
        let rhs = hs_inner(&v, &apply_p_adjoint(&w, &bath).unwrap()).unwrap();
        worst_p = worst_p.max((lhs - rhs).norm());
        let lhs = hs_inner(&apply_liouvillian(&h, &v), &w).unwrap();
        let rhs = hs_inner(&v, &apply_liouvillian_adjoint(&h, &w)).unwrap();
        worst_l = worst_l.max((lhs - rhs).norm());

        let p = projector_p(&bath).unwrap();
        let pd = projector_p_adjoint(&bath).unwrap();
        let l = liouvillian(&h, bath.dims).unwrap();
        let ld = liouvillian_adjoint(&h, bath.dims).unwrap();
        worst_mat = worst_mat
            .max(pd.mat().max_abs_diff(&p.adjoint().into_mat()))
            .max(ld.mat().max_abs_diff(&l.adjoint().into_mat()));
    }
    let pass = worst_p < 1e-12 && worst_l < 1e-12 && worst_mat < 1e-12;
    Outcome::new(
        pass,
        format!("max |<Pv,w> - <v,P†w>| {worst_p:.1e}, L {worst_l:.1e}, matrix forms {worst_mat:.1e}"),
    )
}

// 5 -------------------------------------------------------------------------

fn c5_plp_relations() -> Outcome {
    let mut rng = rng(505);
    let h_b = random::hermitian(3, &mut rng);
    let b = random::hermitian(3, &mut rng);
    let a = pauli_x();

    let gibbs = BathState::gibbs(2, &h_b, 1.0).expect("Gibbs state");
    let mean = (&b * &gibbs.rho_b).trace();
    let h = a.kron(&(&b - &ComplexMatrix::identity(3).scale(mean)));
    let mixed = plp_relations_check(&h, &gibbs).expect("report");

    let psi: Vec<C64> = (0..3).map(|_| random::complex_normal(&mut rng)).collect();
    let pure = BathState::pure(2, &psi).expect("pure state");
    let mean = (&b * &pure.rho_b).trace();
    let h = a.kron(&(&b - &ComplexMatrix::identity(3).scale(mean)));
    let pure_report = plp_relations_check(&h, &pure).expect("report");

    let pass = mixed.p_l_p < 1e-10
        && mixed.pdag_ldag_pdag < 1e-10
        && mixed.pdag_l_p > 1e-3
        && pure_report.p_l_p < 1e-10
        && pure_report.pdag_ldag_pdag < 1e-10
        && pure_report.pdag_l_p < 1e-10;
    Outcome::new(
        pass,
        format!(
            "Gibbs: |PLP| {:.1e}, |P†L†P†| {:.1e}, |P†LP| {:.3}; pure: |PLP| {:.1e}, |P†L†P†| {:.1e}, |P†LP| {:.1e}",
            mixed.p_l_p,
            mixed.pdag_ldag_pdag,
            mixed.pdag_l_p,
            pure_report.p_l_p,
            pure_report.pdag_ldag_pdag,
            pure_report.pdag_l_p
        ),
    )
}

// 6 -------------------------------------------------------------------------

fn c6_ising_oracle() -> Outcome {
    let mut worst = 0.0f64;
    for n in 1..=6 {
        for beta in [0.0, 1.0, 3.0] {
            let mut cfg = IsingConfig::with_default_couplings(n, beta, DEFAULT_COUPLING_SEED);
            cfg.dt = 0.05;
            cfg.initial_bloch = [0.6, -0.3, 0.5];
            let exact = exact_dephasing(&cfg).expect("valid config");
            let (h, rho_b) = joint_operators(&cfg).expect("dense operators");
            let dims = SpaceDims::new(2, rho_b.rows()).unwrap();
            let step = h.scale(c(0.0, -cfg.lambda * cfg.dt)).expm();
            let step_dag = step.adjoint();
            let mut rho = bloch_to_density(cfg.initial_bloch).kron(&rho_b);
            for i in 0..exact.times.len() {
                if i > 0 {
                    rho = &(&step * &rho) * &step_dag;
                }
                let v = density_to_bloch(&partial_trace_bath(&rho, dims).unwrap());
                worst = worst
                    .max((v[0] - exact.vx[i]).abs())
                    .max((v[1] - exact.vy[i]).abs())
                    .max((v[2] - exact.vz[i]).abs());
            }
        }
    }
    Outcome::new(
        worst < 1e-10,
        format!("N = 1..6, beta in {{0, 1, 3}}: max abs Bloch error {worst:.1e}"),
    )
    .within(10)
}

// 7 -------------------------------------------------------------------------

/// `Σ g_n σ_n^z` and the product Gibbs state as dense `2^N` matrices.
fn dense_bath(cfg: &IsingConfig) -> (ComplexMatrix, ComplexMatrix) {
    let beta = cfg.polarizations();
    let id = ComplexMatrix::identity(2);
    let sz = pauli_z();
    let dim = 1 << cfg.n_bath;
    let mut b = ComplexMatrix::zeros(dim, dim);
    let mut rho = ComplexMatrix::identity(1);
    for n in 0..cfg.n_bath {
        let mut site = ComplexMatrix::identity(1);
        for k in 0..cfg.n_bath {
            site = site.kron(if k == n { &sz } else { &id });
        }
        b += &site.scale_real(cfg.couplings[n]);
        let local = (&id + &sz.scale_real(beta[n])).scale_real(0.5);
        rho = rho.kron(&local);
    }
    (b, rho)
}

fn c7_ising_traces() -> Outcome {
    let mut worst = 0.0f64;
    let mut commute = 0.0f64;
    for n in 1..=4 {
        for beta in [0.3, 1.0, 2.5] {
            let mut cfg = IsingConfig::with_default_couplings(n, beta, DEFAULT_COUPLING_SEED);
            cfg.omegas = (0..n).map(|k| 0.7 + 0.2 * k as f64).collect();
            let m = bath_moments(&cfg).expect("moments");
            let (b_raw, rho) = dense_bath(&cfg);
            let theta = (&b_raw * &rho).trace().re;
            let b = &b_raw - &ComplexMatrix::identity(rho.rows()).scale_real(theta);
            let b2r2 = (&(&b * &b) * &(&rho * &rho)).trace().re;
            let br = &b * &rho;
            let brsq = (&br * &br).trace().re;
            worst = worst
                .max(rel_err(m.theta, theta))
                .max(rel_err(m.tr_b, b.trace().re))
                .max(rel_err(m.tr_b2_rho2, b2r2))
                .max(rel_err(m.tr_brho_sq, brsq));
            commute = commute.max(rel_err(b2r2, brsq));
        }
    }
    Outcome::new(
        worst < 1e-10 && commute < 1e-12,
        format!("N <= 4: max rel err {worst:.1e}; Tr[B²ρ²] vs Tr[(Bρ)²] {commute:.1e}"),
    )
}

// 8 -------------------------------------------------------------------------

fn ising_run(n: usize, beta: f64, method: IsingMethod) -> ising::BlochTrajectory {
    let mut cfg = IsingConfig::with_default_couplings(n, beta, DEFAULT_COUPLING_SEED);
    cfg.method = method;
    run_ising(&cfg).expect("valid config")
}

fn c8_ising_divergence() -> Outcome {
    let cells = [(4, 1.0), (4, 10.0), (15, 1.0), (15, 10.0)];
    let mut plus = Vec::new();
    let mut tcl = Vec::new();
    let mut amplitude = 0.0f64;
    for &(n, beta) in &cells {
        let exact = ising_run(n, beta, IsingMethod::Exact);
        let t5 = ising_run(n, beta, IsingMethod::Tcl);
        let p5 = ising_run(n, beta, IsingMethod::TclPlus);
        tcl.push(t5.max_vx_error(&exact));
        plus.push(p5.max_vx_error(&exact));
        for i in 0..t5.times.len() {
            amplitude = amplitude.max((t5.transverse(i).norm() - p5.transverse(i).norm()).abs());
        }
    }
    // index pairs differing only in beta, then only in N
    let in_beta = plus[0] < plus[1] && plus[2] < plus[3];
    let in_n = plus[0] < plus[2] && plus[1] < plus[3];
    let below = tcl.iter().zip(&plus).all(|(a, b)| a < b);
    let pass = in_beta && in_n && below && amplitude < 1e-12;
    let cells_text: Vec<String> = cells
        .iter()
        .zip(tcl.iter().zip(&plus))
        .map(|(&(n, b), (t, p))| format!("(N={n},β={b}) TCL5 {t:.3e} TCL+5 {p:.3e}"))
        .collect();
    Outcome::new(
        pass,
        format!(
            "{}; increasing in β {in_beta}, in N {in_n}; TCL5 below TCL+5 everywhere {below}; amplitude diff {amplitude:.1e}",
            cells_text.join(", ")
        ),
    )
    .within(60)
}

// 9 -------------------------------------------------------------------------

fn jc_error(method: JcMethod, order: usize, bath_dim: usize, exact: &jc::JcTrajectory) -> f64 {
    let cfg = JcConfig {
        method,
        order,
        bath_dim_cutoff: bath_dim,
        ..JcConfig::default()
    };
    run_jc(&cfg).expect("valid config").max_population_error(exact)
}

fn c9_jc_bath_dimension() -> Outcome {
    let exact = run_jc(&JcConfig::default()).expect("exact");
    let dims = [1, 3, 7];
    let plus: Vec<f64> = dims
        .iter()
        .map(|&d| jc_error(JcMethod::TclPlus, 6, d, &exact))
        .collect();
    let increasing = plus[0] < plus[1] && plus[1] < plus[2];

    let mut independent = true;
    let mut tcl_errors = Vec::new();
    for order in [2, 6] {
        let errs: Vec<f64> = dims
            .iter()
            .map(|&d| jc_error(JcMethod::Tcl, order, d, &exact))
            .collect();
        independent &= errs.iter().all(|&e| e == errs[0]);
        tcl_errors.push(errs[0]);
    }

    // rate-level and superoperator-level doubling of Tr[I_B]
    let cfg = JcConfig::default();
    let mut doubling = 0.0f64;
    for t in [0.5, 1.7, 3.2] {
        for d in [1, 3, 7] {
            let a = tclplus_extra_terms6(t, &cfg, d).expect("term");
            let b = tclplus_extra_terms6(t, &cfg, 2 * d).expect("term");
            doubling = doubling.max((b / a - c(2.0, 0.0)).norm() / 2.0);
        }
    }
    let modes = discretize_bath(&JcConfig {
        n_modes: 2,
        window: 2.0,
        ..JcConfig::default()
    });
    let times = [1.3, 1.1, 0.8, 0.5, 0.35, 0.1];
    for which in [AdjointString::WithProjectorPair, AdjointString::Bare] {
        for m in [1, 2] {
            let small = truncated_model(&modes, cfg.omega0, m).expect("model");
            let large = truncated_model(&modes, cfg.omega0, 2 * m).expect("model");
            let (a, _) = eigen_decompose(
                &apply_adjoint_string(&small, which, times).unwrap(),
                small.bath(),
            );
            let (b, _) = eigen_decompose(
                &apply_adjoint_string(&large, which, times).unwrap(),
                large.bath(),
            );
            doubling = doubling.max((b / a - c(2.0, 0.0)).norm() / 2.0);
        }
    }

    let pass = increasing && independent && doubling < 1e-6;
    Outcome::new(
        pass,
        format!(
            "TCL+6 errors for dims 1/3/7: {:.4e} / {:.4e} / {:.4e}; TCL2 {:.4e} and TCL6 {:.4e} \
             independent of dims {independent}; doubling rel err {doubling:.1e}",
            plus[0], plus[1], plus[2], tcl_errors[0], tcl_errors[1]
        ),
    )
    .within(300)
}

// 10 ------------------------------------------------------------------------

fn bracket_text(b: &[(f64, f64)]) -> String {
    let parts: Vec<String> = b.iter().map(|(x, y)| format!("({x:.2}, {y:.2})")).collect();
    format!("[{}]", parts.join(" "))
}

fn inside(b: &[(f64, f64)], lo: f64, hi: f64) -> bool {
    let tol = 1e-9;
    b.len() == 1 && b[0].0 >= lo - tol && b[0].1 <= hi + tol
}

fn c10_thresholds() -> Outcome {
    let sweep = |ensemble| {
        let rows = threshold_sweep(&SweepSettings {
            ensemble,
            ..SweepSettings::default()
        })
        .expect("sweep");
        (
            convergence::sign_changes(&rows, SeriesKind::Pinv),
            convergence::sign_changes(&rows, SeriesKind::Neumann),
        )
    };
    let (pinv, neumann) = sweep(Ensemble::Ginibre);
    let ginibre_ok = inside(&pinv, 0.40, 0.45) && inside(&neumann, 0.95, 1.05);
    let (gue_pinv, gue_neumann) = sweep(Ensemble::Gue);

    let sigma = ComplexMatrix::from_real_diagonal(&[1.0, 1.1, 0.7]);
    let curves = single_matrix_curves(&sigma, 5000).expect("curves");
    let pinv_depth = curves.pinv.iter().position(|&e| e < 1e-8);
    let neumann_200 = curves.neumann[200];
    let single_ok = pinv_depth.is_some() && curves.neumann_is_partial_sum_norm && neumann_200 > 1e3;

    Outcome::new(
        ginibre_ok && single_ok,
        format!(
            "Ginibre sign changes τ_p {} τ_i {}; GUE τ_p {} τ_i {}; example matrix pinv < 1e-8 at depth {}, \
             Neumann partial-sum norm {:.2e} at depth 200",
            bracket_text(&pinv),
            bracket_text(&neumann),
            bracket_text(&gue_pinv),
            bracket_text(&gue_neumann),
            pinv_depth.map_or("never".to_string(), |d| d.to_string()),
            neumann_200
        ),
    )
    .within(120)
}

// 11 ------------------------------------------------------------------------

fn c11_eigenoperator() -> Outcome {
    let cfg = JcConfig::default();
    let modes = discretize_bath(&JcConfig {
        n_modes: 2,
        window: 2.0,
        ..cfg.clone()
    });
    let model = truncated_model(&modes, cfg.omega0, 1).expect("model");
    // the eigen-relation is structural, so a coarse time grid suffices
    let settings = ExpansionSettings {
        steps_per_unit: 40,
        ..ExpansionSettings::with_lambda(1.0)
    };
    let fam = SigmaFamily::new(&model, settings).expect("family");
    let bath = model.bath();
    let x0 = sigma_plus().kron(&bath.rho_b);
    let polys = expand_neumann_terms(6).expect("terms");
    let p = fam.p().mat().clone();
    let mut worst = 0.0f64;
    let mut largest = 0.0f64;
    let mut count = 0;
    for t in [0.4, 1.1] {
        let sigmas = fam.perturbative_set(5, t).expect("sigmas");
        let pl = &p * fam.liouvillian_at(t).expect("L").mat();
        for order in [2, 4, 6] {
            for term in polys[order - 1].terms() {
                let mut m = pl.clone();
                for s in &term.factors {
                    m = &m * sigmas[s.order - 1].mat();
                }
                m = &m * &p;
                let op = SuperOperator::new(fam.dims(), m).expect("superoperator");
                let (coeff, residual) = eigen_decompose(&op.apply(&x0).unwrap(), bath);
                worst = worst.max(residual);
                largest = largest.max(coeff.norm());
                count += 1;
            }
        }
        let times = [t, 0.8 * t, 0.6 * t, 0.45 * t, 0.2 * t, 0.05 * t];
        for which in [AdjointString::WithProjectorPair, AdjointString::Bare] {
            let (coeff, residual) =
                eigen_decompose(&apply_adjoint_string(&model, which, times).unwrap(), bath);
            worst = worst.max(residual);
            largest = largest.max(coeff.norm());
            count += 1;
        }
    }
    Outcome::new(
        worst < 1e-10 && largest > 0.0,
        format!("{count} term evaluations, max orthogonal residual {worst:.1e}, largest eigenvalue {largest:.3e}"),
    )
}

// 12 ------------------------------------------------------------------------

fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn c12_weak_coupling() -> Outcome {
    let base = JcConfig {
        lambda: WEAK_LAMBDA,
        ..JcConfig::default()
    };
    let jc_errors: Vec<f64> = (0..4)
        .map(|k| {
            let lambda = base.lambda / 2f64.powi(k);
            let exact = run_jc(&JcConfig {
                lambda,
                ..base.clone()
            })
            .expect("exact");
            let tcl = run_jc(&JcConfig {
                lambda,
                method: JcMethod::Tcl,
                order: 2,
                ..base.clone()
            })
            .expect("tcl2");
            tcl.max_population_error(&exact)
        })
        .collect();

    let ising_errors: Vec<f64> = (0..4)
        .map(|k| {
            let mut cfg = IsingConfig::with_default_couplings(4, 0.0, DEFAULT_COUPLING_SEED);
            cfg.lambda = WEAK_LAMBDA / 2f64.powi(k);
            let exact = run_ising(&cfg).expect("exact");
            cfg.method = IsingMethod::Tcl;
            cfg.order = 2;
            run_ising(&cfg).expect("tcl2").max_transverse_error(&exact)
        })
        .collect();

    let jc_orders = observed_orders(&jc_errors);
    let ising_orders = observed_orders(&ising_errors);
    let pass = jc_orders.iter().chain(&ising_orders).all(|&p| p >= 3.5);
    let fmt = |v: &[f64]| {
        v.iter().map(|p| format!("{p:.2}")).collect::<Vec<_>>().join(", ")
    };
    Outcome::new(
        pass,
        format!(
            "λ halved from {WEAK_LAMBDA}: JC orders [{}]; Ising (N=4, β=0) orders [{}]",
            fmt(&jc_orders),
            fmt(&ising_orders)
        ),
    )
}

/// Largest coupling of the halving sequence.
const WEAK_LAMBDA: f64 = 0.1;
