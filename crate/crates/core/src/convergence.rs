//! Convergence of the Neumann and Israel–Charnes series.
//!
//! For a memory matrix `Σ` the Neumann partial sums `Σ_{k≤d} Σᵏ` approximate
//! `(I − Σ)⁻¹` and the Israel–Charnes partial sums applied to `A = I − Σ`
//! approximate `A⁺`. Errors are measured in operator norm and summarized by a
//! depth constant `τ` from `‖error_d‖ ≈ α e^{−d/τ}`; `τ < 0` signals divergence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{operator_norm, pinv, svd, ComplexMatrix, NeumannSeries, PinvSeries};
use crate::random;

/// Smallest singular value of `I − Σ` accepted for the Neumann reference.
pub const SINGULAR_REFERENCE_TOL: f64 = 1e-12;
/// Errors below this multiple of the reference norm are treated as converged
/// to rounding and left out of depth fits.
pub const NOISE_FLOOR: f64 = 64.0 * f64::EPSILON;
pub const MIN_FIT_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesKind {
    Neumann,
    Pinv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ensemble {
    /// I.i.d. standard complex Gaussian entries.
    Ginibre,
    /// Hermitian part of a Ginibre matrix.
    Gue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceCurve {
    pub depths: Vec<usize>,
    pub errors: Vec<f64>,
    /// Operator norm of the reference inverse or pseudoinverse.
    pub reference_norm: f64,
    pub series_kind: SeriesKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthFit {
    pub tau: f64,
    pub amplitude: f64,
    pub r_squared: f64,
    pub series_kind: SeriesKind,
    pub norm_of_sigma: f64,
    /// Depth range `[first, last]` used by the fit.
    pub window: (usize, usize),
}

/// Ginibre matrix rescaled to the requested operator norm.
pub fn random_matrix_with_norm(dim: usize, target_norm: f64, seed: u64) -> Result<ComplexMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ensemble_matrix(Ensemble::Ginibre, dim, target_norm, &mut rng)
}

pub fn ensemble_matrix(
    ensemble: Ensemble,
    dim: usize,
    target_norm: f64,
    rng: &mut ChaCha8Rng,
) -> Result<ComplexMatrix> {
    if !(target_norm > 0.0) || !target_norm.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "target norm must be positive, got {target_norm}"
        )));
    }
    if dim == 0 {
        return Err(Error::DimensionError("dimension must be >= 1".into()));
    }
    loop {
        let m = match ensemble {
            Ensemble::Ginibre => random::ginibre(dim, dim, rng),
            Ensemble::Gue => random::gue(dim, rng),
        };
        let norm = operator_norm(&m);
        if norm > 0.0 {
            return Ok(m.scale_real(target_norm / norm));
        }
    }
}

/// Operator-norm errors of partial sums at depths `0..=max_depth`.
pub fn convergence_curve(
    sigma: &ComplexMatrix,
    series_kind: SeriesKind,
    max_depth: usize,
) -> Result<ConvergenceCurve> {
    if !sigma.is_square() {
        return Err(Error::DimensionError(format!(
            "memory matrix must be square, got {:?}",
            sigma.shape()
        )));
    }
    let a = ComplexMatrix::identity(sigma.rows()) - sigma;
    let reference = match series_kind {
        SeriesKind::Neumann => {
            let smallest = svd(&a)?.singular_values.last().copied().unwrap_or(0.0);
            if smallest < SINGULAR_REFERENCE_TOL {
                return Err(Error::SingularReference { smallest });
            }
            a.inverse()?
        }
        SeriesKind::Pinv => pinv(&a)?,
    };
    let partial_sums: Box<dyn Iterator<Item = ComplexMatrix>> = match series_kind {
        SeriesKind::Neumann => Box::new(NeumannSeries::new(sigma)),
        SeriesKind::Pinv => Box::new(PinvSeries::new(&a)),
    };
    let mut errors = Vec::with_capacity(max_depth + 1);
    for s in partial_sums.take(max_depth + 1) {
        let diff = &s - &reference;
        errors.push(if diff.is_finite() {
            operator_norm(&diff)
        } else {
            f64::INFINITY
        });
    }
    Ok(ConvergenceCurve {
        depths: (0..=max_depth).collect(),
        errors,
        reference_norm: operator_norm(&reference),
        series_kind,
    })
}

/// Least-squares line through `(d, ln error)` over the longest contiguous run
/// of finite errors above the noise floor; `τ = −1/slope`.
pub fn fit_depth_constant(curve: &ConvergenceCurve, norm_of_sigma: f64) -> Result<DepthFit> {
    let n = curve.errors.len();
    if n != curve.depths.len() || n < MIN_FIT_SAMPLES {
        return Err(Error::InvalidConfig(format!(
            "a depth fit needs at least {MIN_FIT_SAMPLES} samples, got {n}"
        )));
    }
    let first_last = (curve.depths[0], curve.depths[n - 1]);
    if curve.errors.iter().all(|&e| e == 0.0) {
        return Ok(DepthFit {
            tau: f64::INFINITY,
            amplitude: 0.0,
            r_squared: 1.0,
            series_kind: curve.series_kind,
            norm_of_sigma,
            window: first_last,
        });
    }
    let floor = NOISE_FLOOR * curve.reference_norm.max(f64::MIN_POSITIVE);
    let (mut lo, mut hi) = longest_run(&curve.errors, |e| e.is_finite() && e > floor);
    if hi - lo < MIN_FIT_SAMPLES {
        // fast convergence reaches rounding within a few depths; keep every
        // finite nonzero sample instead
        (lo, hi) = longest_run(&curve.errors, |e| e.is_finite() && e > 0.0);
    }
    if hi - lo < MIN_FIT_SAMPLES {
        return Err(Error::InvalidConfig(format!(
            "only {} usable error samples for the depth fit",
            hi - lo
        )));
    }
    let xs: Vec<f64> = curve.depths[lo..hi].iter().map(|&d| d as f64).collect();
    let ys: Vec<f64> = curve.errors[lo..hi].iter().map(|e| e.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(DepthFit {
        tau: -1.0 / slope,
        amplitude: intercept.exp(),
        r_squared,
        series_kind: curve.series_kind,
        norm_of_sigma,
        window: (curve.depths[lo], curve.depths[hi - 1]),
    })
}

/// Half-open index range of the longest run of samples accepted by `keep`.
fn longest_run(errors: &[f64], keep: impl Fn(f64) -> bool) -> (usize, usize) {
    let n = errors.len();
    let (mut best, mut start) = ((0, 0), None);
    for i in 0..=n {
        match (i < n && keep(errors[i]), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if i - s > best.1 - best.0 {
                    best = (s, i);
                }
                start = None;
            }
            _ => {}
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub dim: usize,
    pub norms: Vec<f64>,
    pub trials: usize,
    pub max_depth: usize,
    pub seed: u64,
    pub ensemble: Ensemble,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            dim: 16,
            norms: (1..=32).map(|i| 0.05 * i as f64).collect(),
            trials: 50,
            max_depth: 300,
            seed: 0,
            ensemble: Ensemble::Ginibre,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub norm: f64,
    pub tau_neumann_mean: f64,
    pub tau_pinv_mean: f64,
    pub tau_neumann_std: f64,
    pub tau_pinv_std: f64,
    /// Trials contributing to each mean.
    pub neumann_trials: usize,
    pub pinv_trials: usize,
    /// Trials dropped because `I − Σ` had no usable inverse.
    pub singular_excluded: usize,
    /// Fits dropped for lack of usable samples, over both series.
    pub unfit_excluded: usize,
}

/// Mean depth constants per norm. Trial `(i, j)` draws from a ChaCha stream
/// selected by its indices, so results do not depend on scheduling.
pub fn threshold_sweep(settings: &SweepSettings) -> Result<Vec<SweepRow>> {
    if settings.trials == 0 {
        return Err(Error::InvalidConfig("trials must be >= 1".into()));
    }
    if settings.max_depth + 1 < MIN_FIT_SAMPLES {
        return Err(Error::InvalidConfig(format!(
            "max_depth must be >= {}",
            MIN_FIT_SAMPLES - 1
        )));
    }
    let trials = settings.trials;
    let jobs: Vec<(usize, usize)> = (0..settings.norms.len())
        .flat_map(|i| (0..trials).map(move |j| (i, j)))
        .collect();
    let fits: Vec<(TrialFit, TrialFit)> = jobs
        .par_iter()
        .map(|&(i, j)| {
            let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
            rng.set_stream((i * trials + j) as u64);
            let norm = settings.norms[i];
            let sigma = ensemble_matrix(settings.ensemble, settings.dim, norm, &mut rng)?;
            let tau = |kind| -> Result<TrialFit> {
                match convergence_curve(&sigma, kind, settings.max_depth) {
                    Ok(curve) => match fit_depth_constant(&curve, norm) {
                        Ok(fit) => Ok(TrialFit::Tau(fit.tau)),
                        Err(Error::InvalidConfig(_)) => Ok(TrialFit::Unfit),
                        Err(e) => Err(e),
                    },
                    Err(Error::SingularReference { .. }) => Ok(TrialFit::Singular),
                    Err(e) => Err(e),
                }
            };
            Ok((tau(SeriesKind::Neumann)?, tau(SeriesKind::Pinv)?))
        })
        .collect::<Result<_>>()?;

    let stats = |xs: Vec<f64>| -> (f64, f64, usize) {
        let n = xs.len();
        if n == 0 {
            return (f64::NAN, f64::NAN, 0);
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        (mean, var.sqrt(), n)
    };
    Ok(settings
        .norms
        .iter()
        .enumerate()
        .map(|(i, &norm)| {
            let chunk = &fits[i * trials..(i + 1) * trials];
            let (nm, ns, nn) = stats(chunk.iter().filter_map(|f| f.0.tau()).collect());
            let (pm, ps, pn) = stats(chunk.iter().filter_map(|f| f.1.tau()).collect());
            let singular = chunk.iter().filter(|f| f.0 == TrialFit::Singular).count();
            let unfit = chunk
                .iter()
                .flat_map(|f| [f.0, f.1])
                .filter(|f| *f == TrialFit::Unfit)
                .count();
            if singular + unfit > 0 {
                log::info!("norm {norm}: {singular} singular references, {unfit} unfit curves");
            }
            SweepRow {
                norm,
                tau_neumann_mean: nm,
                tau_pinv_mean: pm,
                tau_neumann_std: ns,
                tau_pinv_std: ps,
                neumann_trials: nn,
                pinv_trials: pn,
                singular_excluded: singular,
                unfit_excluded: unfit,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum TrialFit {
    Tau(f64),
    Singular,
    Unfit,
}

impl TrialFit {
    fn tau(self) -> Option<f64> {
        match self {
            TrialFit::Tau(t) => Some(t),
            _ => None,
        }
    }
}

/// Consecutive norms `(a, b)` between which the column changes from positive
/// to negative.
pub fn sign_changes(rows: &[SweepRow], kind: SeriesKind) -> Vec<(f64, f64)> {
    let value = |r: &SweepRow| match kind {
        SeriesKind::Neumann => r.tau_neumann_mean,
        SeriesKind::Pinv => r.tau_pinv_mean,
    };
    rows.windows(2)
        .filter(|w| value(&w[0]) > 0.0 && value(&w[1]) < 0.0)
        .map(|w| (w[0].norm, w[1].norm))
        .collect()
}

/// Error curves of both series for one explicit memory matrix. The Neumann
/// column holds partial-sum norms when `I − Σ` is singular.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleMatrixCurves {
    pub depths: Vec<usize>,
    pub neumann: Vec<f64>,
    pub pinv: Vec<f64>,
    /// True when the Neumann column is `‖Σ_{k≤d} Σᵏ‖` rather than an error.
    pub neumann_is_partial_sum_norm: bool,
}

pub fn single_matrix_curves(sigma: &ComplexMatrix, max_depth: usize) -> Result<SingleMatrixCurves> {
    let pinv_curve = convergence_curve(sigma, SeriesKind::Pinv, max_depth)?;
    let (neumann, flag) = match convergence_curve(sigma, SeriesKind::Neumann, max_depth) {
        Ok(curve) => (curve.errors, false),
        Err(Error::SingularReference { .. }) => (
            NeumannSeries::new(sigma)
                .take(max_depth + 1)
                .map(|s| if s.is_finite() { operator_norm(&s) } else { f64::INFINITY })
                .collect(),
            true,
        ),
        Err(e) => return Err(e),
    };
    Ok(SingleMatrixCurves {
        depths: pinv_curve.depths,
        neumann,
        pinv: pinv_curve.errors,
        neumann_is_partial_sum_norm: flag,
    })
}
