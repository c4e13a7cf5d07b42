//! JSON run configurations. Every schema carries `schema_version` and rejects
//! unknown fields.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use tclplus_core::convergence::{Ensemble, SweepSettings};
use tclplus_core::ising::{default_couplings, IsingConfig, IsingMethod, DEFAULT_COUPLING_SEED};
use tclplus_core::jc::{JcConfig, JcMethod};
use tclplus_core::linalg::{c, ComplexMatrix};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Reads and validates a config file of type `T`.
pub fn load<T: DeserializeOwned + Versioned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let cfg: T = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?;
    if cfg.schema_version() != SCHEMA_VERSION {
        return Err(CliError::Usage(format!(
            "invalid config {}: schema_version must be {SCHEMA_VERSION}, got {}",
            path.display(),
            cfg.schema_version()
        )));
    }
    Ok(cfg)
}

pub trait Versioned {
    fn schema_version(&self) -> u32;
}

macro_rules! versioned {
    ($($t:ty),*) => {
        $(impl Versioned for $t {
            fn schema_version(&self) -> u32 {
                self.schema_version
            }
        })*
    };
}

versioned!(JcSimulation, IsingSimulation, SweepConfig, SingleConfig);

/// A method and expansion order, written `exact`, `tcl4`, `tclplus6`, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct MethodSpec {
    pub kind: MethodKind,
    pub order: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodKind {
    Exact,
    BruteForce,
    Tcl,
    TclPlus,
}

impl FromStr for MethodSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let spec = |kind, order| Ok(MethodSpec { kind, order });
        match s {
            "exact" => return spec(MethodKind::Exact, 0),
            "bruteforce" => return spec(MethodKind::BruteForce, 0),
            _ => {}
        }
        let (kind, digits) = if let Some(d) = s.strip_prefix("tclplus") {
            (MethodKind::TclPlus, d)
        } else if let Some(d) = s.strip_prefix("tcl") {
            (MethodKind::Tcl, d)
        } else {
            return Err(format!("unknown method `{s}`"));
        };
        let order = digits
            .parse()
            .map_err(|_| format!("method `{s}` needs an order, e.g. tcl2"))?;
        spec(kind, order)
    }
}

impl TryFrom<String> for MethodSpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<MethodSpec> for String {
    fn from(m: MethodSpec) -> String {
        m.to_string()
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            MethodKind::Exact => f.write_str("exact"),
            MethodKind::BruteForce => f.write_str("bruteforce"),
            MethodKind::Tcl => write!(f, "tcl{}", self.order),
            MethodKind::TclPlus => write!(f, "tclplus{}", self.order),
        }
    }
}

fn spec(s: &str) -> MethodSpec {
    s.parse().expect("valid built-in method")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JcSimulation {
    pub schema_version: u32,
    pub gamma0: f64,
    pub omega0: f64,
    pub nu_b: f64,
    pub lambda: f64,
    pub t_max: f64,
    pub dt: f64,
    pub initial_excited_population: f64,
    pub methods: Vec<MethodSpec>,
    /// Values of `Tr[I_B]` for the TCL+ adjoint terms.
    pub bath_dims: Vec<usize>,
}

impl Default for JcSimulation {
    fn default() -> Self {
        let base = JcConfig::default();
        Self {
            schema_version: 0,
            gamma0: base.gamma0,
            omega0: base.omega0,
            nu_b: base.nu_b,
            lambda: base.lambda,
            t_max: base.t_max,
            dt: base.dt,
            initial_excited_population: base.initial_excited_population,
            methods: ["exact", "tcl2", "tcl6", "tclplus6"].map(spec).to_vec(),
            bath_dims: vec![1, 3, 7],
        }
    }
}

impl JcSimulation {
    /// One core config per (method, bath dimension), in output order.
    pub fn runs(&self) -> Result<Vec<(MethodSpec, usize, JcConfig)>, CliError> {
        if self.methods.is_empty() || self.bath_dims.is_empty() {
            return Err(CliError::Usage("methods and bath_dims must be non-empty".into()));
        }
        let mut out = Vec::new();
        for &m in &self.methods {
            let (method, order) = match m.kind {
                MethodKind::Exact => (JcMethod::Exact, 2),
                MethodKind::Tcl => (JcMethod::Tcl, m.order),
                MethodKind::TclPlus => (JcMethod::TclPlus, m.order),
                MethodKind::BruteForce => {
                    return Err(CliError::Usage("methods: bruteforce is not available for jc".into()))
                }
            };
            for &d in &self.bath_dims {
                let cfg = JcConfig {
                    gamma0: self.gamma0,
                    omega0: self.omega0,
                    nu_b: self.nu_b,
                    lambda: self.lambda,
                    bath_dim_cutoff: d,
                    t_max: self.t_max,
                    dt: self.dt,
                    order,
                    method,
                    initial_excited_population: self.initial_excited_population,
                    ..JcConfig::default()
                };
                cfg.validate()
                    .map_err(|e| CliError::Usage(format!("method {m}, bath dim {d}: {e}")))?;
                out.push((m, d, cfg));
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IsingSimulation {
    pub schema_version: u32,
    pub n_bath: usize,
    pub beta: f64,
    pub lambda: f64,
    pub t_max: f64,
    pub dt: f64,
    /// Drawn uniformly from `[0.5, 1]` with the run seed when absent.
    pub couplings: Option<Vec<f64>>,
    /// Site energies; all 1 when absent.
    pub omegas: Option<Vec<f64>>,
    pub initial_bloch: [f64; 3],
    pub methods: Vec<MethodSpec>,
}

impl Default for IsingSimulation {
    fn default() -> Self {
        let base = IsingConfig::with_default_couplings(4, 1.0, DEFAULT_COUPLING_SEED);
        Self {
            schema_version: 0,
            n_bath: base.n_bath,
            beta: base.beta,
            lambda: base.lambda,
            t_max: base.t_max,
            dt: base.dt,
            couplings: None,
            omegas: None,
            initial_bloch: base.initial_bloch,
            methods: ["exact", "tcl2", "tcl4", "tcl5", "tclplus5"].map(spec).to_vec(),
        }
    }
}

impl IsingSimulation {
    /// Fills couplings and site energies so the config is self-contained.
    pub fn resolved(&self, seed: u64) -> Self {
        let mut out = self.clone();
        out.couplings
            .get_or_insert_with(|| default_couplings(self.n_bath, seed));
        out.omegas.get_or_insert_with(|| vec![1.0; self.n_bath]);
        out
    }

    /// Expects a resolved config.
    pub fn runs(&self) -> Result<Vec<(MethodSpec, IsingConfig)>, CliError> {
        if self.methods.is_empty() {
            return Err(CliError::Usage("methods must be non-empty".into()));
        }
        let mut out = Vec::new();
        for &m in &self.methods {
            let (method, order) = match m.kind {
                MethodKind::Exact => (IsingMethod::Exact, 5),
                MethodKind::BruteForce => (IsingMethod::BruteForce, 5),
                MethodKind::Tcl => (IsingMethod::Tcl, m.order),
                MethodKind::TclPlus => (IsingMethod::TclPlus, m.order),
            };
            let cfg = IsingConfig {
                n_bath: self.n_bath,
                couplings: self.couplings.clone().unwrap_or_default(),
                omegas: self.omegas.clone().unwrap_or_default(),
                beta: self.beta,
                lambda: self.lambda,
                t_max: self.t_max,
                dt: self.dt,
                order,
                method,
                initial_bloch: self.initial_bloch,
            };
            cfg.validate()
                .map_err(|e| CliError::Usage(format!("method {m}: {e}")))?;
            out.push((m, cfg));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub schema_version: u32,
    pub dim: usize,
    pub norms: Vec<f64>,
    pub trials: usize,
    pub max_depth: usize,
    pub ensemble: Ensemble,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let s = SweepSettings::default();
        Self {
            schema_version: 0,
            dim: s.dim,
            norms: s.norms,
            trials: s.trials,
            max_depth: s.max_depth,
            ensemble: s.ensemble,
        }
    }
}

impl SweepConfig {
    pub fn settings(&self, seed: u64) -> SweepSettings {
        SweepSettings {
            dim: self.dim,
            norms: self.norms.clone(),
            trials: self.trials,
            max_depth: self.max_depth,
            seed,
            ensemble: self.ensemble,
        }
    }
}

/// Explicit memory matrix in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    /// All zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<f64>>,
}

impl MatrixSpec {
    pub fn to_matrix(&self) -> Result<ComplexMatrix, CliError> {
        let n = self.rows * self.cols;
        let im = self.im.clone().unwrap_or_else(|| vec![0.0; n]);
        if self.re.len() != n || im.len() != n {
            return Err(CliError::Usage(format!(
                "matrix: re and im need rows*cols = {n} entries, got {} and {}",
                self.re.len(),
                im.len()
            )));
        }
        let entries = self.re.iter().zip(&im).map(|(&a, &b)| c(a, b)).collect();
        ComplexMatrix::new(self.rows, self.cols, entries)
            .map_err(|e| CliError::Usage(format!("matrix: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleConfig {
    pub schema_version: u32,
    pub matrix: MatrixSpec,
    #[serde(default = "default_single_depth")]
    pub max_depth: usize,
}

fn default_single_depth() -> usize {
    5000
}
