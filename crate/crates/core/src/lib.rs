//! Time-convolutionless master equations and their Moore-Penrose variant.
//!
//! The crate covers dense complex linear algebra with series pseudoinverses,
//! superoperators on a system ⊗ bath space, symbolic and numeric expansions of
//! the TCL generator, two solvable models (Jaynes-Cummings and an Ising
//! dephasing bath) and convergence studies of the Neumann and Israel–Charnes
//! series.

pub mod convergence;
pub mod error;
pub mod expansion;
pub mod ising;
pub mod jc;
pub mod linalg;
pub mod quadrature;
pub mod random;
pub mod superop;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, C64};
