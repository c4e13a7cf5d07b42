//! Perturbative structure of the TCL and TCL+ generators.

pub mod numeric;
pub mod symbolic;

pub use numeric::{
    reduced_action, reduced_generator, ExpansionSettings, GeneratorMethod, InteractionPictureModel,
    SigmaFamily, TclModel,
};
pub use symbolic::{
    expand_neumann_terms, expand_pinv_terms, term_tables, NcMonomial, NcPolynomial, NcSymbol,
    SymbolKind, TermTable,
};
