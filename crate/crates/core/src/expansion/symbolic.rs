//! Noncommutative polynomials in the memory superoperators `Σ_m`, `Σ_m†`
//! and the projection and Liouville symbols.
//!
//! Both generator expansions are produced by repeated multiplication of
//! truncated graded series. Alongside the merged coefficient, every monomial
//! keeps the gross number of positive and negative contributions that fed it,
//! so terms that cancel exactly are still visible in the term tables.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SymbolKind {
    Sigma,
    SigmaDagger,
    P,
    PDagger,
    L,
    LDagger,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NcSymbol {
    pub kind: SymbolKind,
    pub order: usize,
}

impl NcSymbol {
    pub fn sigma(order: usize) -> Self {
        assert!(order >= 1, "Sigma symbols carry grade >= 1");
        Self {
            kind: SymbolKind::Sigma,
            order,
        }
    }

    pub fn sigma_dagger(order: usize) -> Self {
        assert!(order >= 1, "Sigma symbols carry grade >= 1");
        Self {
            kind: SymbolKind::SigmaDagger,
            order,
        }
    }

    pub fn p() -> Self {
        Self {
            kind: SymbolKind::P,
            order: 0,
        }
    }

    pub fn p_dagger() -> Self {
        Self {
            kind: SymbolKind::PDagger,
            order: 0,
        }
    }

    pub fn l() -> Self {
        Self {
            kind: SymbolKind::L,
            order: 1,
        }
    }

    pub fn l_dagger() -> Self {
        Self {
            kind: SymbolKind::LDagger,
            order: 1,
        }
    }

    /// λ-grade carried by the symbol.
    pub fn grade(&self) -> usize {
        self.order
    }

    pub fn is_dagger(&self) -> bool {
        matches!(
            self.kind,
            SymbolKind::SigmaDagger | SymbolKind::PDagger | SymbolKind::LDagger
        )
    }

    /// The symbol of the adjoint operator.
    pub fn dagger(&self) -> Self {
        let kind = match self.kind {
            SymbolKind::Sigma => SymbolKind::SigmaDagger,
            SymbolKind::SigmaDagger => SymbolKind::Sigma,
            SymbolKind::P => SymbolKind::PDagger,
            SymbolKind::PDagger => SymbolKind::P,
            SymbolKind::L => SymbolKind::LDagger,
            SymbolKind::LDagger => SymbolKind::L,
        };
        Self { kind, ..*self }
    }

    /// Short name: `S2`, `S1dag`, `P`, `Pdag`, `L`, `Ldag`.
    pub fn name(&self) -> String {
        match self.kind {
            SymbolKind::Sigma => format!("S{}", self.order),
            SymbolKind::SigmaDagger => format!("S{}dag", self.order),
            SymbolKind::P => "P".into(),
            SymbolKind::PDagger => "Pdag".into(),
            SymbolKind::L => "L".into(),
            SymbolKind::LDagger => "Ldag".into(),
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("unknown symbol `{name}`"));
        match name {
            "P" => return Ok(Self::p()),
            "Pdag" => return Ok(Self::p_dagger()),
            "L" => return Ok(Self::l()),
            "Ldag" => return Ok(Self::l_dagger()),
            _ => {}
        }
        let rest = name.strip_prefix('S').ok_or_else(bad)?;
        let (digits, dagger) = match rest.strip_suffix("dag") {
            Some(d) => (d, true),
            None => (rest, false),
        };
        let order: usize = digits.parse().map_err(|_| bad())?;
        if order == 0 {
            return Err(bad());
        }
        Ok(if dagger {
            Self::sigma_dagger(order)
        } else {
            Self::sigma(order)
        })
    }
}

impl fmt::Display for NcSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Signed integer term with its factor sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NcMonomial {
    pub coeff: i64,
    pub factors: Vec<NcSymbol>,
}

impl NcMonomial {
    pub fn grade(&self) -> usize {
        self.factors.iter().map(NcSymbol::grade).sum()
    }

    pub fn has_dagger(&self) -> bool {
        self.factors.iter().any(NcSymbol::is_dagger)
    }

    pub fn factor_names(&self) -> Vec<String> {
        self.factors.iter().map(NcSymbol::name).collect()
    }
}

impl fmt::Display for NcMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeff != 1 {
            write!(f, "{}·", self.coeff)?;
        }
        let names = self.factor_names();
        if names.is_empty() {
            f.write_str("I")
        } else {
            f.write_str(&names.join(" "))
        }
    }
}

/// Gross positive and negative contributions to one factor sequence.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub positive: u64,
    pub negative: u64,
}

impl Tally {
    pub fn net(&self) -> i64 {
        self.positive as i64 - self.negative as i64
    }

    fn times(&self, other: &Tally) -> Tally {
        Tally {
            positive: self.positive * other.positive + self.negative * other.negative,
            negative: self.positive * other.negative + self.negative * other.positive,
        }
    }

    fn plus(&mut self, other: &Tally) {
        self.positive += other.positive;
        self.negative += other.negative;
    }
}

/// Formal sum of monomials, keyed by factor sequence in lexicographic order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NcPolynomial {
    tallies: BTreeMap<Vec<NcSymbol>, Tally>,
}

impl NcPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::monomial(1, Vec::new())
    }

    pub fn monomial(coeff: i64, factors: Vec<NcSymbol>) -> Self {
        let mut p = Self::zero();
        p.add_term(coeff, factors);
        p
    }

    pub fn symbol(s: NcSymbol) -> Self {
        Self::monomial(1, vec![s])
    }

    fn add_term(&mut self, coeff: i64, factors: Vec<NcSymbol>) {
        let tally = if coeff >= 0 {
            Tally {
                positive: coeff as u64,
                negative: 0,
            }
        } else {
            Tally {
                positive: 0,
                negative: coeff.unsigned_abs(),
            }
        };
        self.tallies.entry(factors).or_default().plus(&tally);
    }

    /// Merged terms with nonzero coefficient, in canonical order.
    pub fn terms(&self) -> Vec<NcMonomial> {
        self.tallies
            .iter()
            .filter(|(_, t)| t.net() != 0)
            .map(|(f, t)| NcMonomial {
                coeff: t.net(),
                factors: f.clone(),
            })
            .collect()
    }

    /// Factor sequences whose contributions cancel exactly.
    pub fn cancelled(&self) -> Vec<(Vec<NcSymbol>, Tally)> {
        self.tallies
            .iter()
            .filter(|(_, t)| t.net() == 0 && (t.positive > 0 || t.negative > 0))
            .map(|(f, t)| (f.clone(), *t))
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.tallies.values().all(|t| t.net() == 0)
    }

    pub fn len(&self) -> usize {
        self.terms().len()
    }

    pub fn is_empty(&self) -> bool {
        self.is_zero()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (f, t) in &other.tallies {
            out.tallies.entry(f.clone()).or_default().plus(t);
        }
        out
    }

    pub fn neg(&self) -> Self {
        Self {
            tallies: self
                .tallies
                .iter()
                .map(|(f, t)| {
                    (
                        f.clone(),
                        Tally {
                            positive: t.negative,
                            negative: t.positive,
                        },
                    )
                })
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// Product truncated to total grade `≤ max_grade`.
    pub fn mul_truncated(&self, other: &Self, max_grade: usize) -> Self {
        let mut out = Self::zero();
        for (fa, ta) in &self.tallies {
            let ga: usize = fa.iter().map(NcSymbol::grade).sum();
            if ga > max_grade {
                continue;
            }
            for (fb, tb) in &other.tallies {
                let gb: usize = fb.iter().map(NcSymbol::grade).sum();
                if ga + gb > max_grade {
                    continue;
                }
                let mut f = fa.clone();
                f.extend_from_slice(fb);
                out.tallies.entry(f).or_default().plus(&ta.times(tb));
            }
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.mul_truncated(other, usize::MAX)
    }

    /// The homogeneous part of the given grade.
    pub fn grade_part(&self, grade: usize) -> Self {
        Self {
            tallies: self
                .tallies
                .iter()
                .filter(|(f, _)| f.iter().map(NcSymbol::grade).sum::<usize>() == grade)
                .map(|(f, t)| (f.clone(), *t))
                .collect(),
        }
    }

    /// Drops every monomial that contains a daggered symbol.
    pub fn without_daggers(&self) -> Self {
        Self {
            tallies: self
                .tallies
                .iter()
                .filter(|(f, _)| !f.iter().any(NcSymbol::is_dagger))
                .map(|(f, t)| (f.clone(), *t))
                .collect(),
        }
    }

    /// Merged terms containing at least one daggered symbol.
    pub fn daggered_terms(&self) -> Vec<NcMonomial> {
        self.terms().into_iter().filter(|m| m.has_dagger()).collect()
    }

    /// Evaluates with a ring homomorphism given per symbol.
    pub fn evaluate<T, F>(&self, one: T, mut bind: F) -> T
    where
        T: Clone + std::ops::Add<Output = T> + std::ops::Mul<Output = T>,
        F: FnMut(&NcSymbol) -> T,
        T: ScaleBy,
    {
        let mut acc: Option<T> = None;
        for m in self.terms() {
            let mut prod = one.clone();
            for s in &m.factors {
                prod = prod * bind(s);
            }
            let term = prod.scale_by(m.coeff as f64);
            acc = Some(match acc {
                None => term,
                Some(a) => a + term,
            });
        }
        acc.unwrap_or_else(|| one.scale_by(0.0))
    }
}

/// Multiplication by a real scalar, used when evaluating polynomials.
pub trait ScaleBy {
    fn scale_by(&self, s: f64) -> Self;
}

impl ScaleBy for f64 {
    fn scale_by(&self, s: f64) -> Self {
        self * s
    }
}

impl ScaleBy for num_complex::Complex64 {
    fn scale_by(&self, s: f64) -> Self {
        self * s
    }
}

impl fmt::Display for NcPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms = self.terms();
        if terms.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = terms.iter().map(|m| m.to_string()).collect();
        f.write_str(&parts.join(" + "))
    }
}

/// `Σ = Σ_{m=1}^{max_grade} Σ_m` as a graded polynomial.
fn sigma_series(max_grade: usize, dagger: bool) -> NcPolynomial {
    let mut s = NcPolynomial::zero();
    for m in 1..=max_grade {
        let sym = if dagger {
            NcSymbol::sigma_dagger(m)
        } else {
            NcSymbol::sigma(m)
        };
        s = s.add(&NcPolynomial::symbol(sym));
    }
    s
}

/// `Σ_{k≥0} Xᵏ · tail`, truncated at `max_grade`; `X` must have no grade-0 part.
fn geometric_times(x: &NcPolynomial, tail: &NcPolynomial, max_grade: usize) -> NcPolynomial {
    let mut acc = tail.clone();
    let mut power = tail.clone();
    // each multiplication by X raises the minimum grade by at least one
    for _ in 0..max_grade {
        power = x.mul_truncated(&power, max_grade);
        if power.tallies.is_empty() {
            break;
        }
        acc = acc.add(&power);
    }
    acc
}

fn check_max_order(max_order: usize) -> Result<()> {
    if max_order == 0 {
        return Err(Error::InvalidOrder {
            order: 0,
            reason: "expansion order must be at least 1".into(),
        });
    }
    Ok(())
}

/// Per-order term lists of the TCL generator `λ𝓟𝓛 Σ_k Σᵏ 𝓟`.
///
/// Entry `n − 1` holds the grade-`(n − 1)` polynomial multiplying `λⁿ 𝓟𝓛(t)`.
/// The `k = 0` identity term only feeds order 1 as `λ𝓟𝓛𝓟`, which vanishes
/// for centered couplings, so order 1 is empty.
pub fn expand_neumann_terms(max_order: usize) -> Result<Vec<NcPolynomial>> {
    check_max_order(max_order)?;
    let max_grade = max_order - 1;
    let sigma = sigma_series(max_grade, false);
    let series = geometric_times(&sigma, &sigma, max_grade);
    Ok((1..=max_order).map(|n| series.grade_part(n - 1)).collect())
}

/// Per-order term lists of `λ𝓟𝓛 Σ_k (Σ† + Σ − Σ†Σ)ᵏ (I − Σ)† Σ 𝓟`.
///
/// Monomials whose contributions cancel are retained as zero-net tallies and
/// reported through [`NcPolynomial::cancelled`].
pub fn expand_pinv_terms(max_order: usize) -> Result<Vec<NcPolynomial>> {
    check_max_order(max_order)?;
    let max_grade = max_order - 1;
    let sigma = sigma_series(max_grade, false);
    let sigma_dag = sigma_series(max_grade, true);
    let x = sigma_dag
        .add(&sigma)
        .sub(&sigma_dag.mul_truncated(&sigma, max_grade));
    let tail = NcPolynomial::one()
        .sub(&sigma_dag)
        .mul_truncated(&sigma, max_grade);
    let series = geometric_times(&x, &tail, max_grade);
    Ok((1..=max_order).map(|n| series.grade_part(n - 1)).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermEntry {
    pub coeff: i64,
    pub factors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CancelledEntry {
    pub factors: Vec<String>,
    pub positive: u64,
    pub negative: u64,
}

/// One order of a term table in its JSON form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermTable {
    pub order: usize,
    pub terms: Vec<TermEntry>,
    /// Daggered monomials produced by the expansion whose coefficients sum to zero.
    pub cancelled_daggered: Vec<CancelledEntry>,
    pub net_daggered_terms: usize,
}

impl TermTable {
    pub fn from_polynomial(order: usize, poly: &NcPolynomial) -> Self {
        let terms = poly
            .terms()
            .iter()
            .map(|m| TermEntry {
                coeff: m.coeff,
                factors: m.factor_names(),
            })
            .collect();
        let cancelled_daggered = poly
            .cancelled()
            .into_iter()
            .filter(|(f, _)| f.iter().any(NcSymbol::is_dagger))
            .map(|(f, t)| CancelledEntry {
                factors: f.iter().map(NcSymbol::name).collect(),
                positive: t.positive,
                negative: t.negative,
            })
            .collect();
        Self {
            order,
            terms,
            cancelled_daggered,
            net_daggered_terms: poly.daggered_terms().len(),
        }
    }
}

pub fn term_tables(polys: &[NcPolynomial]) -> Vec<TermTable> {
    polys
        .iter()
        .enumerate()
        .map(|(i, p)| TermTable::from_polynomial(i + 1, p))
        .collect()
}
