//! Surface expressions: polynomials as written, before simplification.
//!
//! A surface expression keeps everything the normal form throws away:
//! explicit `^1` exponents, unmerged like terms, factor boundaries and
//! deferred-arithmetic brackets. Proof states are built from these.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::poly::{PolyNF, Powers, VarId};

/// An integer as written: a literal, or a bracketed sum of products whose
/// evaluation is deferred to a calculator (`[3*4]`, `[2+3]`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Num {
    Lit(BigUint),
    /// Sum of products; each inner list is non-empty.
    Bracket(Vec<Vec<BigUint>>),
}

impl Num {
    pub fn lit(n: impl Into<BigUint>) -> Self {
        Num::Lit(n.into())
    }

    pub fn value(&self) -> BigUint {
        match self {
            Num::Lit(n) => n.clone(),
            Num::Bracket(sum) => sum
                .iter()
                .map(|prod| prod.iter().fold(BigUint::one(), |acc, x| acc * x))
                .sum(),
        }
    }

    pub fn is_bracket(&self) -> bool {
        matches!(self, Num::Bracket(_))
    }
}

/// `x_i` or `x_i^e` inside a term.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Power {
    pub var: VarId,
    pub exp: Num,
    /// When false the exponent is 1 and `^1` is not written.
    pub exp_shown: bool,
}

impl Power {
    pub fn exp_value(&self) -> BigUint {
        self.exp.value()
    }
}

/// A term as written: optional coefficient followed by powers.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SurfaceTerm {
    pub coeff: Num,
    /// When false the coefficient is 1 and omitted; only legal with at
    /// least one power.
    pub coeff_shown: bool,
    pub powers: Vec<Power>,
}

impl SurfaceTerm {
    pub fn constant(c: impl Into<BigUint>) -> Self {
        SurfaceTerm {
            coeff: Num::Lit(c.into()),
            coeff_shown: true,
            powers: Vec::new(),
        }
    }

    /// Raw sampler rendering: every exponent written, unit coefficient
    /// omitted.
    pub fn raw(coeff: BigUint, powers: &Powers) -> Self {
        let coeff_shown = !coeff.is_one() || powers.is_one();
        SurfaceTerm {
            coeff: Num::Lit(coeff),
            coeff_shown,
            powers: powers
                .pairs()
                .iter()
                .map(|&(var, e)| Power {
                    var,
                    exp: Num::lit(e),
                    exp_shown: true,
                })
                .collect(),
        }
    }

    /// Simplified rendering: no `^1`, no unit coefficient.
    pub fn canonical(coeff: BigUint, powers: &Powers) -> Self {
        let coeff_shown = !coeff.is_one() || powers.is_one();
        SurfaceTerm {
            coeff: Num::Lit(coeff),
            coeff_shown,
            powers: powers
                .pairs()
                .iter()
                .map(|&(var, e)| Power {
                    var,
                    exp: Num::lit(e),
                    exp_shown: e != 1,
                })
                .collect(),
        }
    }

    pub fn coeff_value(&self) -> BigUint {
        self.coeff.value()
    }

    /// Exponent vector with repeated variables combined. Exponents are
    /// bounded at parse time so the conversion cannot truncate.
    pub fn merged_powers(&self) -> Powers {
        Powers::from_pairs(
            self.powers
                .iter()
                .map(|p| (p.var, p.exp_value().to_u32().unwrap_or(u32::MAX))),
        )
    }

    pub fn degree(&self) -> u32 {
        self.merged_powers().degree()
    }

    pub fn to_nf(&self) -> PolyNF {
        PolyNF::monomial(self.coeff_value(), self.merged_powers())
    }

    pub fn is_canonical(&self) -> bool {
        let c = self.coeff_value();
        !c.is_zero() && *self == SurfaceTerm::canonical(c, &self.merged_powers())
    }
}

/// A parenthesized sum of terms.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Factor {
    pub terms: Vec<SurfaceTerm>,
}

impl Factor {
    pub fn new(terms: Vec<SurfaceTerm>) -> Self {
        Factor { terms }
    }

    /// The simplified rendering of a normal form; zero renders as `0`.
    pub fn canonical_from_nf(nf: &PolyNF) -> Self {
        if nf.is_zero() {
            return Factor::new(vec![SurfaceTerm::constant(0u32)]);
        }
        Factor::new(
            nf.monomials()
                .iter()
                .map(|m| SurfaceTerm::canonical(m.coeff.clone(), &m.powers))
                .collect(),
        )
    }

    pub fn to_nf(&self) -> PolyNF {
        PolyNF::from_terms(
            self.terms
                .iter()
                .map(|t| (t.merged_powers(), t.coeff_value())),
        )
    }

    pub fn is_canonical(&self) -> bool {
        *self == Factor::canonical_from_nf(&self.to_nf())
    }

    /// Largest term degree.
    pub fn degree(&self) -> u32 {
        self.terms.iter().map(SurfaceTerm::degree).max().unwrap_or(0)
    }

    pub fn vars(&self) -> Vec<VarId> {
        let mut vs: Vec<VarId> = self
            .terms
            .iter()
            .flat_map(|t| t.powers.iter().map(|p| p.var))
            .collect();
        vs.sort_unstable();
        vs.dedup();
        vs
    }
}

/// A product of factors.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Product {
    pub factors: Vec<Factor>,
}

impl Product {
    pub fn new(factors: Vec<Factor>) -> Self {
        Product { factors }
    }

    pub fn to_nf(&self) -> PolyNF {
        self.factors
            .iter()
            .fold(PolyNF::one(), |acc, f| acc.mul(&f.to_nf()))
    }

    pub fn vars(&self) -> Vec<VarId> {
        let mut vs: Vec<VarId> = self.factors.iter().flat_map(Factor::vars).collect();
        vs.sort_unstable();
        vs.dedup();
        vs
    }

    /// A single simplified factor: nothing left to do inside the product.
    pub fn is_expanded(&self) -> bool {
        self.factors.len() == 1 && self.factors[0].is_canonical()
    }
}

/// A sampled starting polynomial: a sum of products.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InitialPoly {
    pub products: Vec<Product>,
}

impl InitialPoly {
    pub fn new(products: Vec<Product>) -> Self {
        InitialPoly { products }
    }

    pub fn to_nf(&self) -> PolyNF {
        self.products
            .iter()
            .fold(PolyNF::zero(), |acc, p| acc.add(&p.to_nf()))
    }

    pub fn vars(&self) -> Vec<VarId> {
        let mut vs: Vec<VarId> = self.products.iter().flat_map(Product::vars).collect();
        vs.sort_unstable();
        vs.dedup();
        vs
    }

    pub fn state(&self) -> ProofState {
        ProofState::Sum(self.products.clone())
    }
}

/// One state along a proof.
///
/// `Sum` is a sum of parenthesized products, each factor either raw or
/// simplified and each product possibly already expanded to one factor.
/// `Flat` is an unparenthesized sum of terms: the shape of an endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ProofState {
    Sum(Vec<Product>),
    Flat(Factor),
}

impl ProofState {
    pub fn to_nf(&self) -> PolyNF {
        match self {
            ProofState::Sum(ps) => ps.iter().fold(PolyNF::zero(), |acc, p| acc.add(&p.to_nf())),
            ProofState::Flat(f) => f.to_nf(),
        }
    }

    /// Bracket-free and in simplified form: nothing left to rewrite.
    pub fn is_terminal(&self) -> bool {
        match self {
            ProofState::Flat(f) => f.is_canonical(),
            ProofState::Sum(ps) => ps.len() == 1 && ps[0].is_expanded(),
        }
    }

    /// Product/factor skeleton: `None` for a flat sum, otherwise the
    /// factor count of every product.
    pub fn shape(&self) -> Option<Vec<usize>> {
        match self {
            ProofState::Flat(_) => None,
            ProofState::Sum(ps) => Some(ps.iter().map(|p| p.factors.len()).collect()),
        }
    }

    pub fn has_brackets(&self) -> bool {
        let factor_has = |f: &Factor| {
            f.terms.iter().any(|t| {
                t.coeff.is_bracket() || t.powers.iter().any(|p| p.exp.is_bracket())
            })
        };
        match self {
            ProofState::Flat(f) => factor_has(f),
            ProofState::Sum(ps) => ps.iter().any(|p| p.factors.iter().any(factor_has)),
        }
    }
}
