//! Exact sparse multivariate polynomials with non-negative integer
//! coefficients, kept in a single canonical normal form.
//!
//! The normal form is the ground truth for every correctness check in the
//! crate: two expressions are equal iff their [`PolyNF`]s are equal.
//!
//! Monomials are ordered by descending total degree, ties broken by
//! descending lexicographic comparison of exponent vectors with `x_1`
//! most significant.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};

/// A variable `x_i`, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(u32);

impl VarId {
    /// Returns `None` for index 0.
    pub fn new(index: u32) -> Option<Self> {
        (index >= 1).then_some(VarId(index))
    }

    pub fn index(self) -> u32 {
        self.0
    }

    /// All variables `x_1..=x_n`.
    pub fn range(n: u32) -> impl Iterator<Item = VarId> {
        (1..=n).map(VarId)
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x_{}", self.0)
    }
}

/// Exponent vector of a monomial: `(var, exponent)` pairs sorted by
/// variable, no zero exponents.
///
/// `Ord` is the canonical monomial order: `a < b` means `a` is written
/// before `b`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Powers(Vec<(VarId, u32)>);

impl Powers {
    pub fn one() -> Self {
        Powers(Vec::new())
    }

    /// Builds from arbitrary pairs: repeated variables are added up and
    /// zero exponents dropped.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (VarId, u32)>) -> Self {
        let mut map: BTreeMap<VarId, u32> = BTreeMap::new();
        for (v, e) in pairs {
            *map.entry(v).or_insert(0) += e;
        }
        Powers(map.into_iter().filter(|&(_, e)| e > 0).collect())
    }

    pub fn pairs(&self) -> &[(VarId, u32)] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn exponent(&self, var: VarId) -> u32 {
        self.0
            .iter()
            .find(|&&(v, _)| v == var)
            .map_or(0, |&(_, e)| e)
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.0.iter().map(|&(v, _)| v)
    }

    pub fn mul(&self, other: &Powers) -> Powers {
        Powers::from_pairs(self.0.iter().chain(other.0.iter()).copied())
    }

    /// Lexicographic comparison of the dense exponent vectors, larger
    /// exponent on the earliest differing variable sorts first.
    fn lex_cmp(&self, other: &Powers) -> Ordering {
        let (mut a, mut b) = (self.0.iter().peekable(), other.0.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Less,
                (None, Some(_)) => return Ordering::Greater,
                (Some(&&(va, ea)), Some(&&(vb, eb))) => match va.cmp(&vb) {
                    Ordering::Less => return Ordering::Less,
                    Ordering::Greater => return Ordering::Greater,
                    Ordering::Equal => {
                        if ea != eb {
                            return eb.cmp(&ea);
                        }
                        a.next();
                        b.next();
                    }
                },
            }
        }
    }
}

impl Ord for Powers {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .degree()
            .cmp(&self.degree())
            .then_with(|| self.lex_cmp(other))
    }
}

impl PartialOrd for Powers {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A single monomial `coeff * Π x_i^e_i` with a nonzero coefficient.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial {
    pub coeff: BigUint,
    pub powers: Powers,
}

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.powers.degree()
    }
}

/// Canonical polynomial: monomials strictly increasing under the
/// canonical order, no zero coefficients. The empty list is zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct PolyNF {
    monomials: Vec<Monomial>,
}

impl PolyNF {
    pub fn zero() -> Self {
        PolyNF::default()
    }

    pub fn one() -> Self {
        PolyNF::constant(BigUint::one())
    }

    pub fn constant(c: BigUint) -> Self {
        PolyNF::from_terms([(Powers::one(), c)])
    }

    pub fn monomial(coeff: BigUint, powers: Powers) -> Self {
        PolyNF::from_terms([(powers, coeff)])
    }

    /// Collects terms into normal form, merging like monomials.
    pub fn from_terms(terms: impl IntoIterator<Item = (Powers, BigUint)>) -> Self {
        let mut acc: BTreeMap<Powers, BigUint> = BTreeMap::new();
        for (p, c) in terms {
            if c.is_zero() {
                continue;
            }
            *acc.entry(p).or_default() += c;
        }
        Self::from_map(acc)
    }

    fn from_map(acc: BTreeMap<Powers, BigUint>) -> Self {
        PolyNF {
            monomials: acc
                .into_iter()
                .filter(|(_, c)| !c.is_zero())
                .map(|(powers, coeff)| Monomial { coeff, powers })
                .collect(),
        }
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn is_zero(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn add(&self, other: &PolyNF) -> PolyNF {
        PolyNF::from_terms(
            self.monomials
                .iter()
                .chain(other.monomials.iter())
                .map(|m| (m.powers.clone(), m.coeff.clone())),
        )
    }

    pub fn mul(&self, other: &PolyNF) -> PolyNF {
        let mut acc: BTreeMap<Powers, BigUint> = BTreeMap::new();
        for a in &self.monomials {
            for b in &other.monomials {
                *acc.entry(a.powers.mul(&b.powers)).or_default() += &a.coeff * &b.coeff;
            }
        }
        Self::from_map(acc)
    }

    /// Largest total degree; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.monomials.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Largest coefficient; 0 for the zero polynomial.
    pub fn max_coeff(&self) -> BigUint {
        self.monomials
            .iter()
            .map(|m| m.coeff.clone())
            .max()
            .unwrap_or_default()
    }

    pub fn term_count(&self) -> usize {
        self.monomials.len()
    }

    /// Variables occurring in any monomial, ascending.
    pub fn vars(&self) -> Vec<VarId> {
        let mut vs: Vec<VarId> = self.monomials.iter().flat_map(|m| m.powers.vars()).collect();
        vs.sort_unstable();
        vs.dedup();
        vs
    }

    /// Evaluates at `point`, where `point[i]` is the value of `x_{i+1}`.
    /// Variables past the end of `point` evaluate to 0.
    pub fn eval(&self, point: &[u64]) -> BigUint {
        let mut total = BigUint::zero();
        for m in &self.monomials {
            let mut v = m.coeff.clone();
            for &(var, e) in m.powers.pairs() {
                let x = point.get(var.index() as usize - 1).copied().unwrap_or(0);
                v *= BigUint::from(x).pow(e);
            }
            total += v;
        }
        total
    }

    /// Stable string key, injective on normal forms. Zero maps to `"0"`.
    pub fn canonical_key(&self) -> String {
        alloc::format!("{self}")
    }
}

/// Compact infix rendering without spaces, e.g. `30*x_1^3+6*x_2^3`.
impl fmt::Display for PolyNF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.monomials.is_empty() {
            return f.write_str("0");
        }
        for (i, m) in self.monomials.iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            let mut first = true;
            if !m.coeff.is_one() || m.powers.is_one() {
                write!(f, "{}", m.coeff)?;
                first = false;
            }
            for &(v, e) in m.powers.pairs() {
                if !first {
                    f.write_str("*")?;
                }
                first = false;
                write!(f, "{v}")?;
                if e != 1 {
                    write!(f, "^{e}")?;
                }
            }
        }
        Ok(())
    }
}

pub fn nf_add(a: &PolyNF, b: &PolyNF) -> PolyNF {
    a.add(b)
}

pub fn nf_mul(a: &PolyNF, b: &PolyNF) -> PolyNF {
    a.mul(b)
}
