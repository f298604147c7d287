//! Deterministic simplification proofs.
//!
//! From any state exactly one step applies: factor simplification first,
//! then multiplication inside products, then the sum of products, always
//! leftmost first. Steps that would not change the text are never taken,
//! so every state in a proof differs from its predecessor.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;
use core::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::expr::{Factor, InitialPoly, Num, Power, ProofState, Product, SurfaceTerm};
use crate::poly::{PolyNF, Powers, VarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StepKind {
    Fac,
    Mul,
    Sum,
    Mark,
}

impl StepKind {
    pub const ALL: [StepKind; 4] = [StepKind::Fac, StepKind::Mul, StepKind::Sum, StepKind::Mark];

    pub fn label(self) -> &'static str {
        match self {
            StepKind::Fac => "FAC",
            StepKind::Mul => "MUL",
            StepKind::Sum => "SUM",
            StepKind::Mark => "MARK",
        }
    }
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for StepKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        StepKind::ALL.into_iter().find(|k| k.label() == s).ok_or(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Granularity {
    Coarse,
    Fine,
}

impl Granularity {
    pub fn name(self) -> &'static str {
        match self {
            Granularity::Coarse => "coarse",
            Granularity::Fine => "fine",
        }
    }
}

impl FromStr for Granularity {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "coarse" => Ok(Granularity::Coarse),
            "fine" => Ok(Granularity::Fine),
            _ => Err(()),
        }
    }
}

/// Where a step acts.
///
/// `products` is always set. `factors` narrows to a factor range of the
/// single product in `products` (`None`: all of its factors). `terms`
/// narrows further to a term range of the single factor in `factors`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Locus {
    pub products: Range<usize>,
    pub factors: Option<Range<usize>>,
    pub terms: Option<Range<usize>>,
}

impl Locus {
    fn products(r: Range<usize>) -> Self {
        Locus { products: r, factors: None, terms: None }
    }

    fn factors(product: usize, r: Option<Range<usize>>) -> Self {
        Locus { products: product..product + 1, factors: r, terms: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofStep {
    pub kind: StepKind,
    pub locus: Locus,
    pub before: ProofState,
    pub after: ProofState,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Proof {
    pub initial: InitialPoly,
    pub granularity: Granularity,
    pub steps: Vec<ProofStep>,
    pub endpoint: PolyNF,
}

impl Proof {
    pub fn final_state(&self) -> ProofState {
        self.steps
            .last()
            .map_or_else(|| self.initial.state(), |s| s.after.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProofError {
    #[error("state cannot be canonicalized by a proof step")]
    NotCanonicalizable,
}

/// Result of asking for the next step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Next {
    Step(ProofStep),
    Terminal,
}

/// Arithmetic rendering of merged results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Arithmetic {
    /// Results written as literals.
    #[default]
    Evaluated,
    /// Results written as `[...]` brackets left for a calculator.
    Deferred { exponents: bool },
}

/// A monomial contribution before like terms are merged: the factors of
/// its coefficient and, per variable, the exponents that add up.
#[derive(Debug, Clone)]
struct Summand {
    coeff: Vec<BigUint>,
    exps: BTreeMap<VarId, Vec<u32>>,
}

impl Summand {
    fn of_term(t: &SurfaceTerm) -> Self {
        let mut exps: BTreeMap<VarId, Vec<u32>> = BTreeMap::new();
        for p in &t.powers {
            let e = p.exp_value().to_u32().unwrap_or(u32::MAX);
            if e > 0 {
                exps.entry(p.var).or_default().push(e);
            }
        }
        Summand { coeff: vec![t.coeff_value()], exps }
    }

    fn times(&self, other: &Summand) -> Self {
        let mut exps = self.exps.clone();
        for (v, es) in &other.exps {
            exps.entry(*v).or_default().extend_from_slice(es);
        }
        let mut coeff = self.coeff.clone();
        coeff.extend_from_slice(&other.coeff);
        Summand { coeff, exps }
    }

    fn powers(&self) -> Powers {
        Powers::from_pairs(self.exps.iter().map(|(v, es)| (*v, es.iter().sum())))
    }

    fn value(&self) -> BigUint {
        self.coeff.iter().fold(BigUint::one(), |a, b| a * b)
    }
}

/// Merges like summands into simplified terms in monomial order.
fn merge(summands: Vec<Summand>, arith: Arithmetic) -> Vec<SurfaceTerm> {
    let mut groups: BTreeMap<Powers, Vec<Summand>> = BTreeMap::new();
    for s in summands {
        groups.entry(s.powers()).or_default().push(s);
    }
    let mut out = Vec::with_capacity(groups.len());
    for (powers, group) in groups {
        let value: BigUint = group.iter().map(Summand::value).sum();
        if value.is_zero() {
            continue;
        }
        let Arithmetic::Deferred { exponents } = arith else {
            out.push(SurfaceTerm::canonical(value, &powers));
            continue;
        };
        let operands: Vec<Vec<BigUint>> = group
            .iter()
            .map(|s| {
                let f: Vec<BigUint> = s.coeff.iter().filter(|c| !c.is_one()).cloned().collect();
                if f.is_empty() { vec![BigUint::one()] } else { f }
            })
            .collect();
        let coeff = if operands.len() > 1 || operands[0].len() > 1 {
            Num::Bracket(operands)
        } else {
            Num::Lit(value.clone())
        };
        let first = &group[0];
        let powers = powers
            .pairs()
            .iter()
            .map(|&(var, e)| {
                let parts = first.exps.get(&var).map_or(0, Vec::len);
                if exponents && parts > 1 {
                    let sum = first.exps[&var].iter().map(|&e| vec![BigUint::from(e)]).collect();
                    Power { var, exp: Num::Bracket(sum), exp_shown: true }
                } else {
                    Power { var, exp: Num::lit(e), exp_shown: e != 1 }
                }
            })
            .collect::<Vec<_>>();
        let coeff_shown = coeff.is_bracket() || !value.is_one() || powers.is_empty();
        out.push(SurfaceTerm { coeff, coeff_shown, powers });
    }
    if out.is_empty() {
        out.push(SurfaceTerm::constant(0u32));
    }
    out
}

fn canonicalize_factor(f: &Factor, arith: Arithmetic) -> Factor {
    Factor::new(merge(f.terms.iter().map(Summand::of_term).collect(), arith))
}

fn multiply_factors(fs: &[Factor], arith: Arithmetic) -> Factor {
    let mut acc = vec![Summand { coeff: Vec::new(), exps: BTreeMap::new() }];
    for f in fs {
        let terms: Vec<Summand> = f.terms.iter().map(Summand::of_term).collect();
        acc = acc.iter().flat_map(|a| terms.iter().map(move |t| a.times(t))).collect();
    }
    Factor::new(merge(acc, arith))
}

fn sum_products(ps: &[Product], arith: Arithmetic) -> Factor {
    Factor::new(merge(
        ps.iter()
            .flat_map(|p| p.factors.iter().flat_map(|f| f.terms.iter()))
            .map(Summand::of_term)
            .collect(),
        arith,
    ))
}

/// Term indices grouped by merged powers, groups in order of first
/// occurrence.
fn like_groups(f: &Factor) -> Vec<Vec<usize>> {
    let mut groups: Vec<(Powers, Vec<usize>)> = Vec::new();
    for (i, t) in f.terms.iter().enumerate() {
        let p = t.merged_powers();
        match groups.iter_mut().find(|(q, _)| *q == p) {
            Some((_, idx)) => idx.push(i),
            None => groups.push((p, vec![i])),
        }
    }
    groups.into_iter().map(|(_, idx)| idx).collect()
}

fn group_needs_work(f: &Factor, group: &[usize]) -> bool {
    group.len() > 1 || !f.terms[group[0]].is_canonical()
}

/// Merges one like-term group, placing the result where the group starts.
fn canonicalize_group(f: &Factor, group: &[usize], arith: Arithmetic) -> Factor {
    let summands = group.iter().map(|&i| Summand::of_term(&f.terms[i])).collect();
    let mut merged = merge(summands, arith);
    let is_zero = merged.len() == 1 && merged[0].coeff_value().is_zero();
    let mut terms = Vec::with_capacity(f.terms.len());
    for (i, t) in f.terms.iter().enumerate() {
        if i == group[0] {
            if !is_zero {
                terms.append(&mut merged);
            }
        } else if !group.contains(&i) {
            terms.push(t.clone());
        }
    }
    if terms.is_empty() {
        terms.push(SurfaceTerm::constant(0u32));
    }
    Factor::new(terms)
}

/// Picks the unique next step for `state`, without applying it.
pub fn next_locus(
    state: &ProofState,
    granularity: Granularity,
) -> Result<Option<(StepKind, Locus)>, ProofError> {
    let products = match state {
        ProofState::Flat(f) if f.is_canonical() => return Ok(None),
        ProofState::Flat(_) => return Err(ProofError::NotCanonicalizable),
        ProofState::Sum(ps) if ps.is_empty() => return Err(ProofError::NotCanonicalizable),
        ProofState::Sum(ps) => ps,
    };
    if products.iter().any(|p| p.factors.is_empty()) {
        return Err(ProofError::NotCanonicalizable);
    }

    for (i, p) in products.iter().enumerate() {
        let Some(j) = p.factors.iter().position(|f| !f.is_canonical()) else {
            continue;
        };
        if granularity == Granularity::Coarse {
            return Ok(Some((StepKind::Fac, Locus::factors(i, None))));
        }
        let f = &p.factors[j];
        let terms = like_groups(f)
            .into_iter()
            .find(|g| group_needs_work(f, g))
            .map_or(0..f.terms.len(), |g| g[0]..g[g.len() - 1] + 1);
        return Ok(Some((
            StepKind::Fac,
            Locus { products: i..i + 1, factors: Some(j..j + 1), terms: Some(terms) },
        )));
    }

    if let Some(i) = products.iter().position(|p| p.factors.len() > 1) {
        let factors = match granularity {
            Granularity::Coarse => None,
            Granularity::Fine => Some(0..2),
        };
        return Ok(Some((StepKind::Mul, Locus::factors(i, factors))));
    }

    match (products.len(), granularity) {
        (1, _) => Ok(None),
        (n, Granularity::Coarse) => Ok(Some((StepKind::Sum, Locus::products(0..n)))),
        (_, Granularity::Fine) => Ok(Some((StepKind::Sum, Locus::products(0..2)))),
    }
}

/// Applies a step chosen by [`next_locus`] to `state`.
pub fn apply(
    state: &ProofState,
    kind: StepKind,
    locus: &Locus,
    arith: Arithmetic,
) -> Result<ProofState, ProofError> {
    let ProofState::Sum(products) = state else {
        return Err(ProofError::NotCanonicalizable);
    };
    let mut products = products.clone();
    let i = locus.products.start;
    match kind {
        StepKind::Fac => {
            let p = products.get_mut(i).ok_or(ProofError::NotCanonicalizable)?;
            match (&locus.factors, &locus.terms) {
                (None, _) => {
                    for f in &mut p.factors {
                        if !f.is_canonical() {
                            *f = canonicalize_factor(f, arith);
                        }
                    }
                }
                (Some(fr), terms) => {
                    let f = p.factors.get_mut(fr.start).ok_or(ProofError::NotCanonicalizable)?;
                    let group = terms.as_ref().and_then(|tr| {
                        like_groups(f).into_iter().find(|g| g[0] == tr.start && group_needs_work(f, g))
                    });
                    *f = match group {
                        Some(g) => canonicalize_group(f, &g, arith),
                        None => canonicalize_factor(f, arith),
                    };
                }
            }
        }
        StepKind::Mul => {
            let p = products.get_mut(i).ok_or(ProofError::NotCanonicalizable)?;
            let range = locus.factors.clone().unwrap_or(0..p.factors.len());
            if range.end > p.factors.len() || range.len() < 2 {
                return Err(ProofError::NotCanonicalizable);
            }
            let merged = multiply_factors(&p.factors[range.clone()], arith);
            p.factors.splice(range, [merged]);
        }
        StepKind::Sum => {
            let range = locus.products.clone();
            if range.end > products.len() || range.len() < 2 {
                return Err(ProofError::NotCanonicalizable);
            }
            let merged = sum_products(&products[range.clone()], arith);
            if range.len() == products.len() {
                return Ok(ProofState::Flat(merged));
            }
            products.splice(range, [Product::new(vec![merged])]);
        }
        StepKind::Mark => return Err(ProofError::NotCanonicalizable),
    }
    Ok(ProofState::Sum(products))
}

/// The single step following `state`, or `Terminal`.
pub fn next_step(state: &ProofState, granularity: Granularity) -> Result<Next, ProofError> {
    match next_locus(state, granularity)? {
        None => Ok(Next::Terminal),
        Some((kind, locus)) => {
            let after = apply(state, kind, &locus, Arithmetic::Evaluated)?;
            Ok(Next::Step(ProofStep { kind, locus, before: state.clone(), after }))
        }
    }
}

/// Builds the unique proof of `initial` at the given granularity.
pub fn generate_proof(initial: &InitialPoly, granularity: Granularity) -> Proof {
    let mut state = initial.state();
    let mut steps = Vec::new();
    // every step strictly shrinks (unsimplified groups, factors, products)
    while let Next::Step(step) =
        next_step(&state, granularity).expect("sampled polynomials are well formed")
    {
        state = step.after.clone();
        steps.push(step);
    }
    Proof {
        initial: initial.clone(),
        granularity,
        steps,
        endpoint: state.to_nf(),
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use alloc::string::ToString;
    use super::*;
    use crate::poly::tests::x;

    fn term(c: u32, pw: &[(u32, u32)], raw: bool) -> SurfaceTerm {
        let p = Powers::from_pairs(pw.iter().map(|&(v, e)| (x(v), e)));
        if raw {
            SurfaceTerm::raw(BigUint::from(c), &p)
        } else {
            SurfaceTerm::canonical(BigUint::from(c), &p)
        }
    }

    /// `(2*x_2^2)*(3*x_2^1 + 4)+(5*x_1^2 + x_1^1*x_2^1)*(3*x_1^1)*(2)`
    pub(crate) fn worked_example() -> InitialPoly {
        InitialPoly::new(vec![
            Product::new(vec![
                Factor::new(vec![term(2, &[(2, 2)], true)]),
                Factor::new(vec![term(3, &[(2, 1)], true), term(4, &[], true)]),
            ]),
            Product::new(vec![
                Factor::new(vec![term(5, &[(1, 2)], true), term(1, &[(1, 1), (2, 1)], true)]),
                Factor::new(vec![term(3, &[(1, 1)], true)]),
                Factor::new(vec![term(2, &[], true)]),
            ]),
        ])
    }

    #[test]
    fn worked_example_coarse_kinds() {
        let proof = generate_proof(&worked_example(), Granularity::Coarse);
        let kinds: Vec<StepKind> = proof.steps.iter().map(|s| s.kind).collect();
        use StepKind::*;
        assert_eq!(kinds, vec![Fac, Fac, Mul, Mul, Sum]);
        assert_eq!(proof.endpoint.to_string(), "30*x_1^3+6*x_1^2*x_2+6*x_2^3+8*x_2^2");
        assert!(matches!(proof.final_state(), ProofState::Flat(_)));
    }

    #[test]
    fn fine_proof_multiplies_pairs() {
        let proof = generate_proof(&worked_example(), Granularity::Fine);
        let kinds: Vec<StepKind> = proof.steps.iter().map(|s| s.kind).collect();
        use StepKind::*;
        // product 1: one group; product 2: one group in factor 1, one in factor 2
        assert_eq!(kinds, vec![Fac, Fac, Fac, Mul, Mul, Mul, Sum]);
        assert_eq!(proof.endpoint, worked_example().to_nf());
    }

    #[test]
    fn canonical_single_factor_has_no_steps() {
        let p = InitialPoly::new(vec![Product::new(vec![Factor::new(vec![
            term(2, &[(1, 1)], false),
            term(1, &[], false),
        ])])]);
        let proof = generate_proof(&p, Granularity::Coarse);
        assert!(proof.steps.is_empty());
        assert_eq!(proof.endpoint.to_string(), "2*x_1+1");
        assert_eq!(next_step(&p.state(), Granularity::Fine), Ok(Next::Terminal));
    }

    #[test]
    fn like_constant_terms_merge() {
        let f = Factor::new(vec![term(3, &[], true), term(4, &[], true)]);
        let p = InitialPoly::new(vec![Product::new(vec![f])]);
        let proof = generate_proof(&p, Granularity::Fine);
        assert_eq!(proof.steps.len(), 1);
        assert_eq!(proof.endpoint.to_string(), "7");
    }

    #[test]
    fn malformed_flat_state_is_rejected() {
        let flat = ProofState::Flat(Factor::new(vec![term(1, &[(1, 1)], false), term(1, &[(1, 1)], false)]));
        assert_eq!(next_step(&flat, Granularity::Coarse), Err(ProofError::NotCanonicalizable));
        assert_eq!(next_step(&ProofState::Sum(vec![]), Granularity::Coarse), Err(ProofError::NotCanonicalizable));
    }

    #[test]
    fn deferred_multiplication_of_like_powers() {
        let state = ProofState::Sum(vec![Product::new(vec![
            Factor::new(vec![term(3, &[(1, 1)], false)]),
            Factor::new(vec![term(4, &[(1, 1)], false)]),
        ])]);
        let (kind, locus) = next_locus(&state, Granularity::Coarse).unwrap().unwrap();
        let ProofState::Sum(ps) = apply(&state, kind, &locus, Arithmetic::Deferred { exponents: false }).unwrap()
        else {
            panic!()
        };
        let t = &ps[0].factors[0].terms[0];
        assert_eq!(t.coeff, Num::Bracket(vec![vec![BigUint::from(3u32), BigUint::from(4u32)]]));
        assert_eq!(t.powers[0].exp, Num::lit(2u32));
    }
}
