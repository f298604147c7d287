//! Constrained random generation of starting polynomials.
//!
//! Parameters are drawn top-down (variables, monomial degree budget,
//! product count); terms, factors and products are then built bottom-up
//! under residual budgets that shrink as each product grows. Every
//! "sample from a range" is uniform.

use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use thiserror::Error;

use crate::config::{ConfigError, ConstraintConfig};
use crate::expr::{Factor, InitialPoly, Product, SurfaceTerm};
use crate::poly::{PolyNF, Powers, VarId};

/// Factor resamples before the enclosing product is abandoned.
pub const FACTOR_RETRIES: u32 = 20;
/// Product resamples before the whole polynomial is abandoned.
pub const PRODUCT_RETRIES: u32 = 20;
/// Whole-polynomial restarts before giving up on the configuration.
pub const POLYNOMIAL_RETRIES: u32 = 200;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SamplingError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(#[from] ConfigError),
    #[error("no polynomial satisfied the constraints after {0} attempts")]
    SamplingExhausted(u32),
}

/// Independent random stream for record `index` under `seed`.
///
/// Records depend only on `(seed, index)`, never on generation order.
pub fn record_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Rejection and clamp counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SamplerStats {
    pub factor_rejections: u64,
    pub product_rejections: u64,
    pub polynomial_rejections: u64,
    /// Times a residual term or coefficient budget fell below the factor
    /// limit it was clamped against.
    pub residual_binds: u64,
}

impl SamplerStats {
    pub fn rejections(&self) -> u64 {
        self.factor_rejections + self.product_rejections + self.polynomial_rejections
    }

    pub fn merge(&mut self, other: &SamplerStats) {
        self.factor_rejections += other.factor_rejections;
        self.product_rejections += other.product_rejections;
        self.polynomial_rejections += other.polynomial_rejections;
        self.residual_binds += other.residual_binds;
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleParams {
    /// Participating variables, ascending.
    pub vars: Vec<VarId>,
    /// Degree budget for every monomial of every product.
    pub max_degree: u32,
    pub products: u32,
}

/// Budgets handed from a product to the next factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Residual {
    pub degree: u32,
    pub terms: u32,
    pub coeff: u64,
}

fn pick_vars<R: Rng + ?Sized>(from: &[VarId], count: usize, rng: &mut R) -> Vec<VarId> {
    let mut vs: Vec<VarId> = from.choose_multiple(rng, count.min(from.len())).copied().collect();
    vs.sort_unstable();
    vs
}

pub fn sample_params<R: Rng + ?Sized>(cfg: &ConstraintConfig, rng: &mut R) -> SampleParams {
    let all: Vec<VarId> = VarId::range(cfg.nvar).collect();
    let size = rng.gen_range(1..=cfg.max_vars.min(cfg.nvar).max(1)) as usize;
    let vars = pick_vars(&all, size, rng);
    let max_degree = rng.gen_range(1..=cfg.max_degree);
    let products = rng.gen_range(cfg.min_products..=cfg.max_products);
    SampleParams {
        vars,
        max_degree,
        products,
    }
}

/// Samples one factor within the residual budgets.
///
/// A term of degree `d` draws `d` variables with replacement and collects
/// them into powers, so a draw `[x_1, x_2, x_1, x_1]` becomes `x_1^3*x_2`.
/// Terms are sorted into monomial order; like terms stay adjacent.
pub fn build_factor<R: Rng + ?Sized>(
    vars: &[VarId],
    residual: Residual,
    cfg: &ConstraintConfig,
    rng: &mut R,
) -> Factor {
    let nv = rng.gen_range(1..=cfg.max_factor_vars) as usize;
    let cvars = pick_vars(vars, nv, rng);
    let nterms = rng.gen_range(1..=cfg.max_factor_terms.min(residual.terms).max(1));
    let max_d = cfg.max_factor_degree.min(residual.degree);
    let max_c = cfg.max_factor_coeff.min(residual.coeff).max(1);
    let degrees: Vec<u32> = (0..nterms).map(|_| rng.gen_range(0..=max_d)).collect();
    let coeffs: Vec<u64> = (0..nterms).map(|_| rng.gen_range(1..=max_c)).collect();
    let mut terms: Vec<(Powers, SurfaceTerm)> = degrees
        .iter()
        .zip(&coeffs)
        .map(|(&d, &c)| {
            let draws = (0..d).map(|_| (*cvars.choose(rng).expect("factor has variables"), 1));
            let powers = Powers::from_pairs(draws.collect::<Vec<_>>());
            let term = SurfaceTerm::raw(BigUint::from(c), &powers);
            (powers, term)
        })
        .collect();
    terms.sort_by(|a, b| a.0.cmp(&b.0));
    Factor::new(terms.into_iter().map(|(_, t)| t).collect())
}

fn saturating_u64(n: &BigUint) -> u64 {
    n.to_u64().unwrap_or(u64::MAX)
}

fn product_fits(nf: &PolyNF, cfg: &ConstraintConfig) -> bool {
    nf.term_count() <= cfg.max_product_terms as usize
        && saturating_u64(&nf.max_coeff()) <= cfg.max_product_coeff
}

/// Product construction shared by the plain and the rejecting sampler.
/// With `reject` set, a factor that pushes the running product past its
/// term or coefficient limit is resampled; `None` after the retry budget.
fn build_product_inner<R: Rng + ?Sized>(
    vars: &[VarId],
    mdeg: u32,
    cfg: &ConstraintConfig,
    rng: &mut R,
    stats: &mut SamplerStats,
    reject: bool,
) -> Option<Product> {
    let lo = cfg.max_factor_vars.min(cfg.max_product_vars);
    let nv = rng.gen_range(lo..=cfg.max_product_vars) as usize;
    let pvars = pick_vars(vars, nv, rng);
    let nfac = rng.gen_range(cfg.min_factors..=cfg.max_factors);

    let mut residual = Residual {
        degree: mdeg,
        terms: cfg.max_product_terms,
        coeff: cfg.max_product_coeff,
    };
    let mut cprod = PolyNF::one();
    let mut factors = Vec::with_capacity(nfac as usize);
    for _ in 0..nfac {
        if residual.terms < cfg.max_factor_terms || residual.coeff < cfg.max_factor_coeff {
            stats.residual_binds += 1;
        }
        let mut attempt = 0;
        let (factor, next) = loop {
            let f = build_factor(&pvars, residual, cfg, rng);
            let next = cprod.mul(&f.to_nf());
            if !reject || product_fits(&next, cfg) {
                break (f, next);
            }
            stats.factor_rejections += 1;
            attempt += 1;
            if attempt >= FACTOR_RETRIES {
                return None;
            }
        };
        residual.degree -= factor.degree();
        residual.terms = (cfg.max_product_terms / next.term_count().max(1) as u32).max(1);
        residual.coeff = (cfg.max_product_coeff / saturating_u64(&next.max_coeff()).max(1)).max(1);
        cprod = next;
        factors.push(factor);
        if residual.degree == 0 {
            break;
        }
    }
    factors.shuffle(rng);
    Some(Product::new(factors))
}

/// Samples one product under the product budgets, without rejection.
pub fn build_product<R: Rng + ?Sized>(
    vars: &[VarId],
    mdeg: u32,
    cfg: &ConstraintConfig,
    rng: &mut R,
) -> Product {
    let mut stats = SamplerStats::default();
    build_product_inner(vars, mdeg, cfg, rng, &mut stats, false).expect("no rejection")
}

/// Samples a starting polynomial that satisfies every limit of `cfg`.
pub fn build_polynomial<R: Rng + ?Sized>(
    cfg: &ConstraintConfig,
    rng: &mut R,
    stats: &mut SamplerStats,
) -> Result<InitialPoly, SamplingError> {
    cfg.validate()?;
    'poly: for _ in 0..POLYNOMIAL_RETRIES {
        let params = sample_params(cfg, rng);
        let mut products = Vec::with_capacity(params.products as usize);
        let mut endpoint = PolyNF::zero();
        for _ in 0..params.products {
            let mut accepted = None;
            for _ in 0..PRODUCT_RETRIES {
                let Some(p) = build_product_inner(&params.vars, params.max_degree, cfg, rng, stats, true)
                else {
                    stats.product_rejections += 1;
                    continue;
                };
                let pnf = p.to_nf();
                let sum = endpoint.add(&pnf);
                if !product_fits(&pnf, cfg)
                    || pnf.degree() > cfg.max_degree
                    || saturating_u64(&sum.max_coeff()) > cfg.max_coeff
                {
                    stats.product_rejections += 1;
                    continue;
                }
                accepted = Some((p, sum));
                break;
            }
            match accepted {
                Some((p, sum)) => {
                    products.push(p);
                    endpoint = sum;
                }
                None => {
                    stats.polynomial_rejections += 1;
                    continue 'poly;
                }
            }
        }
        return Ok(InitialPoly::new(products));
    }
    Err(SamplingError::SamplingExhausted(POLYNOMIAL_RETRIES))
}

/// The polynomial for record `index` of a dataset seeded with `seed`.
pub fn sample_record(
    cfg: &ConstraintConfig,
    seed: u64,
    index: u64,
    stats: &mut SamplerStats,
) -> Result<InitialPoly, SamplingError> {
    build_polynomial(cfg, &mut record_rng(seed, index), stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Preset;
    use crate::poly::tests::x;

    #[test]
    fn single_variable_params() {
        let cfg = Preset::MediumCoeff.config(1);
        let mut rng = record_rng(3, 0);
        for _ in 0..100 {
            let p = sample_params(&cfg, &mut rng);
            assert_eq!(p.vars, alloc::vec![x(1)]);
            assert!((1..=6).contains(&p.max_degree));
            assert!((2..=3).contains(&p.products));
        }
    }

    #[test]
    fn params_are_deterministic_per_seed() {
        let cfg = Preset::MediumCoeff.config(2);
        let a = sample_params(&cfg, &mut record_rng(11, 4));
        let b = sample_params(&cfg, &mut record_rng(11, 4));
        assert_eq!(a, b);
    }

    #[test]
    fn nprod_is_uniform() {
        let cfg = Preset::MediumCoeff.config(2);
        let mut rng = record_rng(5, 0);
        let n = 10_000;
        let twos = (0..n).filter(|_| sample_params(&cfg, &mut rng).products == 2).count();
        // binomial(10000, 0.5): sigma = 50
        assert!((twos as i64 - 5000).abs() <= 150, "{twos}");
    }

    #[test]
    fn singleton_ranges_give_the_constant_one() {
        let mut cfg = Preset::SmallCoeff.config(1);
        cfg.max_factor_terms = 1;
        cfg.max_factor_degree = 0;
        cfg.max_factor_coeff = 1;
        let residual = Residual { degree: 5, terms: 5, coeff: 5 };
        let f = build_factor(&[x(1)], residual, &cfg, &mut record_rng(0, 0));
        assert_eq!(f.terms, alloc::vec![SurfaceTerm::constant(1u32)]);
    }

    #[test]
    fn factors_respect_medium_limits() {
        let cfg = Preset::MediumCoeff.config(2);
        let mut rng = record_rng(9, 0);
        let full = Residual { degree: 6, terms: 8, coeff: 40 };
        for _ in 0..10_000 {
            let f = build_factor(&[x(1), x(2)], full, &cfg, &mut rng);
            assert!((1..=3).contains(&f.terms.len()));
            for t in &f.terms {
                assert!(t.degree() <= 3);
                let c = t.coeff_value().to_u64().unwrap();
                assert!((1..=8).contains(&c));
                assert!(t.powers.iter().all(|p| p.exp_shown));
            }
        }
    }

    #[test]
    fn exhausted_degree_stops_early() {
        let mut cfg = Preset::MediumCoeff.config(1);
        cfg.max_factor_degree = 1;
        cfg.max_factor_terms = 1;
        let mut rng = record_rng(1, 1);
        let mut single = 0;
        for _ in 0..500 {
            let p = build_product(&[x(1)], 1, &cfg, &mut rng);
            let degs: Vec<u32> = p.factors.iter().map(Factor::degree).collect();
            assert!(degs.iter().sum::<u32>() <= 1);
            // min_factors is 2, so one factor means the budget ran out first
            if p.factors.len() == 1 {
                assert_eq!(degs, alloc::vec![1]);
                single += 1;
            }
        }
        assert!(single > 0);
    }

    #[test]
    fn custom_infeasible_config_exhausts() {
        // three products drawn from {1, x_1} with unit coefficients always
        // collide, and C_P = 1 forbids the merged coefficient
        let mut cfg = Preset::SmallCoeff.config(1);
        cfg.max_coeff = 1;
        cfg.max_product_coeff = 1;
        cfg.max_factor_coeff = 1;
        cfg.max_degree = 1;
        cfg.max_factor_degree = 1;
        cfg.max_factor_terms = 1;
        cfg.max_product_terms = 1;
        cfg.min_products = 3;
        cfg.max_products = 3;
        let mut stats = SamplerStats::default();
        let r = build_polynomial(&cfg, &mut record_rng(0, 0), &mut stats);
        assert_eq!(r, Err(SamplingError::SamplingExhausted(POLYNOMIAL_RETRIES)));
        assert!(stats.rejections() > 0);
    }

    #[test]
    fn invalid_config_is_reported() {
        let mut cfg = Preset::SmallCoeff.config(1);
        cfg.max_factor_coeff = 0;
        let r = build_polynomial(&cfg, &mut record_rng(0, 0), &mut SamplerStats::default());
        assert!(matches!(r, Err(SamplingError::InvalidConfig(_))));
    }
}
