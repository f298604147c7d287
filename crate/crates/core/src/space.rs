//! Problem-space size by cross-sample collisions, and endpoint dedup.
//!
//! Two independent samples of sizes `n1`, `n2` drawn uniformly from `X`
//! items share about `n1 * n2 / X` matching pairs, so `X` is estimated as
//! `n1 * n2 / R`. Skewed distributions collide more often, which makes the
//! estimate a lower bound in practice.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};

use rand::Rng;
use thiserror::Error;

use crate::config::ConstraintConfig;
use crate::expr::ProofState;
use crate::proof::{generate_proof, Granularity};
use crate::sampler::{record_rng, sample_record, SamplerStats, SamplingError};
use crate::text::{serialize, Notation, NumberEncoding, TextFormat, VarEncoding};

/// At or below this many collisions the estimate is unreliable.
pub const RELIABLE_COLLISIONS: u64 = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpaceError {
    #[error("sample sizes must be at least 1")]
    EmptySample,
    #[error(transparent)]
    Sampling(#[from] SamplingError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionEstimate {
    pub n1: u64,
    pub n2: u64,
    /// Matching cross pairs.
    pub collisions: u64,
    /// `n1 * n2 / collisions`; absent without collisions.
    pub estimate: Option<f64>,
    /// `n1 * n2`: the size is likely above this when nothing collided.
    pub floor: f64,
    pub lower_bound_flag: bool,
}

impl CollisionEstimate {
    pub fn from_counts(n1: u64, n2: u64, collisions: u64) -> Self {
        let pairs = n1 as f64 * n2 as f64;
        CollisionEstimate {
            n1,
            n2,
            collisions,
            estimate: (collisions > 0).then(|| pairs / collisions as f64),
            floor: pairs,
            lower_bound_flag: collisions <= RELIABLE_COLLISIONS,
        }
    }
}

/// Pairs `(a, b)` with equal keys, `a` from the first sample.
pub fn count_collisions<K: Ord>(first: impl IntoIterator<Item = K>, second: impl IntoIterator<Item = K>) -> u64 {
    let mut counts: BTreeMap<K, u64> = BTreeMap::new();
    for k in first {
        *counts.entry(k).or_default() += 1;
    }
    second.into_iter().map(|k| counts.get(&k).copied().unwrap_or(0)).sum()
}

/// Which object identifies a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keyer {
    /// The unsimplified polynomial as written.
    Initial,
    /// Its simplified endpoint.
    Endpoint,
}

const KEY_FORMAT: TextFormat = TextFormat {
    notation: Notation::Infix,
    numbers: NumberEncoding::Atomic,
    vars: VarEncoding::Atomic,
};

/// Key of the `index`-th polynomial of the stream seeded by `seed`.
pub fn sample_key(cfg: &ConstraintConfig, seed: u64, index: u64, keyer: Keyer) -> Result<String, SamplingError> {
    let mut stats = SamplerStats::default();
    let p = sample_record(cfg, seed, index, &mut stats)?;
    Ok(match keyer {
        Keyer::Initial => serialize(&ProofState::Sum(p.products), KEY_FORMAT).to_string(),
        Keyer::Endpoint => generate_proof(&p, Granularity::Coarse).endpoint.canonical_key(),
    })
}

/// Collision estimate from two sampled streams.
pub fn estimate_size(
    cfg: &ConstraintConfig,
    n1: u64,
    n2: u64,
    keyer: Keyer,
    seeds: (u64, u64),
) -> Result<CollisionEstimate, SpaceError> {
    if n1 == 0 || n2 == 0 {
        return Err(SpaceError::EmptySample);
    }
    let first = (0..n1).map(|i| sample_key(cfg, seeds.0, i, keyer)).collect::<Result<alloc::vec::Vec<_>, _>>()?;
    let second = (0..n2).map(|i| sample_key(cfg, seeds.1, i, keyer)).collect::<Result<alloc::vec::Vec<_>, _>>()?;
    Ok(CollisionEstimate::from_counts(n1, n2, count_collisions(first, second)))
}

/// Estimate over a synthetic space of `size` equally likely keys.
pub fn estimate_uniform(size: u64, n1: u64, n2: u64, seed: u64) -> Result<CollisionEstimate, SpaceError> {
    if n1 == 0 || n2 == 0 || size == 0 {
        return Err(SpaceError::EmptySample);
    }
    let mut a = record_rng(seed, 0);
    let mut b = record_rng(seed, 1);
    let first: alloc::vec::Vec<u64> = (0..n1).map(|_| a.gen_range(0..size)).collect();
    let second = (0..n2).map(|_| b.gen_range(0..size));
    Ok(CollisionEstimate::from_counts(n1, n2, count_collisions(first, second)))
}

/// Drops items whose key is forbidden, counting the drops.
pub struct DedupFilter<'a, I, F> {
    inner: I,
    forbidden: &'a BTreeSet<String>,
    key: F,
    dropped: u64,
}

impl<I, F> DedupFilter<'_, I, F> {
    pub fn dropped(&self) -> u64 {
        self.dropped
    }
}

impl<I, F, T> Iterator for DedupFilter<'_, I, F>
where
    I: Iterator<Item = T>,
    F: FnMut(&T) -> String,
{
    type Item = T;

    fn next(&mut self) -> Option<T> {
        for item in self.inner.by_ref() {
            if self.forbidden.contains(&(self.key)(&item)) {
                self.dropped += 1;
            } else {
                return Some(item);
            }
        }
        None
    }
}

pub fn dedup_filter<I, F, T>(items: I, forbidden: &BTreeSet<String>, key: F) -> DedupFilter<'_, I::IntoIter, F>
where
    I: IntoIterator<Item = T>,
    F: FnMut(&T) -> String,
{
    DedupFilter { inner: items.into_iter(), forbidden, key, dropped: 0 }
}
