//! Synthetic polynomial-simplification proofs: sampling, step-by-step
//! proof generation, token formats, and scoring.

#![no_std]

extern crate alloc;

pub mod config;
pub mod curriculum;
pub mod pairs;
pub mod eval;
pub mod expr;
pub mod poly;
pub mod proof;
pub mod sampler;
pub mod space;
pub mod text;

pub use config::{ConfigError, ConstraintConfig, Preset};
pub use expr::{Factor, InitialPoly, Num, Power, ProofState, Product, SurfaceTerm};
pub use poly::{Monomial, PolyNF, Powers, VarId};
pub use proof::{generate_proof, Arithmetic, Granularity, Locus, Proof, ProofStep, StepKind};
pub use sampler::{sample_record, SamplerStats, SamplingError};
pub use text::{parse, serialize, ParseError, TextFormat, TokenSeq};
