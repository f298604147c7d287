//! Training pairs cut from proofs: plain, calculator and annotated.

use alloc::vec::Vec;
use core::str::FromStr;

use crate::proof::{apply, Arithmetic, Proof, ProofStep, StepKind};
use crate::text::{serialize, serialize_labeled, TextFormat, TokenSeq};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Mode {
    #[default]
    Plain,
    Annotated,
    Calculator,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Plain => "plain",
            Mode::Annotated => "annotated",
            Mode::Calculator => "calculator",
        }
    }
}

impl FromStr for Mode {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "plain" => Ok(Mode::Plain),
            "annotated" => Ok(Mode::Annotated),
            "calculator" => Ok(Mode::Calculator),
            _ => Err(()),
        }
    }
}

/// One (input, target) example.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepPair {
    pub kind: StepKind,
    pub input: TokenSeq,
    pub target: TokenSeq,
}

pub fn plain_pair(step: &ProofStep, fmt: TextFormat) -> StepPair {
    StepPair {
        kind: step.kind,
        input: serialize(&step.before, fmt),
        target: serialize(&step.after, fmt),
    }
}

/// Same step with the arithmetic of the result left in brackets.
/// `exponents` also defers exponent sums.
pub fn calculator_transform(step: &ProofStep, fmt: TextFormat, exponents: bool) -> StepPair {
    let deferred = apply(&step.before, step.kind, &step.locus, Arithmetic::Deferred { exponents })
        .expect("engine steps apply to their own state");
    StepPair {
        kind: step.kind,
        input: serialize(&step.before, fmt),
        target: serialize(&deferred, fmt),
    }
}

/// The two annotated records of one step: locate, then perform.
pub fn annotate_step(step: &ProofStep, fmt: TextFormat) -> [StepPair; 2] {
    let marked = serialize_labeled(step.kind, &step.before, Some(&step.locus), fmt);
    [
        StepPair {
            kind: StepKind::Mark,
            input: serialize_labeled(StepKind::Mark, &step.before, None, fmt),
            target: marked.clone(),
        },
        StepPair {
            kind: step.kind,
            input: marked,
            target: serialize_labeled(StepKind::Mark, &step.after, None, fmt),
        },
    ]
}

pub fn annotate_proof(proof: &Proof, fmt: TextFormat) -> Vec<StepPair> {
    proof.steps.iter().flat_map(|s| annotate_step(s, fmt)).collect()
}

/// All pairs of a proof in the given mode.
pub fn proof_pairs(proof: &Proof, mode: Mode, fmt: TextFormat, defer_exponents: bool) -> Vec<StepPair> {
    match mode {
        Mode::Plain => proof.steps.iter().map(|s| plain_pair(s, fmt)).collect(),
        Mode::Calculator => proof
            .steps
            .iter()
            .map(|s| calculator_transform(s, fmt, defer_exponents))
            .collect(),
        Mode::Annotated => annotate_proof(proof, fmt),
    }
}

/// Endpoint task: initial polynomial to simplified form.
pub fn endpoint_pair(proof: &Proof, fmt: TextFormat) -> (TokenSeq, TokenSeq) {
    let input = serialize(&proof.initial.state(), fmt);
    let target = serialize(
        &crate::expr::ProofState::Flat(crate::expr::Factor::canonical_from_nf(&proof.endpoint)),
        fmt,
    );
    (input, target)
}
