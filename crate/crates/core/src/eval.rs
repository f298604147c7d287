//! Scoring model predictions against gold proof steps.
//!
//! A prediction is right when it denotes the same polynomial as the gold
//! target and has the same step form: the same product/factor skeleton and,
//! inside every factor, the same terms up to reordering (compared by
//! value, with a flag for whether each term is written in simplified
//! form). Value equality alone cannot tell a state from its successor,
//! since every state of a proof denotes the same polynomial.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use num_bigint::BigUint;
use thiserror::Error;

use crate::expr::{Factor, Num, Power, ProofState, SurfaceTerm};
use crate::pairs::Mode;
use crate::poly::Powers;
use crate::proof::StepKind;
use crate::text::{parse, parse_annotated, TextFormat, TokenSeq};

/// Confidence threshold above which a prediction counts as sure.
pub const DEFAULT_THRESHOLD: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Equivalent,
    Different,
    Malformed,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("no prediction for step {0}")]
    MissingPrediction(String),
    #[error("more than one prediction for step {0}")]
    DuplicatePrediction(String),
    #[error("prediction for unknown step {0}")]
    UnknownStep(String),
    #[error("gold step {0} appears twice")]
    DuplicateGold(String),
    #[error("gold target of step {0} does not parse")]
    MalformedGold(String),
    #[error("prediction for {0} has no candidates")]
    NoCandidates(String),
    #[error("candidates for {0} are not sorted by descending log-probability")]
    UnsortedCandidates(String),
}

/// One gold training pair, identified within its proof.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldStep {
    pub step_id: String,
    pub proof_id: String,
    pub step_index: usize,
    pub kind: StepKind,
    pub mode: Mode,
    pub format: TextFormat,
    pub target: TokenSeq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub tokens: TokenSeq,
    pub logprob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub step_id: String,
    pub candidates: Vec<Candidate>,
}

impl Prediction {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.candidates.is_empty() {
            return Err(EvalError::NoCandidates(self.step_id.clone()));
        }
        let sorted = self.candidates.windows(2).all(|w| w[0].logprob >= w[1].logprob);
        if !sorted || self.candidates.iter().any(|c| c.logprob.is_nan()) {
            return Err(EvalError::UnsortedCandidates(self.step_id.clone()));
        }
        Ok(())
    }

    pub fn top(&self) -> &Candidate {
        &self.candidates[0]
    }

    /// Log-probability gap between the two best candidates.
    pub fn confidence(&self) -> Option<f64> {
        match self.candidates.as_slice() {
            [a, b, ..] => Some(a.logprob - b.logprob),
            _ => None,
        }
    }
}

/// Symbolic equality of two serialized expressions.
pub fn equivalent(candidate: &TokenSeq, reference: &TokenSeq, fmt: TextFormat) -> Verdict {
    let Ok(a) = parse(candidate, fmt) else { return Verdict::Malformed };
    match parse(reference, fmt) {
        Ok(b) if a.to_nf() == b.to_nf() => Verdict::Equivalent,
        Ok(_) => Verdict::Different,
        Err(_) => Verdict::Malformed,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct TermForm {
    coeff: BigUint,
    powers: Powers,
    simplified: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum StateForm {
    Flat(Vec<TermForm>),
    Sum(Vec<Vec<Vec<TermForm>>>),
}

fn evaluated(n: &Num) -> Num {
    Num::Lit(n.value())
}

fn term_form(t: &SurfaceTerm) -> TermForm {
    let coeff = t.coeff_value();
    let powers = t.merged_powers();
    let literal = SurfaceTerm {
        coeff: evaluated(&t.coeff),
        coeff_shown: t.coeff_shown,
        powers: t
            .powers
            .iter()
            .map(|p| Power { var: p.var, exp: evaluated(&p.exp), exp_shown: p.exp_shown })
            .collect(),
    };
    let simplified = literal == SurfaceTerm::canonical(coeff.clone(), &powers);
    TermForm { coeff, powers, simplified }
}

fn factor_form(f: &Factor) -> Vec<TermForm> {
    let mut v: Vec<TermForm> = f.terms.iter().map(term_form).collect();
    v.sort();
    v
}

fn state_form(s: &ProofState) -> StateForm {
    match s {
        ProofState::Flat(f) => StateForm::Flat(factor_form(f)),
        ProofState::Sum(ps) => StateForm::Sum(
            ps.iter()
                .map(|p| p.factors.iter().map(factor_form).collect())
                .collect(),
        ),
    }
}

fn same_step(a: &ProofState, b: &ProofState) -> bool {
    a.to_nf() == b.to_nf() && state_form(a) == state_form(b)
}

/// Judges one candidate against a gold target.
pub fn judge(gold: &GoldStep, candidate: &TokenSeq) -> Result<Verdict, EvalError> {
    let fmt = gold.format;
    let malformed_gold = || EvalError::MalformedGold(gold.step_id.clone());
    match gold.mode {
        Mode::Annotated => {
            let g = parse_annotated(&gold.target, fmt).map_err(|_| malformed_gold())?;
            let Ok(c) = parse_annotated(candidate, fmt) else { return Ok(Verdict::Malformed) };
            let same = c.label == g.label && c.span == g.span && same_step(&c.state, &g.state);
            Ok(if same { Verdict::Equivalent } else { Verdict::Different })
        }
        Mode::Plain | Mode::Calculator => {
            let g = parse(&gold.target, fmt).map_err(|_| malformed_gold())?;
            let Ok(c) = parse(candidate, fmt) else { return Ok(Verdict::Malformed) };
            Ok(if same_step(&c, &g) { Verdict::Equivalent } else { Verdict::Different })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct KindErrors {
    /// Erroneous proofs whose earliest wrong step has this kind.
    pub first: usize,
    /// Wrong steps of this kind.
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KindShare {
    pub kind: StepKind,
    pub first_errors: usize,
    pub first_share: f64,
    pub total_errors: usize,
    pub total_share: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub steps: usize,
    pub correct_steps: usize,
    pub beam_correct_steps: usize,
    pub malformed_steps: usize,
    pub proofs: usize,
    pub correct_proofs: usize,
    /// Percentages.
    pub stepwise_acc: f64,
    pub full_proof_acc: f64,
    pub beam_acc: f64,
    pub malformed_rate: f64,
    /// Per kind, in `StepKind::ALL` order; shares in percent.
    pub kinds: Vec<KindShare>,
    /// Proofs whose every top prediction reproduces the gold tokens
    /// exactly, the only case where feeding predictions back is known to
    /// stay on the gold path. Present when requested.
    pub rollout_proof_acc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibReport {
    pub threshold: f64,
    /// Records with at least two candidates.
    pub considered: usize,
    /// Records skipped for having a single candidate.
    pub single_candidate: usize,
    pub sure: usize,
    pub correct: usize,
    pub correct_and_sure: usize,
    /// Percentages.
    pub sure_rate: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Outcome of one gold step.
#[derive(Debug, Clone, PartialEq)]
pub struct Judged {
    pub verdict: Verdict,
    pub beam_correct: bool,
    pub exact: bool,
    pub confidence: Option<f64>,
}

impl Judged {
    pub fn correct(&self) -> bool {
        self.verdict == Verdict::Equivalent
    }
}

fn pct(num: usize, den: usize) -> f64 {
    if den == 0 { 0.0 } else { 100.0 * num as f64 / den as f64 }
}

/// Matches every gold step with its prediction, in `gold` order.
pub fn pair_predictions<'a>(gold: &[GoldStep], preds: &'a [Prediction]) -> Result<Vec<&'a Prediction>, EvalError> {
    let mut by_id: BTreeMap<&str, &Prediction> = BTreeMap::new();
    for p in preds {
        p.validate()?;
        if by_id.insert(p.step_id.as_str(), p).is_some() {
            return Err(EvalError::DuplicatePrediction(p.step_id.clone()));
        }
    }
    let mut seen = BTreeSet::new();
    for g in gold {
        if !seen.insert(g.step_id.as_str()) {
            return Err(EvalError::DuplicateGold(g.step_id.clone()));
        }
    }
    if let Some(p) = preds.iter().find(|p| !seen.contains(p.step_id.as_str())) {
        return Err(EvalError::UnknownStep(p.step_id.clone()));
    }
    gold.iter()
        .map(|g| {
            by_id
                .get(g.step_id.as_str())
                .copied()
                .ok_or_else(|| EvalError::MissingPrediction(g.step_id.clone()))
        })
        .collect()
}

/// Judges the top candidate, and the beam until one is right.
pub fn judge_prediction(gold: &GoldStep, pred: &Prediction) -> Result<Judged, EvalError> {
    let verdict = judge(gold, &pred.top().tokens)?;
    let mut beam_correct = verdict == Verdict::Equivalent;
    for c in &pred.candidates[1..] {
        if beam_correct {
            break;
        }
        beam_correct = judge(gold, &c.tokens)? == Verdict::Equivalent;
    }
    Ok(Judged {
        verdict,
        beam_correct,
        exact: pred.top().tokens == gold.target,
        confidence: pred.confidence(),
    })
}

/// Pairs and judges every gold step. Output order follows `gold`.
pub fn judge_all(gold: &[GoldStep], preds: &[Prediction]) -> Result<Vec<Judged>, EvalError> {
    let paired = pair_predictions(gold, preds)?;
    gold.iter().zip(paired).map(|(g, p)| judge_prediction(g, p)).collect()
}

/// Step, proof and error-share metrics from judged steps. `judged[i]`
/// belongs to `gold[i]`.
pub fn step_report(gold: &[GoldStep], judged: &[Judged], rollout: bool) -> StepReport {
    let mut proofs: BTreeMap<&str, Vec<(usize, StepKind, &Judged)>> = BTreeMap::new();
    for (g, j) in gold.iter().zip(judged) {
        proofs.entry(g.proof_id.as_str()).or_default().push((g.step_index, g.kind, j));
    }
    let mut errors: BTreeMap<StepKind, KindErrors> = BTreeMap::new();
    let mut correct_proofs = 0;
    let mut exact_proofs = 0;
    for steps in proofs.values_mut() {
        steps.sort_by_key(|s| s.0);
        match steps.iter().find(|s| !s.2.correct()) {
            None => correct_proofs += 1,
            Some(&(_, kind, _)) => errors.entry(kind).or_default().first += 1,
        }
        if steps.iter().all(|s| s.2.exact) {
            exact_proofs += 1;
        }
    }
    for (g, j) in gold.iter().zip(judged) {
        if !j.correct() {
            errors.entry(g.kind).or_default().total += 1;
        }
    }
    let steps = judged.len();
    let correct_steps = judged.iter().filter(|j| j.correct()).count();
    let wrong_proofs = proofs.len() - correct_proofs;
    let wrong_steps = steps - correct_steps;
    StepReport {
        steps,
        correct_steps,
        beam_correct_steps: judged.iter().filter(|j| j.beam_correct).count(),
        malformed_steps: judged.iter().filter(|j| j.verdict == Verdict::Malformed).count(),
        proofs: proofs.len(),
        correct_proofs,
        stepwise_acc: pct(correct_steps, steps),
        full_proof_acc: pct(correct_proofs, proofs.len()),
        beam_acc: pct(judged.iter().filter(|j| j.beam_correct).count(), steps),
        malformed_rate: pct(judged.iter().filter(|j| j.verdict == Verdict::Malformed).count(), steps),
        kinds: StepKind::ALL
            .iter()
            .map(|&kind| {
                let e = errors.get(&kind).copied().unwrap_or_default();
                KindShare {
                    kind,
                    first_errors: e.first,
                    first_share: pct(e.first, wrong_proofs),
                    total_errors: e.total,
                    total_share: pct(e.total, wrong_steps),
                }
            })
            .collect(),
        rollout_proof_acc: rollout.then(|| pct(exact_proofs, proofs.len())),
    }
}

/// Sure/correct agreement at `threshold`.
pub fn calibration(judged: &[Judged], threshold: f64) -> CalibReport {
    let mut considered = 0;
    let mut sure = 0;
    let mut correct = 0;
    let mut both = 0;
    for j in judged {
        let Some(conf) = j.confidence else { continue };
        considered += 1;
        let is_sure = conf > threshold;
        sure += usize::from(is_sure);
        correct += usize::from(j.correct());
        both += usize::from(is_sure && j.correct());
    }
    let precision = pct(both, sure);
    let recall = pct(both, correct);
    let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
    CalibReport {
        threshold,
        considered,
        single_candidate: judged.len() - considered,
        sure,
        correct,
        correct_and_sure: both,
        sure_rate: pct(sure, considered),
        precision,
        recall,
        f1,
    }
}

pub fn score_steps(gold: &[GoldStep], preds: &[Prediction], rollout: bool) -> Result<StepReport, EvalError> {
    let judged = judge_all(gold, preds)?;
    Ok(step_report(gold, &judged, rollout))
}

pub fn calibrate(gold: &[GoldStep], preds: &[Prediction], threshold: f64) -> Result<CalibReport, EvalError> {
    let judged = judge_all(gold, preds)?;
    Ok(calibration(&judged, threshold))
}

/// A gold endpoint-prediction pair.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldEndpoint {
    pub id: String,
    pub format: TextFormat,
    pub target: TokenSeq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EndpointReport {
    pub total: usize,
    pub correct: usize,
    pub malformed: usize,
    pub accuracy: f64,
}

/// Endpoint accuracy: only value equality matters here.
pub fn score_endpoint(gold: &[GoldEndpoint], preds: &[Prediction]) -> Result<EndpointReport, EvalError> {
    let mut by_id: BTreeMap<&str, &Prediction> = BTreeMap::new();
    for p in preds {
        p.validate()?;
        if by_id.insert(p.step_id.as_str(), p).is_some() {
            return Err(EvalError::DuplicatePrediction(p.step_id.clone()));
        }
    }
    let ids: BTreeSet<&str> = gold.iter().map(|g| g.id.as_str()).collect();
    if let Some(p) = preds.iter().find(|p| !ids.contains(p.step_id.as_str())) {
        return Err(EvalError::UnknownStep(p.step_id.clone()));
    }
    let mut correct = 0;
    let mut malformed = 0;
    for g in gold {
        let p = by_id.get(g.id.as_str()).ok_or_else(|| EvalError::MissingPrediction(g.id.clone()))?;
        if parse(&g.target, g.format).is_err() {
            return Err(EvalError::MalformedGold(g.id.clone()));
        }
        match equivalent(&p.top().tokens, &g.target, g.format) {
            Verdict::Equivalent => correct += 1,
            Verdict::Malformed => malformed += 1,
            Verdict::Different => {}
        }
    }
    Ok(EndpointReport { total: gold.len(), correct, malformed, accuracy: pct(correct, gold.len()) })
}

#[cfg(test)]
mod tests {
    extern crate std;

    use super::*;
    use crate::pairs::proof_pairs;
    use crate::proof::{generate_proof, tests::worked_example, Granularity};
    use crate::text::{lex, NumberEncoding};
    use alloc::format;
    use alloc::vec;

    fn fmt() -> TextFormat {
        TextFormat { numbers: NumberEncoding::Atomic, ..Default::default() }
    }

    fn seq(s: &str) -> TokenSeq {
        lex(s, fmt()).unwrap()
    }

    fn gold_for(mode: Mode) -> Vec<GoldStep> {
        let proof = generate_proof(&worked_example(), Granularity::Coarse);
        proof_pairs(&proof, mode, fmt(), false)
            .into_iter()
            .enumerate()
            .map(|(i, p)| GoldStep {
                step_id: format!("p0:{i}"),
                proof_id: "p0".into(),
                step_index: i,
                kind: p.kind,
                mode,
                format: fmt(),
                target: p.target,
            })
            .collect()
    }

    fn echo(gold: &[GoldStep]) -> Vec<Prediction> {
        gold.iter()
            .map(|g| Prediction {
                step_id: g.step_id.clone(),
                candidates: vec![Candidate { tokens: g.target.clone(), logprob: -0.1 }],
            })
            .collect()
    }

    #[test]
    fn like_terms_are_equivalent() {
        assert_eq!(equivalent(&seq("x_1 + x_1"), &seq("2*x_1"), fmt()), Verdict::Equivalent);
        assert_eq!(
            equivalent(&seq("8*x_2^2 + 6*x_1^2*x_2 + 6*x_2^3 + 30*x_1^3"), &seq("30*x_1^3+6*x_1^2*x_2+6*x_2^3+8*x_2^2"), fmt()),
            Verdict::Equivalent
        );
        assert_eq!(equivalent(&seq("x_1 +"), &seq("x_1"), fmt()), Verdict::Malformed);
        assert_eq!(equivalent(&seq("3*x_1"), &seq("2*x_1"), fmt()), Verdict::Different);
    }

    #[test]
    fn echoed_gold_scores_perfectly() {
        for mode in [Mode::Plain, Mode::Annotated, Mode::Calculator] {
            let gold = gold_for(mode);
            let r = score_steps(&gold, &echo(&gold), true).unwrap();
            assert_eq!((r.stepwise_acc, r.full_proof_acc, r.malformed_rate), (100.0, 100.0, 0.0));
            assert_eq!(r.rollout_proof_acc, Some(100.0));
            assert!(r.kinds.iter().all(|k| k.first_share == 0.0 && k.total_share == 0.0));
        }
    }

    #[test]
    fn copying_the_input_is_wrong() {
        let proof = generate_proof(&worked_example(), Granularity::Coarse);
        let gold = gold_for(Mode::Plain);
        let preds: Vec<Prediction> = proof_pairs(&proof, Mode::Plain, fmt(), false)
            .into_iter()
            .zip(&gold)
            .map(|(p, g)| Prediction {
                step_id: g.step_id.clone(),
                candidates: vec![Candidate { tokens: p.input, logprob: 0.0 }],
            })
            .collect();
        let r = score_steps(&gold, &preds, false).unwrap();
        assert_eq!(r.correct_steps, 0);
    }

    #[test]
    fn one_wrong_mul_sets_first_error() {
        let gold = gold_for(Mode::Plain);
        let mut preds = echo(&gold);
        preds[2].candidates[0].tokens = gold[1].target.clone();
        let r = score_steps(&gold, &preds, false).unwrap();
        assert_eq!(r.correct_proofs, 0);
        let mul = r.kinds.iter().find(|k| k.kind == StepKind::Mul).unwrap();
        assert_eq!((mul.first_share, mul.total_share), (100.0, 100.0));
        assert_eq!(r.stepwise_acc, 80.0);
    }

    #[test]
    fn reordered_terms_still_correct() {
        let gold = gold_for(Mode::Plain);
        let mut preds = echo(&gold);
        preds[4].candidates[0].tokens = seq("8*x_2^2 + 6*x_1^2*x_2 + 6*x_2^3 + 30*x_1^3");
        assert_eq!(score_steps(&gold, &preds, true).unwrap().stepwise_acc, 100.0);
        assert_eq!(score_steps(&gold, &preds, true).unwrap().rollout_proof_acc, Some(0.0));
    }

    #[test]
    fn missing_duplicate_unknown() {
        let gold = gold_for(Mode::Plain);
        let mut preds = echo(&gold);
        preds.pop();
        assert_eq!(score_steps(&gold, &preds, false), Err(EvalError::MissingPrediction("p0:4".into())));
        let mut preds = echo(&gold);
        preds.push(preds[0].clone());
        assert!(matches!(score_steps(&gold, &preds, false), Err(EvalError::DuplicatePrediction(_))));
        let mut preds = echo(&gold);
        preds[0].step_id = "zz:0".into();
        assert!(matches!(score_steps(&gold, &preds, false), Err(EvalError::UnknownStep(_))));
    }

    #[test]
    fn annotated_span_must_match() {
        let gold = gold_for(Mode::Annotated);
        let mut preds = echo(&gold);
        let mark = gold.iter().position(|g| g.kind == StepKind::Mark && g.target.tokens()[0] == "MUL").unwrap();
        let moved: Vec<String> = gold[mark].target.tokens().iter().filter(|t| *t != "#").cloned().collect();
        preds[mark].candidates[0].tokens = TokenSeq::new(moved);
        let r = score_steps(&gold, &preds, false).unwrap();
        assert_eq!(r.correct_steps, gold.len() - 1);
        let m = r.kinds.iter().find(|k| k.kind == StepKind::Mark).unwrap();
        assert_eq!(m.first_errors, 1);
    }

    #[test]
    fn calibration_ln_ratio() {
        let conf = std::primitive::f64::ln(0.9) - std::primitive::f64::ln(0.001);
        assert!((conf - 6.802).abs() < 1e-3);
        let j = Judged { verdict: Verdict::Equivalent, beam_correct: true, exact: true, confidence: Some(conf) };
        let r = calibration(core::slice::from_ref(&j), DEFAULT_THRESHOLD);
        assert_eq!((r.sure, r.precision, r.recall), (1, 100.0, 100.0));
        let tie = Judged { confidence: Some(0.0), ..j };
        assert_eq!(calibration(&[tie], 1e-9).sure, 0);
    }
}
