//! Scoring prediction files and checking record files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use polyproof_core::eval::{
    calibration, pair_predictions, judge_prediction, score_endpoint, step_report, CalibReport, EndpointReport,
    EvalError, Judged, StepReport,
};
use polyproof_core::text::{parse, parse_annotated};
use polyproof_core::pairs::Mode;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::records::{
    read_gold_endpoints, read_gold_steps, read_jsonl, read_predictions, EndpointRecord, ProofRecord, RecordError,
};

#[derive(Debug, Error)]
pub enum EvaluateError {
    #[error(transparent)]
    Record(#[from] RecordError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
}

#[derive(Debug, Clone)]
pub struct EvaluateOptions {
    pub gold: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub endpoints: Option<PathBuf>,
    pub endpoint_predictions: Option<PathBuf>,
    pub threshold: f64,
    pub rollout: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct KindSummary {
    pub kind: String,
    pub first_errors: usize,
    pub first_share: f64,
    pub total_errors: usize,
    pub total_share: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StepSummary {
    pub steps: usize,
    pub proofs: usize,
    pub stepwise_acc: f64,
    pub full_proof_acc: f64,
    pub beam_acc: f64,
    pub malformed_rate: f64,
    pub kinds: Vec<KindSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rollout_proof_acc: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CalibSummary {
    pub threshold: f64,
    pub considered: usize,
    pub single_candidate: usize,
    pub sure_rate: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EndpointSummary {
    pub total: usize,
    pub correct: usize,
    pub malformed: usize,
    pub accuracy: f64,
}

/// Machine-readable evaluation result.
#[derive(Debug, Clone, Default, Serialize)]
pub struct EvaluateSummary {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<StepSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub endpoints: Option<EndpointSummary>,
}

impl From<&StepReport> for StepSummary {
    fn from(r: &StepReport) -> Self {
        StepSummary {
            steps: r.steps,
            proofs: r.proofs,
            stepwise_acc: r.stepwise_acc,
            full_proof_acc: r.full_proof_acc,
            beam_acc: r.beam_acc,
            malformed_rate: r.malformed_rate,
            kinds: r
                .kinds
                .iter()
                .map(|k| KindSummary {
                    kind: k.kind.label().to_owned(),
                    first_errors: k.first_errors,
                    first_share: k.first_share,
                    total_errors: k.total_errors,
                    total_share: k.total_share,
                })
                .collect(),
            rollout_proof_acc: r.rollout_proof_acc,
        }
    }
}

impl From<&CalibReport> for CalibSummary {
    fn from(r: &CalibReport) -> Self {
        CalibSummary {
            threshold: r.threshold,
            considered: r.considered,
            single_candidate: r.single_candidate,
            sure_rate: r.sure_rate,
            precision: r.precision,
            recall: r.recall,
            f1: r.f1,
        }
    }
}

impl From<&EndpointReport> for EndpointSummary {
    fn from(r: &EndpointReport) -> Self {
        EndpointSummary { total: r.total, correct: r.correct, malformed: r.malformed, accuracy: r.accuracy }
    }
}

impl EvaluateSummary {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        if let Some(r) = &self.steps {
            let _ = writeln!(s, "steps            {}", r.steps);
            let _ = writeln!(s, "proofs           {}", r.proofs);
            let _ = writeln!(s, "stepwise_acc     {:.2}", r.stepwise_acc);
            let _ = writeln!(s, "full_proof_acc   {:.2}", r.full_proof_acc);
            let _ = writeln!(s, "beam_acc         {:.2}", r.beam_acc);
            let _ = writeln!(s, "malformed_rate   {:.2}", r.malformed_rate);
            if let Some(a) = r.rollout_proof_acc {
                let _ = writeln!(s, "rollout_proof_acc {a:.2}");
            }
            let _ = writeln!(s, "kind  first  first%   total  total%");
            for k in &r.kinds {
                let _ = writeln!(
                    s,
                    "{:<5} {:>5} {:>7.2} {:>7} {:>7.2}",
                    k.kind, k.first_errors, k.first_share, k.total_errors, k.total_share
                );
            }
        }
        if let Some(c) = &self.calibration {
            let _ = writeln!(s, "calibration threshold {}", c.threshold);
            let _ = writeln!(s, "  considered {} (single-candidate skipped: {})", c.considered, c.single_candidate);
            let _ = writeln!(
                s,
                "  sure_rate {:.2}  precision {:.2}  recall {:.2}  f1 {:.2}",
                c.sure_rate, c.precision, c.recall, c.f1
            );
        }
        if let Some(e) = &self.endpoints {
            let _ = writeln!(s, "endpoint_acc     {:.2} ({} of {}, {} malformed)", e.accuracy, e.correct, e.total, e.malformed);
        }
        s
    }
}

/// Judged steps for a gold file and its predictions.
pub fn judge_files(gold: &Path, preds: &Path) -> Result<(Vec<polyproof_core::eval::GoldStep>, Vec<Judged>), EvaluateError> {
    let gold = read_gold_steps(gold)?;
    let preds = read_predictions(preds)?;
    let paired = pair_predictions(&gold, &preds)?;
    let judged = gold
        .par_iter()
        .zip(paired.par_iter())
        .map(|(g, p)| judge_prediction(g, p))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((gold, judged))
}

pub fn run(opts: &EvaluateOptions) -> Result<EvaluateSummary, EvaluateError> {
    let mut summary = EvaluateSummary::default();
    if let (Some(gold), Some(preds)) = (&opts.gold, &opts.predictions) {
        let (gold, judged) = judge_files(gold, preds)?;
        summary.steps = Some((&step_report(&gold, &judged, opts.rollout)).into());
        let calib = calibration(&judged, opts.threshold);
        if calib.considered > 0 {
            summary.calibration = Some((&calib).into());
        }
    }
    if let (Some(gold), Some(preds)) = (&opts.endpoints, &opts.endpoint_predictions) {
        let gold = read_gold_endpoints(gold)?;
        let preds = read_predictions(preds)?;
        summary.endpoints = Some((&score_endpoint(&gold, &preds)?).into());
    }
    Ok(summary)
}

/// Kinds of record file `verify` understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileKind {
    Steps,
    Proofs,
    Endpoints,
    Predictions,
}

/// Schema-checks a record file and, for gold files, that every expression
/// parses. Returns the record count.
pub fn verify(path: &Path, kind: FileKind) -> Result<usize, EvaluateError> {
    let schema = |line: usize, message: String| {
        EvaluateError::Record(RecordError::Schema { path: path.display().to_string(), line, message })
    };
    match kind {
        FileKind::Steps => {
            let gold = read_gold_steps(path)?;
            for (i, g) in gold.iter().enumerate() {
                let ok = match g.mode {
                    Mode::Annotated => parse_annotated(&g.target, g.format).is_ok(),
                    _ => parse(&g.target, g.format).is_ok(),
                };
                if !ok {
                    return Err(schema(i + 1, format!("target of {} does not parse", g.step_id)));
                }
            }
            Ok(gold.len())
        }
        FileKind::Proofs => Ok(read_jsonl::<ProofRecord>(path)?.len()),
        FileKind::Endpoints => {
            let recs = read_jsonl::<EndpointRecord>(path)?;
            for (i, r) in recs.iter().enumerate() {
                let g = r.to_gold().map_err(|m| schema(i + 1, m))?;
                parse(&g.target, g.format).map_err(|e| schema(i + 1, e.to_string()))?;
            }
            Ok(recs.len())
        }
        FileKind::Predictions => Ok(read_predictions(path)?.len()),
    }
}
