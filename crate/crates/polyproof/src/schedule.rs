//! Curriculum sessions: labeled example batches out, accuracy feedback in.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::PathBuf;

use polyproof_core::config::ConstraintConfig;
use polyproof_core::curriculum::{task_config, CurriculumGraph, GatedRemainder, SchedulerState, Task};
use polyproof_core::pairs::{proof_pairs, Mode};
use polyproof_core::proof::{generate_proof, Granularity};
use polyproof_core::sampler::{record_rng, sample_record, SamplerStats, SamplingError};
use polyproof_core::text::TextFormat;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::records::to_line;

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
}

#[derive(Debug, Clone)]
pub struct ScheduleOptions {
    pub graph: CurriculumGraph,
    pub base: ConstraintConfig,
    pub program: GatedRemainder,
    pub decay: f64,
    pub groups: usize,
    pub batch_size: usize,
    pub rounds: usize,
    pub seed: u64,
    pub granularity: Granularity,
    pub format: TextFormat,
    /// `-` reads standard input.
    pub feedback: Option<PathBuf>,
    pub trace: PathBuf,
    pub examples: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ScheduleSummary {
    pub rounds: usize,
    pub examples: usize,
    pub feedback_applied: usize,
    pub feedback_skipped: usize,
}

/// One accuracy report: `<round> <task> <accuracy>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feedback {
    pub round: usize,
    pub task: Task,
    pub accuracy: f64,
}

pub fn parse_feedback(line: &str) -> Result<Feedback, String> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    let [round, task, accuracy] = parts.as_slice() else {
        return Err("expected `<round> <task> <accuracy>`".into());
    };
    let round = round.parse().map_err(|_| format!("bad round {round:?}"))?;
    let task = task.parse().map_err(|_| format!("unknown task {task:?}"))?;
    let accuracy: f64 = accuracy.parse().map_err(|_| format!("bad accuracy {accuracy:?}"))?;
    if !(0.0..=1.0).contains(&accuracy) {
        return Err(format!("accuracy {accuracy} outside [0, 1]"));
    }
    Ok(Feedback { round, task, accuracy })
}

#[derive(Serialize)]
struct ExampleStep {
    step_kind: String,
    input: String,
    target: String,
}

#[derive(Serialize)]
struct ExampleRecord {
    round: String,
    batch: String,
    task: String,
    id: String,
    steps: Vec<ExampleStep>,
}

fn io_err(path: &std::path::Path) -> impl Fn(std::io::Error) -> ScheduleError + '_ {
    move |e| ScheduleError::Io(path.display().to_string(), e)
}

fn read_feedback(opts: &ScheduleOptions, summary: &mut ScheduleSummary) -> Result<BTreeMap<usize, Vec<Feedback>>, ScheduleError> {
    let mut by_round: BTreeMap<usize, Vec<Feedback>> = BTreeMap::new();
    let Some(path) = &opts.feedback else { return Ok(by_round) };
    let reader: Box<dyn Read> = if path.as_os_str() == "-" {
        Box::new(std::io::stdin())
    } else {
        Box::new(File::open(path).map_err(io_err(path))?)
    };
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        match parse_feedback(&line) {
            Ok(f) if opts.graph.index(f.task).is_some() => by_round.entry(f.round).or_default().push(f),
            Ok(f) => {
                eprintln!("feedback line {}: task {} is not in this curriculum; skipped", i + 1, f.task);
                summary.feedback_skipped += 1;
            }
            Err(m) => {
                eprintln!("feedback line {}: {m}; skipped", i + 1);
                summary.feedback_skipped += 1;
            }
        }
    }
    Ok(by_round)
}

/// Runs `rounds` scheduling rounds, writing one trace row per round and
/// optionally the generated examples.
pub fn run(opts: &ScheduleOptions) -> Result<ScheduleSummary, ScheduleError> {
    let mut summary = ScheduleSummary::default();
    let feedback = read_feedback(opts, &mut summary)?;
    let mut state = SchedulerState::new(opts.graph.clone());
    state.decay = opts.decay;
    state.groups = opts.groups;
    let tasks = opts.graph.tasks().to_vec();

    let mut trace = BufWriter::new(File::create(&opts.trace).map_err(io_err(&opts.trace))?);
    let header: Vec<String> = std::iter::once("round".to_owned())
        .chain(tasks.iter().map(|t| format!("p_{t}")))
        .chain(tasks.iter().map(|t| format!("m_{t}")))
        .collect();
    writeln!(trace, "{}", header.join("\t")).map_err(io_err(&opts.trace))?;
    let mut examples = match &opts.examples {
        Some(p) => Some((BufWriter::new(File::create(p).map_err(io_err(p))?), p)),
        None => None,
    };

    let mut next_index = 0u64;
    for round in 0..opts.rounds {
        let dist = state.distribution(&opts.program);
        let row: Vec<String> = std::iter::once(round.to_string())
            .chain(dist.iter().map(|p| format!("{p:.6}")))
            .chain(state.mastery().iter().map(|m| format!("{m:.6}")))
            .collect();
        writeln!(trace, "{}", row.join("\t")).map_err(io_err(&opts.trace))?;

        let batches = state.sample_batches(&opts.program, opts.batch_size, &mut record_rng(opts.seed, round as u64));
        let labeled: Vec<(usize, Task, u64)> = batches
            .iter()
            .enumerate()
            .flat_map(|(b, batch)| batch.tasks.iter().map(move |&t| (b, t)))
            .enumerate()
            .map(|(k, (b, t))| (b, t, next_index + k as u64))
            .collect();
        next_index += labeled.len() as u64;
        summary.examples += labeled.len();

        if let Some((out, path)) = examples.as_mut() {
            let lines = labeled
                .par_iter()
                .map(|&(b, task, index)| {
                    let cfg = task_config(task, &opts.base);
                    let initial = sample_record(&cfg, opts.seed, index, &mut SamplerStats::default())?;
                    let proof = generate_proof(&initial, opts.granularity);
                    let steps = proof_pairs(&proof, Mode::Plain, opts.format, false)
                        .into_iter()
                        .map(|p| ExampleStep {
                            step_kind: p.kind.label().to_owned(),
                            input: p.input.to_string(),
                            target: p.target.to_string(),
                        })
                        .collect();
                    Ok(to_line(&ExampleRecord {
                        round: round.to_string(),
                        batch: b.to_string(),
                        task: task.name().to_owned(),
                        id: index.to_string(),
                        steps,
                    }))
                })
                .collect::<Result<Vec<_>, SamplingError>>()?;
            for l in lines {
                writeln!(out, "{l}").map_err(io_err(path))?;
            }
        }

        for f in feedback.get(&round).into_iter().flatten() {
            state.update_mastery(f.task, f.accuracy).expect("feedback checked against the graph");
            summary.feedback_applied += 1;
        }
        summary.rounds += 1;
    }
    trace.flush().map_err(io_err(&opts.trace))?;
    if let Some((mut out, path)) = examples {
        out.flush().map_err(io_err(path))?;
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feedback_lines() {
        assert_eq!(
            parse_feedback("3 Mul2 0.75"),
            Ok(Feedback { round: 3, task: Task::Mul2, accuracy: 0.75 })
        );
        assert!(parse_feedback("3 Mul2").is_err());
        assert!(parse_feedback("x Mul2 0.5").is_err());
        assert!(parse_feedback("1 Div 0.5").is_err());
        assert!(parse_feedback("1 Add 1.5").is_err());
    }
}
