//! Command-line interface.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use polyproof_core::config::{ConstraintConfig, Preset};
use polyproof_core::curriculum::{CurriculumGraph, CurriculumName, GatedRemainder};
use polyproof_core::eval::DEFAULT_THRESHOLD;
use polyproof_core::pairs::Mode;
use polyproof_core::proof::Granularity;
use polyproof_core::space::{estimate_size, estimate_uniform, CollisionEstimate, Keyer};
use polyproof_core::text::{Notation, NumberEncoding, TextFormat, VarEncoding};
use serde::Serialize;

use crate::evaluate::{self, EvaluateOptions, FileKind};
use crate::generate::{self, read_keys, GenerateError, GenerateOptions};
use crate::records::{read_jsonl, JsonlWriter, StepRecord};
use crate::schedule::{self, ScheduleOptions};
use crate::settings::{load_config, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "polyproof", version, about = "Step-wise polynomial simplification datasets and scoring")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample polynomials and write proof datasets.
    Generate(GenerateArgs),
    /// Check that a record file matches its schema.
    Verify(VerifyArgs),
    /// Score predictions against gold records.
    Evaluate(EvaluateArgs),
    /// Estimate the number of distinct polynomials by collisions.
    EstimateSpace(SpaceArgs),
    /// Run a curriculum schedule.
    Curriculum(CurriculumArgs),
    /// Drop records whose endpoint appears in forbidden key files.
    Dedup(DedupArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GranularityArg {
    Coarse,
    Fine,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NotationArg {
    Infix,
    Prefix,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NumbersArg {
    Digit,
    Atomic,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VarsArg {
    Atomic,
    Split,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Plain,
    Annotated,
    Calculator,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Steps,
    Proofs,
    Endpoints,
    Predictions,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KeyerArg {
    Initial,
    Endpoint,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CurriculumArg {
    #[value(name = "C")]
    C,
    #[value(name = "C2")]
    C2,
    #[value(name = "C4")]
    C4,
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// Named preset.
    #[arg(long, default_value = "medium_coeff", conflicts_with = "config_file")]
    config: String,
    /// TOML file of limits over a base preset.
    #[arg(long)]
    config_file: Option<PathBuf>,
    /// Number of variables.
    #[arg(long)]
    nvar: Option<u32>,
}

#[derive(Debug, Args)]
struct FormatArgs {
    #[arg(long, value_enum, default_value = "coarse")]
    granularity: GranularityArg,
    #[arg(long, value_enum, default_value = "infix")]
    format: NotationArg,
    #[arg(long, value_enum, default_value = "digit")]
    numbers: NumbersArg,
    #[arg(long, value_enum, default_value = "atomic")]
    vars: VarsArg,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    format: FormatArgs,
    #[arg(long, value_enum, default_value = "plain")]
    mode: ModeArg,
    /// Proofs to write.
    #[arg(long)]
    num: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// In calculator mode, also leave exponent sums in brackets.
    #[arg(long)]
    exponent_deferral: bool,
    /// Endpoint key files; matching proofs are skipped.
    #[arg(long)]
    forbid: Vec<PathBuf>,
    /// Write the endpoint key of every proof here.
    #[arg(long)]
    keys_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    file: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Gold step records.
    #[arg(long, requires = "predictions")]
    gold: Option<PathBuf>,
    #[arg(long, requires = "gold")]
    predictions: Option<PathBuf>,
    /// Gold endpoint records.
    #[arg(long, requires = "endpoint_predictions")]
    endpoints: Option<PathBuf>,
    #[arg(long, requires = "endpoints")]
    endpoint_predictions: Option<PathBuf>,
    /// Log-probability gap above which a prediction is sure.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    /// Also report proofs whose predictions reproduce gold tokens exactly.
    #[arg(long)]
    rollout: bool,
    /// Write the summary as JSON here.
    #[arg(long)]
    report_json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SpaceArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    n1: u64,
    #[arg(long)]
    n2: u64,
    #[arg(long, value_enum, default_value = "endpoint")]
    keyer: KeyerArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seed of the second sample; defaults to `seed + 1`.
    #[arg(long)]
    seed2: Option<u64>,
    /// Sample a synthetic uniform space of this size instead.
    #[arg(long)]
    synthetic: Option<u64>,
    /// Independent trials, averaged.
    #[arg(long, default_value_t = 1)]
    trials: u64,
}

#[derive(Debug, Args)]
struct CurriculumArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, value_enum, default_value = "C2")]
    curriculum: CurriculumArg,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    /// Batches per round.
    #[arg(long, default_value_t = 10)]
    groups: usize,
    #[arg(long, default_value_t = 1)]
    rounds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Accuracy lines `<round> <task> <accuracy>`; `-` for stdin.
    #[arg(long)]
    feedback: Option<PathBuf>,
    /// Distribution and mastery per round, tab separated.
    #[arg(long)]
    trace: PathBuf,
    /// Labeled examples, one proof per line.
    #[arg(long)]
    examples: Option<PathBuf>,
    #[arg(long, default_value_t = 0.9)]
    mastery_threshold: f64,
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.99)]
    decay: f64,
    #[command(flatten)]
    format: FormatArgs,
}

#[derive(Debug, Args)]
struct DedupArgs {
    /// Proof or endpoint records carrying `endpoint_key`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, required = true)]
    forbid: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Step records to filter alongside, by proof id.
    #[arg(long, requires = "steps_out")]
    steps: Option<PathBuf>,
    #[arg(long, requires = "steps")]
    steps_out: Option<PathBuf>,
}

/// Failure classes with their exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Data(e)
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn text_format(f: &FormatArgs) -> TextFormat {
    TextFormat {
        notation: match f.format {
            NotationArg::Infix => Notation::Infix,
            NotationArg::Prefix => Notation::Prefix,
        },
        numbers: match f.numbers {
            NumbersArg::Digit => NumberEncoding::Digit,
            NumbersArg::Atomic => NumberEncoding::Atomic,
        },
        vars: match f.vars {
            VarsArg::Atomic => VarEncoding::Atomic,
            VarsArg::Split => VarEncoding::Split,
        },
    }
}

fn granularity(f: &FormatArgs) -> Granularity {
    match f.granularity {
        GranularityArg::Coarse => Granularity::Coarse,
        GranularityArg::Fine => Granularity::Fine,
    }
}

fn resolve_config(c: &ConfigArgs) -> Result<(String, ConstraintConfig), CliError> {
    if let Some(path) = &c.config_file {
        let cfg = load_config(path, c.nvar).map_err(|e| usage(e.to_string()))?;
        let name = path.file_stem().map_or("custom".into(), |s| s.to_string_lossy().into_owned());
        return Ok((name, cfg));
    }
    let preset: Preset = c.config.parse().map_err(|e: polyproof_core::config::ConfigError| usage(e.to_string()))?;
    let nvar = c.nvar.unwrap_or(1);
    if nvar == 0 {
        return Err(usage("--nvar must be at least 1"));
    }
    Ok((preset.name().to_owned(), preset.config(nvar)))
}

fn cmd_generate(a: &GenerateArgs) -> Result<(), CliError> {
    let (config_name, config) = resolve_config(&a.config)?;
    let opts = GenerateOptions {
        config_name,
        config,
        granularity: granularity(&a.format),
        format: text_format(&a.format),
        mode: match a.mode {
            ModeArg::Plain => Mode::Plain,
            ModeArg::Annotated => Mode::Annotated,
            ModeArg::Calculator => Mode::Calculator,
        },
        num: a.num,
        seed: a.seed,
        threads: a.threads,
        defer_exponents: a.exponent_deferral,
        forbid_files: a.forbid.clone(),
        out: a.out.clone(),
        keys_out: a.keys_out.clone(),
    };
    let s = generate::run(&opts).map_err(|e| match e {
        GenerateError::Sampling(polyproof_core::sampler::SamplingError::InvalidConfig(c)) => usage(c.to_string()),
        e => CliError::Data(e.into()),
    })?;
    eprintln!(
        "wrote {} proofs, {} step records to {} ({} dropped by dedup, {} rejections)",
        s.proofs,
        s.steps,
        a.out.display(),
        s.dropped,
        s.stats.rejections()
    );
    Ok(())
}

fn cmd_verify(a: &VerifyArgs) -> Result<(), CliError> {
    let kind = match a.kind {
        KindArg::Steps => FileKind::Steps,
        KindArg::Proofs => FileKind::Proofs,
        KindArg::Endpoints => FileKind::Endpoints,
        KindArg::Predictions => FileKind::Predictions,
    };
    let n = evaluate::verify(&a.file, kind).map_err(|e| CliError::Data(e.into()))?;
    println!("{}: {n} records ok", a.file.display());
    Ok(())
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<(), CliError> {
    if a.gold.is_none() && a.endpoints.is_none() {
        return Err(usage("give --gold/--predictions, --endpoints/--endpoint-predictions, or both"));
    }
    if !a.threshold.is_finite() {
        return Err(usage("--threshold must be finite"));
    }
    let opts = EvaluateOptions {
        gold: a.gold.clone(),
        predictions: a.predictions.clone(),
        endpoints: a.endpoints.clone(),
        endpoint_predictions: a.endpoint_predictions.clone(),
        threshold: a.threshold,
        rollout: a.rollout,
    };
    let summary = evaluate::run(&opts).map_err(|e| CliError::Data(e.into()))?;
    print!("{}", summary.to_text());
    if let Some(path) = &a.report_json {
        let text = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SpaceReport {
    keyer: String,
    n1: u64,
    n2: u64,
    seeds: Vec<[u64; 2]>,
    collisions: Vec<u64>,
    mean_estimate: Option<f64>,
    floor: f64,
    lower_bound_flag: bool,
}

const CAVEAT: &str = "few collisions: the estimate is unreliable, and for a non-uniform \
distribution collisions are more frequent than uniform sampling predicts, so the true size is \
likely larger";

fn cmd_estimate_space(a: &SpaceArgs) -> Result<(), CliError> {
    if a.n1 == 0 || a.n2 == 0 {
        return Err(usage("--n1 and --n2 must be at least 1"));
    }
    if a.trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    let mut runs: Vec<([u64; 2], CollisionEstimate)> = Vec::new();
    let keyer_name;
    if let Some(size) = a.synthetic {
        if size == 0 {
            return Err(usage("--synthetic must be at least 1"));
        }
        keyer_name = format!("synthetic-uniform-{size}");
        for t in 0..a.trials {
            let seed = a.seed + t;
            let e = estimate_uniform(size, a.n1, a.n2, seed).map_err(|e| CliError::Data(e.into()))?;
            runs.push(([seed, seed], e));
        }
    } else {
        let (_, cfg) = resolve_config(&a.config)?;
        let keyer = match a.keyer {
            KeyerArg::Initial => Keyer::Initial,
            KeyerArg::Endpoint => Keyer::Endpoint,
        };
        keyer_name = format!("{keyer:?}").to_lowercase();
        for t in 0..a.trials {
            let s1 = a.seed + 2 * t;
            let s2 = a.seed2.map_or(s1 + 1, |s| s + 2 * t);
            let e = estimate_size(&cfg, a.n1, a.n2, keyer, (s1, s2)).map_err(|e| CliError::Data(e.into()))?;
            runs.push(([s1, s2], e));
        }
    }
    let estimates: Vec<f64> = runs.iter().filter_map(|(_, e)| e.estimate).collect();
    let report = SpaceReport {
        keyer: keyer_name,
        n1: a.n1,
        n2: a.n2,
        seeds: runs.iter().map(|(s, _)| *s).collect(),
        collisions: runs.iter().map(|(_, e)| e.collisions).collect(),
        mean_estimate: (!estimates.is_empty()).then(|| estimates.iter().sum::<f64>() / estimates.len() as f64),
        floor: a.n1 as f64 * a.n2 as f64,
        lower_bound_flag: runs.iter().any(|(_, e)| e.lower_bound_flag),
    };
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    if report.lower_bound_flag {
        eprintln!("note: {CAVEAT}");
    }
    Ok(())
}

fn cmd_curriculum(a: &CurriculumArgs) -> Result<(), CliError> {
    let (config_name, base) = resolve_config(&a.config)?;
    if a.batch_size == 0 || a.groups == 0 {
        return Err(usage("--batch-size and --groups must be at least 1"));
    }
    if !(0.0..1.0).contains(&a.decay) || a.epsilon < 0.0 {
        return Err(usage("--decay must lie in [0, 1) and --epsilon must be nonnegative"));
    }
    let name = match a.curriculum {
        CurriculumArg::C => CurriculumName::C,
        CurriculumArg::C2 => CurriculumName::C2,
        CurriculumArg::C4 => CurriculumName::C4,
    };
    let opts = ScheduleOptions {
        graph: CurriculumGraph::named(name),
        base,
        program: GatedRemainder { threshold: a.mastery_threshold, floor: a.epsilon },
        decay: a.decay,
        groups: a.groups,
        batch_size: a.batch_size,
        rounds: a.rounds,
        seed: a.seed,
        granularity: granularity(&a.format),
        format: text_format(&a.format),
        feedback: a.feedback.clone(),
        trace: a.trace.clone(),
        examples: a.examples.clone(),
    };
    let s = schedule::run(&opts).map_err(|e| CliError::Data(e.into()))?;
    let mut m = RunManifest::new("curriculum", &config_name, base, a.seed);
    m.flags.insert("curriculum".into(), format!("{name:?}"));
    m.counts.insert("rounds".into(), s.rounds as u64);
    m.counts.insert("examples".into(), s.examples as u64);
    m.counts.insert("feedback_applied".into(), s.feedback_applied as u64);
    m.counts.insert("feedback_skipped".into(), s.feedback_skipped as u64);
    let manifest_path = a.trace.with_extension("manifest.json");
    m.write(&manifest_path).map_err(|e| CliError::Data(e.into()))?;
    eprintln!(
        "{} rounds, {} examples; feedback: {} applied, {} skipped",
        s.rounds, s.examples, s.feedback_applied, s.feedback_skipped
    );
    Ok(())
}

fn filter_records<T: serde::de::DeserializeOwned + Serialize>(
    input: &Path,
    out: &Path,
    keep: impl Fn(&T) -> bool,
) -> anyhow::Result<(usize, usize)> {
    let records: Vec<T> = read_jsonl(input)?;
    let mut w = JsonlWriter::create(out)?;
    let mut kept = 0;
    for r in &records {
        if keep(r) {
            w.write(r)?;
            kept += 1;
        }
    }
    w.finish()?;
    Ok((kept, records.len() - kept))
}

fn cmd_dedup(a: &DedupArgs) -> Result<(), CliError> {
    let mut forbidden = BTreeSet::new();
    for f in &a.forbid {
        forbidden.extend(read_keys(f).map_err(|e| CliError::Data(e.into()))?);
    }
    let records: Vec<serde_json::Value> = read_jsonl(&a.input).map_err(|e| CliError::Data(e.into()))?;
    let mut surviving = BTreeSet::new();
    let mut w = JsonlWriter::create(&a.out).map_err(|e| CliError::Data(e.into()))?;
    let mut dropped = 0;
    for (i, r) in records.iter().enumerate() {
        let key = r.get("endpoint_key").and_then(|k| k.as_str()).ok_or_else(|| {
            CliError::Data(anyhow::anyhow!("{}: line {}: no endpoint_key", a.input.display(), i + 1))
        })?;
        if forbidden.contains(key) {
            dropped += 1;
            continue;
        }
        if let Some(id) = r.get("id").and_then(|k| k.as_str()) {
            surviving.insert(id.to_owned());
        }
        w.write(r).map_err(|e| CliError::Data(e.into()))?;
    }
    w.finish().map_err(|e| CliError::Data(e.into()))?;
    eprintln!("kept {}, dropped {dropped}", records.len() - dropped);
    if let (Some(steps), Some(steps_out)) = (&a.steps, &a.steps_out) {
        let (kept, gone) = filter_records::<StepRecord>(steps, steps_out, |s| surviving.contains(s.proof_id()))?;
        eprintln!("steps: kept {kept}, dropped {gone}");
    }
    Ok(())
}

pub fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::EstimateSpace(a) => cmd_estimate_space(a),
        Command::Curriculum(a) => cmd_curriculum(a),
        Command::Dedup(a) => cmd_dedup(a),
    }
}

/// Parses `args` and runs the command; usage problems exit 1, data
/// problems exit 2.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.exit_code();
            let mut err = std::io::stderr();
            let _ = match e {
                CliError::Usage(m) => writeln!(err, "error: {m}"),
                CliError::Data(e) => writeln!(err, "error: {e:#}"),
            };
            ExitCode::from(code)
        }
    }
}
