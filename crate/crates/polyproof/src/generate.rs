//! Dataset generation: proofs sampled in parallel, written in index order.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use polyproof_core::config::ConstraintConfig;
use polyproof_core::expr::{Factor, ProofState};
use polyproof_core::pairs::{endpoint_pair, proof_pairs, Mode};
use polyproof_core::proof::{generate_proof, Granularity};
use polyproof_core::sampler::{sample_record, SamplerStats, SamplingError};
use polyproof_core::space::dedup_filter;
use polyproof_core::text::{serialize, TextFormat};
use rayon::prelude::*;
use thiserror::Error;

use crate::records::{format_name, step_id, EndpointRecord, JsonlWriter, ProofRecord, RecordError, StepRecord};
use crate::settings::{RunManifest, SettingsError};

/// Records sampled per parallel round.
const CHUNK: u64 = 4096;
/// Attempts allowed per requested record before dedup is declared stuck.
const ATTEMPTS_PER_RECORD: u64 = 100;

pub const STEPS_FILE: &str = "steps.jsonl";
pub const PROOFS_FILE: &str = "proofs.jsonl";
pub const ENDPOINTS_FILE: &str = "endpoints.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Record(#[from] RecordError),
    #[error(transparent)]
    Settings(#[from] SettingsError),
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
    #[error("only {kept} of {wanted} records survived dedup after {attempts} attempts")]
    DedupStuck { kept: u64, wanted: u64, attempts: u64 },
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone)]
pub struct GenerateOptions {
    pub config_name: String,
    pub config: ConstraintConfig,
    pub granularity: Granularity,
    pub format: TextFormat,
    pub mode: Mode,
    pub num: u64,
    pub seed: u64,
    /// Worker threads; 0 lets the pool decide. Output does not depend on it.
    pub threads: usize,
    pub defer_exponents: bool,
    pub forbid_files: Vec<PathBuf>,
    pub out: PathBuf,
    pub keys_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GenerateSummary {
    pub proofs: u64,
    pub steps: u64,
    pub dropped: u64,
    pub attempts: u64,
    pub stats: SamplerStats,
}

struct Built {
    endpoint_key: String,
    steps: Vec<StepRecord>,
    proof: ProofRecord,
    endpoint: EndpointRecord,
    stats: SamplerStats,
}

/// One endpoint key per line; blank lines ignored.
pub fn read_keys(path: &Path) -> Result<BTreeSet<String>, GenerateError> {
    let file = fs::File::open(path).map_err(|e| GenerateError::Io(path.display().to_string(), e))?;
    let mut keys = BTreeSet::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| GenerateError::Io(path.display().to_string(), e))?;
        let key = line.trim();
        if !key.is_empty() {
            keys.insert(key.to_owned());
        }
    }
    Ok(keys)
}

fn build(opts: &GenerateOptions, index: u64) -> Result<Built, SamplingError> {
    let mut stats = SamplerStats::default();
    let initial = sample_record(&opts.config, opts.seed, index, &mut stats)?;
    let proof = generate_proof(&initial, opts.granularity);
    let id = index.to_string();
    let format = format_name(opts.format);
    let endpoint_key = proof.endpoint.canonical_key();
    let steps = proof_pairs(&proof, opts.mode, opts.format, opts.defer_exponents)
        .into_iter()
        .enumerate()
        .map(|(i, pair)| StepRecord {
            id: step_id(&id, i),
            config_name: opts.config_name.clone(),
            nvar: opts.config.nvar,
            granularity: opts.granularity.name().to_owned(),
            format: format.clone(),
            mode: opts.mode.name().to_owned(),
            step_index: i,
            step_kind: pair.kind.label().to_owned(),
            input: pair.input.to_string(),
            target: pair.target.to_string(),
        })
        .collect::<Vec<_>>();
    let endpoint_tokens = serialize(&ProofState::Flat(Factor::canonical_from_nf(&proof.endpoint)), opts.format);
    let (input, target) = endpoint_pair(&proof, opts.format);
    Ok(Built {
        proof: ProofRecord {
            id: id.clone(),
            endpoint: endpoint_tokens.to_string(),
            endpoint_key: endpoint_key.clone(),
            num_steps: steps.len(),
        },
        endpoint: EndpointRecord {
            id,
            config_name: opts.config_name.clone(),
            nvar: opts.config.nvar,
            format,
            input: input.to_string(),
            endpoint_key: endpoint_key.clone(),
            target: target.to_string(),
        },
        endpoint_key,
        steps,
        stats,
    })
}

fn manifest(opts: &GenerateOptions, summary: &GenerateSummary) -> RunManifest {
    let mut m = RunManifest::new("generate", &opts.config_name, opts.config, opts.seed);
    let flags = [
        ("granularity", opts.granularity.name().to_owned()),
        ("format", format_name(opts.format)),
        ("mode", opts.mode.name().to_owned()),
        ("num", opts.num.to_string()),
        ("exponent_deferral", opts.defer_exponents.to_string()),
        (
            "forbid",
            opts.forbid_files.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(","),
        ),
    ];
    m.flags = flags.into_iter().map(|(k, v)| (k.to_owned(), v)).collect();
    let counts = [
        ("proofs", summary.proofs),
        ("steps", summary.steps),
        ("dropped", summary.dropped),
        ("attempts", summary.attempts),
        ("factor_rejections", summary.stats.factor_rejections),
        ("product_rejections", summary.stats.product_rejections),
        ("polynomial_rejections", summary.stats.polynomial_rejections),
    ];
    m.counts = counts.into_iter().map(|(k, v)| (k.to_owned(), v)).collect();
    m
}

/// Writes `steps.jsonl`, `proofs.jsonl`, `endpoints.jsonl` and
/// `manifest.json` under `opts.out`.
pub fn run(opts: &GenerateOptions) -> Result<GenerateSummary, GenerateError> {
    opts.config.validate().map_err(SamplingError::from)?;
    fs::create_dir_all(&opts.out).map_err(|e| GenerateError::Io(opts.out.display().to_string(), e))?;
    let mut forbidden = BTreeSet::new();
    for f in &opts.forbid_files {
        forbidden.extend(read_keys(f)?);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()
        .map_err(|e| GenerateError::Pool(e.to_string()))?;

    let mut steps_out = JsonlWriter::create(&opts.out.join(STEPS_FILE))?;
    let mut proofs_out = JsonlWriter::create(&opts.out.join(PROOFS_FILE))?;
    let mut endpoints_out = JsonlWriter::create(&opts.out.join(ENDPOINTS_FILE))?;
    let mut keys_out = match &opts.keys_out {
        Some(p) => Some(BufWriter::new(
            fs::File::create(p).map_err(|e| GenerateError::Io(p.display().to_string(), e))?,
        )),
        None => None,
    };

    let mut summary = GenerateSummary::default();
    let max_attempts = opts.num.saturating_mul(ATTEMPTS_PER_RECORD).max(1000);
    while summary.proofs < opts.num {
        if summary.attempts >= max_attempts {
            return Err(GenerateError::DedupStuck {
                kept: summary.proofs,
                wanted: opts.num,
                attempts: summary.attempts,
            });
        }
        let start = summary.attempts;
        let len = (opts.num - summary.proofs).min(CHUNK);
        let built: Vec<Result<Built, SamplingError>> =
            pool.install(|| (start..start + len).into_par_iter().map(|i| build(opts, i)).collect());
        summary.attempts += len;
        let built = built.into_iter().collect::<Result<Vec<_>, _>>()?;
        let mut kept = dedup_filter(built, &forbidden, |b: &Built| b.endpoint_key.clone());
        for b in kept.by_ref() {
            summary.stats.merge(&b.stats);
            for s in &b.steps {
                steps_out.write(s)?;
            }
            proofs_out.write(&b.proof)?;
            endpoints_out.write(&b.endpoint)?;
            if let Some(k) = keys_out.as_mut() {
                writeln!(k, "{}", b.endpoint_key).map_err(|e| GenerateError::Io("keys".into(), e))?;
            }
            summary.proofs += 1;
            summary.steps += b.steps.len() as u64;
        }
        summary.dropped += kept.dropped();
    }
    steps_out.finish()?;
    proofs_out.finish()?;
    endpoints_out.finish()?;
    if let Some(mut k) = keys_out {
        k.flush().map_err(|e| GenerateError::Io("keys".into(), e))?;
    }
    manifest(opts, &summary).write(&opts.out.join(MANIFEST_FILE))?;
    Ok(summary)
}
