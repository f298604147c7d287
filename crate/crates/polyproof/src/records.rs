//! JSON-lines record files.
//!
//! Integers are written as decimal strings so every field is text. Field
//! order follows struct order, which keeps rewrites byte-identical.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use polyproof_core::eval::{Candidate, GoldEndpoint, GoldStep, Prediction};
use polyproof_core::pairs::Mode;
use polyproof_core::proof::{Granularity, StepKind};
use polyproof_core::text::{Notation, NumberEncoding, TextFormat, TokenSeq, VarEncoding};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("{path}: line {line}: {message}")]
    Schema { path: String, line: usize, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
}

impl RecordError {
    fn schema(path: &Path, line: usize, message: impl Into<String>) -> Self {
        RecordError::Schema { path: path.display().to_string(), line, message: message.into() }
    }

    pub fn io(path: &Path, source: io::Error) -> Self {
        RecordError::Io { path: path.display().to_string(), source }
    }
}

/// Decimal-string integers.
mod decimal {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};
    use std::fmt::Display;
    use std::str::FromStr;

    pub fn serialize<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        D: Deserializer<'de>,
    {
        let s = String::deserialize(d)?;
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) || (s.len() > 1 && s.starts_with('0')) {
            return Err(D::Error::custom(format!("expected a decimal string, got {s:?}")));
        }
        s.parse().map_err(|_| D::Error::custom(format!("integer out of range: {s}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepRecord {
    pub id: String,
    pub config_name: String,
    #[serde(with = "decimal")]
    pub nvar: u32,
    pub granularity: String,
    pub format: String,
    pub mode: String,
    #[serde(with = "decimal")]
    pub step_index: usize,
    pub step_kind: String,
    pub input: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProofRecord {
    pub id: String,
    pub endpoint: String,
    pub endpoint_key: String,
    #[serde(with = "decimal")]
    pub num_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointRecord {
    pub id: String,
    pub config_name: String,
    #[serde(with = "decimal")]
    pub nvar: u32,
    pub format: String,
    pub input: String,
    pub endpoint_key: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateRecord {
    pub tokens: String,
    pub logprob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionRecord {
    pub step_id: String,
    pub candidates: Vec<CandidateRecord>,
}

/// `notation:numbers:vars`, e.g. `infix:digit:atomic`.
pub fn format_name(fmt: TextFormat) -> String {
    format!("{}:{}:{}", fmt.notation.name(), fmt.numbers.name(), fmt.vars.name())
}

pub fn parse_format(s: &str) -> Option<TextFormat> {
    let mut parts = s.split(':');
    let notation = Notation::from_str(parts.next()?).ok()?;
    let numbers = parts.next().map_or(Ok(NumberEncoding::default()), NumberEncoding::from_str).ok()?;
    let vars = parts.next().map_or(Ok(VarEncoding::default()), VarEncoding::from_str).ok()?;
    if parts.next().is_some() {
        return None;
    }
    Some(TextFormat { notation, numbers, vars })
}

/// Step id of the `step`-th record of proof `proof_id`.
pub fn step_id(proof_id: &str, step: usize) -> String {
    format!("{proof_id}:{step}")
}

impl StepRecord {
    pub fn proof_id(&self) -> &str {
        self.id.rsplit_once(':').map_or(self.id.as_str(), |(p, _)| p)
    }

    /// Checks the enumerated fields and converts to a gold step.
    pub fn to_gold(&self) -> Result<GoldStep, String> {
        if self.id != step_id(self.proof_id(), self.step_index) {
            return Err(format!("id {:?} does not end in step index {}", self.id, self.step_index));
        }
        Granularity::from_str(&self.granularity).map_err(|_| format!("unknown granularity {:?}", self.granularity))?;
        let format = parse_format(&self.format).ok_or_else(|| format!("unknown format {:?}", self.format))?;
        let mode = Mode::from_str(&self.mode).map_err(|_| format!("unknown mode {:?}", self.mode))?;
        let kind = StepKind::from_str(&self.step_kind).map_err(|_| format!("unknown step kind {:?}", self.step_kind))?;
        Ok(GoldStep {
            step_id: self.id.clone(),
            proof_id: self.proof_id().to_owned(),
            step_index: self.step_index,
            kind,
            mode,
            format,
            target: TokenSeq::from_text(&self.target),
        })
    }
}

impl EndpointRecord {
    pub fn to_gold(&self) -> Result<GoldEndpoint, String> {
        let format = parse_format(&self.format).ok_or_else(|| format!("unknown format {:?}", self.format))?;
        Ok(GoldEndpoint { id: self.id.clone(), format, target: TokenSeq::from_text(&self.target) })
    }
}

impl PredictionRecord {
    pub fn to_prediction(&self) -> Prediction {
        Prediction {
            step_id: self.step_id.clone(),
            candidates: self
                .candidates
                .iter()
                .map(|c| Candidate { tokens: TokenSeq::from_text(&c.tokens), logprob: c.logprob })
                .collect(),
        }
    }
}

/// Serializes one record as a line without the newline.
pub fn to_line<T: Serialize>(record: &T) -> String {
    serde_json::to_string(record).expect("records serialize")
}

pub fn from_line<T: DeserializeOwned>(line: &str) -> Result<T, serde_json::Error> {
    serde_json::from_str(line)
}

/// Reads every record; blank lines are skipped.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, RecordError> {
    let file = File::open(path).map_err(|e| RecordError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| RecordError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(from_line(&line).map_err(|e| RecordError::schema(path, i + 1, e.to_string()))?);
    }
    Ok(out)
}

pub fn read_gold_steps(path: &Path) -> Result<Vec<GoldStep>, RecordError> {
    numbered(path, read_jsonl::<StepRecord>(path)?, |r| r.to_gold())
}

pub fn read_gold_endpoints(path: &Path) -> Result<Vec<GoldEndpoint>, RecordError> {
    numbered(path, read_jsonl::<EndpointRecord>(path)?, |r| r.to_gold())
}

pub fn read_predictions(path: &Path) -> Result<Vec<Prediction>, RecordError> {
    numbered(path, read_jsonl::<PredictionRecord>(path)?, |r| {
        let p = r.to_prediction();
        p.validate().map_err(|e| e.to_string())?;
        Ok(p)
    })
}

fn numbered<R, T>(path: &Path, records: Vec<R>, f: impl Fn(&R) -> Result<T, String>) -> Result<Vec<T>, RecordError> {
    records
        .iter()
        .enumerate()
        .map(|(i, r)| f(r).map_err(|m| RecordError::schema(path, i + 1, m)))
        .collect()
}

/// Buffered line writer.
pub struct JsonlWriter {
    out: BufWriter<File>,
    path: String,
}

impl JsonlWriter {
    pub fn create(path: &Path) -> Result<Self, RecordError> {
        let file = File::create(path).map_err(|e| RecordError::io(path, e))?;
        Ok(JsonlWriter { out: BufWriter::new(file), path: path.display().to_string() })
    }

    pub fn write<T: Serialize>(&mut self, record: &T) -> Result<(), RecordError> {
        writeln!(self.out, "{}", to_line(record)).map_err(|e| RecordError::Io { path: self.path.clone(), source: e })
    }

    pub fn finish(mut self) -> Result<(), RecordError> {
        self.out.flush().map_err(|e| RecordError::Io { path: self.path, source: e })
    }
}
