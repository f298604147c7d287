//! Sampling limits on disk: TOML config files and the run manifest.

use std::collections::BTreeMap;
use std::path::Path;

use polyproof_core::config::{ConfigError, ConstraintConfig, Preset};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SettingsError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Syntax { path: String, message: String },
    #[error(transparent)]
    Invalid(#[from] ConfigError),
}

/// Limits keyed by their conventional symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct LimitsDoc {
    pub nvar: u32,
    pub minP_P: u32,
    pub maxP_P: u32,
    pub minf_P: u32,
    pub maxf_P: u32,
    pub maxT_f: u32,
    pub maxT_P: u32,
    pub D_P: u32,
    pub D_f: u32,
    pub V_P: u32,
    pub V_prod: u32,
    pub V_f: u32,
    pub C_P: u64,
    pub C_prod: u64,
    pub C_f: u64,
}

impl From<ConstraintConfig> for LimitsDoc {
    fn from(c: ConstraintConfig) -> Self {
        LimitsDoc {
            nvar: c.nvar,
            minP_P: c.min_products,
            maxP_P: c.max_products,
            minf_P: c.min_factors,
            maxf_P: c.max_factors,
            maxT_f: c.max_factor_terms,
            maxT_P: c.max_product_terms,
            D_P: c.max_degree,
            D_f: c.max_factor_degree,
            V_P: c.max_vars,
            V_prod: c.max_product_vars,
            V_f: c.max_factor_vars,
            C_P: c.max_coeff,
            C_prod: c.max_product_coeff,
            C_f: c.max_factor_coeff,
        }
    }
}

impl From<LimitsDoc> for ConstraintConfig {
    fn from(d: LimitsDoc) -> Self {
        ConstraintConfig {
            nvar: d.nvar,
            min_products: d.minP_P,
            max_products: d.maxP_P,
            min_factors: d.minf_P,
            max_factors: d.maxf_P,
            max_factor_terms: d.maxT_f,
            max_product_terms: d.maxT_P,
            max_degree: d.D_P,
            max_factor_degree: d.D_f,
            max_vars: d.V_P,
            max_product_vars: d.V_prod,
            max_factor_vars: d.V_f,
            max_coeff: d.C_P,
            max_product_coeff: d.C_prod,
            max_factor_coeff: d.C_f,
        }
    }
}

/// A config file: a base preset plus any overridden limits.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct ConfigFile {
    base: Option<String>,
    nvar: Option<u32>,
    minP_P: Option<u32>,
    maxP_P: Option<u32>,
    minf_P: Option<u32>,
    maxf_P: Option<u32>,
    maxT_f: Option<u32>,
    maxT_P: Option<u32>,
    D_P: Option<u32>,
    D_f: Option<u32>,
    V_P: Option<u32>,
    V_prod: Option<u32>,
    V_f: Option<u32>,
    C_P: Option<u64>,
    C_prod: Option<u64>,
    C_f: Option<u64>,
}

/// Resolves a TOML config against its base preset. `nvar` from the
/// command line wins over the file.
pub fn parse_config(text: &str, nvar: Option<u32>) -> Result<ConstraintConfig, String> {
    let f: ConfigFile = toml::from_str(text).map_err(|e| e.to_string())?;
    let base: Preset = f.base.as_deref().unwrap_or("medium_coeff").parse().map_err(|e: ConfigError| e.to_string())?;
    let mut d = LimitsDoc::from(base.config(nvar.or(f.nvar).unwrap_or(1)));
    macro_rules! set {
        ($($k:ident),*) => { $( if let Some(v) = f.$k { d.$k = v; } )* };
    }
    set!(minP_P, maxP_P, minf_P, maxf_P, maxT_f, maxT_P, D_P, D_f, V_P, V_prod, V_f, C_P, C_prod, C_f);
    if let Some(n) = nvar {
        d.nvar = n;
    }
    let cfg = ConstraintConfig::from(d);
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

pub fn load_config(path: &Path, nvar: Option<u32>) -> Result<ConstraintConfig, SettingsError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SettingsError::Io { path: path.display().to_string(), source: e })?;
    parse_config(&text, nvar).map_err(|message| SettingsError::Syntax { path: path.display().to_string(), message })
}

/// Everything needed to regenerate an output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config_name: String,
    pub config: LimitsDoc,
    pub seed: u64,
    pub flags: BTreeMap<String, String>,
    pub counts: BTreeMap<String, u64>,
}

impl RunManifest {
    pub fn new(command: &str, config_name: &str, config: ConstraintConfig, seed: u64) -> Self {
        RunManifest {
            command: command.to_owned(),
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            config_name: config_name.to_owned(),
            config: config.into(),
            seed,
            flags: BTreeMap::new(),
            counts: BTreeMap::new(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), SettingsError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes") + "\n";
        std::fs::write(path, text).map_err(|e| SettingsError::Io { path: path.display().to_string(), source: e })
    }
}
