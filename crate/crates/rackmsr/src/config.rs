//! Run configurations and code bundles.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codes::{CodeError, RackCode, SweepMode};
use crate::gf::{prime_power, Field, FieldSpec, GfError};
use crate::lambdas::{explicit_lambdas, search_lambdas, LambdaError, LambdaRecord, LambdaSet, Strategy};
use crate::params::{CodeParams, ParamError, RawParams};

pub const BUNDLE_MAGIC: &str = "RACKMSR-BUNDLE";
pub const BUNDLE_VERSION: u32 = 1;

/// Largest q tried when the config leaves the field open.
pub const FIELD_SEARCH_LIMIT: u32 = 1 << 12;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Field(#[from] GfError),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Lambda(#[from] LambdaError),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error("no field with q <= {limit} admits coefficients for these parameters")]
    NoField { limit: u32 },
    #[error("bundle: {0}")]
    Bundle(String),
}

impl ConfigError {
    /// Coefficient search or field search ran out of candidates.
    pub fn is_exhaustion(&self) -> bool {
        match self {
            ConfigError::Lambda(e) => e.is_exhaustion(),
            ConfigError::NoField { .. } => true,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaChoice {
    /// λ_i = ξ^i.
    #[default]
    Explicit,
    Greedy,
    Random,
    /// Explicit, falling back to greedy.
    Auto,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LambdaConfig {
    #[serde(default)]
    pub mode: LambdaChoice,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyConfig {
    #[serde(default = "exhaustive")]
    pub mds: SweepMode,
    #[serde(default)]
    pub folded: bool,
    #[serde(default)]
    pub kernels: bool,
}

fn exhaustive() -> SweepMode {
    SweepMode::Exhaustive
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { mds: SweepMode::Exhaustive, folded: false, kernels: false }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairConfig {
    #[serde(default)]
    pub trials: usize,
    #[serde(default)]
    pub h: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hosts: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Experiment {
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub repair: RepairConfig,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Omitted: search for the smallest workable field.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldSpec>,
    pub params: RawParams,
    #[serde(default)]
    pub lambdas: LambdaConfig,
    #[serde(default)]
    pub experiment: Experiment,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }
}

fn strategy(cfg: &LambdaConfig) -> Strategy {
    match (cfg.mode, cfg.budget) {
        (LambdaChoice::Random, Some(max_tries)) => Strategy::Random { seed: cfg.seed, max_tries },
        (LambdaChoice::Random, None) => Strategy::random(cfg.seed),
        (_, Some(budget)) => Strategy::Greedy { budget },
        (_, None) => Strategy::greedy(),
    }
}

/// Coefficients for a fixed field according to the configured mode.
pub fn choose_lambdas(params: &CodeParams, field: &Field, cfg: &LambdaConfig) -> Result<LambdaSet, LambdaError> {
    match cfg.mode {
        LambdaChoice::Explicit => explicit_lambdas(params, field),
        LambdaChoice::Greedy | LambdaChoice::Random => search_lambdas(params, field, strategy(cfg)),
        LambdaChoice::Auto => match explicit_lambdas(params, field) {
            Err(e) if rejected(&e) => search_lambdas(params, field, strategy(cfg)),
            other => other,
        },
    }
}

/// Errors meaning "these coefficients do not work here", as opposed to bad input.
fn rejected(e: &LambdaError) -> bool {
    e.is_exhaustion() || matches!(e, LambdaError::ConstraintFailure { .. } | LambdaError::Collision(_))
}

/// Smallest q with u | q−1 and room for the coefficient pool where the
/// configured mode succeeds.
pub fn search_field(params: &CodeParams, cfg: &LambdaConfig) -> Result<(Field, LambdaSet), ConfigError> {
    let need = params.u * params.parent_n_bar * params.s + 1;
    for q in need as u32..=FIELD_SEARCH_LIMIT {
        if (q - 1) % params.u as u32 != 0 {
            continue;
        }
        let Some((p, m)) = prime_power(q as u64) else { continue };
        let field = Field::new(p, m, None)?;
        match choose_lambdas(params, &field, cfg) {
            Ok(set) => return Ok((field, set)),
            Err(e) if rejected(&e) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    Err(ConfigError::NoField { limit: FIELD_SEARCH_LIMIT })
}

/// Builds the code a config describes.
pub fn build_code(cfg: &RunConfig) -> Result<RackCode, ConfigError> {
    let params = CodeParams::from_raw(&cfg.params)?;
    let (field, lambdas) = match &cfg.field {
        Some(spec) => {
            let field = Field::from_spec(spec)?;
            let set = choose_lambdas(&params, &field, &cfg.lambdas)?;
            (field, set)
        }
        None => search_field(&params, &cfg.lambdas)?,
    };
    Ok(RackCode::build(&params, &field, &lambdas)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bundle {
    pub magic: String,
    pub version: u32,
    pub field: FieldSpec,
    pub params: RawParams,
    pub lambdas: LambdaRecord,
    pub parity_hash: String,
}

/// Bundle contents with the coefficients re-verified but no code built.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub params: CodeParams,
    pub field: Field,
    pub lambdas: LambdaSet,
    pub parity_hash: String,
}

impl Bundle {
    pub fn from_code(code: &RackCode) -> Bundle {
        Bundle {
            magic: BUNDLE_MAGIC.to_string(),
            version: BUNDLE_VERSION,
            field: code.field.spec(),
            params: code.params.raw(),
            lambdas: code.lambdas.record(),
            parity_hash: code.parity_hash(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("bundle serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Bundle, ConfigError> {
        let b: Bundle = serde_json::from_str(text)?;
        if b.magic != BUNDLE_MAGIC {
            return Err(ConfigError::Bundle(format!("bad magic {:?}", b.magic)));
        }
        if b.version != BUNDLE_VERSION {
            return Err(ConfigError::Bundle(format!("unsupported version {}", b.version)));
        }
        Ok(b)
    }

    pub fn load(&self) -> Result<Loaded, ConfigError> {
        let params = CodeParams::from_raw(&self.params)?;
        let field = Field::from_spec(&self.field)?;
        let want = params.parent_n_bar * params.s;
        if self.lambdas.lambdas.len() != want {
            return Err(ConfigError::Bundle(format!("{} coefficients, expected {want}", self.lambdas.lambdas.len())));
        }
        let lambdas = LambdaSet::from_record(&params, &field, &self.lambdas)?;
        Ok(Loaded { params, field, lambdas, parity_hash: self.parity_hash.clone() })
    }

    /// Rebuilds the code and checks the stored parity hash.
    pub fn open(&self) -> Result<RackCode, ConfigError> {
        let l = self.load()?;
        let code = RackCode::build(&l.params, &l.field, &l.lambdas)?;
        if code.parity_hash() != self.parity_hash {
            return Err(ConfigError::Bundle("parity hash mismatch".into()));
        }
        Ok(code)
    }
}
