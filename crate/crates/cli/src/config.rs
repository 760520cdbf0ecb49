use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use thiserror::Error;

use crate::suites::check_def;

pub const DEFAULT_SEED: u64 = 20_241_014;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("{0}")]
    Invalid(String),
}

/// Settings shared by every suite. Read from JSON; command-line flags are
/// applied on top.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Overrides keyed by check name.
    pub tolerances: BTreeMap<String, f64>,
    /// Gauss–Legendre × uniform × uniform node counts on SO(3).
    pub grid: [usize; 3],
    /// Side of the periodic box for field checks.
    #[serde(rename = "box")]
    pub box_side: f64,
    pub out: Option<PathBuf>,
    /// Include wall time in the report (makes it run-dependent).
    pub timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            tolerances: BTreeMap::new(),
            grid: [24, 24, 24],
            box_side: 2.0 * PI,
            out: None,
            timing: false,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        serde_json::from_str(&text).map_err(|source| ConfigError::Parse { path: path.into(), source })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, tol) in &self.tolerances {
            if check_def(name).is_none() {
                return Err(ConfigError::Invalid(format!("unknown check {name:?} in tolerances")));
            }
            if !(tol.is_finite() && *tol >= 0.0) {
                return Err(ConfigError::Invalid(format!("tolerance for {name} must be finite and >= 0, got {tol}")));
            }
        }
        if self.grid.iter().any(|&n| n < 2) {
            return Err(ConfigError::Invalid(format!("grid sizes must be >= 2, got {:?}", self.grid)));
        }
        if !(self.box_side > 0.0 && self.box_side.is_finite()) {
            return Err(ConfigError::Invalid(format!("box side must be positive, got {}", self.box_side)));
        }
        Ok(())
    }

    pub fn tolerance(&self, name: &str, default: f64) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(default)
    }

    /// Generator for one acceptance criterion: ChaCha8 seeded with `seed`,
    /// stream number = criterion number.
    pub fn rng(&self, criterion: u8) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(u64::from(criterion));
        rng
    }
}

/// Parses `name=value`.
pub fn parse_tolerance(arg: &str) -> Result<(String, f64), String> {
    let (name, value) = arg.split_once('=').ok_or_else(|| format!("expected name=value, got {arg:?}"))?;
    let value: f64 = value.trim().parse().map_err(|e| format!("bad tolerance value in {arg:?}: {e}"))?;
    Ok((name.trim().to_string(), value))
}

/// Parses `a,b,c` into three numbers.
pub fn parse_triple<T: std::str::FromStr>(arg: &str) -> Result<[T; 3], String>
where
    T::Err: std::fmt::Display,
{
    let parts: Vec<&str> = arg.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated values, got {arg:?}"));
    }
    let mut out = Vec::with_capacity(3);
    for p in parts {
        out.push(p.parse::<T>().map_err(|e| format!("bad component {p:?}: {e}"))?);
    }
    Ok(out.try_into().ok().expect("length checked above"))
}
