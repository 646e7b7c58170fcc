//! Flat `key = value` experiment configs.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::registry::Experiment;

/// A rejected configuration. `key` names the offending entry when there is one.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    pub fn new(message: impl Into<String>) -> Self {
        Self { key: None, message: message.into() }
    }

    pub fn at(key: &str, message: impl Into<String>) -> Self {
        Self { key: Some(key.to_string()), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.key {
            Some(k) => write!(f, "{k}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Keys every experiment accepts besides its own parameters.
pub const RESERVED: [&str; 4] = ["kind", "seed", "threads", "out_dir"];

/// Raw entries of a config file; a key may appear only once.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    pub entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::new(format!("line {}: expected `key = value`", n + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || !k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(ConfigError::new(format!("line {}: bad key `{k}`", n + 1)));
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(ConfigError::at(k, "given twice"));
            }
        }
        Ok(Self { entries })
    }

    /// Reads a config file, or the `config` object of a run manifest when
    /// the file is JSON.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new(format!("cannot read {}: {e}", path.display())))?;
        if text.trim_start().starts_with('{') {
            let v: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| ConfigError::new(format!("{}: {e}", path.display())))?;
            let obj = v
                .get("config")
                .and_then(|c| c.as_object())
                .ok_or_else(|| ConfigError::new(format!("{}: no `config` object", path.display())))?;
            let mut entries = BTreeMap::new();
            for (k, v) in obj {
                let s = v
                    .as_str()
                    .ok_or_else(|| ConfigError::at(k, "manifest config values must be strings"))?;
                entries.insert(k.clone(), s.to_string());
            }
            return Ok(Self { entries });
        }
        Self::parse(&text)
    }
}

/// A config resolved against its experiment: every parameter present,
/// defaults filled in, no unknown keys.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: String,
    pub seed: u64,
    pub threads: usize,
    pub out_dir: PathBuf,
    pub params: Params,
}

impl ExperimentConfig {
    pub fn resolve(raw: &RawConfig) -> Result<(Self, &'static Experiment), ConfigError> {
        let kind = raw.entries.get("kind").ok_or_else(|| ConfigError::at("kind", "missing"))?;
        let exp = crate::registry::find(kind)
            .ok_or_else(|| ConfigError::at("kind", format!("unknown experiment `{kind}`; see `exlab list`")))?;
        let seed = match raw.entries.get("seed") {
            Some(s) => parse_value::<u64>("seed", s)?,
            None => 0,
        };
        let threads = match raw.entries.get("threads") {
            Some(s) => parse_value::<usize>("threads", s)?,
            None => 1,
        };
        if threads == 0 {
            return Err(ConfigError::at("threads", "must be at least 1"));
        }
        let out_dir = PathBuf::from(raw.entries.get("out_dir").map_or("out", String::as_str));
        let params = Params::resolve(raw, exp)?;
        Ok((
            Self {
                kind: kind.clone(),
                seed,
                threads,
                out_dir,
                params,
            },
            exp,
        ))
    }

    /// Every effective entry, defaults included; feeding this back through
    /// [`RawConfig`] reproduces the run.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut m = self.params.values.clone();
        m.insert("kind".into(), self.kind.clone());
        m.insert("seed".into(), self.seed.to_string());
        m
    }
}

/// Typed access to the resolved parameters of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    values: BTreeMap<String, String>,
}

fn parse_value<T: FromStr>(key: &str, s: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    s.parse::<T>()
        .map_err(|e| ConfigError::at(key, format!("cannot parse `{s}` as {}: {e}", std::any::type_name::<T>())))
}

impl Params {
    fn resolve(raw: &RawConfig, exp: &Experiment) -> Result<Self, ConfigError> {
        for k in raw.entries.keys() {
            if !RESERVED.contains(&k.as_str()) && !exp.params().any(|p| p.key == k) {
                return Err(ConfigError::at(k, "not a parameter of this experiment"));
            }
        }
        let values = exp
            .params()
            .map(|p| {
                let v = raw.entries.get(p.key).cloned().unwrap_or_else(|| p.default.to_string());
                (p.key.to_string(), v)
            })
            .collect();
        Ok(Self { values })
    }

    pub fn from_pairs(pairs: &[(&str, &str)]) -> Self {
        Self {
            values: pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        }
    }

    pub fn raw(&self, key: &str) -> Result<&str, ConfigError> {
        self.values
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| ConfigError::at(key, "missing"))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        parse_value(key, self.raw(key)?)
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        let s = self.raw(key)?;
        if s.is_empty() {
            return Ok(Vec::new());
        }
        s.split(',').map(|x| parse_value(key, x.trim())).collect()
    }

    pub fn flag(&self, key: &str) -> Result<bool, ConfigError> {
        match self.raw(key)? {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            s => Err(ConfigError::at(key, format!("expected true or false, got `{s}`"))),
        }
    }

    /// One of `choices`, as its index.
    pub fn choice(&self, key: &str, choices: &[&str]) -> Result<usize, ConfigError> {
        let s = self.raw(key)?;
        choices
            .iter()
            .position(|c| *c == s)
            .ok_or_else(|| ConfigError::at(key, format!("`{s}` is not one of {}", choices.join(", "))))
    }

    /// An unsigned value where `auto` (returned as `None`) is also allowed.
    pub fn auto_u64(&self, key: &str) -> Result<Option<u64>, ConfigError> {
        match self.raw(key)? {
            "auto" => Ok(None),
            s => parse_value(key, s).map(Some),
        }
    }
}
