use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, ExperimentConfig, RawConfig};
use crate::output::{remove_all, write_all, Output};
use crate::registry::{Experiment, Job};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Runtime(String),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 2,
            RunError::Runtime(_) => 3,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "config error: {e}"),
            RunError::Runtime(e) => write!(f, "runtime error: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<exlab_core::Error> for RunError {
    fn from(e: exlab_core::Error) -> Self {
        match e {
            exlab_core::Error::InvalidParameter { name, reason } => RunError::Runtime(format!("{name}: {reason}")),
            e => RunError::Runtime(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub master: u64,
    pub rule: String,
    /// Seeds of the first few replicas, for spot checks.
    pub first_replicas: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub file: String,
    pub rows: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub columns: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact: String,
    pub version: String,
    pub kind: String,
    pub config: BTreeMap<String, String>,
    pub seeds: SeedRecord,
    pub threads: usize,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<OutputRecord>,
}

/// Command-line settings that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

impl Overrides {
    fn apply(&self, raw: &mut RawConfig) {
        if let Some(s) = self.seed {
            raw.entries.insert("seed".into(), s.to_string());
        }
        if let Some(t) = self.threads {
            raw.entries.insert("threads".into(), t.to_string());
        }
        if let Some(d) = &self.out_dir {
            raw.entries.insert("out_dir".into(), d.display().to_string());
        }
    }
}

/// Resolves and checks a config without computing anything.
pub fn plan(raw: &RawConfig, over: &Overrides) -> Result<(ExperimentConfig, &'static Experiment, Job), ConfigError> {
    let mut raw = raw.clone();
    over.apply(&mut raw);
    let (cfg, exp) = ExperimentConfig::resolve(&raw)?;
    let job = (exp.plan)(&cfg.params)?;
    Ok((cfg, exp, job))
}

fn seed_record(cfg: &ExperimentConfig) -> SeedRecord {
    let count = ["replicas", "samples", "paths"]
        .iter()
        .find_map(|k| cfg.params.get::<u64>(k).ok())
        .unwrap_or(0)
        .min(8);
    SeedRecord {
        master: cfg.seed,
        rule: "replica i of an ensemble uses derive_seed(master, i, 0); multi-time runs that re-sample per time \
               use derive_seed(master, k, 0) as the master of time k; streams inside a replica use fixed tags"
            .into(),
        first_replicas: (0..count).map(|i| exlab_core::parallel::replica_seed(cfg.seed, i)).collect(),
    }
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Runs the experiment and writes its outputs and `manifest.json` to the
/// output directory. Nothing is left behind when the run fails.
pub fn run(raw: &RawConfig, over: &Overrides) -> Result<RunManifest, RunError> {
    let (cfg, _, job) = plan(raw, over)?;
    let started = now();
    let outputs: Vec<Output> = exlab_core::parallel::with_threads(cfg.threads, || job(cfg.seed))??;
    let manifest = RunManifest {
        artifact: "exlab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        kind: cfg.kind.clone(),
        config: cfg.echo(),
        seeds: seed_record(&cfg),
        threads: cfg.threads,
        started,
        finished: now(),
        outputs: outputs
            .iter()
            .map(|o| OutputRecord {
                file: o.file().to_string(),
                rows: o.rows(),
                columns: o.columns().map(|c| c.iter().map(|s| s.to_string()).collect()),
            })
            .collect(),
    };
    write_run(&cfg.out_dir, &outputs, &manifest)?;
    Ok(manifest)
}

fn write_run(dir: &Path, outputs: &[Output], manifest: &RunManifest) -> Result<(), RunError> {
    let created = !dir.exists();
    let fail = |e: std::io::Error| {
        if created {
            let _ = std::fs::remove_dir_all(dir);
        }
        RunError::Runtime(format!("cannot write to {}: {e}", dir.display()))
    };
    std::fs::create_dir_all(dir).map_err(fail)?;
    let written = write_all(dir, outputs).map_err(fail)?;
    let body = serde_json::to_string_pretty(manifest).expect("manifest serialises") + "\n";
    if let Err(e) = std::fs::write(dir.join(MANIFEST), body) {
        remove_all(&written);
        return Err(fail(e));
    }
    Ok(())
}
