//! Run configuration.
//!
//! Every subcommand reads a flat TOML document of `key = value` pairs.
//! Values resolve as built-in default, then `LINKLOGIC_SEED` for `seed`,
//! then the config file, then command-line flags. A key no part of the
//! subcommand consumes is an error naming that key.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::baseline::{HeuristicConfig, ThresholdMode};
use crate::error::{Error, Result};
use crate::eval::{Gain, Method, SweepConfig};
use crate::explain::PerturbationConfig;
use crate::kge::TrainingConfig;

/// Alternative spellings accepted in config files.
const ALIASES: &[(&str, &str)] =
    &[("lr", "learning_rate"), ("neg_adversarial_sampling", "adversarial_sampling"), ("m", "per_group")];

/// Environment variable supplying the default `seed`.
pub const SEED_ENV: &str = "LINKLOGIC_SEED";

/// Merged key-value layers for one run.
#[derive(Debug, Clone, Default)]
pub struct Layers {
    file: toml::Table,
    flags: toml::Table,
    env_seed: Option<u64>,
    used: BTreeSet<String>,
    resolved: toml::Table,
}

fn canonical(mut table: toml::Table) -> Result<toml::Table> {
    for (alias, key) in ALIASES {
        if let Some(v) = table.remove(*alias) {
            if table.contains_key(*key) {
                return Err(Error::Config(format!("both `{alias}` and `{key}` are set")));
            }
            table.insert((*key).to_owned(), v);
        }
    }
    Ok(table)
}

/// Serialize `value` into a table; `None` fields should be skipped so only
/// set flags appear.
pub fn to_table<T: Serialize>(value: &T) -> Result<toml::Table> {
    match toml::Value::try_from(value) {
        Ok(toml::Value::Table(t)) => Ok(t),
        Ok(_) => Err(Error::Config("config part is not a table".into())),
        Err(e) => Err(Error::Config(e.to_string())),
    }
}

impl Layers {
    /// `file` is the parsed config document, `flags` the flag overrides.
    pub fn new(file: toml::Table, flags: toml::Table, env_seed: Option<u64>) -> Result<Self> {
        Ok(Self {
            file: canonical(file)?,
            flags: canonical(flags)?,
            env_seed,
            used: BTreeSet::new(),
            resolved: toml::Table::new(),
        })
    }

    /// Read a config file, or an empty document when `path` is `None`.
    pub fn read_file(path: Option<&Path>) -> Result<toml::Table> {
        let Some(path) = path else {
            return Ok(toml::Table::new());
        };
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        text.parse::<toml::Table>().map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// `LINKLOGIC_SEED` from the environment.
    pub fn env_seed() -> Result<Option<u64>> {
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("{SEED_ENV} must be an unsigned integer, got {v:?}"))),
            Err(_) => Ok(None),
        }
    }

    /// Resolve the keys of `base` through the layers. Keys may be shared by
    /// several parts.
    pub fn take<T: Serialize + DeserializeOwned>(&mut self, base: &T) -> Result<T> {
        let mut table = to_table(base)?;
        if let (Some(seed), Some(slot)) = (self.env_seed, table.get_mut("seed")) {
            let seed = i64::try_from(seed)
                .map_err(|_| Error::Config(format!("seed {seed} does not fit in a signed 64-bit integer")))?;
            *slot = toml::Value::Integer(seed);
        }
        let keys: Vec<String> = table.keys().cloned().collect();
        for key in keys {
            for layer in [&self.file, &self.flags] {
                if let Some(v) = layer.get(&key) {
                    table.insert(key.clone(), v.clone());
                }
            }
            self.used.insert(key);
        }
        let value: T = toml::Value::Table(table.clone())
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_owned()))?;
        self.resolved.extend(to_table(&value)?);
        Ok(value)
    }

    /// Fail on keys no part consumed and return the resolved document.
    pub fn finish(self) -> Result<toml::Table> {
        let mut unknown: Vec<&String> =
            self.file.keys().chain(self.flags.keys()).filter(|k| !self.used.contains(*k)).collect();
        unknown.sort();
        unknown.dedup();
        match unknown.first() {
            Some(k) => Err(Error::Config(format!("unknown config key `{k}`"))),
            None => Ok(self.resolved),
        }
    }
}

/// Write a resolved document as TOML.
pub fn write_resolved(table: &toml::Table, path: &Path) -> Result<()> {
    let text = toml::to_string(table).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepareSettings {
    pub fb14: bool,
    pub proportions: [f64; 3],
    pub seed: u64,
}

impl Default for PrepareSettings {
    fn default() -> Self {
        let d = crate::kg::PrepareOptions::default();
        Self { fb14: d.fb14, proportions: d.proportions, seed: d.seed }
    }
}

impl PrepareSettings {
    pub fn options(&self) -> crate::kg::PrepareOptions {
        crate::kg::PrepareOptions { proportions: self.proportions, seed: self.seed, fb14: self.fb14 }
    }
}

/// Synthetic corpus settings plus the split applied to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSplit {
    pub proportions: [f64; 3],
}

impl Default for SynthSplit {
    fn default() -> Self {
        Self { proportions: [1.0, 0.0, 0.0] }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// The full-scale recipe.
    #[default]
    Full,
    /// The small synthetic-scale recipe.
    Desk,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PresetChoice {
    pub preset: Preset,
}

/// Model keys of published training tables. Only ComplEx is supported;
/// `batch_size_eval` is recorded but unused.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSettings {
    pub model_name: String,
    pub batch_size_eval: usize,
}

impl Default for ModelSettings {
    fn default() -> Self {
        Self { model_name: "ComplEx".into(), batch_size_eval: 16 }
    }
}

/// Resolve training settings: the preset picks the base recipe.
pub fn resolve_training(layers: &mut Layers) -> Result<TrainingConfig> {
    let preset = layers.take(&PresetChoice::default())?.preset;
    let model = layers.take(&ModelSettings::default())?;
    if !model.model_name.eq_ignore_ascii_case("complex") {
        return Err(Error::Config(format!("model_name must be ComplEx, got {:?}", model.model_name)));
    }
    let base = match preset {
        Preset::Full => TrainingConfig::default(),
        Preset::Desk => TrainingConfig::desk(),
    };
    let cfg = layers.take(&base)?;
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplainMethod {
    #[default]
    Linklogic,
    Heuristic,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainOptions {
    pub method: ExplainMethod,
    pub exclude_query_inverse: bool,
    pub threshold: f64,
    pub threshold_mode: ThresholdMode,
}

impl Default for ExplainOptions {
    fn default() -> Self {
        let h = HeuristicConfig::default();
        Self {
            method: ExplainMethod::Linklogic,
            exclude_query_inverse: false,
            threshold: h.threshold,
            threshold_mode: h.mode,
        }
    }
}

impl ExplainOptions {
    pub fn heuristic(&self) -> Result<HeuristicConfig> {
        let h = HeuristicConfig { threshold: self.threshold, mode: self.threshold_mode };
        h.validate()?;
        Ok(h)
    }
}

pub fn resolve_perturbation(layers: &mut Layers) -> Result<PerturbationConfig> {
    let p = layers.take(&PerturbationConfig::default())?;
    p.validate()?;
    Ok(p)
}

/// Sweep keys besides the perturbation ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub methods: Vec<Method>,
    pub heuristic_mode: ThresholdMode,
    pub per_relation: usize,
    pub max_k: usize,
    pub gain: Gain,
    pub exclude_query_inverse: bool,
    /// Benchmark built with the query inverse as an entry.
    pub include_query_inverse: bool,
    pub seed: u64,
}

impl SweepOptions {
    pub fn with_inverse(include_query_inverse: bool) -> Self {
        let d = SweepConfig::default();
        Self {
            methods: d.methods,
            heuristic_mode: d.heuristic_mode,
            per_relation: d.per_relation,
            max_k: d.max_k,
            gain: d.gain,
            exclude_query_inverse: d.exclude_query_inverse,
            include_query_inverse,
            seed: d.seed,
        }
    }
}

/// Resolve a sweep config; `include_query_inverse` is the default for the
/// benchmark key.
pub fn resolve_sweep(layers: &mut Layers, include_query_inverse: bool) -> Result<(SweepConfig, bool)> {
    let perturbation = resolve_perturbation(layers)?;
    let o = layers.take(&SweepOptions::with_inverse(include_query_inverse))?;
    let cfg = SweepConfig {
        perturbation,
        methods: o.methods,
        heuristic_mode: o.heuristic_mode,
        per_relation: o.per_relation,
        max_k: o.max_k,
        gain: o.gain,
        exclude_query_inverse: o.exclude_query_inverse,
        seed: o.seed,
    };
    cfg.validate()?;
    Ok((cfg, o.include_query_inverse))
}
