//! Run configuration: one JSON file plus `--set key=value` overrides.

use std::fs;
use std::path::{Path, PathBuf};

use elco_core::gnn::TrainConfig;
use elco_core::{AugmentConfig, ClusterConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::CliError;

/// GCN hyperparameters; the training seed is derived per trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GnnConfig {
    pub hidden: usize,
    pub dropout: f64,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    pub patience: usize,
}

impl Default for GnnConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            hidden: t.hidden,
            dropout: t.dropout,
            learning_rate: t.learning_rate,
            weight_decay: t.weight_decay,
            max_epochs: t.max_epochs,
            patience: t.patience,
        }
    }
}

impl GnnConfig {
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            hidden: self.hidden,
            dropout: self.dropout,
            learning_rate: self.learning_rate,
            weight_decay: self.weight_decay,
            max_epochs: self.max_epochs,
            patience: self.patience,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub separability: bool,
    pub domlabel: bool,
    pub sparsity: bool,
    pub ablation: bool,
    pub embedding_export: bool,
    pub cv_folds: usize,
    pub sparsity_fractions: Vec<f64>,
    pub sparsity_trials: usize,
    /// Share of winner-takes-all electors held out as the ablation probe set.
    pub probe_fraction: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            separability: true,
            domlabel: true,
            sparsity: true,
            ablation: true,
            embedding_export: true,
            cv_folds: 5,
            sparsity_fractions: vec![0.0, 0.25, 0.5, 0.75],
            sparsity_trials: 3,
            probe_fraction: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Canonical dataset directory.
    pub dataset: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
    /// GCN trials per trained graph.
    pub trials: usize,
    pub cluster: ClusterConfig,
    pub augment: AugmentConfig,
    pub gnn: GnnConfig,
    pub analysis: AnalysisConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: PathBuf::from("data/cora"),
            out: PathBuf::from("out"),
            seed: 0,
            trials: 10,
            cluster: ClusterConfig::default(),
            augment: AugmentConfig::default(),
            gnn: GnnConfig::default(),
            analysis: AnalysisConfig::default(),
        }
    }
}

/// Command-line inputs that shape a [`RunConfig`].
#[derive(Debug, Clone, Default)]
pub struct ConfigSources {
    pub file: Option<PathBuf>,
    pub overrides: Vec<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    /// Defaults, then the config file, then `--set` overrides, then `--seed` and `--out`.
    pub fn resolve(sources: &ConfigSources) -> Result<Self, CliError> {
        let mut tree = serde_json::to_value(RunConfig::default()).expect("config serialises");
        if let Some(path) = &sources.file {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            let file: Value =
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            merge(&mut tree, file, "")?;
        }
        for item in &sources.overrides {
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("--set expects key=value, got {item:?}")))?;
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            set_path(&mut tree, key.trim(), value)?;
        }
        if let Some(seed) = sources.seed {
            tree["seed"] = seed.into();
        }
        if let Some(out) = &sources.out {
            tree["out"] = Value::String(out.display().to_string());
        }
        let config: RunConfig = serde_json::from_value(tree).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        Self::resolve(&ConfigSources {
            file: Some(path.to_path_buf()),
            ..Default::default()
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let named = |e: elco_core::Error| match e {
            elco_core::Error::InvalidParameter { name, reason } => {
                let key = if name.starts_with("gbdt.") {
                    format!("augment.{name}")
                } else {
                    name.to_string()
                };
                CliError::Config(format!("`{key}`: {reason}"))
            }
            other => CliError::Config(other.to_string()),
        };
        self.cluster.validate().map_err(named)?;
        self.augment.validate().map_err(named)?;
        self.gnn.train_config(0).validate().map_err(named)?;
        if self.trials == 0 {
            return Err(CliError::Config("`trials`: must be at least 1".into()));
        }
        let a = &self.analysis;
        if a.cv_folds < 2 {
            return Err(CliError::Config("`analysis.cv_folds`: must be at least 2".into()));
        }
        if let Some(f) = a.sparsity_fractions.iter().find(|f| !(0.0..1.0).contains(*f)) {
            return Err(CliError::Config(format!(
                "`analysis.sparsity_fractions`: {f} is outside [0, 1)"
            )));
        }
        if a.sparsity_trials == 0 {
            return Err(CliError::Config(
                "`analysis.sparsity_trials`: must be at least 1".into(),
            ));
        }
        if !(a.probe_fraction > 0.0 && a.probe_fraction < 1.0) {
            return Err(CliError::Config("`analysis.probe_fraction`: must lie in (0, 1)".into()));
        }
        Ok(())
    }

    /// SHA-256 over every result-affecting setting; the output directory is excluded.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serialises");
        value.as_object_mut().expect("object").remove("out");
        digest(value.to_string().as_bytes())
    }
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn merge(base: &mut Value, patch: Value, prefix: &str) -> Result<(), CliError> {
    let Value::Object(entries) = patch else {
        return Err(CliError::Config(format!(
            "`{}` must be an object",
            prefix.trim_end_matches('.')
        )));
    };
    for (key, value) in entries {
        let path = format!("{prefix}{key}");
        let slot = base
            .get_mut(&key)
            .ok_or_else(|| CliError::Config(format!("unknown config key `{path}`")))?;
        if slot.is_object() {
            merge(slot, value, &format!("{path}."))?;
        } else {
            *slot = value;
        }
    }
    Ok(())
}

fn set_path(tree: &mut Value, key: &str, value: Value) -> Result<(), CliError> {
    let mut slot = tree;
    for part in key.split('.') {
        slot = slot
            .as_object_mut()
            .and_then(|o| o.get_mut(part))
            .ok_or_else(|| CliError::Config(format!("unknown config key `{key}`")))?;
    }
    if slot.is_object() {
        merge(slot, value, &format!("{key}."))
    } else {
        *slot = value;
        Ok(())
    }
}
