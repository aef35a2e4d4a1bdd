//! Run configuration file: one TOML document with a section per module.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::{DEFAULT_NUM_PAIRS, DEFAULT_VARIANCE_BINS};
use crate::synth::SynthConfig;
use crate::trainer::{LossConfig, ModelConfig, OptimConfig, TrainConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    /// Raw tab-separated interaction file for `prepare`.
    pub interactions: Option<PathBuf>,
    /// Prepared dataset directory.
    pub dir: Option<PathBuf>,
    /// Text-embedding file overriding the one in the prepared directory.
    pub embeddings: Option<PathBuf>,
    /// Minimum interactions per user and per item; 0 or 1 disables filtering.
    pub k_core: usize,
    pub train_fraction: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            interactions: None,
            dir: None,
            embeddings: None,
            k_core: 5,
            train_fraction: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub topk: Vec<usize>,
    /// Dump the rank of every ground-truth item.
    pub per_user_ranks: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            topk: vec![10],
            per_user_ranks: false,
        }
    }
}

impl EvalConfig {
    /// Cutoff used for early stopping: 10 when listed, else the first.
    pub fn primary_k(&self) -> usize {
        if self.topk.contains(&10) {
            10
        } else {
            self.topk.first().copied().unwrap_or(10)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsConfig {
    pub num_pairs: usize,
    pub variance_bins: usize,
    pub seed: u64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            num_pairs: DEFAULT_NUM_PAIRS,
            variance_bins: DEFAULT_VARIANCE_BINS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub data: DataConfig,
    pub synth: SynthConfig,
    pub model: ModelConfig,
    pub loss: LossConfig,
    pub train: OptimConfig,
    pub eval: EvalConfig,
    pub diagnostics: DiagnosticsConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            model: self.model.clone(),
            loss: self.loss.clone(),
            train: self.train.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.train_config().validate()?;
        if self.eval.topk.is_empty() || self.eval.topk.contains(&0) {
            return Err(Error::Config("eval.topk must be a non-empty list of K >= 1".into()));
        }
        if !(self.data.train_fraction > 0.0 && self.data.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "data.train_fraction must be in (0, 1), got {}",
                self.data.train_fraction
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn unknown_keys_are_errors() {
        let e = RunConfig::from_toml("[loss]\ntemprature = 0.1\n").unwrap_err();
        assert!(e.to_string().contains("temprature"), "{e}");
        assert!(RunConfig::from_toml("[nonsense]\n").is_err());
    }

    #[test]
    fn sections_are_addressable() {
        let c = RunConfig::from_toml(
            "[model]\nbackbone = \"ngcf\"\n[loss]\nvariant = \"infonce\"\nnormalize = false\n[eval]\ntopk = [5, 20]\n[synth]\nnum_users = 7\n",
        )
        .unwrap();
        assert_eq!(c.model.backbone, crate::encoder::Backbone::Ngcf);
        assert!(!c.loss.normalize);
        assert_eq!(c.eval.topk, vec![5, 20]);
        assert_eq!(c.eval.primary_k(), 5);
        assert_eq!(c.synth.num_users, 7);
    }
}
