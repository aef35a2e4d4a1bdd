use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::encoder::Backbone;
use crate::objective::LossWeights;
use crate::{Error, Result};

/// Which cross-modal objective the trainer optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossVariant {
    /// Symmetric loss with the interaction-history negative mask.
    Symcere,
    /// Symmetric loss with every other batch row as a negative.
    Infonce,
    /// No cross-modal term.
    None,
}

impl FromStr for LossVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symcere" => Ok(LossVariant::Symcere),
            "infonce" => Ok(LossVariant::Infonce),
            "none" => Ok(LossVariant::None),
            other => Err(Error::Config(format!(
                "unknown loss variant {other:?} (expected symcere, infonce or none)"
            ))),
        }
    }
}

impl fmt::Display for LossVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossVariant::Symcere => "symcere",
            LossVariant::Infonce => "infonce",
            LossVariant::None => "none",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub backbone: Backbone,
    pub dim: usize,
    pub layers: usize,
    /// LeakyReLU slope of the NGCF layers.
    pub leaky_slope: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            backbone: Backbone::LightGcn,
            dim: 64,
            layers: 3,
            leaky_slope: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossConfig {
    pub variant: LossVariant,
    /// Project every vector onto the unit sphere before the losses.
    pub normalize: bool,
    pub temperature: f64,
    pub alpha: f64,
    pub beta: f64,
    pub reg: f64,
    pub edge_dropout: f64,
    pub text_mask: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        let w = LossWeights::default();
        LossConfig {
            variant: LossVariant::Symcere,
            normalize: true,
            temperature: w.temperature,
            alpha: w.alpha,
            beta: w.beta,
            reg: w.reg,
            edge_dropout: 0.1,
            text_mask: 0.2,
        }
    }
}

impl LossConfig {
    pub fn weights(&self) -> LossWeights {
        LossWeights {
            temperature: self.temperature,
            alpha: self.alpha,
            beta: self.beta,
            reg: self.reg,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    /// Evaluate every this many epochs (0 disables periodic evaluation).
    pub eval_every: usize,
    /// Stop after this many evaluations without NDCG improvement (0 disables).
    pub patience: usize,
}

impl Default for OptimConfig {
    fn default() -> Self {
        OptimConfig {
            epochs: 50,
            batch_size: 256,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            eval_every: 1,
            patience: 10,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub model: ModelConfig,
    pub loss: LossConfig,
    pub train: OptimConfig,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.model.dim == 0 {
            return bad("model.dim must be >= 1".into());
        }
        if !(self.model.leaky_slope.is_finite()) {
            return bad("model.leaky_slope must be finite".into());
        }
        self.loss.weights().validate()?;
        for (name, p) in [("edge_dropout", self.loss.edge_dropout), ("text_mask", self.loss.text_mask)] {
            if !(0.0..1.0).contains(&p) {
                return bad(format!("loss.{name} must be in [0, 1), got {p}"));
            }
        }
        let t = &self.train;
        if t.batch_size == 0 {
            return bad("train.batch_size must be >= 1".into());
        }
        if !(t.learning_rate > 0.0 && t.learning_rate.is_finite()) {
            return bad(format!("train.learning_rate must be > 0, got {}", t.learning_rate));
        }
        if !(0.0..1.0).contains(&t.beta1) || !(0.0..1.0).contains(&t.beta2) {
            return bad("Adam betas must be in [0, 1)".into());
        }
        if !(t.epsilon > 0.0) {
            return bad("train.epsilon must be > 0".into());
        }
        Ok(())
    }

    /// Canonical TOML text; its SHA-256 identifies the config in checkpoints.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn hash(&self) -> [u8; 32] {
        use sha2::{Digest, Sha256};
        Sha256::digest(self.to_toml().as_bytes()).into()
    }
}
