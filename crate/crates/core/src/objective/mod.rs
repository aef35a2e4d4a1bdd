//! Loss terms and their closed-form gradients.

mod augment;
mod bpr;
mod contrastive;
mod normalize;
mod projection;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use augment::{augment_edge_dropout, augment_text_mask, MAX_MASK_REDRAWS};
pub use bpr::{bpr_loss, BprOutput, BprTriple};
pub use contrastive::{infonce_cross_modal, infonce_intra, symcere_cross_modal, ContrastiveOutput};
pub use normalize::{l2_normalize, NormalizedRows, NORM_EPS};
pub use projection::{project_text, projection_backward, ProjectionHead};

/// Weights of the total objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossWeights {
    /// Softmax temperature τ.
    pub temperature: f64,
    /// Weight of the intra-modal InfoNCE terms.
    pub alpha: f64,
    /// Weight of the BPR term.
    pub beta: f64,
    /// L2 penalty on learnable parameters.
    pub reg: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            temperature: 0.2,
            alpha: 0.5,
            beta: 0.05,
            reg: 1e-4,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Config(format!("temperature must be > 0, got {}", self.temperature)));
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("reg", self.reg)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Unweighted values of each term.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossComponents {
    pub cross_modal: f64,
    pub intra_modal: f64,
    pub bpr: f64,
    /// `‖Θ‖²` over all learnable parameters.
    pub param_sq_norm: f64,
}

/// `cross + α·intra + β·bpr + λ·‖Θ‖²`.
pub fn total_loss(c: &LossComponents, w: &LossWeights) -> Result<f64> {
    for (name, v) in [
        ("cross-modal loss", c.cross_modal),
        ("intra-modal loss", c.intra_modal),
        ("BPR loss", c.bpr),
        ("parameter norm", c.param_sq_norm),
    ] {
        if !v.is_finite() {
            return Err(Error::NonFinite(name.into()));
        }
    }
    Ok(c.cross_modal + w.alpha * c.intra_modal + w.beta * c.bpr + w.reg * c.param_sq_norm)
}
