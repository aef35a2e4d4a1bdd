//! Graph encoders producing one embedding per user and item node.
//!
//! Both backbones expose a forward pass that records what its backward pass
//! needs; gradients are hand-derived rather than taped.

mod lightgcn;
mod ngcf;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::dataio::NormalizedAdjacency;
use crate::{Error, Result};

pub use lightgcn::{lightgcn_backward, lightgcn_forward};
pub use ngcf::{ngcf_backward, ngcf_forward, NgcfForward, NgcfLayer, NgcfWeights};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backbone {
    #[serde(rename = "lightgcn")]
    LightGcn,
    Ngcf,
}

impl std::str::FromStr for Backbone {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lightgcn" => Ok(Backbone::LightGcn),
            "ngcf" => Ok(Backbone::Ngcf),
            other => Err(Error::Config(format!("unknown backbone {other:?} (expected lightgcn or ngcf)"))),
        }
    }
}

impl std::fmt::Display for Backbone {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Backbone::LightGcn => "lightgcn",
            Backbone::Ngcf => "ngcf",
        })
    }
}

/// Learnable graph-side parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphParams {
    /// `E⁽⁰⁾`, one row per user then per item.
    pub base: Array2<f64>,
    pub num_layers: usize,
    /// Layer-combination weights `α_0..α_K` (LightGCN only).
    pub layer_weights: Vec<f64>,
    pub ngcf: Option<NgcfWeights>,
}

impl GraphParams {
    /// LightGCN parameters with uniform layer weights `1/(K+1)`.
    pub fn lightgcn(base: Array2<f64>, num_layers: usize) -> Self {
        GraphParams {
            base,
            num_layers,
            layer_weights: vec![1.0 / (num_layers as f64 + 1.0); num_layers + 1],
            ngcf: None,
        }
    }

    pub fn ngcf(base: Array2<f64>, weights: NgcfWeights) -> Self {
        let num_layers = weights.layers.len();
        GraphParams {
            layer_weights: vec![1.0 / (num_layers as f64 + 1.0); num_layers + 1],
            base,
            num_layers,
            ngcf: Some(weights),
        }
    }

    pub fn backbone(&self) -> Backbone {
        if self.ngcf.is_some() {
            Backbone::Ngcf
        } else {
            Backbone::LightGcn
        }
    }

    pub fn dim(&self) -> usize {
        self.base.ncols()
    }
}

/// Gradients with the same shape as [`GraphParams`]' learnable parts.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphGrads {
    pub base: Array2<f64>,
    pub ngcf: Option<NgcfWeights>,
}

/// What a forward pass keeps for its backward pass.
#[derive(Debug, Clone)]
pub enum ForwardState {
    LightGcn,
    Ngcf(NgcfForward),
}

/// Runs whichever backbone `params` describes.
pub fn encode(params: &GraphParams, adj: &NormalizedAdjacency) -> Result<(Array2<f64>, ForwardState)> {
    match &params.ngcf {
        None => Ok((lightgcn_forward(params, adj)?, ForwardState::LightGcn)),
        Some(_) => {
            let fwd = ngcf_forward(params, adj)?;
            Ok((fwd.output.clone(), ForwardState::Ngcf(fwd)))
        }
    }
}

pub fn encode_backward(
    params: &GraphParams,
    adj: &NormalizedAdjacency,
    state: &ForwardState,
    grad_output: ArrayView2<f64>,
) -> Result<GraphGrads> {
    match state {
        ForwardState::LightGcn => Ok(GraphGrads {
            base: lightgcn_backward(&params.layer_weights, adj, grad_output)?,
            ngcf: None,
        }),
        ForwardState::Ngcf(fwd) => ngcf_backward(params, adj, fwd, grad_output),
    }
}

/// `g_{u,v} = (g_u + g_v) / 2`, with items stored after the users.
pub fn interaction_repr(nodes: ArrayView2<f64>, num_users: usize, user: u32, item: u32) -> Vec<f64> {
    let u = nodes.row(user as usize);
    let v = nodes.row(num_users + item as usize);
    u.iter().zip(v.iter()).map(|(a, b)| 0.5 * (a + b)).collect()
}

/// Batched [`interaction_repr`] over `(user, item)` pairs.
pub fn interaction_reprs(nodes: ArrayView2<f64>, num_users: usize, pairs: &[(u32, u32)]) -> Array2<f64> {
    let d = nodes.ncols();
    let mut out = Array2::zeros((pairs.len(), d));
    for (mut row, &(u, i)) in out.rows_mut().into_iter().zip(pairs) {
        let a = nodes.row(u as usize);
        let b = nodes.row(num_users + i as usize);
        for ((o, x), y) in row.iter_mut().zip(a.iter()).zip(b.iter()) {
            *o = 0.5 * (x + y);
        }
    }
    out
}

/// Adjoint of [`interaction_reprs`]: adds half of each row gradient to both endpoints.
pub fn interaction_reprs_backward(
    grad_nodes: &mut Array2<f64>,
    num_users: usize,
    pairs: &[(u32, u32)],
    grad: ArrayView2<f64>,
) {
    for (g, &(u, i)) in grad.rows().into_iter().zip(pairs) {
        grad_nodes.row_mut(u as usize).scaled_add(0.5, &g);
        grad_nodes.row_mut(num_users + i as usize).scaled_add(0.5, &g);
    }
}
