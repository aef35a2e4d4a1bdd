use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::{Error, Result};

/// Affine map from text-encoder space into the graph embedding space.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionHead {
    /// `text_dim × d`.
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl ProjectionHead {
    pub fn identity(dim: usize) -> Self {
        ProjectionHead {
            weight: Array2::eye(dim),
            bias: Array1::zeros(dim),
        }
    }

    pub fn text_dim(&self) -> usize {
        self.weight.nrows()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.ncols()
    }
}

/// `T W + b`, row-wise.
pub fn project_text(head: &ProjectionHead, text: ArrayView2<f64>) -> Result<Array2<f64>> {
    if text.ncols() != head.text_dim() || head.bias.len() != head.out_dim() {
        return Err(Error::Shape(format!(
            "text rows have {} columns, projection expects {} -> {}",
            text.ncols(),
            head.text_dim(),
            head.out_dim()
        )));
    }
    Ok(text.dot(&head.weight) + &head.bias)
}

/// Gradients `(∂W, ∂b)` given the upstream gradient of the projected rows.
pub fn projection_backward(text: ArrayView2<f64>, grad: ArrayView2<f64>) -> (Array2<f64>, Array1<f64>) {
    (text.t().dot(&grad), grad.sum_axis(Axis(0)))
}
