use ndarray::{Array2, ArrayView2};

use super::GraphParams;
use crate::dataio::NormalizedAdjacency;
use crate::{Error, Result};

fn propagate_sum(weights: &[f64], adj: &NormalizedAdjacency, x: ArrayView2<f64>) -> Result<Array2<f64>> {
    let mut out = x.to_owned() * weights[0];
    let mut layer = x.to_owned();
    for &w in &weights[1..] {
        layer = adj.spmm(layer.view())?;
        out.scaled_add(w, &layer);
    }
    Ok(out)
}

/// `Σ_k α_k Ãᵏ E⁽⁰⁾`: linear propagation, no transforms, no nonlinearity.
pub fn lightgcn_forward(params: &GraphParams, adj: &NormalizedAdjacency) -> Result<Array2<f64>> {
    if params.base.nrows() != adj.num_nodes() {
        return Err(Error::Shape(format!(
            "{} embedding rows for a graph of {} nodes",
            params.base.nrows(),
            adj.num_nodes()
        )));
    }
    if params.layer_weights.len() != params.num_layers + 1 {
        return Err(Error::Shape(format!(
            "{} layer weights for {} layers",
            params.layer_weights.len(),
            params.num_layers
        )));
    }
    propagate_sum(&params.layer_weights, adj, params.base.view())
}

/// Gradient w.r.t. `E⁽⁰⁾`. `Ã` is symmetric, so the adjoint is the same sum.
pub fn lightgcn_backward(
    layer_weights: &[f64],
    adj: &NormalizedAdjacency,
    grad_output: ArrayView2<f64>,
) -> Result<Array2<f64>> {
    propagate_sum(layer_weights, adj, grad_output)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_layers_is_identity() {
        let adj = NormalizedAdjacency::from_edges(1, 2, &[(0, 0), (0, 1)]);
        let base = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]];
        let p = GraphParams::lightgcn(base.clone(), 0);
        assert_eq!(lightgcn_forward(&p, &adj).unwrap(), base);
    }

    #[test]
    fn one_edge_one_layer_averages() {
        let adj = NormalizedAdjacency::from_edges(1, 1, &[(0, 0)]);
        let p = GraphParams::lightgcn(array![[1.0, 0.0], [0.0, 1.0]], 1);
        let g = lightgcn_forward(&p, &adj).unwrap();
        assert_eq!(g, array![[0.5, 0.5], [0.5, 0.5]]);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let adj = NormalizedAdjacency::from_edges(1, 1, &[(0, 0)]);
        let p = GraphParams::lightgcn(Array2::zeros((3, 2)), 2);
        assert!(matches!(lightgcn_forward(&p, &adj), Err(Error::Shape(_))));
    }

    #[test]
    fn isolated_nodes_keep_weighted_base() {
        let adj = NormalizedAdjacency::from_edges(1, 1, &[]);
        let p = GraphParams::lightgcn(array![[2.0, 0.0], [0.0, 4.0]], 3);
        assert_eq!(lightgcn_forward(&p, &adj).unwrap(), array![[0.5, 0.0], [0.0, 1.0]]);
    }
}
