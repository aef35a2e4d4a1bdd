use ndarray::{s, Array1, Array2, ArrayView2, Axis, Zip};

use super::{GraphGrads, GraphParams};
use crate::dataio::NormalizedAdjacency;
use crate::{Error, Result};

/// One NGCF propagation layer:
/// `e' = LeakyReLU((Ã+I) e W₁ + (Ãe ⊙ e) W₂ + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NgcfLayer {
    pub w1: Array2<f64>,
    pub w2: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NgcfWeights {
    pub layers: Vec<NgcfLayer>,
    /// Maps the concatenation `[e⁽⁰⁾ ‖ … ‖ e⁽ᴷ⁾]` back to `d` columns: `(K+1)d × d`.
    pub output: Array2<f64>,
    pub negative_slope: f64,
}

impl NgcfWeights {
    pub fn zeros(dim: usize, num_layers: usize, negative_slope: f64) -> Self {
        NgcfWeights {
            layers: (0..num_layers)
                .map(|_| NgcfLayer {
                    w1: Array2::zeros((dim, dim)),
                    w2: Array2::zeros((dim, dim)),
                    bias: Array1::zeros(dim),
                })
                .collect(),
            output: Array2::zeros(((num_layers + 1) * dim, dim)),
            negative_slope,
        }
    }
}

/// Forward activations kept for [`ngcf_backward`].
#[derive(Debug, Clone)]
pub struct NgcfForward {
    pub output: Array2<f64>,
    /// `e⁽⁰⁾ … e⁽ᴷ⁾`.
    pub layers: Vec<Array2<f64>>,
    side: Vec<Array2<f64>>,
    pre_activation: Vec<Array2<f64>>,
}

fn leaky(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        slope * x
    }
}

fn leaky_grad(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        slope
    }
}

fn check_shapes<'a>(params: &'a GraphParams, adj: &NormalizedAdjacency) -> Result<&'a NgcfWeights> {
    let w = params
        .ngcf
        .as_ref()
        .ok_or_else(|| Error::Config("NGCF backbone selected but NGCF weights are missing".into()))?;
    let d = params.dim();
    if params.base.nrows() != adj.num_nodes() {
        return Err(Error::Shape(format!(
            "{} embedding rows for a graph of {} nodes",
            params.base.nrows(),
            adj.num_nodes()
        )));
    }
    for (k, l) in w.layers.iter().enumerate() {
        if l.w1.dim() != (d, d) || l.w2.dim() != (d, d) || l.bias.len() != d {
            return Err(Error::Shape(format!("NGCF layer {k} weights do not match dimension {d}")));
        }
    }
    if w.output.dim() != ((w.layers.len() + 1) * d, d) {
        return Err(Error::Shape(format!(
            "NGCF output map is {:?}, expected ({}, {d})",
            w.output.dim(),
            (w.layers.len() + 1) * d
        )));
    }
    Ok(w)
}

pub fn ngcf_forward(params: &GraphParams, adj: &NormalizedAdjacency) -> Result<NgcfForward> {
    let w = check_shapes(params, adj)?;
    let d = params.dim();
    let slope = w.negative_slope;

    let mut layers = vec![params.base.clone()];
    let mut side = Vec::with_capacity(w.layers.len());
    let mut pre_activation = Vec::with_capacity(w.layers.len());
    for layer in &w.layers {
        let e = layers.last().unwrap();
        let s = adj.spmm(e.view())?;
        let agg = &s + e;
        let inter = &s * e;
        let mut z = agg.dot(&layer.w1) + inter.dot(&layer.w2);
        z += &layer.bias;
        let out = z.mapv(|x| leaky(x, slope));
        side.push(s);
        pre_activation.push(z);
        layers.push(out);
    }

    let mut output = Array2::zeros((params.base.nrows(), d));
    for (k, e) in layers.iter().enumerate() {
        output += &e.dot(&w.output.slice(s![k * d..(k + 1) * d, ..]));
    }
    Ok(NgcfForward {
        output,
        layers,
        side,
        pre_activation,
    })
}

pub fn ngcf_backward(
    params: &GraphParams,
    adj: &NormalizedAdjacency,
    fwd: &NgcfForward,
    grad_output: ArrayView2<f64>,
) -> Result<GraphGrads> {
    let w = check_shapes(params, adj)?;
    let d = params.dim();
    let slope = w.negative_slope;
    let num_layers = w.layers.len();
    let mut grads = NgcfWeights::zeros(d, num_layers, slope);

    let mut grad_layers: Vec<Array2<f64>> = Vec::with_capacity(num_layers + 1);
    for (k, e) in fwd.layers.iter().enumerate() {
        let block = w.output.slice(s![k * d..(k + 1) * d, ..]);
        grads
            .output
            .slice_mut(s![k * d..(k + 1) * d, ..])
            .assign(&e.t().dot(&grad_output));
        grad_layers.push(grad_output.dot(&block.t()));
    }

    for k in (1..=num_layers).rev() {
        let layer = &w.layers[k - 1];
        let e = &fwd.layers[k - 1];
        let s = &fwd.side[k - 1];
        let mut dz = grad_layers[k].clone();
        Zip::from(&mut dz)
            .and(&fwd.pre_activation[k - 1])
            .for_each(|g, &z| *g *= leaky_grad(z, slope));

        let agg = s + e;
        let inter = s * e;
        let g = &mut grads.layers[k - 1];
        g.w1 = agg.t().dot(&dz);
        g.w2 = inter.t().dot(&dz);
        g.bias = dz.sum_axis(Axis(0));

        let d_agg = dz.dot(&layer.w1.t());
        let d_inter = dz.dot(&layer.w2.t());
        // e feeds agg directly, inter through both factors, and Ã e through the side term.
        let through_side = &d_agg + &(&d_inter * e);
        let mut de = adj.spmm(through_side.view())?;
        de += &d_agg;
        de += &(&d_inter * s);
        grad_layers[k - 1] += &de;
    }

    Ok(GraphGrads {
        base: grad_layers.swap_remove(0),
        ngcf: Some(grads),
    })
}
