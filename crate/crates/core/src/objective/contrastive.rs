//! Temperature-scaled contrastive losses over a batch of paired rows.
//!
//! For anchors `A` and candidates `C` the logits are `A Cᵀ / τ`; row `i` of
//! `A` is paired with row `i` of `C`. The masked variant keeps only the
//! positive and the candidates the mask marks as true negatives in the
//! softmax denominator. The text-to-graph direction reuses the same mask,
//! so both directions see the same negative structure.

use ndarray::{Array2, ArrayView2, ArrayViewMut2};

use crate::dataio::NegativeMask;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct ContrastiveOutput {
    pub loss: f64,
    /// Gradient w.r.t. the first input.
    pub grad_anchor: Array2<f64>,
    /// Gradient w.r.t. the second input.
    pub grad_candidate: Array2<f64>,
}

fn check_inputs(a: ArrayView2<f64>, c: ArrayView2<f64>, tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Config(format!("temperature must be > 0, got {tau}")));
    }
    if a.dim() != c.dim() {
        return Err(Error::Shape(format!("paired inputs {:?} and {:?}", a.dim(), c.dim())));
    }
    Ok(())
}

fn logits(a: ArrayView2<f64>, c: ArrayView2<f64>, tau: f64) -> Result<Array2<f64>> {
    let l = a.dot(&c.t()) / tau;
    if l.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("similarity matrix".into()));
    }
    Ok(l)
}

/// Adds `scale · ∂(mean_i loss_i)/∂logits` into `grad` and returns `scale · mean_i loss_i`,
/// where `loss_i = −l_ii + log Σ_{j ∈ {i} ∪ N_i} exp l_ij`.
fn directional(
    logits: ArrayView2<f64>,
    keep: impl Fn(usize, usize) -> bool,
    scale: f64,
    mut grad: ArrayViewMut2<f64>,
) -> f64 {
    let b = logits.nrows();
    let w = scale / b as f64;
    let mut total = 0.0;
    let mut probs = vec![0.0; b];
    for i in 0..b {
        let row = logits.row(i);
        let mut max = row[i];
        for j in 0..b {
            if j != i && keep(i, j) && row[j] > max {
                max = row[j];
            }
        }
        let mut z = 0.0;
        for j in 0..b {
            probs[j] = if j == i || keep(i, j) {
                (row[j] - max).exp()
            } else {
                0.0
            };
            z += probs[j];
        }
        total += max + z.ln() - row[i];
        for j in 0..b {
            if probs[j] != 0.0 {
                grad[[i, j]] += w * probs[j] / z;
            }
        }
        grad[[i, i]] -= w;
    }
    total * w
}

fn finish(dlogits: Array2<f64>, a: ArrayView2<f64>, c: ArrayView2<f64>, tau: f64, loss: f64) -> ContrastiveOutput {
    ContrastiveOutput {
        loss,
        grad_anchor: dlogits.dot(&c) / tau,
        grad_candidate: dlogits.t().dot(&a) / tau,
    }
}

/// Symmetric false-negative-masked NCE:
/// `½ (L_{G→T} + L_{T→G})`, each direction averaged over the batch.
pub fn symcere_cross_modal(
    graph: ArrayView2<f64>,
    text: ArrayView2<f64>,
    mask: &NegativeMask,
    tau: f64,
) -> Result<ContrastiveOutput> {
    check_inputs(graph, text, tau)?;
    if mask.size() != graph.nrows() {
        return Err(Error::Shape(format!(
            "mask of size {} for a batch of {}",
            mask.size(),
            graph.nrows()
        )));
    }
    let l = logits(graph, text, tau)?;
    let mut dl = Array2::zeros(l.dim());
    let keep = |i: usize, j: usize| mask.is_negative(i, j);
    let g2t = directional(l.view(), keep, 0.5, dl.view_mut());
    // text anchor i against graph candidates k: logit l_ki, same negatives N_i
    let t2g = directional(l.t(), keep, 0.5, dl.view_mut().reversed_axes());
    Ok(finish(dl, graph, text, tau, g2t + t2g))
}

/// The symmetric cross-modal loss with every other batch row as a negative.
pub fn infonce_cross_modal(graph: ArrayView2<f64>, text: ArrayView2<f64>, tau: f64) -> Result<ContrastiveOutput> {
    symcere_cross_modal(graph, text, &NegativeMask::full(graph.nrows()), tau)
}

/// One-directional InfoNCE between a view and its augmentation, diagonal positives.
pub fn infonce_intra(view: ArrayView2<f64>, augmented: ArrayView2<f64>, tau: f64) -> Result<ContrastiveOutput> {
    check_inputs(view, augmented, tau)?;
    let l = logits(view, augmented, tau)?;
    let mut dl = Array2::zeros(l.dim());
    let loss = directional(l.view(), |_, _| true, 1.0, dl.view_mut());
    Ok(finish(dl, view, augmented, tau, loss))
}
