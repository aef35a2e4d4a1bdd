use ndarray::{Array2, ArrayView2};
use rand::Rng;

use crate::dataio::NormalizedAdjacency;
use crate::{Error, Result};

/// How many times a fully-masked text row is redrawn before giving up.
pub const MAX_MASK_REDRAWS: usize = 100;

/// Drops each undirected edge with probability `p` and renormalizes from the
/// surviving degrees. Isolated nodes are allowed.
pub fn augment_edge_dropout<R: Rng + ?Sized>(adj: &NormalizedAdjacency, p: f64, rng: &mut R) -> Result<NormalizedAdjacency> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Config(format!("edge dropout rate must be in [0, 1), got {p}")));
    }
    if p == 0.0 {
        return Ok(adj.clone());
    }
    let kept: Vec<(u32, u32)> = adj.edges().iter().copied().filter(|_| rng.random::<f64>() >= p).collect();
    Ok(NormalizedAdjacency::from_edges(adj.num_users(), adj.num_items(), &kept))
}

/// Zeroes each coordinate with probability `p`, then rescales every row to unit norm.
pub fn augment_text_mask<R: Rng + ?Sized>(text: ArrayView2<f64>, p: f64, rng: &mut R) -> Result<Array2<f64>> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Config(format!("text mask rate must be in [0, 1), got {p}")));
    }
    let mut out = text.to_owned();
    if p == 0.0 {
        return Ok(out);
    }
    for (r, (mut row, src)) in out.rows_mut().into_iter().zip(text.rows()).enumerate() {
        let mut attempt = 0;
        loop {
            for (o, &s) in row.iter_mut().zip(src.iter()) {
                *o = if rng.random::<f64>() < p { 0.0 } else { s };
            }
            let norm = row.dot(&row).sqrt();
            if norm > super::NORM_EPS {
                row /= norm;
                break;
            }
            attempt += 1;
            if attempt >= MAX_MASK_REDRAWS {
                return Err(Error::NearZeroNorm {
                    what: "masked text embedding".into(),
                    row: r,
                });
            }
        }
    }
    Ok(out)
}
