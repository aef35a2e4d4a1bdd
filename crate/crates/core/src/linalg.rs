//! Small dense helpers shared by the encoder, objective and trainer.

use ndarray::{Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Copies the listed rows of `m` into a new matrix, in order.
pub fn gather_rows(m: ArrayView2<f64>, rows: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros((rows.len(), m.ncols()));
    for (mut dst, &r) in out.axis_iter_mut(Axis(0)).zip(rows) {
        dst.assign(&m.row(r));
    }
    out
}

/// `target[rows[i]] += scale * grad[i]` for every `i`, in index order.
pub fn scatter_add_rows(target: &mut Array2<f64>, rows: &[usize], grad: ArrayView2<f64>, scale: f64) {
    for (src, &r) in grad.axis_iter(Axis(0)).zip(rows) {
        let mut dst = target.row_mut(r);
        dst.scaled_add(scale, &src);
    }
}

pub fn sum_of_squares(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum()
}

pub fn all_finite(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// SplitMix64 finalizer; derives independent stream seeds from a base seed.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(seed, stream))
}
