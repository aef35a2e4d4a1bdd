#![allow(dead_code)]

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;

use symcere::dataio::{InteractionRecord, InteractionSet, temporal_split};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng, rows: usize, cols: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || scale * rng.sample::<f64, _>(StandardNormal))
}

/// `‖a − n‖ / max(‖a‖, ‖n‖)`, with a floor so an all-zero gradient compares
/// in absolute terms.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    let diff: f64 = analytic.iter().zip(numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
    let na: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nn: f64 = numeric.iter().map(|a| a * a).sum::<f64>().sqrt();
    diff / na.max(nn).max(1e-8)
}

/// Central differences of `f` at `x`, step `h`.
pub fn numeric_gradient(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub fn matrix(shape: (usize, usize), flat: &[f64]) -> Array2<f64> {
    Array2::from_shape_vec(shape, flat.to_vec()).unwrap()
}

/// Random interaction log: every user gets `per_user` distinct items.
pub fn random_dataset(seed: u64, users: usize, items: usize, per_user: usize) -> InteractionSet {
    let mut r = rng(seed);
    let mut recs = Vec::new();
    for u in 0..users {
        let picked = rand::seq::index::sample(&mut r, items, per_user);
        for (t, i) in picked.iter().enumerate() {
            recs.push(InteractionRecord::new(format!("u{u}"), format!("i{i}"), t as i64));
        }
    }
    temporal_split(&recs, 0.8).unwrap()
}

pub fn random_text(seed: u64, rows: usize, dim: usize) -> Array2<f32> {
    gaussian(&mut rng(seed), rows, dim, 1.0).mapv(|v| v as f32)
}
