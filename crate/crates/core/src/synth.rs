//! Planted-cluster synthetic data.
//!
//! Items belong to clusters, each with an orthonormal "objective" axis in
//! text space; one further axis orthogonal to all of them carries a
//! per-review sentiment sign that says nothing about the item. Users prefer
//! one cluster, and item draws follow a power law in item index. Every text
//! vector is `√(1−λ²)·obj + λ·s·v_subj` with `s ∈ {−1, +1}`, so the
//! subjective energy of the raw text is exactly `λ²`.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataio::{train_count, InteractionSet, TestInteraction};
use crate::linalg::seeded_rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub num_users: usize,
    pub num_items: usize,
    pub num_clusters: usize,
    pub interactions_per_user: usize,
    /// Item `i` (0-based) is drawn with weight `(i+1)^(−exponent)`.
    pub popularity_exponent: f64,
    pub text_dim: usize,
    /// λ: weight of the subjective axis in every text vector.
    pub subjective_weight: f64,
    /// Norm scale of the per-review objective noise.
    pub noise_scale: f64,
    /// Probability that a draw comes from the user's preferred cluster.
    pub in_cluster_prob: f64,
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        // Automotive-sized catalogue
        SynthConfig {
            num_users: 1187,
            num_items: 2833,
            num_clusters: 16,
            interactions_per_user: 10,
            popularity_exponent: 1.0,
            text_dim: 32,
            subjective_weight: 0.6,
            noise_scale: 0.5,
            in_cluster_prob: 0.8,
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.num_users == 0 || self.num_items == 0 {
            return bad("synthetic dataset needs at least one user and one item".into());
        }
        if self.num_clusters == 0 || self.num_clusters > self.num_items {
            return bad(format!("num_clusters must be in 1..={}, got {}", self.num_items, self.num_clusters));
        }
        if self.interactions_per_user == 0 || self.interactions_per_user > self.num_items {
            return bad(format!(
                "infeasible config: {} interactions per user with {} items",
                self.interactions_per_user, self.num_items
            ));
        }
        if self.text_dim < self.num_clusters + 1 {
            return bad(format!(
                "text_dim {} cannot hold {} cluster axes plus a subjective axis",
                self.text_dim, self.num_clusters
            ));
        }
        if !(0.0..=1.0).contains(&self.subjective_weight) {
            return bad(format!("subjective_weight must be in [0, 1], got {}", self.subjective_weight));
        }
        if !(self.popularity_exponent >= 0.0) || !(self.noise_scale >= 0.0) {
            return bad("popularity_exponent and noise_scale must be >= 0".into());
        }
        if !(0.0..=1.0).contains(&self.in_cluster_prob) {
            return bad(format!("in_cluster_prob must be in [0, 1], got {}", self.in_cluster_prob));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("train_fraction must be in (0, 1), got {}", self.train_fraction));
        }
        Ok(())
    }
}

/// The planted structure behind a synthetic dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthGroundTruth {
    pub item_cluster: Vec<u32>,
    /// `num_clusters × text_dim`, orthonormal rows.
    pub cluster_axes: Array2<f64>,
    /// Unit vector orthogonal to every cluster axis.
    pub subjective_axis: Array1<f64>,
    /// Normalized draw weight of each item.
    pub item_popularity: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub dataset: InteractionSet,
    /// One unit row per training interaction.
    pub text: Array2<f32>,
    pub truth: SynthGroundTruth,
}

/// `w_i ∝ (i+1)^(−exponent)`, summing to one.
pub fn power_law_weights(n: usize, exponent: f64) -> Vec<f64> {
    let raw: Vec<f64> = (1..=n).map(|r| (r as f64).powf(-exponent)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Orthonormal columns from a seeded Gaussian matrix (two passes of modified
/// Gram–Schmidt). Returned as rows.
fn orthonormal_axes<R: Rng>(count: usize, dim: usize, rng: &mut R) -> Array2<f64> {
    let mut axes = Array2::<f64>::zeros((count, dim));
    for k in 0..count {
        let mut v: Array1<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        for _ in 0..2 {
            for j in 0..k {
                let a = axes.row(j);
                let p = v.dot(&a);
                v.scaled_add(-p, &a);
            }
        }
        let n = v.dot(&v).sqrt();
        axes.row_mut(k).assign(&(v / n));
    }
    axes
}

pub fn generate_synthetic_dataset(config: &SynthConfig) -> Result<SynthDataset> {
    config.validate()?;
    let c = config.num_clusters;
    let d = config.text_dim;

    let mut axis_rng = seeded_rng(config.seed, 1);
    let all_axes = orthonormal_axes(c + 1, d, &mut axis_rng);
    let cluster_axes = all_axes.slice(ndarray::s![..c, ..]).to_owned();
    let subjective_axis = all_axes.row(c).to_owned();

    let mut item_rng = seeded_rng(config.seed, 2);
    let mut order: Vec<usize> = (0..config.num_items).collect();
    order.shuffle(&mut item_rng);
    let mut item_cluster = vec![0u32; config.num_items];
    for (pos, &item) in order.iter().enumerate() {
        item_cluster[item] = (pos % c) as u32;
    }
    let popularity = power_law_weights(config.num_items, config.popularity_exponent);

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); c];
    for item in 0..config.num_items {
        members[item_cluster[item] as usize].push(item);
    }
    let samplers: Vec<WeightedIndex<f64>> = members
        .iter()
        .map(|m| WeightedIndex::new(m.iter().map(|&i| popularity[i])).expect("non-empty cluster"))
        .collect();

    let mut user_rng = seeded_rng(config.seed, 3);
    let n = config.interactions_per_user;
    let n_train = train_count(n, config.train_fraction);
    let mut histories: Vec<Vec<u32>> = Vec::with_capacity(config.num_users);
    for _ in 0..config.num_users {
        let preferred = user_rng.random_range(0..c);
        let mut chosen: Vec<u32> = Vec::with_capacity(n);
        let mut attempts = 0usize;
        while chosen.len() < n {
            let cluster = if c == 1 || user_rng.random::<f64>() < config.in_cluster_prob {
                preferred
            } else {
                let other = user_rng.random_range(0..c - 1);
                if other >= preferred {
                    other + 1
                } else {
                    other
                }
            };
            let item = members[cluster][samplers[cluster].sample(&mut user_rng)] as u32;
            attempts += 1;
            if !chosen.contains(&item) {
                chosen.push(item);
            } else if attempts > 1000 * n {
                // saturated clusters: take the most popular unused item
                let fallback = (0..config.num_items as u32).find(|i| !chosen.contains(i)).unwrap();
                chosen.push(fallback);
            }
        }
        histories.push(chosen);
    }

    // chronological: every user's j-th interaction happens at time j
    let mut train = Vec::with_capacity(config.num_users * n_train);
    for step in 0..n_train {
        for (u, h) in histories.iter().enumerate() {
            train.push((u as u32, h[step], step as i64, None));
        }
    }
    let mut test = Vec::new();
    for step in n_train..n {
        for (u, h) in histories.iter().enumerate() {
            test.push(TestInteraction {
                user: u as u32,
                item: h[step],
                timestamp: step as i64,
            });
        }
    }

    let mut text_rng = seeded_rng(config.seed, 4);
    let lambda = config.subjective_weight;
    let obj_scale = (1.0 - lambda * lambda).sqrt();
    let noise_sd = 1.0 / (d as f64).sqrt();
    let mut text = Array2::<f32>::zeros((train.len(), d));
    for (mut out, &(_, item, _, _)) in text.rows_mut().into_iter().zip(&train) {
        let axis = cluster_axes.row(item_cluster[item as usize] as usize);
        let mut noise: Array1<f64> = (0..d)
            .map(|_| text_rng.sample::<f64, _>(StandardNormal) * noise_sd)
            .collect();
        let along = noise.dot(&subjective_axis);
        noise.scaled_add(-along, &subjective_axis);
        let mut obj = &axis + &(noise * config.noise_scale);
        let norm = obj.dot(&obj).sqrt();
        obj /= norm;
        let sign = if text_rng.random::<bool>() { 1.0 } else { -1.0 };
        let v = obj * obj_scale + &(&subjective_axis * (lambda * sign));
        let vn = v.dot(&v).sqrt();
        for (o, x) in out.iter_mut().zip(v.iter()) {
            *o = (x / vn) as f32;
        }
    }

    let user_keys = (0..config.num_users).map(|u| format!("u{u}")).collect();
    let item_keys = (0..config.num_items).map(|i| format!("i{i}")).collect();
    let dataset = InteractionSet::from_parts(user_keys, item_keys, train, test)?;
    Ok(SynthDataset {
        dataset,
        text,
        truth: SynthGroundTruth {
            item_cluster,
            cluster_axes,
            subjective_axis,
            item_popularity: popularity,
        },
    })
}

pub const GROUND_TRUTH_MAGIC: [u8; 4] = *b"SYMG";
pub const GROUND_TRUTH_VERSION: u32 = 1;

/// Ground-truth file, little-endian:
/// `SYMG`, version u32, num_items u64, num_clusters u32, text_dim u32,
/// item clusters (u32 × num_items), item popularity (f64 × num_items),
/// cluster axes (f64 × num_clusters × text_dim, row-major),
/// subjective axis (f64 × text_dim).
pub fn encode_ground_truth(truth: &SynthGroundTruth) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(&GROUND_TRUTH_MAGIC);
    buf.extend_from_slice(&GROUND_TRUTH_VERSION.to_le_bytes());
    buf.extend_from_slice(&(truth.item_cluster.len() as u64).to_le_bytes());
    buf.extend_from_slice(&(truth.cluster_axes.nrows() as u32).to_le_bytes());
    buf.extend_from_slice(&(truth.cluster_axes.ncols() as u32).to_le_bytes());
    for c in &truth.item_cluster {
        buf.extend_from_slice(&c.to_le_bytes());
    }
    for p in &truth.item_popularity {
        buf.extend_from_slice(&p.to_le_bytes());
    }
    for v in truth.cluster_axes.iter().chain(truth.subjective_axis.iter()) {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

pub fn decode_ground_truth(bytes: &[u8]) -> Result<SynthGroundTruth> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(4)? != GROUND_TRUTH_MAGIC {
        return Err(Error::Format("bad ground-truth magic".into()));
    }
    let version = cur.u32()?;
    if version != GROUND_TRUTH_VERSION {
        return Err(Error::Format(format!("unsupported ground-truth version {version}")));
    }
    let num_items = cur.u64()? as usize;
    let num_clusters = cur.u32()? as usize;
    let text_dim = cur.u32()? as usize;
    let item_cluster = (0..num_items).map(|_| cur.u32()).collect::<Result<Vec<_>>>()?;
    let item_popularity = (0..num_items).map(|_| cur.f64()).collect::<Result<Vec<_>>>()?;
    let axes = (0..num_clusters * text_dim).map(|_| cur.f64()).collect::<Result<Vec<_>>>()?;
    let subj = (0..text_dim).map(|_| cur.f64()).collect::<Result<Vec<_>>>()?;
    if cur.pos != bytes.len() {
        return Err(Error::Format("trailing bytes after ground truth".into()));
    }
    if item_cluster.iter().any(|&c| c as usize >= num_clusters) {
        return Err(Error::Format("item cluster id out of range".into()));
    }
    Ok(SynthGroundTruth {
        item_cluster,
        cluster_axes: Array2::from_shape_vec((num_clusters, text_dim), axes).map_err(|e| Error::Shape(e.to_string()))?,
        subjective_axis: Array1::from(subj),
        item_popularity,
    })
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(Error::Format("truncated ground-truth file".into()));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn write_ground_truth(path: &Path, truth: &SynthGroundTruth) -> Result<()> {
    fs::write(path, encode_ground_truth(truth)).map_err(|e| Error::io(path, e))
}

pub fn read_ground_truth(path: &Path) -> Result<SynthGroundTruth> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_ground_truth(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::encode_embedding_file;

    fn small() -> SynthConfig {
        SynthConfig {
            num_users: 200,
            num_items: 120,
            num_clusters: 6,
            interactions_per_user: 8,
            text_dim: 12,
            seed: 11,
            ..Default::default()
        }
    }

    #[test]
    fn same_seed_is_byte_identical() {
        let a = generate_synthetic_dataset(&small()).unwrap();
        let b = generate_synthetic_dataset(&small()).unwrap();
        assert_eq!(
            encode_embedding_file(a.text.view()).unwrap(),
            encode_embedding_file(b.text.view()).unwrap()
        );
        assert_eq!(encode_ground_truth(&a.truth), encode_ground_truth(&b.truth));
        assert_eq!(a.dataset.train(), b.dataset.train());
        assert_eq!(a.dataset.test(), b.dataset.test());
        let c = generate_synthetic_dataset(&SynthConfig { seed: 12, ..small() }).unwrap();
        assert_ne!(a.dataset.train(), c.dataset.train());
    }

    #[test]
    fn axes_are_orthonormal() {
        let s = generate_synthetic_dataset(&small()).unwrap();
        let c = s.truth.cluster_axes.nrows();
        let mut all = Array2::zeros((c + 1, s.truth.subjective_axis.len()));
        all.slice_mut(ndarray::s![..c, ..]).assign(&s.truth.cluster_axes);
        all.row_mut(c).assign(&s.truth.subjective_axis);
        let gram = all.dot(&all.t());
        for i in 0..=c {
            for j in 0..=c {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((gram[[i, j]] - expected).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn text_rows_are_unit() {
        let s = generate_synthetic_dataset(&small()).unwrap();
        assert_eq!(s.text.nrows(), s.dataset.train().len());
        for r in s.text.rows() {
            let n: f64 = r.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn popularity_sums_to_one() {
        let s = generate_synthetic_dataset(&small()).unwrap();
        assert!((s.truth.item_popularity.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_parameters_put_text_on_the_axis() {
        let cfg = SynthConfig {
            popularity_exponent: 0.0,
            noise_scale: 0.0,
            subjective_weight: 0.0,
            ..small()
        };
        let s = generate_synthetic_dataset(&cfg).unwrap();
        for (row, r) in s.text.rows().into_iter().zip(&s.dataset.train().interactions) {
            let axis = s.truth.cluster_axes.row(s.truth.item_cluster[r.item as usize] as usize);
            for (a, b) in row.iter().zip(axis.iter()) {
                assert!((*a as f64 - b).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn uniform_popularity_gives_uniform_frequencies() {
        let cfg = SynthConfig {
            num_users: 20_000,
            num_items: 10,
            num_clusters: 1,
            interactions_per_user: 1,
            popularity_exponent: 0.0,
            text_dim: 4,
            train_fraction: 0.5,
            ..Default::default()
        };
        let s = generate_synthetic_dataset(&cfg).unwrap();
        let freq = s.dataset.train().item_frequencies();
        let n: f64 = 20_000.0;
        let p: f64 = 0.1;
        let sd = (n * p * (1.0 - p)).sqrt();
        for f in freq {
            assert!((f as f64 - n * p).abs() < 3.0 * sd, "{f}");
        }
    }

    #[test]
    fn subjective_energy_is_lambda_squared() {
        let cfg = SynthConfig {
            subjective_weight: 0.6,
            ..small()
        };
        let s = generate_synthetic_dataset(&cfg).unwrap();
        let mean: f64 = s
            .text
            .rows()
            .into_iter()
            .map(|r| {
                let p: f64 = r.iter().zip(s.truth.subjective_axis.iter()).map(|(&a, b)| a as f64 * b).sum();
                p * p
            })
            .sum::<f64>()
            / s.text.nrows() as f64;
        assert!((mean - 0.36).abs() < 0.02, "{mean}");
    }

    #[test]
    fn infeasible_config() {
        let cfg = SynthConfig {
            interactions_per_user: 200,
            ..small()
        };
        assert!(generate_synthetic_dataset(&cfg).unwrap_err().to_string().contains("infeasible"));
    }

    #[test]
    fn ground_truth_round_trip() {
        let s = generate_synthetic_dataset(&small()).unwrap();
        let bytes = encode_ground_truth(&s.truth);
        assert_eq!(decode_ground_truth(&bytes).unwrap(), s.truth);
        assert!(decode_ground_truth(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn each_user_has_distinct_items() {
        let s = generate_synthetic_dataset(&small()).unwrap();
        for u in 0..200u32 {
            let mut items: Vec<u32> = s.dataset.user_train_items(u).to_vec();
            items.extend(s.dataset.test_items(u));
            let n = items.len();
            items.sort_unstable();
            items.dedup();
            assert_eq!(items.len(), n);
            assert_eq!(n, 8);
        }
    }
}
