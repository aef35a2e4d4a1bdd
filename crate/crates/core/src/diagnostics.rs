//! Geometric statistics of trained embeddings and plot-ready TSV output.

use std::fmt::Display;
use std::fs;
use std::path::Path;

use ndarray::{Array1, ArrayView2};
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::linalg::seeded_rng;
use crate::objective::NormalizedRows;
use crate::synth::SynthGroundTruth;
use crate::{Error, Result};

/// Pairwise cosine similarity summary over a set of row pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformityStats {
    pub mean: f64,
    /// Population standard deviation over the sampled pairs.
    pub std_dev: f64,
    pub min: f64,
    pub p25: f64,
    pub p75: f64,
    pub max: f64,
    pub num_pairs: usize,
    pub seed: u64,
}

pub const DEFAULT_NUM_PAIRS: usize = 100_000;

/// `(i, j)` with `i < j` for the `k`-th pair in row-major upper-triangle order.
fn pair_at(n: usize, mut k: usize) -> (usize, usize) {
    let mut i = 0;
    // rows shrink by one each step; skip whole rows
    let mut row_len = n - 1;
    while k >= row_len {
        k -= row_len;
        i += 1;
        row_len -= 1;
    }
    (i, i + 1 + k)
}

/// Linear interpolation between order statistics at position `(n−1)q`.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Samples `num_pairs` distinct row pairs (all pairs when that many or fewer
/// exist) and summarizes their cosine similarities.
pub fn cosine_similarity_stats(embeddings: ArrayView2<f64>, num_pairs: usize, seed: u64) -> Result<UniformityStats> {
    let n = embeddings.nrows();
    if n < 2 {
        return Err(Error::Data(format!("cosine statistics need at least 2 rows, got {n}")));
    }
    let unit = NormalizedRows::new(embeddings, "embedding")?.rows;
    let total = n * (n - 1) / 2;
    let pairs: Vec<usize> = if num_pairs >= total {
        (0..total).collect()
    } else {
        let mut idx = sample(&mut seeded_rng(seed, 0), total, num_pairs).into_vec();
        idx.sort_unstable();
        idx
    };
    let mut sims: Vec<f64> = Vec::with_capacity(pairs.len());
    // pairs are sorted, so walk the triangle once
    let (mut i, mut j) = (0usize, 1usize);
    let mut cursor = 0usize;
    for k in pairs {
        if k - cursor > n {
            (i, j) = pair_at(n, k);
        } else {
            for _ in cursor..k {
                j += 1;
                if j == n {
                    i += 1;
                    j = i + 1;
                }
            }
        }
        cursor = k;
        sims.push(unit.row(i).dot(&unit.row(j)).clamp(-1.0, 1.0));
    }
    let m = sims.len() as f64;
    let mean = sims.iter().sum::<f64>() / m;
    let var = sims.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / m;
    sims.sort_by(f64::total_cmp);
    Ok(UniformityStats {
        mean,
        std_dev: var.sqrt(),
        min: sims[0],
        p25: quantile(&sims, 0.25),
        p75: quantile(&sims, 0.75),
        max: sims[sims.len() - 1],
        num_pairs: sims.len(),
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` ascending edges; the last bin is closed.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Equal-width bins over `[lo, hi]`.
pub fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Histogram {
    let bins = bins.max(1);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let edges = (0..=bins).map(|b| lo + width * b as f64).collect();
    let mut counts = vec![0usize; bins];
    for &v in values {
        let b = (((v - lo) / width).floor().max(0.0) as usize).min(bins - 1);
        counts[b] += 1;
    }
    Histogram { edges, counts }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionVariance {
    /// Unbiased variance of each coordinate.
    pub variances: Vec<f64>,
    pub histogram: Histogram,
}

pub const DEFAULT_VARIANCE_BINS: usize = 20;

pub fn dimension_variance(embeddings: ArrayView2<f64>, bins: usize) -> Result<DimensionVariance> {
    let n = embeddings.nrows();
    if n < 2 {
        return Err(Error::Data(format!("dimension variance needs at least 2 rows, got {n}")));
    }
    let variances: Vec<f64> = embeddings
        .columns()
        .into_iter()
        .map(|c| {
            let mean = c.sum() / n as f64;
            c.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        })
        .collect();
    let hi = variances.iter().cloned().fold(0.0, f64::max);
    let histogram = histogram(&variances, 0.0, hi, bins);
    Ok(DimensionVariance { variances, histogram })
}

/// Mann–Whitney rank-sum statistic as a normal z-score; positive when `a`
/// tends to exceed `b`. Ties get mid-ranks.
pub fn rank_sum_z(a: &[f64], b: &[f64]) -> f64 {
    let mut all: Vec<(f64, bool)> = a.iter().map(|&x| (x, true)).chain(b.iter().map(|&x| (x, false))).collect();
    all.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut rank_a = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_a += mid * all[i..=j].iter().filter(|x| x.1).count() as f64;
        i = j + 1;
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let u = rank_a - na * (na + 1.0) / 2.0;
    let mu = na * nb / 2.0;
    let sd = (na * nb * (na + nb + 1.0) / 12.0).sqrt();
    (u - mu) / sd
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::Data("correlation needs two series of equal length >= 3".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::Data("zero variance in correlation input".into()));
    }
    Ok(sxy / (sxx.sqrt() * syy.sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopularityCorrelation {
    pub r: f64,
    /// `(log(1+freq), L2 norm)` per item.
    pub points: Vec<(f64, f64)>,
}

/// Pearson correlation between `log(1 + train frequency)` and raw row norm.
pub fn popularity_norm_correlation(items: ArrayView2<f64>, frequencies: &[usize]) -> Result<PopularityCorrelation> {
    if items.nrows() != frequencies.len() {
        return Err(Error::Shape(format!(
            "{} item rows but {} frequencies",
            items.nrows(),
            frequencies.len()
        )));
    }
    let points: Vec<(f64, f64)> = items
        .rows()
        .into_iter()
        .zip(frequencies)
        .map(|(r, &f)| ((f as f64).ln_1p(), r.dot(&r).sqrt()))
        .collect();
    let (x, y): (Vec<f64>, Vec<f64>) = points.iter().cloned().unzip();
    Ok(PopularityCorrelation {
        r: pearson(&x, &y)?,
        points,
    })
}

/// Mean squared projections of unit text rows onto the planted axes after
/// they are mapped into the projected space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchoringEnergies {
    /// Onto the row's own cluster axis.
    pub objective: f64,
    pub subjective: f64,
    /// Everything outside those two directions.
    pub residual: f64,
    pub num_rows: usize,
}

/// Gram–Schmidt (two passes) in order; a vector that vanishes against the
/// earlier ones becomes zero.
fn orthonormalize(vectors: &[Array1<f64>]) -> Vec<Array1<f64>> {
    let mut out: Vec<Array1<f64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let scale = v.dot(v).sqrt();
        let mut u = v.clone();
        for _ in 0..2 {
            for e in &out {
                let p = u.dot(e);
                u.scaled_add(-p, e);
            }
        }
        let n = u.dot(&u).sqrt();
        if n > 1e-10 * scale.max(1e-300) {
            u /= n;
        } else {
            u.fill(0.0);
        }
        out.push(u);
    }
    out
}

/// `projected` rows are `text_row · W + b` for train interactions whose item
/// ids are `items`; `weight` is the `text_dim × d` projection matrix. Each
/// planted axis `a` maps to `Wᵀa`; the mapped frame is re-orthonormalized with
/// the subjective axis first, so its energy is measured along the full
/// image of the planted sentiment direction.
pub fn anchoring_energy(
    projected: ArrayView2<f64>,
    items: &[u32],
    truth: &SynthGroundTruth,
    weight: ArrayView2<f64>,
) -> Result<AnchoringEnergies> {
    if projected.nrows() != items.len() || projected.nrows() == 0 {
        return Err(Error::Shape(format!(
            "{} projected rows for {} items",
            projected.nrows(),
            items.len()
        )));
    }
    if weight.nrows() != truth.subjective_axis.len() || weight.ncols() != projected.ncols() {
        return Err(Error::Shape("projection weight does not match the planted axes".into()));
    }
    let mut mapped = vec![weight.t().dot(&truth.subjective_axis)];
    mapped.extend(truth.cluster_axes.rows().into_iter().map(|a| weight.t().dot(&a)));
    let frame = orthonormalize(&mapped);
    let subj_axis = &frame[0];
    let unit = NormalizedRows::new(projected, "projected text")?.rows;
    let (mut obj, mut subj) = (0.0, 0.0);
    for (row, &item) in unit.rows().into_iter().zip(items) {
        let c = *truth
            .item_cluster
            .get(item as usize)
            .ok_or_else(|| Error::Data(format!("item {item} has no planted cluster")))? as usize;
        obj += row.dot(&frame[c + 1]).powi(2);
        subj += row.dot(subj_axis).powi(2);
    }
    let n = items.len() as f64;
    let (objective, subjective) = (obj / n, subj / n);
    Ok(AnchoringEnergies {
        objective,
        subjective,
        residual: (1.0 - objective - subjective).max(0.0),
        num_rows: items.len(),
    })
}

/// Writes a header line and tab-separated rows.
pub fn write_tsv<R, C>(path: &Path, header: &[&str], rows: R) -> Result<()>
where
    R: IntoIterator<Item = C>,
    C: IntoIterator,
    C::Item: Display,
{
    let mut out = header.join("\t");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(|c| c.to_string()).collect();
        out.push_str(&cells.join("\t"));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_histogram_tsv(path: &Path, h: &Histogram) -> Result<()> {
    write_tsv(
        path,
        &["lower", "upper", "count"],
        h.counts
            .iter()
            .enumerate()
            .map(|(b, c)| vec![h.edges[b].to_string(), h.edges[b + 1].to_string(), c.to_string()]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn pair_enumeration() {
        let n = 5;
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                assert_eq!(pair_at(n, k), (i, j));
                k += 1;
            }
        }
    }

    #[test]
    fn identical_rows() {
        let e = Array2::from_elem((6, 3), 2.0);
        let s = cosine_similarity_stats(e.view(), 1000, 0).unwrap();
        assert!((s.mean - 1.0).abs() < 1e-12);
        assert!(s.std_dev < 1e-12);
        assert_eq!(s.num_pairs, 15);
    }

    #[test]
    fn orthogonal_pair() {
        let e = array![[1.0, 0.0], [0.0, 3.0]];
        let s = cosine_similarity_stats(e.view(), 10, 0).unwrap();
        assert_eq!((s.mean, s.num_pairs), (0.0, 1));
        assert!(cosine_similarity_stats(e.slice(ndarray::s![..1, ..]), 10, 0).is_err());
    }

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.25), 1.75);
        assert_eq!(quantile(&v, 0.75), 3.25);
        assert_eq!(quantile(&v, 1.0), 4.0);
    }

    #[test]
    fn alternating_unit_rows_variance() {
        // n = 6 rows of ±e1: mean 0, sum of squares 6, unbiased 6/5
        let mut e = Array2::zeros((6, 3));
        for i in 0..6 {
            e[[i, 0]] = if i % 2 == 0 { 1.0 } else { -1.0 };
        }
        let v = dimension_variance(e.view(), 4).unwrap();
        assert_eq!(v.variances, vec![1.2, 0.0, 0.0]);
        assert_eq!(v.histogram.counts.iter().sum::<usize>(), 3);
        let c = dimension_variance(Array2::from_elem((4, 2), 7.0).view(), 4).unwrap();
        assert_eq!(c.variances, vec![0.0, 0.0]);
    }

    #[test]
    fn affine_norms_correlate_perfectly() {
        let freqs = [0usize, 3, 10, 50];
        let mut e = Array2::zeros((4, 2));
        for (i, &f) in freqs.iter().enumerate() {
            e[[i, 1]] = 0.5 + 2.0 * (f as f64).ln_1p();
        }
        let c = popularity_norm_correlation(e.view(), &freqs).unwrap();
        assert!((c.r - 1.0).abs() < 1e-12);
        let flat = Array2::from_elem((4, 2), 1.0);
        assert!(popularity_norm_correlation(flat.view(), &freqs)
            .unwrap_err()
            .to_string()
            .contains("zero variance"));
    }

    #[test]
    fn rank_sum_direction() {
        assert!(rank_sum_z(&[5.0, 6.0, 7.0], &[1.0, 2.0, 3.0]) > 1.5);
        assert!(rank_sum_z(&[1.0, 2.0], &[1.0, 2.0]).abs() < 1e-12);
    }

    #[test]
    fn histogram_bins() {
        let h = histogram(&[0.0, 0.5, 1.0, 0.99], 0.0, 1.0, 2);
        assert_eq!(h.counts, vec![1, 3]);
        assert_eq!(h.edges, vec![0.0, 0.5, 1.0]);
    }
}
