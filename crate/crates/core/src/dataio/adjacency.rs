use std::collections::HashSet;

use ndarray::{Array2, ArrayView2};

use super::interactions::{InteractionSet, TrainPartition};
use crate::{Error, Result};

/// Symmetric-normalized bipartite adjacency `D^{-1/2} A D^{-1/2}` in CSR form.
///
/// Node `u` in `0..num_users` is a user; node `num_users + i` is item `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    num_users: usize,
    num_items: usize,
    /// Distinct undirected (user, item) edges.
    edges: Vec<(u32, u32)>,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    weights: Vec<f64>,
}

pub fn build_adjacency(dataset: &InteractionSet) -> NormalizedAdjacency {
    NormalizedAdjacency::from_train(dataset.train())
}

impl NormalizedAdjacency {
    pub fn from_train(train: &TrainPartition) -> Self {
        Self::from_edges(train.num_users, train.num_items, &train.distinct_pairs())
    }

    /// Builds the graph from (user, item) pairs; repeated pairs collapse to one edge.
    pub fn from_edges(num_users: usize, num_items: usize, pairs: &[(u32, u32)]) -> Self {
        let mut seen = HashSet::with_capacity(pairs.len());
        let edges: Vec<(u32, u32)> = pairs.iter().copied().filter(|p| seen.insert(*p)).collect();

        let n = num_users + num_items;
        let mut degree = vec![0usize; n];
        for &(u, i) in &edges {
            degree[u as usize] += 1;
            degree[num_users + i as usize] += 1;
        }
        let mut row_ptr = vec![0usize; n + 1];
        for v in 0..n {
            row_ptr[v + 1] = row_ptr[v] + degree[v];
        }
        let mut fill = row_ptr[..n].to_vec();
        let nnz = row_ptr[n];
        let mut col_idx = vec![0u32; nnz];
        let mut weights = vec![0.0; nnz];
        for &(u, i) in &edges {
            let a = u as usize;
            let b = num_users + i as usize;
            let w = 1.0 / ((degree[a] * degree[b]) as f64).sqrt();
            col_idx[fill[a]] = b as u32;
            weights[fill[a]] = w;
            fill[a] += 1;
            col_idx[fill[b]] = a as u32;
            weights[fill[b]] = w;
            fill[b] += 1;
        }
        for v in 0..n {
            let (s, e) = (row_ptr[v], row_ptr[v + 1]);
            let mut row: Vec<(u32, f64)> = col_idx[s..e].iter().copied().zip(weights[s..e].iter().copied()).collect();
            row.sort_by_key(|&(c, _)| c);
            for (k, (c, w)) in row.into_iter().enumerate() {
                col_idx[s + k] = c;
                weights[s + k] = w;
            }
        }

        NormalizedAdjacency {
            num_users,
            num_items,
            edges,
            row_ptr,
            col_idx,
            weights,
        }
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn num_nodes(&self) -> usize {
        self.num_users + self.num_items
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// `(column, weight)` pairs of row `node`, sorted by column.
    pub fn row(&self, node: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (s, e) = (self.row_ptr[node], self.row_ptr[node + 1]);
        self.col_idx[s..e]
            .iter()
            .zip(&self.weights[s..e])
            .map(|(&c, &w)| (c as usize, w))
    }

    pub fn weight(&self, a: usize, b: usize) -> Option<f64> {
        self.row(a).find(|&(c, _)| c == b).map(|(_, w)| w)
    }

    /// Sparse product `Ã · x`.
    pub fn spmm(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.nrows() != self.num_nodes() {
            return Err(Error::Shape(format!(
                "adjacency has {} nodes but embedding has {} rows",
                self.num_nodes(),
                x.nrows()
            )));
        }
        let d = x.ncols();
        let mut out = Array2::<f64>::zeros((x.nrows(), d));
        let x = x.as_standard_layout();
        let xs = x.as_slice().expect("standard layout");
        let os = out.as_slice_mut().expect("fresh array");
        for v in 0..self.num_nodes() {
            let acc = &mut os[v * d..(v + 1) * d];
            for (c, w) in self.row(v) {
                for (a, xv) in acc.iter_mut().zip(&xs[c * d..(c + 1) * d]) {
                    *a += w * xv;
                }
            }
        }
        Ok(out)
    }

    /// Dense copy of the normalized matrix.
    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.num_nodes();
        let mut m = Array2::zeros((n, n));
        for v in 0..n {
            for (c, w) in self.row(v) {
                m[[v, c]] = w;
            }
        }
        m
    }
}
