use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Normal, Uniform};

use super::TrainConfig;
use crate::encoder::{Backbone, GraphParams, NgcfLayer, NgcfWeights};
use crate::linalg::seeded_rng;
use crate::objective::ProjectionHead;

/// Every learnable tensor: graph parameters plus the text projection head.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub graph: GraphParams,
    pub projection: ProjectionHead,
}

impl ModelParams {
    /// `(name, shape, values)` in a fixed order.
    pub fn tensors(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        let mut out: Vec<(String, Vec<usize>, &[f64])> = vec![
            ("embedding".into(), self.graph.base.shape().to_vec(), std2(&self.graph.base)),
            ("projection.weight".into(), self.projection.weight.shape().to_vec(), std2(&self.projection.weight)),
            ("projection.bias".into(), vec![self.projection.bias.len()], std1(&self.projection.bias)),
        ];
        if let Some(w) = &self.graph.ngcf {
            for (k, l) in w.layers.iter().enumerate() {
                out.push((format!("ngcf.{k}.w1"), l.w1.shape().to_vec(), std2(&l.w1)));
                out.push((format!("ngcf.{k}.w2"), l.w2.shape().to_vec(), std2(&l.w2)));
                out.push((format!("ngcf.{k}.bias"), vec![l.bias.len()], std1(&l.bias)));
            }
            out.push(("ngcf.output".into(), w.output.shape().to_vec(), std2(&w.output)));
        }
        out
    }

    /// Mutable views in the same order as [`ModelParams::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let mut out: Vec<(String, &mut [f64])> = vec![
            ("embedding".into(), mut2(&mut self.graph.base)),
            ("projection.weight".into(), mut2(&mut self.projection.weight)),
            ("projection.bias".into(), mut1(&mut self.projection.bias)),
        ];
        if let Some(w) = &mut self.graph.ngcf {
            for (k, l) in w.layers.iter_mut().enumerate() {
                out.push((format!("ngcf.{k}.w1"), mut2(&mut l.w1)));
                out.push((format!("ngcf.{k}.w2"), mut2(&mut l.w2)));
                out.push((format!("ngcf.{k}.bias"), mut1(&mut l.bias)));
            }
            out.push(("ngcf.output".into(), mut2(&mut w.output)));
        }
        out
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for (_, t) in z.tensors_mut() {
            t.fill(0.0);
        }
        z
    }

    /// `‖Θ‖²` over all learnable tensors.
    pub fn sq_norm(&self) -> f64 {
        self.tensors().iter().map(|(_, _, v)| v.iter().map(|x| x * x).sum::<f64>()).sum()
    }

    /// `self += scale · other`, tensor by tensor.
    pub fn add_scaled(&mut self, other: &ModelParams, scale: f64) {
        for ((_, dst), (_, _, src)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|(_, _, v)| v.len()).sum()
    }
}

fn std2(a: &Array2<f64>) -> &[f64] {
    a.as_slice().expect("standard layout")
}

fn std1(a: &Array1<f64>) -> &[f64] {
    a.as_slice().expect("standard layout")
}

fn mut2(a: &mut Array2<f64>) -> &mut [f64] {
    a.as_slice_mut().expect("standard layout")
}

fn mut1(a: &mut Array1<f64>) -> &mut [f64] {
    a.as_slice_mut().expect("standard layout")
}

fn glorot<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let dist = Uniform::new_inclusive(-limit, limit).expect("finite bounds");
    Array2::from_shape_fn((rows, cols), |_| rng.sample(dist))
}

pub const EMBEDDING_INIT_STD: f64 = 0.01;

/// `E⁽⁰⁾ ~ N(0, 0.01²)`; projection and NGCF matrices Glorot-uniform; biases zero.
pub fn init_params(config: &TrainConfig, num_nodes: usize, text_dim: usize, seed: u64) -> ModelParams {
    let d = config.model.dim;
    let k = config.model.layers;
    let mut rng = seeded_rng(seed, 0x1417);
    let normal = Normal::new(0.0, EMBEDDING_INIT_STD).expect("valid std");
    let base = Array2::from_shape_fn((num_nodes, d), |_| rng.sample(normal));
    let projection = ProjectionHead {
        weight: glorot(text_dim, d, &mut rng),
        bias: Array1::zeros(d),
    };
    let graph = match config.model.backbone {
        Backbone::LightGcn => GraphParams::lightgcn(base, k),
        Backbone::Ngcf => {
            let layers = (0..k)
                .map(|_| NgcfLayer {
                    w1: glorot(d, d, &mut rng),
                    w2: glorot(d, d, &mut rng),
                    bias: Array1::zeros(d),
                })
                .collect();
            let weights = NgcfWeights {
                layers,
                output: glorot((k + 1) * d, d, &mut rng),
                negative_slope: config.model.leaky_slope,
            };
            GraphParams::ngcf(base, weights)
        }
    };
    ModelParams { graph, projection }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(backbone: Backbone) -> TrainConfig {
        let mut c = TrainConfig::default();
        c.model.backbone = backbone;
        c.model.dim = 8;
        c.model.layers = 2;
        c
    }

    #[test]
    fn same_seed_same_params() {
        let c = config(Backbone::Ngcf);
        assert_eq!(init_params(&c, 30, 5, 3), init_params(&c, 30, 5, 3));
    }

    #[test]
    fn different_seeds_differ_almost_everywhere() {
        let c = config(Backbone::Ngcf);
        let a = init_params(&c, 300, 5, 3);
        let b = init_params(&c, 300, 5, 4);
        let mut total = 0;
        let mut differ = 0;
        for ((_, _, x), (_, _, y)) in a.tensors().into_iter().zip(b.tensors()) {
            for (p, q) in x.iter().zip(y) {
                if p != q || *p == 0.0 {
                    total += 1;
                    differ += (p != q) as usize;
                }
            }
        }
        // zero biases are equal by construction and excluded
        let nonzero: usize = a.tensors().iter().map(|(_, _, v)| v.iter().filter(|x| **x != 0.0).count()).sum();
        assert!(differ as f64 >= 0.99 * nonzero as f64, "{differ}/{total}");
    }

    #[test]
    fn embedding_std_matches() {
        let c = config(Backbone::LightGcn);
        let p = init_params(&c, 2000, 4, 9);
        let v = p.graph.base.as_slice().unwrap();
        assert!(v.len() >= 10_000);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
        assert!((var.sqrt() / EMBEDDING_INIT_STD - 1.0).abs() < 0.05);
    }

    #[test]
    fn tensor_order_is_stable() {
        let p = init_params(&config(Backbone::Ngcf), 10, 3, 0);
        let names: Vec<String> = p.tensors().into_iter().map(|t| t.0).collect();
        let mut q = p.clone();
        let names_mut: Vec<String> = q.tensors_mut().into_iter().map(|t| t.0).collect();
        assert_eq!(names, names_mut);
        assert_eq!(names.len(), 3 + 3 * 2 + 1);
        assert_eq!(p.zeros_like().sq_norm(), 0.0);
    }
}
