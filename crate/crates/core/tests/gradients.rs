mod common;

use common::{gaussian, matrix, numeric_gradient, random_dataset, random_text, relative_error, rng};
use ndarray::Array2;
use rand::Rng;
use symcere::dataio::NormalizedAdjacency;
use symcere::encoder::{interaction_reprs, interaction_reprs_backward, lightgcn_backward, lightgcn_forward, GraphParams};
use symcere::objective::{infonce_cross_modal, symcere_cross_modal, NormalizedRows};
use symcere::dataio::NegativeMask;
use symcere::trainer::{LossVariant, TrainConfig, Trainer};
use symcere::encoder::Backbone;

const H: f64 = 1e-6;
const TOL: f64 = 1e-6;

fn random_graph(r: &mut impl Rng, users: usize, items: usize) -> NormalizedAdjacency {
    let mut edges = Vec::new();
    for u in 0..users as u32 {
        for i in 0..items as u32 {
            if r.random_bool(0.4) {
                edges.push((u, i));
            }
        }
    }
    NormalizedAdjacency::from_edges(users, items, &edges)
}

#[test]
fn lightgcn_backward_matches_finite_differences() {
    let mut r = rng(11);
    for _ in 0..20 {
        let (nu, ni, d) = (r.random_range(1..5), r.random_range(1..6), r.random_range(1..5));
        let k = r.random_range(0..4);
        let adj = random_graph(&mut r, nu, ni);
        let base = gaussian(&mut r, nu + ni, d, 1.0);
        let probe = gaussian(&mut r, nu + ni, d, 1.0);
        let f = |x: &[f64]| {
            let p = GraphParams::lightgcn(matrix(base.dim(), x), k);
            (lightgcn_forward(&p, &adj).unwrap() * &probe).sum()
        };
        let p = GraphParams::lightgcn(base.clone(), k);
        let analytic = lightgcn_backward(&p.layer_weights, &adj, probe.view()).unwrap();
        let numeric = numeric_gradient(base.as_slice().unwrap(), H, f);
        assert!(relative_error(analytic.as_slice().unwrap(), &numeric) < TOL);
    }
}

#[test]
fn interaction_repr_adjoint() {
    let mut r = rng(12);
    let nodes = gaussian(&mut r, 7, 3, 1.0);
    let pairs = [(0u32, 1u32), (2, 0), (0, 3), (1, 1)];
    let probe = gaussian(&mut r, pairs.len(), 3, 1.0);
    let f = |x: &[f64]| (interaction_reprs(matrix(nodes.dim(), x).view(), 3, &pairs) * &probe).sum();
    let mut analytic = Array2::zeros(nodes.dim());
    interaction_reprs_backward(&mut analytic, 3, &pairs, probe.view());
    let numeric = numeric_gradient(nodes.as_slice().unwrap(), H, f);
    assert!(relative_error(analytic.as_slice().unwrap(), &numeric) < TOL);
}

#[test]
fn normalized_symcere_chain() {
    let mut r = rng(13);
    for _ in 0..20 {
        let b = r.random_range(2..8);
        let d = r.random_range(2..10);
        let g = gaussian(&mut r, b, d, 2.0);
        let t = gaussian(&mut r, b, d, 2.0);
        let mask = NegativeMask::from_fn(b, |_, _| r.random_bool(0.7));
        let loss = |gx: &Array2<f64>, tx: &Array2<f64>| {
            let gn = NormalizedRows::new(gx.view(), "g").unwrap();
            let tn = NormalizedRows::new(tx.view(), "t").unwrap();
            symcere_cross_modal(gn.rows.view(), tn.rows.view(), &mask, 0.2).unwrap()
        };
        let gn = NormalizedRows::new(g.view(), "g").unwrap();
        let tn = NormalizedRows::new(t.view(), "t").unwrap();
        let out = loss(&g, &t);
        let dg = gn.backward(out.grad_anchor.view());
        let dt = tn.backward(out.grad_candidate.view());
        let num_g = numeric_gradient(g.as_slice().unwrap(), H, |x| loss(&matrix(g.dim(), x), &t).loss);
        let num_t = numeric_gradient(t.as_slice().unwrap(), H, |x| loss(&g, &matrix(t.dim(), x)).loss);
        assert!(relative_error(dg.as_slice().unwrap(), &num_g) < TOL);
        assert!(relative_error(dt.as_slice().unwrap(), &num_t) < TOL);
    }
}

#[test]
fn infonce_cross_modal_matches_finite_differences() {
    let mut r = rng(14);
    for _ in 0..20 {
        let b = r.random_range(1..8);
        let g = gaussian(&mut r, b, 4, 1.0);
        let t = gaussian(&mut r, b, 4, 1.0);
        let out = infonce_cross_modal(g.view(), t.view(), 0.3).unwrap();
        let num_g = numeric_gradient(g.as_slice().unwrap(), H, |x| {
            infonce_cross_modal(matrix(g.dim(), x).view(), t.view(), 0.3).unwrap().loss
        });
        let num_t = numeric_gradient(t.as_slice().unwrap(), H, |x| {
            infonce_cross_modal(g.view(), matrix(t.dim(), x).view(), 0.3).unwrap().loss
        });
        assert!(relative_error(out.grad_anchor.as_slice().unwrap(), &num_g) < TOL);
        assert!(relative_error(out.grad_candidate.as_slice().unwrap(), &num_t) < TOL);
    }
}

/// The whole objective through `Trainer::batch_gradients`, every tensor.
fn check_trainer(backbone: Backbone, variant: LossVariant, normalize: bool, seed: u64) {
    let ds = random_dataset(seed, 6, 9, 4);
    let text = random_text(seed, ds.train().len(), 5);
    let mut config = TrainConfig::default();
    config.model.backbone = backbone;
    config.model.dim = 4;
    config.model.layers = 2;
    config.loss.variant = variant;
    config.loss.normalize = normalize;
    config.loss.reg = 1e-2;
    config.train.seed = seed;
    let mut trainer = Trainer::new(config, ds.train().clone(), text.view()).unwrap();
    // push the tiny initial embeddings away from the origin so normalization is well conditioned
    let mut r = rng(seed + 100);
    for (_, t) in trainer.params_mut().tensors_mut() {
        for v in t.iter_mut() {
            *v += r.random_range(-0.5..0.5);
        }
    }
    let batch: Vec<usize> = (0..ds.train().len()).step_by(2).collect();
    let (_, grads) = trainer.batch_gradients(&batch, 7).unwrap();
    let analytic: Vec<Vec<f64>> = grads.tensors().into_iter().map(|(_, _, v)| v.to_vec()).collect();
    let names: Vec<String> = grads.tensors().into_iter().map(|(n, _, _)| n).collect();
    for (ti, name) in names.iter().enumerate() {
        let x0 = trainer.params().tensors()[ti].2.to_vec();
        let numeric = numeric_gradient(&x0, H, |x| {
            trainer.params_mut().tensors_mut()[ti].1.copy_from_slice(x);
            trainer.batch_loss(&batch, 7).unwrap().1
        });
        trainer.params_mut().tensors_mut()[ti].1.copy_from_slice(&x0);
        let err = relative_error(&analytic[ti], &numeric);
        assert!(err < 1e-5, "{backbone} {variant} norm={normalize} {name}: {err:e}");
    }
}

#[test]
fn trainer_gradients_lightgcn() {
    check_trainer(Backbone::LightGcn, LossVariant::Symcere, true, 1);
    check_trainer(Backbone::LightGcn, LossVariant::Infonce, false, 2);
    check_trainer(Backbone::LightGcn, LossVariant::None, true, 3);
}

#[test]
fn trainer_gradients_ngcf() {
    check_trainer(Backbone::Ngcf, LossVariant::Symcere, true, 4);
    check_trainer(Backbone::Ngcf, LossVariant::Symcere, false, 5);
    check_trainer(Backbone::Ngcf, LossVariant::Infonce, true, 6);
}
