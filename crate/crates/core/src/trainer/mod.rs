//! Mini-batch optimization of the multi-task objective.
//!
//! A [`Trainer`] owns the train partition, its text rows and the model; it
//! never sees test interactions. Evaluation is driven from outside through
//! [`fit`].

mod adam;
mod checkpoint;
mod config;
mod params;
mod sampling;

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataio::{build_negative_mask, NormalizedAdjacency, TrainPartition};
use crate::encoder::{encode, encode_backward, interaction_reprs, interaction_reprs_backward, ForwardState, GraphParams};
use crate::evaluator::ScoreMode;
use crate::linalg::{gather_rows, seeded_rng};
use crate::objective::{
    augment_edge_dropout, augment_text_mask, bpr_loss, infonce_cross_modal, infonce_intra, project_text,
    projection_backward, symcere_cross_modal, total_loss, ContrastiveOutput, LossComponents, NormalizedRows,
    ProjectionHead,
};
use crate::{Error, Result};

pub use adam::{adam_step, adam_update, AdamConfig, AdamState};
pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
};
pub use config::{LossConfig, LossVariant, ModelConfig, OptimConfig, TrainConfig};
pub use params::{init_params, ModelParams, EMBEDDING_INIT_STD};
pub use sampling::{sample_bpr_triples, sample_negative};

/// RNG stream offset for per-epoch randomness (shuffle, augmentations, negatives).
const EPOCH_STREAM: u64 = 1 << 32;

/// Mean of each loss term over the batches of one epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLosses {
    /// 1-based epoch number.
    pub epoch: u64,
    pub cross_modal: f64,
    pub intra_modal: f64,
    pub bpr: f64,
    pub param_sq_norm: f64,
    pub total: f64,
    pub batches: usize,
}

/// Rows entering a loss, optionally projected onto the unit sphere.
enum Sphere {
    On(NormalizedRows),
    Off(Array2<f64>),
}

impl Sphere {
    fn new(x: Array2<f64>, normalize: bool, what: &str) -> Result<Self> {
        if !normalize {
            return Ok(Sphere::Off(x));
        }
        let n = NormalizedRows::new(x.view(), what)?;
        debug_assert!(n
            .rows
            .rows()
            .into_iter()
            .all(|r| (r.dot(&r).sqrt() - 1.0).abs() < 1e-4));
        Ok(Sphere::On(n))
    }

    fn rows(&self) -> ArrayView2<'_, f64> {
        match self {
            Sphere::On(n) => n.rows.view(),
            Sphere::Off(x) => x.view(),
        }
    }

    fn backward(&self, grad: Array2<f64>) -> Array2<f64> {
        match self {
            Sphere::On(n) => n.backward(grad.view()),
            Sphere::Off(_) => grad,
        }
    }
}

struct Augmented {
    adjacency: NormalizedAdjacency,
    nodes: Array2<f64>,
    state: ForwardState,
    text: Array2<f64>,
}

pub struct Trainer {
    config: TrainConfig,
    train: TrainPartition,
    adjacency: NormalizedAdjacency,
    text: Array2<f64>,
    params: ModelParams,
    adam: AdamState,
    epoch: u64,
}

impl Trainer {
    /// `text` row `r` belongs to the train interaction whose `embedding_row` is `r`.
    pub fn new(config: TrainConfig, train: TrainPartition, text: ArrayView2<f32>) -> Result<Self> {
        config.validate()?;
        if train.is_empty() {
            return Err(Error::Data("train partition is empty".into()));
        }
        if text.nrows() != train.len() {
            return Err(Error::Shape(format!(
                "{} text rows for {} train interactions",
                text.nrows(),
                train.len()
            )));
        }
        if train.interactions.iter().any(|x| x.embedding_row >= text.nrows()) {
            return Err(Error::Data("train interaction points past the text rows".into()));
        }
        if text.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("text embeddings".into()));
        }
        let text = text.mapv(f64::from);
        let adjacency = NormalizedAdjacency::from_train(&train);
        let params = init_params(&config, adjacency.num_nodes(), text.ncols(), config.train.seed);
        let adam = AdamState::new(&params);
        Ok(Trainer {
            config,
            train,
            adjacency,
            text,
            params,
            adam,
            epoch: 0,
        })
    }

    /// Rebuilds a trainer from a checkpoint. A config that differs from the
    /// one stored is an error unless `allow_config_change` is set.
    pub fn from_checkpoint(
        checkpoint: Checkpoint,
        config: TrainConfig,
        train: TrainPartition,
        text: ArrayView2<f32>,
        allow_config_change: bool,
    ) -> Result<Self> {
        if checkpoint.config.hash() != config.hash() {
            let expected = hex::encode(config.hash());
            let found = hex::encode(checkpoint.config.hash());
            if !allow_config_change {
                return Err(Error::ConfigHashMismatch { expected, found });
            }
            log::warn!("checkpoint config hash {found} differs from the current config {expected}; continuing");
        }
        let mut trainer = Trainer::new(config, train, text)?;
        let want: Vec<_> = trainer.params.tensors().into_iter().map(|(n, s, _)| (n, s)).collect();
        let have: Vec<_> = checkpoint.params.tensors().into_iter().map(|(n, s, _)| (n, s)).collect();
        if want != have {
            return Err(Error::Shape("checkpoint tensors do not fit this dataset and model config".into()));
        }
        trainer.params = checkpoint.params;
        trainer.adam = checkpoint.adam;
        trainer.epoch = checkpoint.epoch;
        Ok(trainer)
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn train_partition(&self) -> &TrainPartition {
        &self.train
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Direct parameter access, e.g. for finite-difference checks.
    pub fn params_mut(&mut self) -> &mut ModelParams {
        &mut self.params
    }

    pub fn adam_state(&self) -> &AdamState {
        &self.adam
    }

    /// Completed epochs.
    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn score_mode(&self) -> ScoreMode {
        ScoreMode::for_normalize(self.config.loss.normalize)
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            config: self.config.clone(),
            epoch: self.epoch,
            params: self.params.clone(),
            adam: self.adam.clone(),
        }
    }

    pub fn save_checkpoint(&self, path: &std::path::Path) -> Result<()> {
        save_checkpoint(&self.checkpoint(), path)
    }

    /// Final node embeddings on the clean graph (users first, then items).
    pub fn node_embeddings(&self) -> Result<Array2<f64>> {
        Ok(encode(&self.params.graph, &self.adjacency)?.0)
    }

    /// Every train text row mapped through the projection head, unnormalized.
    pub fn projected_text(&self) -> Result<Array2<f64>> {
        let rows: Vec<usize> = self.train.interactions.iter().map(|x| x.embedding_row).collect();
        project_text(&self.params.projection, gather_rows(self.text.view(), &rows).view())
    }

    /// Loss terms of one batch of train rows without updating anything.
    pub fn batch_loss(&self, batch: &[usize], seed: u64) -> Result<(LossComponents, f64)> {
        let (c, total, _) = self.batch_step(batch, &mut seeded_rng(seed, 0), false)?;
        Ok((c, total))
    }

    /// Total loss and its gradient for one batch of train rows.
    pub fn batch_gradients(&self, batch: &[usize], seed: u64) -> Result<(f64, ModelParams)> {
        let (_, total, grads) = self.batch_step(batch, &mut seeded_rng(seed, 0), true)?;
        Ok((total, grads.expect("gradients requested")))
    }

    pub fn train_epoch(&mut self) -> Result<EpochLosses> {
        let mut rng = seeded_rng(self.config.train.seed, EPOCH_STREAM + self.epoch);
        let mut order: Vec<usize> = (0..self.train.len()).collect();
        order.shuffle(&mut rng);
        let h = AdamConfig {
            learning_rate: self.config.train.learning_rate,
            beta1: self.config.train.beta1,
            beta2: self.config.train.beta2,
            epsilon: self.config.train.epsilon,
        };
        let mut sum = LossComponents::default();
        let mut total = 0.0;
        let mut batches = 0usize;
        for batch in order.chunks(self.config.train.batch_size) {
            let (c, t, grads) = self.batch_step(batch, &mut rng, true)?;
            adam_step(&mut self.params, &grads.expect("gradients requested"), &mut self.adam, &h)?;
            sum.cross_modal += c.cross_modal;
            sum.intra_modal += c.intra_modal;
            sum.bpr += c.bpr;
            sum.param_sq_norm += c.param_sq_norm;
            total += t;
            batches += 1;
        }
        self.epoch += 1;
        let n = batches as f64;
        Ok(EpochLosses {
            epoch: self.epoch,
            cross_modal: sum.cross_modal / n,
            intra_modal: sum.intra_modal / n,
            bpr: sum.bpr / n,
            param_sq_norm: sum.param_sq_norm / n,
            total: total / n,
            batches,
        })
    }

    fn batch_step<R: Rng>(
        &self,
        batch: &[usize],
        rng: &mut R,
        want_grads: bool,
    ) -> Result<(LossComponents, f64, Option<ModelParams>)> {
        if batch.is_empty() {
            return Err(Error::Data("empty batch".into()));
        }
        let lc = &self.config.loss;
        let w = lc.weights();
        let tau = w.temperature;
        let nu = self.train.num_users;
        let mut pairs = Vec::with_capacity(batch.len());
        let mut rows = Vec::with_capacity(batch.len());
        for &r in batch {
            let x = self
                .train
                .interactions
                .get(r)
                .ok_or_else(|| Error::Data(format!("batch row {r} outside the train partition")))?;
            pairs.push((x.user, x.item));
            rows.push(x.embedding_row);
        }
        let use_intra = w.alpha > 0.0;
        let use_bpr = w.beta > 0.0;
        let graph = &self.params.graph;
        let head = &self.params.projection;

        // random draws in a fixed order: edges, text coordinates, negatives
        let (nodes, state) = encode(graph, &self.adjacency)?;
        let text_b = gather_rows(self.text.view(), &rows);
        let aug = if use_intra {
            let adjacency = augment_edge_dropout(&self.adjacency, lc.edge_dropout, rng)?;
            let (nodes, state) = encode(graph, &adjacency)?;
            let text = augment_text_mask(text_b.view(), lc.text_mask, rng)?;
            Some(Augmented {
                adjacency,
                nodes,
                state,
                text,
            })
        } else {
            None
        };
        let triples = if use_bpr {
            sample_bpr_triples(&self.train, batch, rng)?
        } else {
            Vec::new()
        };

        let uses_text = use_intra || lc.variant != LossVariant::None;
        let g = Sphere::new(interaction_reprs(nodes.view(), nu, &pairs), lc.normalize, "interaction representation")?;
        let t = if uses_text {
            Sphere::new(project_text(head, text_b.view())?, lc.normalize, "projected text")?
        } else {
            Sphere::Off(Array2::zeros((batch.len(), head.out_dim())))
        };
        let cross = match lc.variant {
            LossVariant::Symcere => {
                let mask = build_negative_mask(batch, &self.train);
                Some(symcere_cross_modal(g.rows(), t.rows(), &mask, tau)?)
            }
            LossVariant::Infonce => Some(infonce_cross_modal(g.rows(), t.rows(), tau)?),
            LossVariant::None => None,
        };
        let intra: Option<(Sphere, Sphere, ContrastiveOutput, ContrastiveOutput)> = match &aug {
            Some(a) => {
                let g2 = Sphere::new(
                    interaction_reprs(a.nodes.view(), nu, &pairs),
                    lc.normalize,
                    "augmented interaction representation",
                )?;
                let t2 = Sphere::new(project_text(head, a.text.view())?, lc.normalize, "augmented projected text")?;
                let lg = infonce_intra(g.rows(), g2.rows(), tau)?;
                let lt = infonce_intra(t.rows(), t2.rows(), tau)?;
                Some((g2, t2, lg, lt))
            }
            None => None,
        };
        let full = if use_bpr {
            Some(Sphere::new(nodes.clone(), lc.normalize, "node embedding")?)
        } else {
            None
        };
        let bpr = match &full {
            Some(f) => Some(bpr_loss(f.rows(), nu, &triples, &self.train.history)?),
            None => None,
        };

        let components = LossComponents {
            cross_modal: cross.as_ref().map_or(0.0, |c| c.loss),
            intra_modal: intra.as_ref().map_or(0.0, |(_, _, lg, lt)| lg.loss + lt.loss),
            bpr: bpr.as_ref().map_or(0.0, |b| b.loss),
            param_sq_norm: self.params.sq_norm(),
        };
        let total = total_loss(&components, &w)?;
        if !want_grads {
            return Ok((components, total, None));
        }

        let shape = g.rows().dim();
        let mut dg = Array2::<f64>::zeros(shape);
        let mut dt = Array2::<f64>::zeros(t.rows().dim());
        if let Some(c) = &cross {
            dg += &c.grad_anchor;
            dt += &c.grad_candidate;
        }
        if let Some((_, _, lg, lt)) = &intra {
            dg.scaled_add(w.alpha, &lg.grad_anchor);
            dt.scaled_add(w.alpha, &lt.grad_anchor);
        }
        let dg = g.backward(dg);
        let dt = t.backward(dt);
        let mut d_nodes = Array2::<f64>::zeros(nodes.dim());
        interaction_reprs_backward(&mut d_nodes, nu, &pairs, dg.view());
        if let (Some(f), Some(b)) = (&full, bpr) {
            d_nodes.scaled_add(w.beta, &f.backward(b.grad));
        }
        let graph_grads = encode_backward(graph, &self.adjacency, &state, d_nodes.view())?;
        let (dw, db) = projection_backward(text_b.view(), dt.view());
        let mut grads = ModelParams {
            graph: GraphParams {
                base: graph_grads.base,
                num_layers: graph.num_layers,
                layer_weights: graph.layer_weights.clone(),
                ngcf: graph_grads.ngcf,
            },
            projection: ProjectionHead { weight: dw, bias: db },
        };
        if let (Some(a), Some((g2, t2, lg, lt))) = (&aug, intra) {
            let dg2 = g2.backward(lg.grad_candidate * w.alpha);
            let dt2 = t2.backward(lt.grad_candidate * w.alpha);
            let mut d_nodes2 = Array2::<f64>::zeros(a.nodes.dim());
            interaction_reprs_backward(&mut d_nodes2, nu, &pairs, dg2.view());
            let gg2 = encode_backward(graph, &a.adjacency, &a.state, d_nodes2.view())?;
            let (dw2, db2) = projection_backward(a.text.view(), dt2.view());
            let other = ModelParams {
                graph: GraphParams {
                    base: gg2.base,
                    num_layers: graph.num_layers,
                    layer_weights: graph.layer_weights.clone(),
                    ngcf: gg2.ngcf,
                },
                projection: ProjectionHead { weight: dw2, bias: db2 },
            };
            grads.add_scaled(&other, 1.0);
        }
        grads.add_scaled(&self.params, 2.0 * w.reg);
        Ok((components, total, Some(grads)))
    }
}

/// What [`fit`] did.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitOutcome {
    pub history: Vec<EpochLosses>,
    /// `(epoch, score)` for every evaluation.
    pub evaluations: Vec<(u64, f64)>,
    pub best_epoch: Option<u64>,
    pub best_score: Option<f64>,
    pub stopped_early: bool,
}

/// Trains up to the configured epoch count. Every `eval_every` epochs the
/// caller's `evaluate` scores the model (higher is better); after `patience`
/// evaluations without improvement training stops, and the best evaluated
/// state is restored at the end.
pub fn fit(
    trainer: &mut Trainer,
    mut on_epoch: impl FnMut(&EpochLosses),
    mut evaluate: impl FnMut(&Trainer) -> Result<f64>,
) -> Result<FitOutcome> {
    let cfg = trainer.config.train.clone();
    let mut out = FitOutcome::default();
    let mut best: Option<(f64, Checkpoint)> = None;
    let mut stale = 0usize;
    while (trainer.epoch as usize) < cfg.epochs {
        let losses = trainer.train_epoch()?;
        on_epoch(&losses);
        out.history.push(losses);
        if cfg.eval_every == 0 || trainer.epoch % cfg.eval_every as u64 != 0 {
            continue;
        }
        let score = evaluate(trainer)?;
        out.evaluations.push((trainer.epoch, score));
        if best.as_ref().is_none_or(|(b, _)| score > *b) {
            best = Some((score, trainer.checkpoint()));
            stale = 0;
        } else {
            stale += 1;
            if cfg.patience > 0 && stale >= cfg.patience {
                out.stopped_early = true;
                break;
            }
        }
    }
    if let Some((score, ck)) = best {
        out.best_epoch = Some(ck.epoch);
        out.best_score = Some(score);
        trainer.params = ck.params;
        trainer.adam = ck.adam;
        trainer.epoch = ck.epoch;
    }
    Ok(out)
}
