//! Training loop (Adam, seeded shuffling, divergence guard) and the
//! finite-difference gradient checker.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::autograd::{NodeId, Tape};
use super::model::{ModelConfig, ScorerModel};
use super::FeatureSequence;
use crate::timeline::FrameLabels;
use crate::{Error, Result};

/// Weights of the three loss terms plus the triplet margin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub w_as: f64,
    pub w_triplet: f64,
    pub w_kl: f64,
    pub margin: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights { w_as: 1.0, w_triplet: 1.0, w_kl: 1.0, margin: 1.0 }
    }
}

/// Training hyperparameters. Defaults: Adam at learning rate 1e-4,
/// unweighted loss sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub weights: LossWeights,
    pub model: ModelConfig,
}

impl TrainConfig {
    pub fn new(model: ModelConfig, seed: u64) -> Self {
        TrainConfig {
            learning_rate: 1e-4,
            epochs: 10,
            batch_size: 8,
            seed,
            weights: LossWeights::default(),
            model,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::parameter("learning rate must be > 0"));
        }
        let w = &self.weights;
        if w.w_as < 0.0 || w.w_triplet < 0.0 || w.w_kl < 0.0 {
            return Err(Error::parameter("loss weights must be >= 0"));
        }
        if self.epochs == 0 {
            return Err(Error::parameter("epochs must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::parameter("batch size must be >= 1"));
        }
        Ok(())
    }
}

/// Result of a training run: the model, the per-epoch mean loss, and
/// whether the run was cut short by a non-finite loss. On divergence the
/// model is the last parameter set that produced a finite epoch loss.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ScorerModel,
    pub curve: Vec<f64>,
    pub diverged: bool,
}

/// Builds the weighted total-loss graph for one video on `tape`.
///
/// Terms with zero weight are omitted entirely, so a run with
/// `w_triplet = w_kl = 0` is *exactly* plain cross-entropy training. The
/// triplet and KL terms exist only when the memory banks are enabled, and
/// the KL term additionally needs at least two frames.
pub(crate) fn loss_graph(
    tape: &mut Tape,
    model: &ScorerModel,
    features: &Array2<f64>,
    labels: &FrameLabels,
    weights: &LossWeights,
) -> Result<(NodeId, Vec<NodeId>)> {
    if features.nrows() != labels.len() {
        return Err(Error::Shape {
            expected: format!("{} labels", features.nrows()),
            actual: format!("{} labels", labels.len()),
        });
    }
    let fwd = model.forward(tape, features)?;
    let bce = tape.bce_mean(fwd.scores, &labels.labels);
    let mut total = tape.scale(bce, weights.w_as);

    if let (Some(rn), Some(ra)) = (fwd.normal_read, fwd.abnormal_read) {
        let take_abnormal: Vec<bool> = labels.labels.iter().map(|&l| l == 1).collect();
        if weights.w_triplet > 0.0 {
            let positive = tape.select_rows(rn, ra, take_abnormal.clone());
            let negative = tape.select_rows(ra, rn, take_abnormal);
            let trip = tape.triplet_mean(fwd.encoding, positive, negative, weights.margin);
            let trip = tape.scale(trip, weights.w_triplet);
            total = tape.add(total, trip);
        }
        if weights.w_kl > 0.0 && labels.len() >= 2 {
            let kl = tape.kl_std_normal(rn);
            let kl = tape.scale(kl, weights.w_kl);
            total = tape.add(total, kl);
        }
    }
    Ok((total, fwd.param_ids))
}

struct Adam {
    m: Vec<Array2<f64>>,
    v: Vec<Array2<f64>>,
    t: u64,
    lr: f64,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(params: &[Array2<f64>], lr: f64) -> Self {
        Adam {
            m: params.iter().map(|p| Array2::zeros(p.raw_dim())).collect(),
            v: params.iter().map(|p| Array2::zeros(p.raw_dim())).collect(),
            t: 0,
            lr,
        }
    }

    fn step(&mut self, params: &mut [Array2<f64>], grads: &[Array2<f64>]) {
        self.t += 1;
        let bc1 = 1.0 - Self::BETA1.powi(self.t as i32);
        let bc2 = 1.0 - Self::BETA2.powi(self.t as i32);
        for ((p, g), (m, v)) in
            params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(&mut self.v))
        {
            *m = &*m * Self::BETA1 + &(g * (1.0 - Self::BETA1));
            *v = &*v * Self::BETA2 + &(g.mapv(|x| x * x) * (1.0 - Self::BETA2));
            let update = (&*m / bc1) / &((&*v / bc2).mapv(f64::sqrt) + Self::EPS);
            *p -= &(update * self.lr);
        }
    }
}

/// Trains a scorer on frame-labelled feature sequences.
///
/// Deterministic given the seed: initialization, per-epoch shuffle order,
/// and batch accumulation are all fixed. If an epoch's mean loss goes
/// non-finite the run stops and returns the parameters from the end of the
/// last finite epoch with `diverged = true`.
pub fn train(dataset: &[(FeatureSequence, FrameLabels)], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::validation("empty training set"));
    }
    for (f, l) in dataset {
        if f.features.nrows() != l.len() {
            return Err(Error::Shape {
                expected: format!("{}: {} labels", f.video, f.features.nrows()),
                actual: format!("{} labels", l.len()),
            });
        }
    }

    let mut model = ScorerModel::init(cfg.model.clone(), cfg.seed)?;
    let mut adam = Adam::new(&model.params, cfg.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut curve = Vec::with_capacity(cfg.epochs);
    let mut last_finite = model.params.clone();

    for _epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..dataset.len()).collect();
        order.shuffle(&mut rng);

        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut grads: Vec<Array2<f64>> =
                model.params.iter().map(|p| Array2::zeros(p.raw_dim())).collect();
            for &idx in batch {
                let (f, l) = &dataset[idx];
                let mut tape = Tape::new();
                let (root, param_ids) =
                    loss_graph(&mut tape, &model, &f.features, l, &cfg.weights)?;
                epoch_loss += tape.scalar(root);
                tape.backward(root);
                for (acc, &id) in grads.iter_mut().zip(&param_ids) {
                    *acc += tape.grad(id);
                }
            }
            let scale = 1.0 / batch.len() as f64;
            for g in &mut grads {
                *g *= scale;
            }
            adam.step(&mut model.params, &grads);
        }
        epoch_loss /= dataset.len() as f64;
        curve.push(epoch_loss);

        if !epoch_loss.is_finite() || model.params.iter().any(|p| p.iter().any(|x| !x.is_finite()))
        {
            model.params = last_finite;
            return Ok(TrainOutcome { model, curve, diverged: true });
        }
        last_finite = model.params.clone();
    }
    Ok(TrainOutcome { model, curve, diverged: false })
}

/// Compares the analytic gradient of the total loss against central finite
/// differences (h = 1e-5) over every parameter entry; returns the maximum
/// relative error `|ga - gn| / max(|ga|, |gn|, 1e-6)`.
pub fn grad_check(
    model: &ScorerModel,
    features: &Array2<f64>,
    labels: &FrameLabels,
    weights: &LossWeights,
) -> Result<f64> {
    let mut tape = Tape::new();
    let (root, param_ids) = loss_graph(&mut tape, model, features, labels, weights)?;
    tape.backward(root);
    let analytic: Vec<Array2<f64>> =
        param_ids.iter().map(|&id| tape.grad(id).clone()).collect();

    let h = 1e-5;
    let mut max_rel = 0.0f64;
    let mut probe = model.clone();
    for (pi, analytic_p) in analytic.iter().enumerate() {
        for i in 0..model.params[pi].nrows() {
            for j in 0..model.params[pi].ncols() {
                let base = model.params[pi][[i, j]];
                probe.params[pi][[i, j]] = base + h;
                let mut t1 = Tape::new();
                let (r1, _) = loss_graph(&mut t1, &probe, features, labels, weights)?;
                probe.params[pi][[i, j]] = base - h;
                let mut t2 = Tape::new();
                let (r2, _) = loss_graph(&mut t2, &probe, features, labels, weights)?;
                probe.params[pi][[i, j]] = base;

                let numeric = (t1.scalar(r1) - t2.scalar(r2)) / (2.0 * h);
                let ga = analytic_p[[i, j]];
                let rel = (ga - numeric).abs() / ga.abs().max(numeric.abs()).max(1e-6);
                max_rel = max_rel.max(rel);
            }
        }
    }
    Ok(max_rel)
}
