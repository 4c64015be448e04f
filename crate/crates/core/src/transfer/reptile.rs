//! SF-Reptile meta-initialization and MLRW adaptive regression weights.
//!
//! Both strategies alternate inner-task Adam updates U(theta) with per-layer
//! outer interpolation `theta_p <- eps_p * U(theta_p) + (1 - eps_p) *
//! theta_p`. The eps vector assigns each layer its own outer step: small
//! values keep a layer slow and stable, large values let it track the most
//! recent task.
//!
//! Seed-derivation contract (inner trajectories are reproducible from it):
//!
//! - sf-reptile: meta nets from (seed, "meta"), then per component
//!   (meta-seed, "comp", c); inner batches from (seed, "sf-inner", outer, i);
//!   evaluation re-adaptation from (seed, "sf-eval", i).
//! - mlrw: net from (seed, "mlrw-init"); inner batches from
//!   (seed, "mlrw-inner", outer, i, j); evaluation adaptation from
//!   (seed, "mlrw-adapt", i, j).

use rand::seq::SliceRandom;

use super::{
    y_step_targets, BaseLearnerKind, CateModel, ExperimentCollection, ExperimentView, ModelMeta,
    Regressor, TransferSpec,
};
use crate::error::{Error, Result};
use crate::learners::output_kind_for;
use crate::matrix::Matrix;
use crate::nn::train::sample_batch;
use crate::nn::{
    adam_step, interpolate_params, AdamParams, AdamState, Batch, DenseNetwork, OutputKind,
};
use crate::seed::{rng_from_seed, sample_without_replacement, Prng};
use crate::seed_of;
use rand::Rng;

/// The component networks of one task: per-arm nets for T, one (X, W) net
/// for S, the three Y-learner nets for Y.
#[derive(Debug, Clone)]
pub struct TaskNets {
    pub kind: BaseLearnerKind,
    pub nets: Vec<DenseNetwork>,
}

impl TaskNets {
    pub fn init(
        kind: BaseLearnerKind,
        arch: &crate::learners::NetArch,
        n_features: usize,
        outcome: crate::data::OutcomeKind,
        seed: u64,
    ) -> Result<Self> {
        let build = |c: usize, input_dim: usize, output: OutputKind| -> Result<DenseNetwork> {
            let cfg = arch.to_network_config(input_dim, output);
            let mut rng = rng_from_seed(seed_of!(seed, "comp", c));
            DenseNetwork::new(&cfg, &mut rng)
        };
        let output = output_kind_for(outcome);
        let nets = match kind {
            BaseLearnerKind::T => vec![build(0, n_features, output)?, build(1, n_features, output)?],
            BaseLearnerKind::S => vec![build(0, n_features + 1, output)?],
            BaseLearnerKind::Y => (0..3)
                .map(|c| build(c, n_features, OutputKind::Identity))
                .collect::<Result<_>>()?,
        };
        Ok(TaskNets { kind, nets })
    }

    pub fn predict_tau(&self, x: &Matrix) -> Result<Vec<f64>> {
        match self.kind {
            BaseLearnerKind::T => {
                let p0 = self.nets[0].forward(x)?;
                let p1 = self.nets[1].forward(x)?;
                Ok(p1.iter().zip(&p0).map(|(a, b)| a - b).collect())
            }
            BaseLearnerKind::S => {
                let ones = self.nets[0].forward(&x.with_appended_column(&vec![1.0; x.rows()])?)?;
                let zeros = self.nets[0].forward(&x.with_appended_column(&vec![0.0; x.rows()])?)?;
                Ok(ones.iter().zip(&zeros).map(|(a, b)| a - b).collect())
            }
            BaseLearnerKind::Y => self.nets[2].forward(x),
        }
    }

    pub fn to_model(&self, meta: ModelMeta) -> CateModel {
        match self.kind {
            BaseLearnerKind::T => CateModel::T {
                mu0: Regressor::Net(self.nets[0].clone()),
                mu1: Regressor::Net(self.nets[1].clone()),
                meta,
            },
            BaseLearnerKind::S => CateModel::S {
                mu: Regressor::Net(self.nets[0].clone()),
                meta,
            },
            BaseLearnerKind::Y => CateModel::Y {
                tau: self.nets[2].clone(),
                meta,
            },
        }
    }
}

/// Inner-loop trainer: task nets plus fresh Adam state per component.
pub struct TaskAdapter {
    pub nets: TaskNets,
    states: Vec<AdamState>,
}

impl TaskAdapter {
    pub fn new(nets: TaskNets, adam: AdamParams) -> Result<Self> {
        let states = nets
            .nets
            .iter()
            .map(|n| AdamState::new(n, adam))
            .collect::<Result<_>>()?;
        Ok(TaskAdapter { nets, states })
    }

    /// One inner iteration: every component takes one Adam step on a fresh
    /// minibatch from its arm (T), the pooled augmented data (S), or the
    /// cross-imputed targets (Y).
    pub fn step(&mut self, view: &ExperimentView, batch_size: usize, rng: &mut Prng) -> Result<()> {
        match self.nets.kind {
            BaseLearnerKind::T => {
                let b0 = sample_batch(&view.x0, &view.y0, batch_size, rng);
                let b1 = sample_batch(&view.x1, &view.y1, batch_size, rng);
                for (c, batch) in [b0, b1].into_iter().enumerate() {
                    let g = self.nets.nets[c].backward(&batch)?;
                    adam_step(&mut self.nets.nets[c], &mut self.states[c], &g)?;
                }
            }
            BaseLearnerKind::S => {
                let batch = sample_batch(&view.x_aug, &view.data.y_obs, batch_size, rng);
                let g = self.nets.nets[0].backward(&batch)?;
                adam_step(&mut self.nets.nets[0], &mut self.states[0], &g)?;
            }
            BaseLearnerKind::Y => {
                let n = view.data.n_units();
                let take = batch_size.min(n).max(1);
                let idx: Vec<usize> = (0..take).map(|_| rng.random_range(0..n)).collect();
                let x = view.data.x.select_rows(&idx);
                let w: Vec<u8> = idx.iter().map(|&i| view.data.w[i]).collect();
                let y: Vec<f64> = idx.iter().map(|&i| view.data.y_obs[i]).collect();
                let p_mu0 = self.nets.nets[0].forward(&x)?;
                let p_mu1 = self.nets.nets[1].forward(&x)?;
                let p_tau = self.nets.nets[2].forward(&x)?;
                let targets = y_step_targets(&w, &y, &p_mu0, &p_mu1, &p_tau);
                for (c, t) in targets.into_iter().enumerate() {
                    let batch = Batch::new(x.clone(), t)?;
                    let g = self.nets.nets[c].backward(&batch)?;
                    adam_step(&mut self.nets.nets[c], &mut self.states[c], &g)?;
                }
            }
        }
        Ok(())
    }

    pub fn train(
        &mut self,
        view: &ExperimentView,
        iters: usize,
        batch_size: usize,
        rng: &mut Prng,
    ) -> Result<()> {
        for _ in 0..iters {
            self.step(view, batch_size, rng)?;
        }
        Ok(())
    }
}

/// Runs `iters` minibatch Adam steps of plain regression on (x, y).
pub fn adapt_regression(
    net: &mut DenseNetwork,
    x: &Matrix,
    y: &[f64],
    iters: usize,
    batch_size: usize,
    adam: AdamParams,
    rng: &mut Prng,
) -> Result<()> {
    let mut state = AdamState::new(net, adam)?;
    for _ in 0..iters {
        let batch = sample_batch(x, y, batch_size, rng);
        let g = net.backward(&batch)?;
        adam_step(net, &mut state, &g)?;
    }
    Ok(())
}

fn experiment_order(n: usize, shuffle: bool, seed: u64, outer: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    if shuffle {
        let mut rng = rng_from_seed(seed_of!(seed, "sf-order", outer));
        order.shuffle(&mut rng);
    }
    order
}

/// The SF-Reptile meta-training loop; returns the meta-initialization.
pub fn sf_reptile_meta_nets(
    collection: &ExperimentCollection,
    spec: &TransferSpec,
    seed: u64,
) -> Result<(TaskNets, Vec<ExperimentView>)> {
    collection.require(2, "sf-reptile")?;
    spec.validate()?;
    let views: Vec<ExperimentView> = (0..collection.n_experiments())
        .map(|i| ExperimentView::new(collection.train_data(i)))
        .collect::<Result<_>>()?;
    let mut meta = TaskNets::init(
        spec.base_learner,
        &spec.arch,
        collection.n_features(),
        collection.outcome(),
        seed_of!(seed, "meta"),
    )?;
    let eps = spec.eps();
    for outer in 0..spec.outer_iters {
        for i in experiment_order(
            collection.n_experiments(),
            spec.shuffle_experiments,
            seed,
            outer,
        ) {
            if spec.inner_iters == 0 {
                // U is the identity; the interpolation endpoint equals the
                // current parameters, so skip the update entirely to keep
                // them bit-identical.
                continue;
            }
            let mut inner = TaskAdapter::new(meta.clone(), spec.train.adam)?;
            let mut rng = rng_from_seed(seed_of!(seed, "sf-inner", outer, i));
            inner.train(&views[i], spec.inner_iters, spec.train.batch_size, &mut rng)?;
            for c in 0..meta.nets.len() {
                meta.nets[c] = interpolate_params(&meta.nets[c], &inner.nets.nets[c], &eps)?;
            }
        }
    }
    Ok((meta, views))
}

/// SF-Reptile: meta-trains an initialization across all experiments, then
/// re-adapts it per experiment and returns the adapted models.
pub fn run_sf_reptile(
    collection: &ExperimentCollection,
    spec: &TransferSpec,
    seed: u64,
) -> Result<Vec<CateModel>> {
    let (meta, views) = sf_reptile_meta_nets(collection, spec, seed)?;
    (0..collection.n_experiments())
        .map(|i| {
            let mut adapted = TaskAdapter::new(meta.clone(), spec.train.adam)?;
            let mut rng = rng_from_seed(seed_of!(seed, "sf-eval", i));
            adapted.train(&views[i], spec.inner_iters, spec.train.batch_size, &mut rng)?;
            Ok(adapted.nets.to_model(ModelMeta {
                seed,
                train_size: views[i].data.n_units(),
                steps: spec.outer_iters * spec.inner_iters,
            }))
        })
        .collect()
}

/// Reports the CATE as treatment minus control. The MLRW evaluation
/// produces one prediction per arm; this fixes the orientation of their
/// difference.
pub fn tau_treatment_minus_control(mu0_hat: &[f64], mu1_hat: &[f64]) -> Vec<f64> {
    mu1_hat.iter().zip(mu0_hat).map(|(a, b)| a - b).collect()
}

/// The MLRW meta-training loop; returns the single meta-learned network.
pub fn mlrw_meta_net(
    collection: &ExperimentCollection,
    spec: &TransferSpec,
    seed: u64,
) -> Result<(DenseNetwork, Vec<ExperimentView>)> {
    collection.require(2, "mlrw")?;
    spec.validate()?;
    let views: Vec<ExperimentView> = (0..collection.n_experiments())
        .map(|i| ExperimentView::new(collection.train_data(i)))
        .collect::<Result<_>>()?;
    let cfg = spec
        .arch
        .to_network_config(collection.n_features(), output_kind_for(collection.outcome()));
    let mut net = {
        let mut rng = rng_from_seed(seed_of!(seed, "mlrw-init"));
        DenseNetwork::new(&cfg, &mut rng)?
    };
    let eps = spec.eps();
    for outer in 0..spec.outer_iters {
        for (i, view) in views.iter().enumerate() {
            for j in 0..2usize {
                if spec.inner_iters == 0 {
                    continue;
                }
                let (x, y) = if j == 0 {
                    (&view.x0, &view.y0)
                } else {
                    (&view.x1, &view.y1)
                };
                let mut u = net.clone();
                let mut rng = rng_from_seed(seed_of!(seed, "mlrw-inner", outer, i, j));
                adapt_regression(
                    &mut u,
                    x,
                    y,
                    spec.inner_iters,
                    spec.train.batch_size,
                    spec.train.adam,
                    &mut rng,
                )?;
                net = interpolate_params(&net, &u, &eps)?;
            }
        }
    }
    Ok((net, views))
}

/// MLRW: one meta-learned regression network. At evaluation it adapts to
/// each arm in turn from `adaptation_samples` training units, predicts both
/// response surfaces on the experiment's test units, and reports their
/// difference.
pub fn run_mlrw(
    collection: &ExperimentCollection,
    spec: &TransferSpec,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let (net, views) = mlrw_meta_net(collection, spec, seed)?;
    let mut out = Vec::with_capacity(collection.n_experiments());
    for (i, view) in views.iter().enumerate() {
        let test_x = collection.test_data(i).x;
        let mut mu_hat: Vec<Vec<f64>> = Vec::with_capacity(2);
        for j in 0..2usize {
            let (x, y) = if j == 0 {
                (&view.x0, &view.y0)
            } else {
                (&view.x1, &view.y1)
            };
            if spec.adaptation_samples > x.rows() {
                return Err(Error::config(format!(
                    "adaptation_samples {} exceeds arm {j} size {}",
                    spec.adaptation_samples,
                    x.rows()
                )));
            }
            let mut rng = rng_from_seed(seed_of!(seed, "mlrw-adapt", i, j));
            let pick = sample_without_replacement(x.rows(), spec.adaptation_samples, &mut rng);
            let ax = x.select_rows(&pick);
            let ay: Vec<f64> = pick.iter().map(|&r| y[r]).collect();
            let mut adapted = net.clone();
            adapt_regression(
                &mut adapted,
                &ax,
                &ay,
                spec.inner_iters,
                spec.train.batch_size,
                spec.train.adam,
                &mut rng,
            )?;
            mu_hat.push(adapted.forward(&test_x)?);
        }
        out.push(tau_treatment_minus_control(&mu_hat[0], &mu_hat[1]));
    }
    Ok(out)
}
