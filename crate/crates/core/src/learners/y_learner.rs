//! Y-learner: three jointly trained networks (mu0, mu1, tau) with
//! cross-imputed targets. The tau network is the CATE estimate.
//!
//! One training step on a minibatch (X, W, Y):
//!
//! - control units (W=0): mu0 regresses toward Y; mu1 toward Y + tau(X);
//!   tau toward mu1(X) - Y,
//! - treated units (W=1): mu0 toward Y - tau(X); mu1 toward Y;
//!   tau toward Y - mu0(X).
//!
//! All targets are assembled from pre-step parameters and held fixed while
//! the three networks take one Adam update each, so the update order cannot
//! change the result. Every network uses an identity output: the imputed
//! targets live on the (unbounded) difference scale even when outcomes are
//! binary.

use rand::Rng;

use super::{CateModel, LearnerConfig, ModelMeta, NetArch};
use crate::data::ExperimentData;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::{adam_step, AdamParams, AdamState, Batch, DenseNetwork, OutputKind};
use crate::seed::{rng_from_seed, Prng};
use crate::seed_of;

#[derive(Debug, Clone)]
pub struct YLearnerNets {
    pub mu0: DenseNetwork,
    pub mu1: DenseNetwork,
    pub tau: DenseNetwork,
    adam_mu0: AdamState,
    adam_mu1: AdamState,
    adam_tau: AdamState,
}

impl YLearnerNets {
    pub fn new(arch: &NetArch, input_dim: usize, adam: AdamParams, seed: u64) -> Result<Self> {
        let cfg = arch.to_network_config(input_dim, OutputKind::Identity);
        let build = |tag: &str| -> Result<DenseNetwork> {
            let mut rng = rng_from_seed(seed_of!(seed, "y-net", tag));
            DenseNetwork::new(&cfg, &mut rng)
        };
        let mu0 = build("mu0")?;
        let mu1 = build("mu1")?;
        let tau = build("tau")?;
        let adam_mu0 = AdamState::new(&mu0, adam)?;
        let adam_mu1 = AdamState::new(&mu1, adam)?;
        let adam_tau = AdamState::new(&tau, adam)?;
        Ok(YLearnerNets {
            mu0,
            mu1,
            tau,
            adam_mu0,
            adam_mu1,
            adam_tau,
        })
    }

    /// Builds the three per-unit regression targets from the current
    /// (pre-step) parameters.
    pub fn assemble_targets(
        &self,
        x: &Matrix,
        w: &[u8],
        y: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let p_tau = self.tau.forward(x)?;
        let p_mu0 = self.mu0.forward(x)?;
        let p_mu1 = self.mu1.forward(x)?;
        let n = y.len();
        let mut t_mu0 = vec![0.0; n];
        let mut t_mu1 = vec![0.0; n];
        let mut t_tau = vec![0.0; n];
        for i in 0..n {
            if w[i] == 0 {
                t_mu0[i] = y[i];
                t_mu1[i] = y[i] + p_tau[i];
                t_tau[i] = p_mu1[i] - y[i];
            } else {
                t_mu0[i] = y[i] - p_tau[i];
                t_mu1[i] = y[i];
                t_tau[i] = y[i] - p_mu0[i];
            }
        }
        if ![&t_mu0, &t_mu1, &t_tau]
            .iter()
            .all(|v| v.iter().all(|t| t.is_finite()))
        {
            return Err(Error::NonFinite("y-learner targets"));
        }
        Ok((t_mu0, t_mu1, t_tau))
    }

    /// One joint update on a minibatch.
    pub fn step(&mut self, x: &Matrix, w: &[u8], y: &[f64]) -> Result<()> {
        if x.rows() != w.len() || x.rows() != y.len() {
            return Err(Error::dim(x.rows(), y.len(), "y-learner minibatch"));
        }
        let (t_mu0, t_mu1, t_tau) = self.assemble_targets(x, w, y)?;
        let b_mu0 = Batch::new(x.clone(), t_mu0)?;
        let b_mu1 = Batch::new(x.clone(), t_mu1)?;
        let b_tau = Batch::new(x.clone(), t_tau)?;
        let g = self.mu0.backward(&b_mu0)?;
        adam_step(&mut self.mu0, &mut self.adam_mu0, &g)?;
        let g = self.mu1.backward(&b_mu1)?;
        adam_step(&mut self.mu1, &mut self.adam_mu1, &g)?;
        let g = self.tau.backward(&b_tau)?;
        adam_step(&mut self.tau, &mut self.adam_tau, &g)?;
        Ok(())
    }

    pub fn predict_tau(&self, x: &Matrix) -> Result<Vec<f64>> {
        self.tau.forward(x)
    }

    /// Replaces the optimizer states with fresh ones, e.g. when continuing
    /// training from copied parameters.
    pub fn reset_optimizer(&mut self, adam: AdamParams) -> Result<()> {
        self.adam_mu0 = AdamState::new(&self.mu0, adam)?;
        self.adam_mu1 = AdamState::new(&self.mu1, adam)?;
        self.adam_tau = AdamState::new(&self.tau, adam)?;
        Ok(())
    }
}

/// Runs `steps` Y-learner updates on minibatches drawn from `data`.
pub fn train_y_nets(
    nets: &mut YLearnerNets,
    data: &ExperimentData,
    steps: usize,
    batch_size: usize,
    rng: &mut Prng,
) -> Result<()> {
    for _ in 0..steps {
        let (x, w, y) = sample_unit_batch(data, batch_size, rng);
        nets.step(&x, &w, &y)?;
    }
    Ok(())
}

/// Fits the three Y-learner networks and returns them all.
pub fn fit_y_nets(
    data: &ExperimentData,
    arch: &NetArch,
    train: &crate::nn::train::TrainConfig,
    seed: u64,
) -> Result<YLearnerNets> {
    data.arm_data(0)?;
    data.arm_data(1)?;
    let mut nets = YLearnerNets::new(arch, data.n_features(), train.adam, seed)?;
    let mut rng = rng_from_seed(seed_of!(seed, "y-batches"));
    train_y_nets(&mut nets, data, train.max_steps, train.batch_size, &mut rng)?;
    Ok(nets)
}

/// Samples minibatches of whole units (x, w, y) with replacement.
pub(crate) fn sample_unit_batch(
    data: &ExperimentData,
    batch_size: usize,
    rng: &mut Prng,
) -> (Matrix, Vec<u8>, Vec<f64>) {
    let n = data.n_units();
    let take = batch_size.min(n).max(1);
    let idx: Vec<usize> = (0..take).map(|_| rng.random_range(0..n)).collect();
    let x = data.x.select_rows(&idx);
    let w = idx.iter().map(|&i| data.w[i]).collect();
    let y = idx.iter().map(|&i| data.y_obs[i]).collect();
    (x, w, y)
}

/// Trains a Y-learner for the configured step budget.
///
/// Runs the full budget: the cross-imputed targets move with the
/// parameters, so no plateau rule is applied.
pub fn fit_y_learner(data: &ExperimentData, cfg: &LearnerConfig, seed: u64) -> Result<CateModel> {
    let arch = match &cfg.base {
        super::BaseConfig::Network { arch } => arch.clone(),
        super::BaseConfig::Linear => NetArch {
            hidden: vec![],
            ..NetArch::default()
        },
        super::BaseConfig::Forest { .. } => {
            return Err(Error::config("the y-learner requires a network base"))
        }
    };
    let nets = fit_y_nets(data, &arch, &cfg.train, seed)?;
    Ok(CateModel::Y {
        tau: nets.tau,
        meta: ModelMeta {
            seed,
            train_size: data.n_units(),
            steps: cfg.train.max_steps,
        },
    })
}
