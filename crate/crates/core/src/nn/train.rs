//! Minibatch regression training loop with plateau-based early stopping.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{adam_step, AdamParams, AdamState, Batch, DenseNetwork, Gradients};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::loss_mse;
use crate::seed::Prng;

/// Stop when the best full-data loss has not improved by a relative
/// `min_rel_improvement` over `window_checks` consecutive checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateauConfig {
    pub check_every: usize,
    pub window_checks: usize,
    pub min_rel_improvement: f64,
}

impl Default for PlateauConfig {
    fn default() -> Self {
        PlateauConfig {
            check_every: 100,
            window_checks: 5,
            min_rel_improvement: 1e-5,
        }
    }
}

/// Learning-rate schedule across training steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum LrSchedule {
    Constant,
    /// Multiply the rate by `factor` every `every` steps. Used to drive
    /// linear-base fits to tight convergence.
    StepDecay { every: usize, factor: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_steps: usize,
    pub batch_size: usize,
    pub adam: AdamParams,
    pub schedule: LrSchedule,
    pub plateau: Option<PlateauConfig>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_steps: 10_000,
            batch_size: 64,
            adam: AdamParams::default(),
            schedule: LrSchedule::Constant,
            plateau: Some(PlateauConfig::default()),
        }
    }
}

impl TrainConfig {
    pub fn with_max_steps(mut self, steps: usize) -> Self {
        self.max_steps = steps;
        self
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TrainReport {
    pub steps: usize,
    pub final_loss: f64,
}

/// Samples a minibatch of row indices with replacement.
pub fn sample_batch(x: &Matrix, y: &[f64], batch_size: usize, rng: &mut Prng) -> Batch {
    let n = x.rows();
    let take = batch_size.min(n).max(1);
    let mut rows = Matrix::zeros(take, x.cols());
    let mut targets = vec![0.0; take];
    for b in 0..take {
        let i = rng.random_range(0..n);
        rows.row_mut(b).copy_from_slice(x.row(i));
        targets[b] = y[i];
    }
    Batch {
        inputs: rows,
        targets,
    }
}

/// Trains `net` to regress `y` on `x` by minibatch Adam.
pub fn train_regression(
    net: &mut DenseNetwork,
    x: &Matrix,
    y: &[f64],
    cfg: &TrainConfig,
    rng: &mut Prng,
) -> Result<TrainReport> {
    if x.rows() == 0 {
        return Err(Error::EmptyInput("training data"));
    }
    if x.rows() != y.len() {
        return Err(Error::dim(x.rows(), y.len(), "training targets"));
    }
    if x.cols() != net.input_dim() {
        return Err(Error::dim(net.input_dim(), x.cols(), "training input width"));
    }
    let mut state = AdamState::new(net, cfg.adam)?;
    let mut grads = Gradients::zeros_like(net);
    let mut best = f64::INFINITY;
    let mut checks_since_improvement = 0usize;
    let mut steps = 0usize;

    while steps < cfg.max_steps {
        if let LrSchedule::StepDecay { every, factor } = cfg.schedule {
            if every > 0 && steps > 0 && steps % every == 0 {
                state.set_lr(state.params().lr * factor);
            }
        }
        let batch = sample_batch(x, y, cfg.batch_size, rng);
        net.backward_into(&batch, &mut grads)?;
        adam_step(net, &mut state, &grads)?;
        steps += 1;

        if let Some(p) = cfg.plateau {
            if p.check_every > 0 && steps % p.check_every == 0 {
                let full = loss_mse(&net.forward(x)?, y)?;
                if full < best * (1.0 - p.min_rel_improvement) {
                    best = full;
                    checks_since_improvement = 0;
                } else {
                    best = best.min(full);
                    checks_since_improvement += 1;
                    if checks_since_improvement >= p.window_checks {
                        break;
                    }
                }
            }
        }
    }
    let final_loss = loss_mse(&net.forward(x)?, y)?;
    Ok(TrainReport { steps, final_loss })
}
