//! Adam optimizer with bias correction.

use serde::{Deserialize, Serialize};

use super::{DenseNetwork, Gradients, LayerParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamParams {
    fn validate(&self) -> Result<()> {
        let ok = self.lr > 0.0
            && self.eps > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && self.beta1 > 0.0
            && (0.0..1.0).contains(&self.beta2)
            && self.beta2 > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::config("adam hyperparameters out of range"))
        }
    }
}

/// First/second moment estimates, one buffer per parameter.
#[derive(Debug, Clone)]
pub struct AdamState {
    first_moment: Vec<LayerParams>,
    second_moment: Vec<LayerParams>,
    step_count: u64,
    params: AdamParams,
}

impl AdamState {
    pub fn new(net: &DenseNetwork, params: AdamParams) -> Result<Self> {
        params.validate()?;
        let zeros = || -> Vec<LayerParams> {
            net.layers()
                .iter()
                .map(|l| LayerParams::zeros(l.out_dim(), l.in_dim()))
                .collect()
        };
        Ok(AdamState {
            first_moment: zeros(),
            second_moment: zeros(),
            step_count: 0,
            params,
        })
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn params(&self) -> AdamParams {
        self.params
    }

    /// Adjusts the learning rate mid-run, keeping moments and step count.
    pub fn set_lr(&mut self, lr: f64) {
        self.params.lr = lr;
    }
}

/// One Adam update: standard recurrence with bias correction.
///
/// m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2;
/// theta <- theta - lr * m_hat / (sqrt(v_hat) + eps).
pub fn adam_step(net: &mut DenseNetwork, state: &mut AdamState, grads: &Gradients) -> Result<()> {
    if grads.layers.len() != net.num_layers() || state.first_moment.len() != net.num_layers() {
        return Err(Error::dim(
            net.num_layers(),
            grads.layers.len(),
            "adam gradient layers",
        ));
    }
    for (l, g) in grads.layers.iter().enumerate() {
        let p = &net.layers()[l];
        if g.out_dim() != p.out_dim() || g.in_dim() != p.in_dim() {
            return Err(Error::dim(p.out_dim(), g.out_dim(), "adam layer shape"));
        }
    }
    state.step_count += 1;
    let t = state.step_count as i32;
    let AdamParams {
        lr,
        beta1,
        beta2,
        eps,
    } = state.params;
    let bc1 = 1.0 - beta1.powi(t);
    let bc2 = 1.0 - beta2.powi(t);

    for l in 0..net.num_layers() {
        let g = &grads.layers[l];
        let m = &mut state.first_moment[l];
        let v = &mut state.second_moment[l];
        let layer = &mut net.layers_mut()[l];

        let update = |theta: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *theta -= lr * m_hat / (v_hat.sqrt() + eps);
        };

        for ((theta, m), (v, &g)) in layer
            .weights
            .as_mut_slice()
            .iter_mut()
            .zip(m.weights.as_mut_slice())
            .zip(
                v.weights
                    .as_mut_slice()
                    .iter_mut()
                    .zip(g.weights.as_slice()),
            )
        {
            update(theta, m, v, g);
        }
        for ((theta, m), (v, &g)) in layer
            .bias
            .iter_mut()
            .zip(m.bias.iter_mut())
            .zip(v.bias.iter_mut().zip(&g.bias))
        {
            update(theta, m, v, g);
        }
    }
    net.check_finite()
}
