//! X-learner: two-stage estimation with a weighting function g.
//!
//! Stage 1 fits the response functions per arm. Stage 2 regresses imputed
//! individual effects on the covariates, separately for treated and control
//! units. The final estimate blends the two stage-2 regressors:
//! `tau(x) = g(x) tau0(x) + (1 - g(x)) tau1(x)`.

use serde::{Deserialize, Serialize};

use super::{fit_regressor, output_kind_for, CateModel, LearnerConfig, ModelMeta, Regressor};
use crate::data::ExperimentData;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::OutputKind;
use crate::seed_of;

/// How to build the weighting function g.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum XWeightingSpec {
    /// g is the empirical treated fraction, a constant.
    #[default]
    TreatedFraction,
    Constant { value: f64 },
    /// g(x) is a logistic network fit to predict treatment from covariates.
    PropensityNet,
}

/// The fitted weighting function.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum XWeighting {
    Constant(f64),
    Propensity(Box<Regressor>),
}

impl XWeighting {
    pub fn constant(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::config(format!("g = {value} outside [0,1]")));
        }
        Ok(XWeighting::Constant(value))
    }

    /// g(x) per row of `x`, always in [0,1].
    pub fn weights(&self, x: &Matrix) -> Result<Vec<f64>> {
        match self {
            XWeighting::Constant(g) => Ok(vec![*g; x.rows()]),
            XWeighting::Propensity(net) => {
                let mut g = net.predict(x)?;
                for v in &mut g {
                    *v = v.clamp(0.0, 1.0);
                }
                Ok(g)
            }
        }
    }
}

/// Imputed individual treatment effects from the stage-1 fits:
/// `D0_i = mu1_hat(X0_i) - Y0_i` for control units and
/// `D1_i = Y1_i - mu0_hat(X1_i)` for treated units.
pub fn x_imputed_effects(
    data: &ExperimentData,
    mu0_hat: &Regressor,
    mu1_hat: &Regressor,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (x0, y0) = data.arm_data(0)?;
    let (x1, y1) = data.arm_data(1)?;
    let mu1_on_control = mu1_hat.predict(&x0)?;
    let mu0_on_treated = mu0_hat.predict(&x1)?;
    let d0 = mu1_on_control
        .iter()
        .zip(&y0)
        .map(|(m, y)| m - y)
        .collect();
    let d1 = y1
        .iter()
        .zip(&mu0_on_treated)
        .map(|(y, m)| y - m)
        .collect();
    Ok((d0, d1))
}

/// Fits the X-learner. The default weighting is the treated fraction.
pub fn fit_x_learner(
    data: &ExperimentData,
    cfg: &LearnerConfig,
    weighting: XWeightingSpec,
    seed: u64,
) -> Result<CateModel> {
    let (x0, y0) = data.arm_data(0)?;
    let (x1, y1) = data.arm_data(1)?;
    let output = output_kind_for(data.outcome);

    let (mu0_hat, st0) = fit_regressor(
        &x0,
        &y0,
        &cfg.base,
        output,
        &cfg.train,
        seed_of!(seed, "stage1", 0u64),
    )?;
    let (mu1_hat, st1) = fit_regressor(
        &x1,
        &y1,
        &cfg.base,
        output,
        &cfg.train,
        seed_of!(seed, "stage1", 1u64),
    )?;

    let (d0, d1) = x_imputed_effects(data, &mu0_hat, &mu1_hat)?;

    // Stage 2 regresses effect-scale targets; always identity output.
    let (tau0, st2) = fit_regressor(
        &x0,
        &d0,
        &cfg.base,
        OutputKind::Identity,
        &cfg.train,
        seed_of!(seed, "stage2", 0u64),
    )?;
    let (tau1, st3) = fit_regressor(
        &x1,
        &d1,
        &cfg.base,
        OutputKind::Identity,
        &cfg.train,
        seed_of!(seed, "stage2", 1u64),
    )?;

    let weighting = match weighting {
        XWeightingSpec::TreatedFraction => XWeighting::constant(data.treated_fraction())?,
        XWeightingSpec::Constant { value } => XWeighting::constant(value)?,
        XWeightingSpec::PropensityNet => {
            let w_targets: Vec<f64> = data.w.iter().map(|&w| w as f64).collect();
            let (prop, _) = fit_regressor(
                &data.x,
                &w_targets,
                &cfg.base,
                OutputKind::Logistic,
                &cfg.train,
                seed_of!(seed, "propensity"),
            )?;
            XWeighting::Propensity(Box::new(prop))
        }
    };

    Ok(CateModel::X {
        tau0,
        tau1,
        weighting,
        meta: ModelMeta {
            seed,
            train_size: data.n_units(),
            steps: st0 + st1 + st2 + st3,
        },
    })
}
