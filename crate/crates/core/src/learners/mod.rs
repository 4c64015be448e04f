//! CATE meta-learners: S, T, X, and Y, over network, linear, or forest bases.
//!
//! Every learner consumes one experiment's observed data and produces a
//! [`CateModel`] exposing `predict_tau`. All fits are deterministic
//! functions of (data, config, seed).

mod x_learner;
mod y_learner;

pub use x_learner::{fit_x_learner, x_imputed_effects, XWeighting, XWeightingSpec};
pub use y_learner::{fit_y_learner, fit_y_nets, train_y_nets, YLearnerNets};

use serde::{Deserialize, Serialize};

use crate::data::{ExperimentData, OutcomeKind};
use crate::error::{Error, Result};
use crate::forest::{fit_forest, Forest, ForestParams};
use crate::matrix::Matrix;
use crate::nn::train::{train_regression, TrainConfig};
use crate::nn::{Activation, DenseNetwork, NetworkConfig, OutputKind};
use crate::seed::rng_from_seed;
use crate::seed_of;

/// Network architecture shared by the learner configs; the output squash is
/// chosen from the outcome kind at fit time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetArch {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub zero_init_output: bool,
}

impl Default for NetArch {
    fn default() -> Self {
        NetArch {
            hidden: vec![64, 64],
            activation: Activation::Elu,
            zero_init_output: false,
        }
    }
}

impl NetArch {
    pub fn to_network_config(&self, input_dim: usize, output: OutputKind) -> NetworkConfig {
        NetworkConfig {
            input_dim,
            hidden: self.hidden.clone(),
            activation: self.activation,
            output,
            zero_init_output: self.zero_init_output,
        }
    }
}

/// Which regression machinery backs a learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum BaseConfig {
    Network { arch: NetArch },
    /// A single affine layer trained through the same optimizer path.
    Linear,
    Forest { params: ForestParams },
}

impl BaseConfig {
    pub fn network_default() -> Self {
        BaseConfig::Network {
            arch: NetArch::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub base: BaseConfig,
    pub train: TrainConfig,
    /// Explicit per-arm seeds for the T-learner; two fits mirror exactly
    /// when these are swapped along with the arms. Derived from the fit
    /// seed when absent.
    pub arm_seeds: Option<(u64, u64)>,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            base: BaseConfig::network_default(),
            train: TrainConfig::default(),
            arm_seeds: None,
        }
    }
}

/// A fitted base regressor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Regressor {
    Net(DenseNetwork),
    Forest(Forest),
}

impl Regressor {
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        match self {
            Regressor::Net(net) => net.forward(x),
            Regressor::Forest(f) => f.predict(x),
        }
    }

    pub fn as_net(&self) -> Option<&DenseNetwork> {
        match self {
            Regressor::Net(n) => Some(n),
            Regressor::Forest(_) => None,
        }
    }
}

/// Fit provenance carried on every model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub seed: u64,
    pub train_size: usize,
    pub steps: usize,
}

/// A fitted CATE estimator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum CateModel {
    T {
        mu0: Regressor,
        mu1: Regressor,
        meta: ModelMeta,
    },
    S {
        mu: Regressor,
        meta: ModelMeta,
    },
    X {
        tau0: Regressor,
        tau1: Regressor,
        weighting: XWeighting,
        meta: ModelMeta,
    },
    Y {
        tau: DenseNetwork,
        meta: ModelMeta,
    },
}

impl CateModel {
    pub fn meta(&self) -> &ModelMeta {
        match self {
            CateModel::T { meta, .. }
            | CateModel::S { meta, .. }
            | CateModel::X { meta, .. }
            | CateModel::Y { meta, .. } => meta,
        }
    }

    /// CATE prediction for each row of `x`.
    pub fn predict_tau(&self, x: &Matrix) -> Result<Vec<f64>> {
        let tau = match self {
            CateModel::T { mu0, mu1, .. } => {
                let p0 = mu0.predict(x)?;
                let p1 = mu1.predict(x)?;
                p1.iter().zip(&p0).map(|(a, b)| a - b).collect()
            }
            CateModel::S { mu, .. } => {
                let treated = x.with_appended_column(&vec![1.0; x.rows()])?;
                let control = x.with_appended_column(&vec![0.0; x.rows()])?;
                let p1 = mu.predict(&treated)?;
                let p0 = mu.predict(&control)?;
                p1.iter().zip(&p0).map(|(a, b)| a - b).collect()
            }
            CateModel::X {
                tau0,
                tau1,
                weighting,
                ..
            } => {
                let g = weighting.weights(x)?;
                let t0 = tau0.predict(x)?;
                let t1 = tau1.predict(x)?;
                // g == 0 and g == 1 reproduce the endpoint estimate exactly.
                g.iter()
                    .zip(t0.iter().zip(&t1))
                    .map(|(&g, (&a, &b))| {
                        if g == 0.0 {
                            b
                        } else if g == 1.0 {
                            a
                        } else {
                            g * a + (1.0 - g) * b
                        }
                    })
                    .collect()
            }
            CateModel::Y { tau, .. } => tau.forward(x)?,
        };
        let tau: Vec<f64> = tau;
        if !tau.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("tau predictions"));
        }
        Ok(tau)
    }
}

/// Serializes a fitted model to pretty JSON, the parameter-snapshot format
/// used for reproducibility dumps.
pub fn model_to_json(model: &CateModel) -> Result<String> {
    serde_json::to_string_pretty(model)
        .map_err(|e| Error::config(format!("model serialization: {e}")))
}

/// Reads a model back from its JSON snapshot.
pub fn model_from_json(text: &str) -> Result<CateModel> {
    serde_json::from_str(text).map_err(|e| Error::config(format!("model parse: {e}")))
}

pub(crate) fn output_kind_for(outcome: OutcomeKind) -> OutputKind {
    match outcome {
        OutcomeKind::Binary => OutputKind::Logistic,
        OutcomeKind::Continuous => OutputKind::Identity,
    }
}

/// Fits one base regressor of `y` on `x`. Returns the regressor and the
/// number of optimizer steps run (0 for forests).
pub fn fit_regressor(
    x: &Matrix,
    y: &[f64],
    base: &BaseConfig,
    output: OutputKind,
    train: &TrainConfig,
    seed: u64,
) -> Result<(Regressor, usize)> {
    match base {
        BaseConfig::Network { arch } => {
            let cfg = arch.to_network_config(x.cols(), output);
            let mut rng = rng_from_seed(seed);
            let mut net = DenseNetwork::new(&cfg, &mut rng)?;
            let report = train_regression(&mut net, x, y, train, &mut rng)?;
            Ok((Regressor::Net(net), report.steps))
        }
        BaseConfig::Linear => {
            let cfg = NetworkConfig::linear(x.cols(), output);
            let mut rng = rng_from_seed(seed);
            let mut net = DenseNetwork::new(&cfg, &mut rng)?;
            let report = train_regression(&mut net, x, y, train, &mut rng)?;
            Ok((Regressor::Net(net), report.steps))
        }
        BaseConfig::Forest { params } => {
            let forest = fit_forest(x, y, params, seed)?;
            Ok((Regressor::Forest(forest), 0))
        }
    }
}

/// T-learner: independent regressors per arm; tau = mu1_hat - mu0_hat.
pub fn fit_t_learner(data: &ExperimentData, cfg: &LearnerConfig, seed: u64) -> Result<CateModel> {
    let (x0, y0) = data.arm_data(0)?;
    let (x1, y1) = data.arm_data(1)?;
    let output = output_kind_for(data.outcome);
    let (s0, s1) = cfg
        .arm_seeds
        .unwrap_or((seed_of!(seed, "arm", 0u64), seed_of!(seed, "arm", 1u64)));
    let (mu0, steps0) = fit_regressor(&x0, &y0, &cfg.base, output, &cfg.train, s0)?;
    let (mu1, steps1) = fit_regressor(&x1, &y1, &cfg.base, output, &cfg.train, s1)?;
    Ok(CateModel::T {
        mu0,
        mu1,
        meta: ModelMeta {
            seed,
            train_size: data.n_units(),
            steps: steps0 + steps1,
        },
    })
}

/// S-learner: a single regressor on (X, W); tau = mu_hat(x,1) - mu_hat(x,0).
pub fn fit_s_learner(data: &ExperimentData, cfg: &LearnerConfig, seed: u64) -> Result<CateModel> {
    // Both arms must be populated even though one regressor is fit.
    data.arm_data(0)?;
    data.arm_data(1)?;
    let w_col: Vec<f64> = data.w.iter().map(|&w| w as f64).collect();
    let x_aug = data.x.with_appended_column(&w_col)?;
    let output = output_kind_for(data.outcome);
    let (mu, steps) = fit_regressor(&x_aug, &data.y_obs, &cfg.base, output, &cfg.train, seed)?;
    Ok(CateModel::S {
        mu,
        meta: ModelMeta {
            seed,
            train_size: data.n_units(),
            steps,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::params_bitwise_eq;
    use crate::nn::AdamParams;
    use crate::nn::train::LrSchedule;
    use crate::seed::{rng_from_seed, Prng};
    use rand::Rng;

    pub(crate) fn linear_effect_experiment(
        n: usize,
        effect: f64,
        seed: u64,
    ) -> (ExperimentData, Vec<f64>, Vec<f64>) {
        // Noiseless linear surfaces: mu0 = 0.8 x0 - 0.4 x1 + 0.2, mu1 = mu0 + effect.
        let mut rng: Prng = rng_from_seed(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        let w: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let mu0: Vec<f64> = rows.iter().map(|r| 0.8 * r[0] - 0.4 * r[1] + 0.2).collect();
        let mu1: Vec<f64> = mu0.iter().map(|v| v + effect).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| if w[i] == 0 { mu0[i] } else { mu1[i] })
            .collect();
        let data = ExperimentData::new(
            Matrix::from_rows(&rows).unwrap(),
            w,
            y,
            OutcomeKind::Continuous,
            Some(crate::data::Truth::from_surfaces(mu0.clone(), mu1.clone())),
        )
        .unwrap();
        (data, mu0, mu1)
    }

    pub(crate) fn converging_linear_config() -> LearnerConfig {
        LearnerConfig {
            base: BaseConfig::Linear,
            train: TrainConfig {
                max_steps: 24_000,
                batch_size: 1024,
                adam: AdamParams {
                    lr: 0.02,
                    ..AdamParams::default()
                },
                schedule: LrSchedule::StepDecay {
                    every: 2000,
                    factor: 0.5,
                },
                plateau: None,
            },
            arm_seeds: None,
        }
    }

    /// Closed-form least squares via normal equations, solved with plain
    /// Gaussian elimination. Independent of the network training path.
    pub(crate) fn least_squares_fit(x: &Matrix, y: &[f64]) -> Vec<f64> {
        let d = x.cols() + 1; // intercept last
        let mut a = vec![vec![0.0; d + 1]; d];
        for (row, &t) in x.iter_rows().zip(y) {
            let mut z: Vec<f64> = row.to_vec();
            z.push(1.0);
            for i in 0..d {
                for j in 0..d {
                    a[i][j] += z[i] * z[j];
                }
                a[i][d] += z[i] * t;
            }
        }
        for col in 0..d {
            let pivot = (col..d)
                .max_by(|&p, &q| a[p][col].abs().partial_cmp(&a[q][col].abs()).unwrap())
                .unwrap();
            a.swap(col, pivot);
            let pv = a[col][col];
            for j in col..=d {
                a[col][j] /= pv;
            }
            for r in 0..d {
                if r != col && a[r][col] != 0.0 {
                    let f = a[r][col];
                    for j in col..=d {
                        a[r][j] -= f * a[col][j];
                    }
                }
            }
        }
        (0..d).map(|i| a[i][d]).collect()
    }

    fn ls_predict(beta: &[f64], row: &[f64]) -> f64 {
        let mut acc = beta[beta.len() - 1];
        for (b, v) in beta.iter().zip(row) {
            acc += b * v;
        }
        acc
    }

    #[test]
    fn t_learner_zero_targets_zero_tau() {
        let mut rng = rng_from_seed(0);
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| vec![rng.random_range(-1.0..1.0)])
            .collect();
        let w: Vec<u8> = (0..40).map(|i| (i % 2) as u8).collect();
        let data = ExperimentData::new(
            Matrix::from_rows(&rows).unwrap(),
            w,
            vec![0.0; 40],
            OutcomeKind::Continuous,
            None,
        )
        .unwrap();
        let cfg = LearnerConfig {
            base: BaseConfig::Network {
                arch: NetArch {
                    zero_init_output: true,
                    ..NetArch::default()
                },
            },
            ..LearnerConfig::default()
        };
        let model = fit_t_learner(&data, &cfg, 1).unwrap();
        let tau = model.predict_tau(&data.x).unwrap();
        assert!(tau.iter().all(|t| t.abs() <= 1e-6));
    }

    #[test]
    fn t_learner_recovers_constant_effect_with_linear_base() {
        let (data, _, _) = linear_effect_experiment(600, 1.0, 3);
        let cfg = converging_linear_config();
        let model = fit_t_learner(&data, &cfg, 5).unwrap();
        let tau = model.predict_tau(&data.x).unwrap();

        // Independent oracle: closed-form least squares per arm.
        let (x0, y0) = data.arm_data(0).unwrap();
        let (x1, y1) = data.arm_data(1).unwrap();
        let b0 = least_squares_fit(&x0, &y0);
        let b1 = least_squares_fit(&x1, &y1);
        for (i, row) in data.x.iter_rows().enumerate() {
            let oracle = ls_predict(&b1, row) - ls_predict(&b0, row);
            assert!((tau[i] - oracle).abs() <= 1e-5, "{} vs {}", tau[i], oracle);
            assert!((tau[i] - 1.0).abs() <= 1e-6, "tau={}", tau[i]);
        }
    }

    #[test]
    fn t_learner_swap_antisymmetry_is_bitwise_with_mirrored_seeds() {
        let (data, _, _) = linear_effect_experiment(200, 0.5, 9);
        let swapped = data.with_swapped_arms();
        let mut cfg = LearnerConfig::default();
        cfg.train.max_steps = 400;
        cfg.arm_seeds = Some((101, 202));
        let model = fit_t_learner(&data, &cfg, 0).unwrap();
        cfg.arm_seeds = Some((202, 101));
        let mirrored = fit_t_learner(&swapped, &cfg, 0).unwrap();

        let probe = data.x.select_rows(&[0, 5, 17, 33]);
        let a = model.predict_tau(&probe).unwrap();
        let b = mirrored.predict_tau(&probe).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.to_bits(), (-y).to_bits());
        }
        // And the underlying regressors literally swapped.
        if let (CateModel::T { mu0, mu1, .. }, CateModel::T { mu0: m0, mu1: m1, .. }) =
            (&model, &mirrored)
        {
            assert!(params_bitwise_eq(
                mu0.as_net().unwrap(),
                m1.as_net().unwrap()
            ));
            assert!(params_bitwise_eq(
                mu1.as_net().unwrap(),
                m0.as_net().unwrap()
            ));
        } else {
            panic!("expected T models");
        }
    }

    #[test]
    fn t_learner_decomposition_is_pointwise_exact() {
        let (data, _, _) = linear_effect_experiment(120, 0.3, 21);
        let mut cfg = LearnerConfig::default();
        cfg.train.max_steps = 300;
        let model = fit_t_learner(&data, &cfg, 7).unwrap();
        let tau = model.predict_tau(&data.x).unwrap();
        if let CateModel::T { mu0, mu1, .. } = &model {
            let p0 = mu0.predict(&data.x).unwrap();
            let p1 = mu1.predict(&data.x).unwrap();
            for i in 0..tau.len() {
                assert_eq!(tau[i].to_bits(), (p1[i] - p0[i]).to_bits());
            }
        }
    }

    #[test]
    fn s_learner_ignoring_w_gives_structural_zero() {
        // Force the W column's first-layer weights to zero after fitting:
        // predictions for (x,1) and (x,0) then agree exactly.
        let (data, _, _) = linear_effect_experiment(100, 1.0, 2);
        let mut cfg = LearnerConfig::default();
        cfg.train.max_steps = 200;
        let model = fit_s_learner(&data, &cfg, 3).unwrap();
        let zeroed = match model {
            CateModel::S { mu, meta } => {
                let mut net = mu.as_net().unwrap().clone();
                let w_col = net.input_dim() - 1;
                let first = &mut net.layers_mut()[0];
                for j in 0..first.weights.rows() {
                    first.weights.set(j, w_col, 0.0);
                }
                CateModel::S {
                    mu: Regressor::Net(net),
                    meta,
                }
            }
            _ => unreachable!(),
        };
        let tau = zeroed.predict_tau(&data.x).unwrap();
        assert!(tau.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn s_learner_recovers_constant_effect_with_linear_base() {
        let (data, _, _) = linear_effect_experiment(600, 0.7, 4);
        let cfg = converging_linear_config();
        let model = fit_s_learner(&data, &cfg, 6).unwrap();
        let tau = model.predict_tau(&data.x).unwrap();

        // Oracle: least squares on the augmented design recovers the W
        // coefficient, which is the constant effect.
        let w_col: Vec<f64> = data.w.iter().map(|&w| w as f64).collect();
        let x_aug = data.x.with_appended_column(&w_col).unwrap();
        let beta = least_squares_fit(&x_aug, &data.y_obs);
        let w_coef = beta[x_aug.cols() - 1];
        assert!((w_coef - 0.7).abs() <= 1e-9, "oracle w_coef={w_coef}");
        for t in &tau {
            assert!((t - 0.7).abs() <= 1e-6, "tau={t}");
        }
    }

    #[test]
    fn s_learner_relabeling_negates_tau_at_convergence() {
        let (data, _, _) = linear_effect_experiment(400, 0.4, 8);
        let swapped = data.with_swapped_arms();
        let cfg = converging_linear_config();
        let a = fit_s_learner(&data, &cfg, 11).unwrap();
        let b = fit_s_learner(&swapped, &cfg, 11).unwrap();
        let probe = data.x.select_rows(&[1, 2, 3, 50]);
        let ta = a.predict_tau(&probe).unwrap();
        let tb = b.predict_tau(&probe).unwrap();
        for (x, y) in ta.iter().zip(&tb) {
            assert!((x + y).abs() <= 1e-5, "{x} vs {y}");
        }
    }

    #[test]
    fn empty_arm_is_an_error() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let data =
            ExperimentData::new(x, vec![1, 1], vec![0.3, 0.4], OutcomeKind::Continuous, None)
                .unwrap();
        assert!(matches!(
            fit_t_learner(&data, &LearnerConfig::default(), 0),
            Err(Error::EmptyArm { arm: 0 })
        ));
        assert!(fit_s_learner(&data, &LearnerConfig::default(), 0).is_err());
    }

    #[test]
    fn forest_based_learners_fit_binary_outcomes() {
        let mut rng = rng_from_seed(31);
        let n = 300;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)])
            .collect();
        let w: Vec<u8> = (0..n).map(|_| rng.random_bool(0.5) as u8).collect();
        let y: Vec<f64> = rows
            .iter()
            .zip(&w)
            .map(|(r, &wi)| {
                let p = 0.2 + 0.4 * r[0] + 0.2 * wi as f64;
                rng.random_bool(p) as u8 as f64
            })
            .collect();
        let data = ExperimentData::new(
            Matrix::from_rows(&rows).unwrap(),
            w,
            y,
            OutcomeKind::Binary,
            None,
        )
        .unwrap();
        let cfg = LearnerConfig {
            base: BaseConfig::Forest {
                params: ForestParams {
                    n_trees: 25,
                    ..ForestParams::default()
                },
            },
            ..LearnerConfig::default()
        };
        for model in [
            fit_t_learner(&data, &cfg, 5).unwrap(),
            fit_s_learner(&data, &cfg, 5).unwrap(),
        ] {
            let tau = model.predict_tau(&data.x).unwrap();
            assert!(tau.iter().all(|t| t.is_finite() && t.abs() <= 1.0));
        }
    }
}
