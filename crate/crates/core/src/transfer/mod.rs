//! Transfer strategies over collections of related experiments.
//!
//! Every strategy consumes an [`ExperimentCollection`] (experiments sharing
//! one covariate space, each with a train/test split) and emits CATE
//! estimates. Strategies differ in what crosses experiment boundaries:
//!
//! - `baseline`: nothing; independent fits per experiment,
//! - `warm`: the target starts from the source's trained parameters,
//! - `frozen`: the target trains new heads on the source's frozen layers,
//! - `multi-head`: per-arm bases shared across experiments, one head each,
//! - `joint`: one base shared by everything, trained on the summed loss,
//! - `sf-reptile`: meta-initialization by per-layer interpolation,
//! - `mlrw`: one meta-learned regression network adapted per arm at
//!   evaluation time.

mod heads;
mod reptile;

pub use heads::{run_joint, run_multi_head};
pub use reptile::{
    adapt_regression, mlrw_meta_net, run_mlrw, run_sf_reptile, sf_reptile_meta_nets,
    tau_treatment_minus_control, TaskAdapter, TaskNets,
};

use serde::{Deserialize, Serialize};

use crate::data::{ExperimentData, OutcomeKind, Split};
use crate::error::{Error, Result};
use crate::learners::{
    fit_s_learner, fit_t_learner, fit_y_learner, fit_y_nets, train_y_nets, BaseConfig, CateModel,
    LearnerConfig, ModelMeta, NetArch, Regressor,
};
use crate::matrix::Matrix;
use crate::nn::train::{train_regression, TrainConfig};
use crate::nn::{DenseNetwork, LayerParams, OutputKind};
use crate::seed::rng_from_seed;
use crate::seed_of;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Baseline,
    Warm,
    Frozen,
    MultiHead,
    Joint,
    SfReptile,
    Mlrw,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Baseline => "baseline",
            Strategy::Warm => "warm",
            Strategy::Frozen => "frozen",
            Strategy::MultiHead => "multi-head",
            Strategy::Joint => "joint",
            Strategy::SfReptile => "sf-reptile",
            Strategy::Mlrw => "mlrw",
        }
    }
}

/// Which learner the strategy wraps. MLRW ignores this: it is a single
/// regression network by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseLearnerKind {
    S,
    T,
    Y,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferSpec {
    pub strategy: Strategy,
    pub base_learner: BaseLearnerKind,
    pub arch: NetArch,
    pub train: TrainConfig,
    /// Shared/frozen prefix depth: frozen features freeze this many source
    /// layers; multi-head and joint share this many base layers.
    pub k_frozen_layers: usize,
    /// Per-layer outer step sizes for sf-reptile/mlrw; empty selects the
    /// default ramp from 0.1 (first layer) to 0.5 (last layer).
    pub eps_per_layer: Vec<f64>,
    pub inner_iters: usize,
    pub outer_iters: usize,
    /// Units per arm used when adapting MLRW at evaluation time.
    pub adaptation_samples: usize,
    /// Warm start ablation: skip the source phase entirely.
    pub ignore_source: bool,
    /// Shuffle the experiment order each Reptile outer iteration.
    pub shuffle_experiments: bool,
    /// Step budget for warm/frozen target-phase training; defaults to
    /// `train.max_steps`.
    pub target_steps: Option<usize>,
}

impl TransferSpec {
    pub fn new(strategy: Strategy, base_learner: BaseLearnerKind) -> Self {
        TransferSpec {
            strategy,
            base_learner,
            arch: NetArch::default(),
            train: TrainConfig::default(),
            k_frozen_layers: 2,
            eps_per_layer: Vec::new(),
            inner_iters: 50,
            outer_iters: 1000,
            adaptation_samples: 100,
            ignore_source: false,
            shuffle_experiments: false,
            target_steps: None,
        }
    }

    pub fn depth(&self) -> usize {
        self.arch.hidden.len() + 1
    }

    pub fn eps(&self) -> Vec<f64> {
        if self.eps_per_layer.is_empty() {
            default_eps(self.depth())
        } else {
            self.eps_per_layer.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let depth = self.depth();
        match self.strategy {
            Strategy::Frozen | Strategy::MultiHead | Strategy::Joint => {
                if self.k_frozen_layers == 0 || self.k_frozen_layers >= depth {
                    return Err(Error::config(format!(
                        "k_frozen_layers={} must satisfy 1 <= k < depth {depth}",
                        self.k_frozen_layers
                    )));
                }
            }
            Strategy::SfReptile | Strategy::Mlrw => {
                let eps = self.eps();
                if eps.len() != depth {
                    return Err(Error::dim(depth, eps.len(), "eps_per_layer"));
                }
                if eps.iter().any(|e| !(0.0..=1.0).contains(e)) {
                    return Err(Error::config("eps_per_layer outside [0,1]"));
                }
            }
            Strategy::Baseline | Strategy::Warm => {}
        }
        Ok(())
    }

    /// The single-experiment learner config this spec's fits use.
    pub fn learner_config(&self) -> LearnerConfig {
        LearnerConfig {
            base: BaseConfig::Network {
                arch: self.arch.clone(),
            },
            train: self.train.clone(),
            arm_seeds: None,
        }
    }
}

/// Slow lower layers, fast upper layers: linear ramp from 0.1 to 0.5.
pub fn default_eps(depth: usize) -> Vec<f64> {
    if depth == 1 {
        return vec![0.5];
    }
    (0..depth)
        .map(|p| 0.1 + 0.4 * p as f64 / (depth - 1) as f64)
        .collect()
}

/// An ordered set of experiments over one covariate space, with
/// per-experiment train/test splits.
#[derive(Debug, Clone)]
pub struct ExperimentCollection {
    experiments: Vec<ExperimentData>,
    splits: Vec<Split>,
}

impl ExperimentCollection {
    pub fn new(experiments: Vec<ExperimentData>, splits: Vec<Split>) -> Result<Self> {
        if experiments.is_empty() {
            return Err(Error::EmptyInput("experiment collection"));
        }
        if experiments.len() != splits.len() {
            return Err(Error::dim(experiments.len(), splits.len(), "splits"));
        }
        let d = experiments[0].n_features();
        let outcome = experiments[0].outcome;
        for (e, s) in experiments.iter().zip(&splits) {
            if e.n_features() != d {
                return Err(Error::dim(d, e.n_features(), "collection covariate width"));
            }
            if e.outcome != outcome {
                return Err(Error::config("mixed outcome kinds in collection"));
            }
            let n = e.n_units();
            if s.train.iter().chain(&s.test).any(|&i| i >= n) {
                return Err(Error::config("split index out of range"));
            }
            let mut seen = vec![false; n];
            for &i in s.train.iter().chain(&s.test) {
                if seen[i] {
                    return Err(Error::config("train/test splits overlap"));
                }
                seen[i] = true;
            }
            if s.train.is_empty() {
                return Err(Error::EmptyInput("train split"));
            }
        }
        Ok(ExperimentCollection {
            experiments,
            splits,
        })
    }

    /// Uses every unit of every experiment for training.
    pub fn all_train(experiments: Vec<ExperimentData>) -> Result<Self> {
        let splits = experiments
            .iter()
            .map(|e| Split::all_train(e.n_units()))
            .collect();
        Self::new(experiments, splits)
    }

    pub fn n_experiments(&self) -> usize {
        self.experiments.len()
    }

    pub fn n_features(&self) -> usize {
        self.experiments[0].n_features()
    }

    pub fn outcome(&self) -> OutcomeKind {
        self.experiments[0].outcome
    }

    pub fn experiment(&self, i: usize) -> &ExperimentData {
        &self.experiments[i]
    }

    pub fn split(&self, i: usize) -> &Split {
        &self.splits[i]
    }

    /// The training subset of experiment `i`, materialized.
    pub fn train_data(&self, i: usize) -> ExperimentData {
        self.experiments[i].subset(&self.splits[i].train)
    }

    /// The held-out subset of experiment `i`, materialized.
    pub fn test_data(&self, i: usize) -> ExperimentData {
        self.experiments[i].subset(&self.splits[i].test)
    }

    pub(crate) fn require(&self, n: usize, what: &'static str) -> Result<()> {
        if self.n_experiments() < n {
            return Err(Error::config(format!(
                "{what} needs at least {n} experiments, got {}",
                self.n_experiments()
            )));
        }
        Ok(())
    }
}

/// A training view of one experiment with per-arm data and the (X, W)
/// augmented design materialized once.
#[derive(Debug, Clone)]
pub struct ExperimentView {
    pub data: ExperimentData,
    pub x0: Matrix,
    pub y0: Vec<f64>,
    pub x1: Matrix,
    pub y1: Vec<f64>,
    pub x_aug: Matrix,
}

impl ExperimentView {
    pub fn new(data: ExperimentData) -> Result<Self> {
        let (x0, y0) = data.arm_data(0)?;
        let (x1, y1) = data.arm_data(1)?;
        let w_col: Vec<f64> = data.w.iter().map(|&w| w as f64).collect();
        let x_aug = data.x.with_appended_column(&w_col)?;
        Ok(ExperimentView {
            data,
            x0,
            y0,
            x1,
            y1,
            x_aug,
        })
    }
}

pub(crate) fn baseline_fit(
    data: &ExperimentData,
    spec: &TransferSpec,
    seed: u64,
) -> Result<CateModel> {
    let cfg = spec.learner_config();
    match spec.base_learner {
        BaseLearnerKind::T => fit_t_learner(data, &cfg, seed),
        BaseLearnerKind::S => fit_s_learner(data, &cfg, seed),
        BaseLearnerKind::Y => fit_y_learner(data, &cfg, seed),
    }
}

/// Independent per-experiment fits; no information crosses experiments.
///
/// Experiment `i` is fit with seed (seed, "exp", i), so its model depends
/// only on its own data and index, never on what else shares the
/// collection.
pub fn run_baseline(
    collection: &ExperimentCollection,
    spec: &TransferSpec,
    seed: u64,
) -> Result<Vec<CateModel>> {
    collection.require(1, "baseline")?;
    spec.validate()?;
    (0..collection.n_experiments())
        .map(|i| baseline_fit(&collection.train_data(i), spec, seed_of!(seed, "exp", i)))
        .collect()
}

pub(crate) fn source_component_nets(model: &CateModel) -> Result<Vec<DenseNetwork>> {
    let take = |r: &Regressor| -> Result<DenseNetwork> {
        r.as_net()
            .cloned()
            .ok_or_else(|| Error::config("transfer requires network-based models"))
    };
    match model {
        CateModel::T { mu0, mu1, .. } => Ok(vec![take(mu0)?, take(mu1)?]),
        CateModel::S { mu, .. } => Ok(vec![take(mu)?]),
        _ => Err(Error::config("unsupported source model")),
    }
}

fn warm_target_model(
    spec: &TransferSpec,
    target: &ExperimentData,
    mut nets: Vec<DenseNetwork>,
    seed: u64,
    steps: usize,
) -> Result<CateModel> {
    let mut train = spec.train.clone();
    train.max_steps = steps;
    let meta = |actual_steps: usize| ModelMeta {
        seed,
        train_size: target.n_units(),
        steps: actual_steps,
    };
    match spec.base_learner {
        BaseLearnerKind::T => {
            let (x0, y0) = target.arm_data(0)?;
            let (x1, y1) = target.arm_data(1)?;
            let mut net0 = nets.remove(0);
            let mut net1 = nets.remove(0);
            let mut rng0 = rng_from_seed(seed_of!(seed, "warm-arm", 0u64));
            let mut rng1 = rng_from_seed(seed_of!(seed, "warm-arm", 1u64));
            let r0 = train_regression(&mut net0, &x0, &y0, &train, &mut rng0)?;
            let r1 = train_regression(&mut net1, &x1, &y1, &train, &mut rng1)?;
            Ok(CateModel::T {
                mu0: Regressor::Net(net0),
                mu1: Regressor::Net(net1),
                meta: meta(r0.steps + r1.steps),
            })
        }
        BaseLearnerKind::S => {
            let view = ExperimentView::new(target.clone())?;
            let mut net = nets.remove(0);
            let mut rng = rng_from_seed(seed_of!(seed, "warm-s"));
            let r = train_regression(&mut net, &view.x_aug, &view.data.y_obs, &train, &mut rng)?;
            Ok(CateModel::S {
                mu: Regressor::Net(net),
                meta: meta(r.steps),
            })
        }
        BaseLearnerKind::Y => unreachable!("handled in run_warm_start"),
    }
}

/// Warm start: experiment 0 is the source, experiment 1 the target. The
/// target's networks start from the source's trained parameters, with
/// fresh optimizer state.
pub fn run_warm_start(
    collection: &ExperimentCollection,
    spec: &TransferSpec,
    seed: u64,
) -> Result<CateModel> {
    collection.require(2, "warm start")?;
    spec.validate()?;
    let target_idx = 1usize;
    let target = collection.train_data(target_idx);
    if spec.ignore_source {
        // Ablation switch: exactly the baseline fit for the target.
        return baseline_fit(&target, spec, seed_of!(seed, "exp", target_idx));
    }
    let source = collection.train_data(0);
    let source_seed = seed_of!(seed, "exp", 0usize);
    let steps = spec.target_steps.unwrap_or(spec.train.max_steps);

    if spec.base_learner == BaseLearnerKind::Y {
        let mut nets = fit_y_nets(&source, &spec.arch, &spec.train, source_seed)?;
        nets.reset_optimizer(spec.train.adam)?;
        let mut rng = rng_from_seed(seed_of!(seed, "warm-y"));
        train_y_nets(&mut nets, &target, steps, spec.train.batch_size, &mut rng)?;
        return Ok(CateModel::Y {
            tau: nets.tau,
            meta: ModelMeta {
                seed,
                train_size: target.n_units(),
                steps,
            },
        });
    }

    let source_model = baseline_fit(&source, spec, source_seed)?;
    let nets = source_component_nets(&source_model)?;
    warm_target_model(spec, &target, nets, seed, steps)
}

/// Splits a trained network at layer `k` into (frozen prefix, rest).
pub(crate) fn split_at(net: &DenseNetwork, k: usize) -> Vec<LayerParams> {
    net.layers()[..k].to_vec()
}

/// Builds a head network (fresh parameters) matching the post-prefix part
/// of the full architecture.
pub(crate) fn fresh_head(
    arch: &NetArch,
    k: usize,
    feature_dim: usize,
    output: OutputKind,
    seed: u64,
) -> Result<DenseNetwork> {
    let head_hidden: Vec<usize> = arch.hidden[k.min(arch.hidden.len())..].to_vec();
    let cfg = crate::nn::NetworkConfig {
        input_dim: feature_dim,
        hidden: head_hidden,
        activation: arch.activation,
        output,
        zero_init_output: arch.zero_init_output,
    };
    let mut rng = rng_from_seed(seed);
    DenseNetwork::new(&cfg, &mut rng)
}

/// Joins prefix layers with a head into one network computing
/// `head(features(x))`.
pub(crate) fn compose(prefix: &[LayerParams], head: &DenseNetwork) -> Result<DenseNetwork> {
    let mut layers = prefix.to_vec();
    layers.extend_from_slice(head.layers());
    DenseNetwork::from_layers(layers, head.activation(), head.output_kind())
}

/// The three Y-learner targets given pre-step predictions.
pub(crate) fn y_step_targets(
    w: &[u8],
    y: &[f64],
    p_mu0: &[f64],
    p_mu1: &[f64],
    p_tau: &[f64],
) -> [Vec<f64>; 3] {
    let n = y.len();
    let mut t = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for i in 0..n {
        if w[i] == 0 {
            t[0][i] = y[i];
            t[1][i] = y[i] + p_tau[i];
            t[2][i] = p_mu1[i] - y[i];
        } else {
            t[0][i] = y[i] - p_tau[i];
            t[1][i] = y[i];
            t[2][i] = y[i] - p_mu0[i];
        }
    }
    t
}

/// Runs the configured strategy, returning per-experiment models where the
/// strategy produces them (baseline, multi-head, joint, sf-reptile) or the
/// target model alone (warm, frozen). MLRW has its own entry point
/// ([`run_mlrw`]) because it emits predictions, not models.
pub fn run_strategy(
    collection: &ExperimentCollection,
    spec: &TransferSpec,
    seed: u64,
) -> Result<Vec<CateModel>> {
    match spec.strategy {
        Strategy::Baseline => run_baseline(collection, spec, seed),
        Strategy::Warm => Ok(vec![run_warm_start(collection, spec, seed)?]),
        Strategy::Frozen => Ok(vec![run_frozen_features(collection, spec, seed)?]),
        Strategy::MultiHead => run_multi_head(collection, spec, seed),
        Strategy::Joint => run_joint(collection, spec, seed),
        Strategy::SfReptile => run_sf_reptile(collection, spec, seed),
        Strategy::Mlrw => Err(Error::config("mlrw emits predictions; use run_mlrw")),
    }
}

/// Frozen features: source layers up to `k` become a fixed feature
/// extractor; the target trains fresh heads on those features. Gradients
/// never touch the frozen layers, whose parameters the returned model
/// carries bit-for-bit.
pub fn run_frozen_features(
    collection: &ExperimentCollection,
    spec: &TransferSpec,
    seed: u64,
) -> Result<CateModel> {
    collection.require(2, "frozen features")?;
    spec.validate()?;
    let k = spec.k_frozen_layers;
    let source = collection.train_data(0);
    let target = collection.train_data(1);
    let source_seed = seed_of!(seed, "exp", 0usize);
    let steps = spec.target_steps.unwrap_or(spec.train.max_steps);
    let mut train = spec.train.clone();
    train.max_steps = steps;
    let output = crate::learners::output_kind_for(target.outcome);
    let meta = ModelMeta {
        seed,
        train_size: target.n_units(),
        steps,
    };

    match spec.base_learner {
        BaseLearnerKind::T => {
            let source_model = baseline_fit(&source, spec, source_seed)?;
            let nets = source_component_nets(&source_model)?;
            let (x0, y0) = target.arm_data(0)?;
            let (x1, y1) = target.arm_data(1)?;
            let mut composed = Vec::with_capacity(2);
            for (c, (net, (x, y))) in nets.iter().zip([(x0, y0), (x1, y1)]).enumerate() {
                let prefix = split_at(net, k);
                let z = net.hidden_features(&x, k)?;
                let mut head = fresh_head(
                    &spec.arch,
                    k,
                    net.feature_dim(k),
                    output,
                    seed_of!(seed, "frozen-head", c),
                )?;
                let mut rng = rng_from_seed(seed_of!(seed, "frozen-train", c));
                train_regression(&mut head, &z, &y, &train, &mut rng)?;
                composed.push(compose(&prefix, &head)?);
            }
            let mu1 = composed.pop().unwrap();
            let mu0 = composed.pop().unwrap();
            Ok(CateModel::T {
                mu0: Regressor::Net(mu0),
                mu1: Regressor::Net(mu1),
                meta,
            })
        }
        BaseLearnerKind::S => {
            let source_model = baseline_fit(&source, spec, source_seed)?;
            let nets = source_component_nets(&source_model)?;
            let net = &nets[0];
            let view = ExperimentView::new(target.clone())?;
            let prefix = split_at(net, k);
            let z = net.hidden_features(&view.x_aug, k)?;
            let mut head = fresh_head(
                &spec.arch,
                k,
                net.feature_dim(k),
                output,
                seed_of!(seed, "frozen-head", 0usize),
            )?;
            let mut rng = rng_from_seed(seed_of!(seed, "frozen-train", 0usize));
            train_regression(&mut head, &z, &view.data.y_obs, &train, &mut rng)?;
            Ok(CateModel::S {
                mu: Regressor::Net(compose(&prefix, &head)?),
                meta,
            })
        }
        BaseLearnerKind::Y => {
            let source_nets = fit_y_nets(&source, &spec.arch, &spec.train, source_seed)?;
            let comps = [&source_nets.mu0, &source_nets.mu1, &source_nets.tau];
            // Per-component feature matrices over the whole target train set;
            // head training only ever sees this cache.
            let z: Vec<Matrix> = comps
                .iter()
                .map(|n| n.hidden_features(&target.x, k))
                .collect::<Result<_>>()?;
            let mut heads: Vec<DenseNetwork> = (0..3)
                .map(|c| {
                    fresh_head(
                        &spec.arch,
                        k,
                        comps[c].feature_dim(k),
                        OutputKind::Identity,
                        seed_of!(seed, "frozen-head", c),
                    )
                })
                .collect::<Result<_>>()?;
            let mut states: Vec<crate::nn::AdamState> = heads
                .iter()
                .map(|h| crate::nn::AdamState::new(h, spec.train.adam))
                .collect::<Result<_>>()?;
            let mut rng = rng_from_seed(seed_of!(seed, "frozen-train-y"));
            let n = target.n_units();
            for _ in 0..steps {
                let idx: Vec<usize> = (0..train.batch_size.min(n).max(1))
                    .map(|_| rand::Rng::random_range(&mut rng, 0..n))
                    .collect();
                let zb: Vec<Matrix> = z.iter().map(|m| m.select_rows(&idx)).collect();
                let wb: Vec<u8> = idx.iter().map(|&i| target.w[i]).collect();
                let yb: Vec<f64> = idx.iter().map(|&i| target.y_obs[i]).collect();
                let p_mu0 = heads[0].forward(&zb[0])?;
                let p_mu1 = heads[1].forward(&zb[1])?;
                let p_tau = heads[2].forward(&zb[2])?;
                let targets = y_step_targets(&wb, &yb, &p_mu0, &p_mu1, &p_tau);
                for (c, t) in targets.into_iter().enumerate() {
                    let batch = crate::nn::Batch::new(zb[c].clone(), t)?;
                    let g = heads[c].backward(&batch)?;
                    crate::nn::adam_step(&mut heads[c], &mut states[c], &g)?;
                }
            }
            let prefix_tau = split_at(comps[2], k);
            Ok(CateModel::Y {
                tau: compose(&prefix_tau, &heads[2])?,
                meta,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{OutcomeKind, Truth};
    use crate::learners::fit_t_learner;
    use crate::nn::params_bitwise_eq;
    use crate::seed::rng_from_seed;
    use rand::Rng;

    fn toy_experiment(effect: f64, seed: u64, n: usize) -> ExperimentData {
        let mut rng = rng_from_seed(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        let w: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let mu0: Vec<f64> = rows.iter().map(|r| 0.6 * r[0] - 0.1 * r[1]).collect();
        let mu1: Vec<f64> = mu0.iter().map(|v| v + effect).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| if w[i] == 0 { mu0[i] } else { mu1[i] })
            .collect();
        ExperimentData::new(
            Matrix::from_rows(&rows).unwrap(),
            w,
            y,
            OutcomeKind::Continuous,
            Some(Truth::from_surfaces(mu0, mu1)),
        )
        .unwrap()
    }

    fn quick_spec(strategy: Strategy, kind: BaseLearnerKind) -> TransferSpec {
        let mut spec = TransferSpec::new(strategy, kind);
        spec.arch = NetArch {
            hidden: vec![12, 12],
            ..NetArch::default()
        };
        spec.train.max_steps = 250;
        spec.train.batch_size = 32;
        spec
    }

    fn model_nets(model: &CateModel) -> Vec<&DenseNetwork> {
        match model {
            CateModel::T { mu0, mu1, .. } => {
                vec![mu0.as_net().unwrap(), mu1.as_net().unwrap()]
            }
            CateModel::S { mu, .. } => vec![mu.as_net().unwrap()],
            CateModel::Y { tau, .. } => vec![tau],
            CateModel::X { .. } => panic!("no X models in transfer"),
        }
    }

    #[test]
    fn baseline_on_one_experiment_equals_direct_fit() {
        let e = toy_experiment(0.3, 1, 120);
        let col = ExperimentCollection::all_train(vec![e.clone()]).unwrap();
        let spec = quick_spec(Strategy::Baseline, BaseLearnerKind::T);
        let from_collection = run_baseline(&col, &spec, 42).unwrap();
        let direct = fit_t_learner(&e, &spec.learner_config(), seed_of!(42u64, "exp", 0usize))
            .unwrap();
        for (a, b) in model_nets(&from_collection[0])
            .iter()
            .zip(model_nets(&direct))
        {
            assert!(params_bitwise_eq(a, b));
        }
    }

    #[test]
    fn baseline_models_ignore_sibling_experiments() {
        let a = toy_experiment(0.3, 1, 120);
        let b = toy_experiment(-0.4, 2, 120);
        let c = toy_experiment(0.1, 3, 120);
        let spec = quick_spec(Strategy::Baseline, BaseLearnerKind::T);
        let alone = run_baseline(
            &ExperimentCollection::all_train(vec![a.clone()]).unwrap(),
            &spec,
            7,
        )
        .unwrap();
        let crowded = run_baseline(
            &ExperimentCollection::all_train(vec![a, b, c]).unwrap(),
            &spec,
            7,
        )
        .unwrap();
        for (x, y) in model_nets(&alone[0]).iter().zip(model_nets(&crowded[0])) {
            assert!(params_bitwise_eq(x, y));
        }
    }

    #[test]
    fn warm_with_zero_target_budget_returns_the_source_model() {
        let col = ExperimentCollection::all_train(vec![
            toy_experiment(0.3, 1, 150),
            toy_experiment(-0.2, 2, 150),
        ])
        .unwrap();
        for kind in [BaseLearnerKind::T, BaseLearnerKind::S, BaseLearnerKind::Y] {
            let mut spec = quick_spec(Strategy::Warm, kind);
            spec.target_steps = Some(0);
            let warm = run_warm_start(&col, &spec, 9).unwrap();
            let source =
                baseline_fit(&col.train_data(0), &spec, seed_of!(9u64, "exp", 0usize)).unwrap();
            // Y keeps only the tau net in its model; compare what is there.
            for (a, b) in model_nets(&warm).iter().zip(model_nets(&source)) {
                assert!(params_bitwise_eq(a, b));
            }
        }
    }

    #[test]
    fn warm_ignore_source_reproduces_the_baseline_bitwise() {
        let col = ExperimentCollection::all_train(vec![
            toy_experiment(0.3, 4, 120),
            toy_experiment(-0.2, 5, 120),
        ])
        .unwrap();
        let mut spec = quick_spec(Strategy::Warm, BaseLearnerKind::T);
        spec.ignore_source = true;
        let warm = run_warm_start(&col, &spec, 13).unwrap();
        let baseline = run_baseline(&col, &spec, 13).unwrap();
        for (a, b) in model_nets(&warm).iter().zip(model_nets(&baseline[1])) {
            assert!(params_bitwise_eq(a, b));
        }
    }

    #[test]
    fn warm_start_actually_moves_parameters_when_budget_is_positive() {
        let col = ExperimentCollection::all_train(vec![
            toy_experiment(0.3, 6, 150),
            toy_experiment(-0.5, 7, 150),
        ])
        .unwrap();
        let mut spec = quick_spec(Strategy::Warm, BaseLearnerKind::T);
        spec.target_steps = Some(150);
        let warm = run_warm_start(&col, &spec, 21).unwrap();
        let source =
            baseline_fit(&col.train_data(0), &spec, seed_of!(21u64, "exp", 0usize)).unwrap();
        let moved = model_nets(&warm)
            .iter()
            .zip(model_nets(&source))
            .any(|(a, b)| !params_bitwise_eq(a, b));
        assert!(moved);
    }

    #[test]
    fn frozen_prefix_layers_are_bit_identical_to_the_source() {
        let col = ExperimentCollection::all_train(vec![
            toy_experiment(0.2, 8, 150),
            toy_experiment(-0.3, 9, 150),
        ])
        .unwrap();
        let mut spec = quick_spec(Strategy::Frozen, BaseLearnerKind::T);
        spec.k_frozen_layers = 2;
        let seed = 33u64;
        let model = run_frozen_features(&col, &spec, seed).unwrap();
        let source = baseline_fit(&col.train_data(0), &spec, seed_of!(seed, "exp", 0usize))
            .unwrap();
        for (frozen_net, source_net) in model_nets(&model).iter().zip(model_nets(&source)) {
            for k in 0..spec.k_frozen_layers {
                let a = &frozen_net.layers()[k];
                let b = &source_net.layers()[k];
                assert!(a
                    .weights
                    .as_slice()
                    .iter()
                    .zip(b.weights.as_slice())
                    .all(|(x, y)| x.to_bits() == y.to_bits()));
                assert!(a
                    .bias
                    .iter()
                    .zip(&b.bias)
                    .all(|(x, y)| x.to_bits() == y.to_bits()));
            }
        }
    }

    #[test]
    fn frozen_head_training_sees_only_the_cached_features() {
        // Oracle: precompute z from the source prefix and train the head
        // directly; the pipeline must produce the identical head.
        let col = ExperimentCollection::all_train(vec![
            toy_experiment(0.2, 10, 150),
            toy_experiment(-0.3, 11, 150),
        ])
        .unwrap();
        let mut spec = quick_spec(Strategy::Frozen, BaseLearnerKind::T);
        spec.k_frozen_layers = 2;
        let seed = 44u64;
        let model = run_frozen_features(&col, &spec, seed).unwrap();

        let source = baseline_fit(&col.train_data(0), &spec, seed_of!(seed, "exp", 0usize))
            .unwrap();
        let source_nets = source_component_nets(&source).unwrap();
        let target = col.train_data(1);
        let (x0, y0) = target.arm_data(0).unwrap();
        let z = source_nets[0]
            .hidden_features(&x0, spec.k_frozen_layers)
            .unwrap();
        let mut head = fresh_head(
            &spec.arch,
            spec.k_frozen_layers,
            source_nets[0].feature_dim(spec.k_frozen_layers),
            crate::learners::output_kind_for(target.outcome),
            seed_of!(seed, "frozen-head", 0usize),
        )
        .unwrap();
        let mut rng = rng_from_seed(seed_of!(seed, "frozen-train", 0usize));
        train_regression(&mut head, &z, &y0, &spec.train, &mut rng).unwrap();

        let composed = model_nets(&model)[0];
        let head_layers = &composed.layers()[spec.k_frozen_layers..];
        for (a, b) in head_layers.iter().zip(head.layers()) {
            assert!(a
                .weights
                .as_slice()
                .iter()
                .zip(b.weights.as_slice())
                .all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn frozen_rejects_out_of_range_k() {
        let col = ExperimentCollection::all_train(vec![
            toy_experiment(0.2, 12, 100),
            toy_experiment(-0.3, 13, 100),
        ])
        .unwrap();
        let mut spec = quick_spec(Strategy::Frozen, BaseLearnerKind::T);
        spec.k_frozen_layers = 3; // depth is 3, k must be < 3
        assert!(run_frozen_features(&col, &spec, 0).is_err());
        spec.k_frozen_layers = 0;
        assert!(run_frozen_features(&col, &spec, 0).is_err());
    }

    #[test]
    fn warm_and_frozen_support_y_base() {
        let col = ExperimentCollection::all_train(vec![
            toy_experiment(0.2, 14, 120),
            toy_experiment(-0.3, 15, 120),
        ])
        .unwrap();
        for strategy in [Strategy::Warm, Strategy::Frozen] {
            let mut spec = quick_spec(strategy, BaseLearnerKind::Y);
            spec.train.max_steps = 120;
            let models = run_strategy(&col, &spec, 3).unwrap();
            let tau = models[0].predict_tau(&col.experiment(1).x).unwrap();
            assert!(tau.iter().all(|t| t.is_finite()));
        }
    }
}
