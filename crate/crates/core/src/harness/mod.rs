//! Seeded experiment sweeps: train every requested method over a grid of
//! training sizes and seeds, score CATE MSE on held-out units against the
//! attached truth, and emit deterministic CSV.
//!
//! Determinism contract: every cell derives its data seed from (plan seed,
//! "data", dgp, size, seed index) and its training seed from (plan seed,
//! "train", method, dgp, size, seed index). Methods therefore share data
//! within a cell, and adding or removing a method never changes any other
//! method's records. Wall-clock timings are the one non-reproducible
//! output; they go to a separate timings file so the records CSV is
//! byte-identical across runs.

mod report;

pub use report::{
    summarize, write_errors_csv, write_gnuplot_script, write_records_csv, write_summary_text,
    write_timings_csv, write_xy_csv, SummaryRow,
};

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{train_test_split, ExperimentData};
use crate::dgp::DgpSpec;
use crate::error::{Error, Result};
use crate::forest::ForestParams;
use crate::learners::{
    fit_s_learner, fit_t_learner, fit_x_learner, fit_y_learner, BaseConfig, CateModel,
    LearnerConfig, NetArch, XWeightingSpec,
};
use crate::nn::train::{LrSchedule, TrainConfig};
use crate::nn::AdamParams;
use crate::seed::{rng_from_seed, Prng};
use crate::seed_of;
use crate::transfer::{
    run_mlrw, run_strategy, BaseLearnerKind, ExperimentCollection, Strategy, TransferSpec,
};

/// Mean squared error between estimated and true CATE vectors.
pub fn cate_mse(tau_hat: &[f64], tau_true: &[f64]) -> Result<f64> {
    if tau_hat.is_empty() {
        return Err(Error::EmptyInput("cate_mse"));
    }
    if tau_hat.len() != tau_true.len() {
        return Err(Error::dim(tau_true.len(), tau_hat.len(), "cate_mse"));
    }
    Ok(tau_hat
        .iter()
        .zip(tau_true)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / tau_hat.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LearnerId {
    TNn,
    SNn,
    YNn,
    XNn,
    TLm,
    SRf,
    TRf,
    /// Per-label arm-mean difference; needs label data (image DGP).
    OracleGroupMean,
    /// Predicts tau = 0 everywhere.
    OracleZero,
}

impl LearnerId {
    pub fn name(&self) -> &'static str {
        match self {
            LearnerId::TNn => "t-nn",
            LearnerId::SNn => "s-nn",
            LearnerId::YNn => "y-nn",
            LearnerId::XNn => "x-nn",
            LearnerId::TLm => "t-lm",
            LearnerId::SRf => "s-rf",
            LearnerId::TRf => "t-rf",
            LearnerId::OracleGroupMean => "oracle-group-mean",
            LearnerId::OracleZero => "oracle-zero",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "t-nn" => LearnerId::TNn,
            "s-nn" => LearnerId::SNn,
            "y-nn" => LearnerId::YNn,
            "x-nn" => LearnerId::XNn,
            "t-lm" => LearnerId::TLm,
            "s-rf" => LearnerId::SRf,
            "t-rf" => LearnerId::TRf,
            "oracle-group-mean" => LearnerId::OracleGroupMean,
            "oracle-zero" => LearnerId::OracleZero,
            other => return Err(Error::config(format!("unknown learner '{other}'"))),
        })
    }

    fn base_learner_kind(&self) -> Result<BaseLearnerKind> {
        Ok(match self {
            LearnerId::TNn => BaseLearnerKind::T,
            LearnerId::SNn => BaseLearnerKind::S,
            LearnerId::YNn => BaseLearnerKind::Y,
            other => {
                return Err(Error::config(format!(
                    "transfer strategies support t-nn, s-nn, y-nn; got {}",
                    other.name()
                )))
            }
        })
    }
}

fn parse_strategy(s: &str) -> Result<Strategy> {
    Ok(match s {
        "baseline" => Strategy::Baseline,
        "warm" => Strategy::Warm,
        "frozen" => Strategy::Frozen,
        "multi-head" => Strategy::MultiHead,
        "joint" => Strategy::Joint,
        "sf-reptile" => Strategy::SfReptile,
        "mlrw" => Strategy::Mlrw,
        other => return Err(Error::config(format!("unknown transfer '{other}'"))),
    })
}

/// One method column of a sweep: a learner, an optional transfer strategy,
/// and hyperparameter overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub learner: LearnerId,
    #[serde(default)]
    pub transfer: Option<Strategy>,
    #[serde(default)]
    pub hidden: Option<Vec<usize>>,
    #[serde(default)]
    pub max_steps: Option<usize>,
    #[serde(default)]
    pub inner_iters: Option<usize>,
    #[serde(default)]
    pub outer_iters: Option<usize>,
    #[serde(default)]
    pub adaptation_samples: Option<usize>,
    #[serde(default)]
    pub k_frozen_layers: Option<usize>,
}

impl MethodSpec {
    pub fn plain(learner: LearnerId) -> Self {
        MethodSpec {
            learner,
            transfer: None,
            hidden: None,
            max_steps: None,
            inner_iters: None,
            outer_iters: None,
            adaptation_samples: None,
            k_frozen_layers: None,
        }
    }

    pub fn with_transfer(learner: LearnerId, strategy: Strategy) -> Self {
        MethodSpec {
            transfer: Some(strategy),
            ..Self::plain(learner)
        }
    }

    /// Canonical id: "t-nn", "t-nn/frozen", "mlrw".
    pub fn id(&self) -> String {
        match self.transfer {
            None | Some(Strategy::Baseline) => self.learner.name().to_string(),
            Some(Strategy::Mlrw) => "mlrw".to_string(),
            Some(s) => format!("{}/{}", self.learner.name(), s.name()),
        }
    }

    /// Parses "t-nn", "t-nn/frozen", "mlrw".
    pub fn parse(s: &str) -> Result<Self> {
        if s == "mlrw" {
            return Ok(Self::with_transfer(LearnerId::TNn, Strategy::Mlrw));
        }
        match s.split_once('/') {
            None => Ok(Self::plain(LearnerId::parse(s)?)),
            Some((learner, strategy)) => {
                let learner = LearnerId::parse(learner)?;
                let strategy = parse_strategy(strategy)?;
                if strategy == Strategy::Baseline {
                    return Ok(Self::plain(learner));
                }
                learner.base_learner_kind()?;
                Ok(Self::with_transfer(learner, strategy))
            }
        }
    }

    fn net_arch(&self) -> NetArch {
        NetArch {
            hidden: self.hidden.clone().unwrap_or_else(|| vec![64, 64]),
            ..NetArch::default()
        }
    }
}

/// A full sweep: methods x train sizes x seeds on one DGP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPlan {
    pub dgp: DgpSpec,
    pub methods: Vec<MethodSpec>,
    pub train_sizes: Vec<usize>,
    pub n_seeds: usize,
    pub test_size: usize,
    /// Collection size for transfer methods, target included.
    #[serde(default = "default_n_experiments")]
    pub n_experiments: usize,
    /// Units in each non-target (source) experiment.
    #[serde(default = "default_source_size")]
    pub source_size: usize,
    pub seed: u64,
    #[serde(default)]
    pub jobs: Option<usize>,
}

fn default_n_experiments() -> usize {
    2
}

fn default_source_size() -> usize {
    5000
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        self.dgp.validate()?;
        if self.methods.is_empty() {
            return Err(Error::config("no methods in plan"));
        }
        if self.train_sizes.is_empty() {
            return Err(Error::config("empty train-size grid"));
        }
        if !self.train_sizes.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::config("train sizes must be strictly increasing"));
        }
        if self.n_seeds == 0 {
            return Err(Error::config("n_seeds must be at least 1"));
        }
        if self.test_size == 0 {
            return Err(Error::config("test_size must be at least 1"));
        }
        if self.methods.iter().any(|m| m.transfer.is_some()) && self.n_experiments < 2 {
            return Err(Error::config(
                "transfer methods need n_experiments >= 2",
            ));
        }
        if self.methods.iter().any(|m| {
            m.learner == LearnerId::XNn
                && !matches!(m.transfer, None | Some(Strategy::Mlrw))
        }) {
            return Err(Error::config(
                "x-nn supports no transfer strategies here",
            ));
        }
        Ok(())
    }

    /// The target experiment's index inside a cell's collection.
    pub fn target_index(&self) -> usize {
        self.n_experiments - 1
    }
}

/// One (method, train size, seed) measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub method: String,
    pub dgp: String,
    pub experiment: usize,
    pub train_size: usize,
    pub seed: usize,
    /// NaN when the cell failed; see `error`.
    pub mse: f64,
    pub mse_percent: f64,
    pub wall_time_s: f64,
    pub error: Option<String>,
}

fn make_record(
    plan: &SweepPlan,
    method: &MethodSpec,
    size: usize,
    seed_idx: usize,
    outcome: Result<f64>,
    started: Instant,
) -> EvalRecord {
    let (mse, error) = match outcome {
        Ok(m) => (m, None),
        Err(e) => (f64::NAN, Some(e.to_string())),
    };
    EvalRecord {
        method: method.id(),
        dgp: plan.dgp.id().to_string(),
        experiment: plan.target_index(),
        train_size: size,
        seed: seed_idx,
        mse,
        mse_percent: 100.0 * mse,
        wall_time_s: started.elapsed().as_secs_f64(),
        error,
    }
}

/// The default single-experiment network training config for sweeps.
fn sweep_train_config(max_steps: usize) -> TrainConfig {
    TrainConfig {
        max_steps,
        ..TrainConfig::default()
    }
}

/// Linear models get a decaying rate so they converge tightly.
fn linear_train_config(max_steps: usize) -> TrainConfig {
    TrainConfig {
        max_steps,
        batch_size: 256,
        adam: AdamParams {
            lr: 0.02,
            ..AdamParams::default()
        },
        schedule: LrSchedule::StepDecay {
            every: 2000,
            factor: 0.5,
        },
        plateau: None,
    }
}

/// The target experiment (train+test pool) for one cell.
fn cell_target(plan: &SweepPlan, data_seed: u64, size: usize) -> Result<(ExperimentData, crate::data::Split)> {
    let mut dgp = plan.dgp.clone();
    dgp.seed = data_seed;
    let target = dgp.generate_sized(plan.target_index(), size + plan.test_size)?;
    let mut rng: Prng = rng_from_seed(seed_of!(data_seed, "split", plan.target_index()));
    let split = train_test_split(target.n_units(), plan.test_size, &mut rng)?;
    Ok((target, split))
}

/// Source experiments plus the target, as a collection.
fn cell_collection(
    plan: &SweepPlan,
    data_seed: u64,
    size: usize,
) -> Result<ExperimentCollection> {
    let mut dgp = plan.dgp.clone();
    dgp.seed = data_seed;
    let mut experiments = Vec::with_capacity(plan.n_experiments);
    let mut splits = Vec::with_capacity(plan.n_experiments);
    for i in 0..plan.target_index() {
        let e = dgp.generate_sized(i, plan.source_size)?;
        splits.push(crate::data::Split::all_train(e.n_units()));
        experiments.push(e);
    }
    let (target, split) = cell_target(plan, data_seed, size)?;
    experiments.push(target);
    splits.push(split);
    ExperimentCollection::new(experiments, splits)
}

/// Group-mean oracle: per-label arm means on the training units,
/// differenced, read off for each test unit's label.
fn oracle_group_mean_tau(
    train: &ExperimentData,
    test: &ExperimentData,
) -> Result<Vec<f64>> {
    let train_labels = train
        .labels
        .as_ref()
        .ok_or_else(|| Error::config("oracle-group-mean needs label data"))?;
    let test_labels = test
        .labels
        .as_ref()
        .ok_or_else(|| Error::config("oracle-group-mean needs label data"))?;
    let mut sums = [[0.0f64; 10]; 2];
    let mut counts = [[0usize; 10]; 2];
    let (mut arm_sum, mut arm_count) = ([0.0f64; 2], [0usize; 2]);
    for i in 0..train.n_units() {
        let (w, c) = (train.w[i] as usize, train_labels[i] as usize);
        sums[w][c] += train.y_obs[i];
        counts[w][c] += 1;
        arm_sum[w] += train.y_obs[i];
        arm_count[w] += 1;
    }
    let arm_mean = |w: usize| arm_sum[w] / arm_count[w].max(1) as f64;
    let mean = |w: usize, c: usize| {
        if counts[w][c] > 0 {
            sums[w][c] / counts[w][c] as f64
        } else {
            arm_mean(w)
        }
    };
    Ok(test_labels
        .iter()
        .map(|&c| mean(1, c as usize) - mean(0, c as usize))
        .collect())
}

/// Fits one plain (non-transfer, non-oracle) method on an experiment. This
/// is the single-fit entry point the CLI `fit` subcommand uses.
pub fn fit_method_model(
    method: &MethodSpec,
    train: &ExperimentData,
    seed: u64,
) -> Result<CateModel> {
    let steps = method.max_steps.unwrap_or(10_000);
    let net_cfg = LearnerConfig {
        base: BaseConfig::Network {
            arch: method.net_arch(),
        },
        train: sweep_train_config(steps),
        arm_seeds: None,
    };
    let forest_cfg = LearnerConfig {
        base: BaseConfig::Forest {
            params: ForestParams::default(),
        },
        ..LearnerConfig::default()
    };
    let linear_cfg = LearnerConfig {
        base: BaseConfig::Linear,
        train: linear_train_config(method.max_steps.unwrap_or(16_000)),
        arm_seeds: None,
    };
    match method.learner {
        LearnerId::TNn => fit_t_learner(train, &net_cfg, seed),
        LearnerId::SNn => fit_s_learner(train, &net_cfg, seed),
        LearnerId::YNn => fit_y_learner(train, &net_cfg, seed),
        LearnerId::XNn => fit_x_learner(train, &net_cfg, XWeightingSpec::TreatedFraction, seed),
        LearnerId::TLm => fit_t_learner(train, &linear_cfg, seed),
        LearnerId::SRf => fit_s_learner(train, &forest_cfg, seed),
        LearnerId::TRf => fit_t_learner(train, &forest_cfg, seed),
        LearnerId::OracleGroupMean | LearnerId::OracleZero => Err(Error::config(
            "oracle methods produce predictions, not models",
        )),
    }
}

/// Fits one plain (non-transfer) method and predicts tau on the test set.
fn fit_plain_and_predict(
    method: &MethodSpec,
    train: &ExperimentData,
    test: &ExperimentData,
    seed: u64,
) -> Result<Vec<f64>> {
    match method.learner {
        LearnerId::OracleGroupMean => oracle_group_mean_tau(train, test),
        LearnerId::OracleZero => Ok(vec![0.0; test.n_units()]),
        _ => fit_method_model(method, train, seed)?.predict_tau(&test.x),
    }
}

/// Builds the transfer spec for a method, resolving harness defaults.
fn transfer_spec_for(method: &MethodSpec, strategy: Strategy, size: usize) -> Result<TransferSpec> {
    let mut spec = TransferSpec::new(strategy, method.learner.base_learner_kind()?);
    spec.arch = method.net_arch();
    spec.train = sweep_train_config(method.max_steps.unwrap_or(10_000));
    spec.k_frozen_layers = method
        .k_frozen_layers
        .unwrap_or(spec.arch.hidden.len().max(1));
    spec.inner_iters = method.inner_iters.unwrap_or(20);
    spec.outer_iters = method.outer_iters.unwrap_or(300);
    spec.adaptation_samples = method
        .adaptation_samples
        .unwrap_or_else(|| (size / 4).clamp(1, 100));
    match strategy {
        Strategy::MultiHead | Strategy::Joint => {
            spec.train.max_steps = method.max_steps.unwrap_or(4000);
        }
        _ => {}
    }
    Ok(spec)
}

fn run_transfer_and_predict(
    plan: &SweepPlan,
    method: &MethodSpec,
    strategy: Strategy,
    size: usize,
    data_seed: u64,
    train_seed: u64,
) -> Result<Vec<f64>> {
    let spec = transfer_spec_for(method, strategy, size)?;
    let target = plan.target_index();
    let collection = cell_collection(plan, data_seed, size)?;
    let test = collection.test_data(target);
    match strategy {
        Strategy::Mlrw => {
            let taus = run_mlrw(&collection, &spec, train_seed)?;
            Ok(taus.into_iter().nth(target).unwrap())
        }
        Strategy::Warm | Strategy::Frozen => {
            // Warm and frozen fix one source (the first experiment) and one
            // target (the second); hand them exactly that pair.
            let pair = ExperimentCollection::new(
                vec![
                    collection.experiment(0).clone(),
                    collection.experiment(target).clone(),
                ],
                vec![
                    collection.split(0).clone(),
                    collection.split(target).clone(),
                ],
            )?;
            let models = run_strategy(&pair, &spec, train_seed)?;
            models[0].predict_tau(&test.x)
        }
        _ => {
            let models = run_strategy(&collection, &spec, train_seed)?;
            models[target].predict_tau(&test.x)
        }
    }
}

fn run_cell(plan: &SweepPlan, method: &MethodSpec, size: usize, seed_idx: usize) -> EvalRecord {
    let started = Instant::now();
    let method_id = method.id();
    let data_seed = seed_of!(plan.seed, "data", plan.dgp.id(), size, seed_idx);
    let train_seed = seed_of!(
        plan.seed,
        "train",
        method_id.as_str(),
        plan.dgp.id(),
        size,
        seed_idx
    );
    let outcome = (|| -> Result<f64> {
        let (target, split) = cell_target(plan, data_seed, size)?;
        let test = target.subset(&split.test);
        let tau_hat = match method.transfer {
            None | Some(Strategy::Baseline) => {
                let train = target.subset(&split.train);
                fit_plain_and_predict(method, &train, &test, train_seed)?
            }
            Some(strategy) => {
                run_transfer_and_predict(plan, method, strategy, size, data_seed, train_seed)?
            }
        };
        let truth = test
            .truth
            .as_ref()
            .ok_or_else(|| Error::config("dgp produced no truth"))?;
        cate_mse(&tau_hat, &truth.tau)
    })();
    make_record(plan, method, size, seed_idx, outcome, started)
}

/// Runs every (method, size, seed) cell of the plan, in parallel, and
/// returns records in canonical (method, size, seed) order. Failures come
/// back as error records, never silently dropped.
pub fn run_sweep(plan: &SweepPlan) -> Result<Vec<EvalRecord>> {
    plan.validate()?;
    let cells: Vec<(usize, usize, usize)> = plan
        .methods
        .iter()
        .enumerate()
        .flat_map(|(m, _)| {
            plan.train_sizes.iter().enumerate().flat_map(move |(s, _)| {
                (0..plan.n_seeds).map(move |k| (m, s, k))
            })
        })
        .collect();
    let run_all = || {
        cells
            .par_iter()
            .map(|&(m, s, k)| run_cell(plan, &plan.methods[m], plan.train_sizes[s], k))
            .collect::<Vec<_>>()
    };
    let records = match plan.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| Error::config(format!("thread pool: {e}")))?
            .install(run_all),
        None => run_all(),
    };
    Ok(records)
}

/// Plan for the X-vs-Y comparison report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareXyPlan {
    pub train_sizes: Vec<usize>,
    pub n_seeds: usize,
    pub test_size: usize,
    pub seed: u64,
    #[serde(default)]
    pub max_steps: Option<usize>,
    #[serde(default)]
    pub jobs: Option<usize>,
}

/// One row of the X-vs-Y comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XyRecord {
    pub sim: usize,
    pub method: String,
    pub train_size: usize,
    pub seed: usize,
    pub mse: f64,
    pub mse_percent: f64,
}

pub const COMPARE_XY_SIMS: usize = 6;

/// Runs the X- and Y-learners over six logistic-linear simulations and a
/// size grid. The directional outcome is reported, not asserted.
pub fn compare_xy(plan: &CompareXyPlan) -> Result<Vec<XyRecord>> {
    if plan.train_sizes.is_empty() || plan.n_seeds == 0 {
        return Err(Error::config("compare-xy needs sizes and seeds"));
    }
    let cells: Vec<(usize, usize, usize, usize)> = (0..COMPARE_XY_SIMS)
        .flat_map(|sim| {
            plan.train_sizes.iter().enumerate().flat_map(move |(s, _)| {
                (0..plan.n_seeds).flat_map(move |k| [(sim, s, k, 0usize), (sim, s, k, 1usize)])
            })
        })
        .collect();
    let run_one = |&(sim, s, k, which): &(usize, usize, usize, usize)| -> XyRecord {
        let size = plan.train_sizes[s];
        let method = if which == 0 {
            MethodSpec::plain(LearnerId::XNn)
        } else {
            MethodSpec::plain(LearnerId::YNn)
        };
        let mut m = method;
        m.max_steps = plan.max_steps;
        let dgp = DgpSpec::new(
            crate::dgp::DgpKind::SimLm,
            size + plan.test_size,
            1,
            seed_of!(plan.seed, "xy-sim", sim),
        );
        let sweep = SweepPlan {
            dgp,
            methods: vec![m.clone()],
            train_sizes: vec![size],
            n_seeds: 1,
            test_size: plan.test_size,
            n_experiments: 1,
            source_size: 0,
            seed: seed_of!(plan.seed, "xy-cell", sim, k),
            jobs: Some(1),
        };
        let rec = run_cell(&sweep, &m, size, 0);
        XyRecord {
            sim,
            method: m.id(),
            train_size: size,
            seed: k,
            mse: rec.mse,
            mse_percent: rec.mse_percent,
        }
    };
    let run_all = || cells.par_iter().map(run_one).collect::<Vec<_>>();
    let records = match plan.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| Error::config(format!("thread pool: {e}")))?
            .install(run_all),
        None => run_all(),
    };
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::DgpKind;

    #[test]
    fn cate_mse_examples() {
        assert_eq!(cate_mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        let shifted: Vec<f64> = [1.0, 2.0, 3.0].iter().map(|v| v + 0.1).collect();
        let got = cate_mse(&shifted, &[1.0, 2.0, 3.0]).unwrap();
        assert!((got - 0.01).abs() < 1e-12);
        // Hand-computed: mean of (0.5^2, 0.1^2, 0.2^2, 0.3^2, 1.0^2).
        let a = [1.5, 0.1, -0.2, 0.3, 2.0];
        let b = [1.0, 0.0, 0.0, 0.0, 1.0];
        let want = (0.25 + 0.01 + 0.04 + 0.09 + 1.0) / 5.0;
        assert!((cate_mse(&a, &b).unwrap() - want).abs() < 1e-12);
        assert!(cate_mse(&[], &[]).is_err());
    }

    #[test]
    fn method_ids_round_trip() {
        for s in [
            "t-nn",
            "s-rf",
            "t-lm",
            "x-nn",
            "y-nn/frozen",
            "t-nn/sf-reptile",
            "s-nn/multi-head",
            "t-nn/joint",
            "mlrw",
            "oracle-zero",
        ] {
            let m = MethodSpec::parse(s).unwrap();
            assert_eq!(m.id(), s, "round trip of {s}");
        }
        assert_eq!(MethodSpec::parse("t-nn/baseline").unwrap().id(), "t-nn");
        assert!(MethodSpec::parse("nope").is_err());
        assert!(MethodSpec::parse("s-rf/frozen").is_err());
    }

    fn tiny_plan() -> SweepPlan {
        let mut m = MethodSpec::plain(LearnerId::TNn);
        m.max_steps = Some(150);
        SweepPlan {
            dgp: DgpSpec::new(DgpKind::SimLm, 2, 1, 11),
            methods: vec![m],
            train_sizes: vec![60],
            n_seeds: 1,
            test_size: 40,
            n_experiments: 1,
            source_size: 0,
            seed: 5,
            jobs: Some(2),
        }
    }

    #[test]
    fn one_cell_plan_yields_exactly_one_record() {
        let records = run_sweep(&tiny_plan()).unwrap();
        assert_eq!(records.len(), 1);
        let r = &records[0];
        assert_eq!(r.method, "t-nn");
        assert_eq!(r.train_size, 60);
        assert!(r.error.is_none(), "{:?}", r.error);
        assert!(r.mse.is_finite());
        assert_eq!(r.mse_percent, 100.0 * r.mse);
    }

    #[test]
    fn oracle_zero_on_zero_effect_dgp_scores_exactly_zero() {
        let mut plan = tiny_plan();
        plan.dgp = DgpSpec::new(DgpKind::Mnist, 2, 1, 3);
        plan.dgp.mnist.zero_effect = true;
        plan.methods = vec![MethodSpec::plain(LearnerId::OracleZero)];
        let records = run_sweep(&plan).unwrap();
        assert_eq!(records[0].mse, 0.0);
        assert_eq!(records[0].mse_percent, 0.0);
    }

    #[test]
    fn adding_an_unrelated_method_leaves_records_unchanged() {
        let mut plan = tiny_plan();
        let solo = run_sweep(&plan).unwrap();
        plan.methods.push(MethodSpec::plain(LearnerId::SRf));
        let both = run_sweep(&plan).unwrap();
        assert_eq!(both.len(), 2);
        assert_eq!(solo[0].mse.to_bits(), both[0].mse.to_bits());
    }

    #[test]
    fn record_cardinality_counts_error_rows() {
        let mut plan = tiny_plan();
        // oracle-group-mean fails on sim-lm (no labels) but must still
        // produce its records.
        plan.methods = vec![
            MethodSpec::plain(LearnerId::OracleZero),
            MethodSpec::plain(LearnerId::OracleGroupMean),
        ];
        plan.train_sizes = vec![50, 80];
        plan.n_seeds = 2;
        let records = run_sweep(&plan).unwrap();
        assert_eq!(records.len(), 2 * 2 * 2);
        let failures: Vec<_> = records.iter().filter(|r| r.error.is_some()).collect();
        assert_eq!(failures.len(), 4);
        assert!(failures.iter().all(|r| r.mse.is_nan()));
    }

    #[test]
    fn sweep_plan_validation_catches_misconfiguration() {
        let mut plan = tiny_plan();
        plan.train_sizes = vec![100, 100];
        assert!(plan.validate().is_err());
        let mut plan = tiny_plan();
        plan.methods[0].transfer = Some(Strategy::Frozen);
        plan.n_experiments = 1;
        assert!(plan.validate().is_err());
    }

    #[test]
    fn transfer_cells_produce_records() {
        let mut m = MethodSpec::with_transfer(LearnerId::TNn, Strategy::Frozen);
        m.max_steps = Some(120);
        let mut mlrw = MethodSpec::with_transfer(LearnerId::TNn, Strategy::Mlrw);
        mlrw.outer_iters = Some(5);
        mlrw.inner_iters = Some(5);
        let plan = SweepPlan {
            dgp: DgpSpec::new(DgpKind::SimLm, 2, 2, 17),
            methods: vec![m, mlrw],
            train_sizes: vec![80],
            n_seeds: 1,
            test_size: 40,
            n_experiments: 2,
            source_size: 200,
            seed: 6,
            jobs: Some(2),
        };
        let records = run_sweep(&plan).unwrap();
        assert_eq!(records.len(), 2);
        for r in &records {
            assert!(r.error.is_none(), "{}: {:?}", r.method, r.error);
            assert!(r.mse.is_finite());
        }
    }
}
