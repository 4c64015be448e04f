//! Shared-base strategies: multi-head and joint training.
//!
//! Multi-head keeps one base per component (per arm for the T-learner) that
//! all experiments share, plus one head per (experiment, component).
//! Training round-robins over experiments, updating the visited
//! experiment's heads together with the shared bases.
//!
//! Joint training shares a single base across every component of every
//! experiment and minimizes the summed loss: each iteration accumulates the
//! base gradient over all (experiment, component) terms and applies one
//! update, while each head takes its own term's gradient.

use super::{
    compose, fresh_head, split_at, y_step_targets, BaseLearnerKind, CateModel,
    ExperimentCollection, ExperimentView, ModelMeta, Regressor, TransferSpec,
};
use crate::error::Result;
use crate::learners::output_kind_for;
use crate::nn::train::sample_batch;
use crate::nn::{adam_step, AdamState, Batch, DenseNetwork, Gradients, NetworkConfig, OutputKind};
use crate::seed::{rng_from_seed, Prng};
use crate::seed_of;
use rand::Rng;

fn n_components(kind: BaseLearnerKind) -> usize {
    match kind {
        BaseLearnerKind::T => 2,
        BaseLearnerKind::S => 1,
        BaseLearnerKind::Y => 3,
    }
}

fn component_input_dim(kind: BaseLearnerKind, d: usize) -> usize {
    match kind {
        BaseLearnerKind::S => d + 1,
        _ => d,
    }
}

fn component_output(kind: BaseLearnerKind, outcome: crate::data::OutcomeKind) -> OutputKind {
    match kind {
        BaseLearnerKind::Y => OutputKind::Identity,
        _ => output_kind_for(outcome),
    }
}

/// Builds the shared base stack: the first `k` layers of the full
/// architecture, freshly initialized.
fn fresh_base(spec: &TransferSpec, input_dim: usize, seed: u64) -> Result<DenseNetwork> {
    let cfg = NetworkConfig {
        input_dim,
        hidden: spec.arch.hidden.clone(),
        activation: spec.arch.activation,
        output: OutputKind::Identity,
        zero_init_output: false,
    };
    let mut rng = rng_from_seed(seed);
    let full = DenseNetwork::new(&cfg, &mut rng)?;
    let prefix = split_at(&full, spec.k_frozen_layers);
    DenseNetwork::from_layers(prefix, spec.arch.activation, OutputKind::Identity)
}

/// One composite backward pass: returns (base gradient part, head gradient
/// part) for `head(base(x))` against `targets`.
fn composite_grads(
    base: &DenseNetwork,
    head: &DenseNetwork,
    batch: &Batch,
) -> Result<(Gradients, Gradients)> {
    let composite = compose(base.layers(), head)?;
    let grads = composite.backward(batch)?;
    let k = base.num_layers();
    let base_part = Gradients {
        layers: grads.layers[..k].to_vec(),
    };
    let head_part = Gradients {
        layers: grads.layers[k..].to_vec(),
    };
    Ok((base_part, head_part))
}

/// Per-component minibatches for one experiment.
fn component_batches(
    kind: BaseLearnerKind,
    view: &ExperimentView,
    bases: &[DenseNetwork],
    heads: &[DenseNetwork],
    batch_size: usize,
    rng: &mut Prng,
) -> Result<Vec<Batch>> {
    match kind {
        BaseLearnerKind::T => Ok(vec![
            sample_batch(&view.x0, &view.y0, batch_size, rng),
            sample_batch(&view.x1, &view.y1, batch_size, rng),
        ]),
        BaseLearnerKind::S => Ok(vec![sample_batch(
            &view.x_aug,
            &view.data.y_obs,
            batch_size,
            rng,
        )]),
        BaseLearnerKind::Y => {
            let n = view.data.n_units();
            let take = batch_size.min(n).max(1);
            let idx: Vec<usize> = (0..take).map(|_| rng.random_range(0..n)).collect();
            let x = view.data.x.select_rows(&idx);
            let w: Vec<u8> = idx.iter().map(|&i| view.data.w[i]).collect();
            let y: Vec<f64> = idx.iter().map(|&i| view.data.y_obs[i]).collect();
            let preds: Vec<Vec<f64>> = (0..3)
                .map(|c| compose(bases[c].layers(), &heads[c])?.forward(&x))
                .collect::<Result<_>>()?;
            let targets = y_step_targets(&w, &y, &preds[0], &preds[1], &preds[2]);
            targets
                .into_iter()
                .map(|t| Batch::new(x.clone(), t))
                .collect()
        }
    }
}

struct MultiHeadState {
    kind: BaseLearnerKind,
    bases: Vec<DenseNetwork>,
    base_states: Vec<AdamState>,
    /// heads[i][c]: experiment i, component c.
    heads: Vec<Vec<DenseNetwork>>,
    head_states: Vec<Vec<AdamState>>,
}

impl MultiHeadState {
    fn init(collection: &ExperimentCollection, spec: &TransferSpec, seed: u64) -> Result<Self> {
        let kind = spec.base_learner;
        let d = component_input_dim(kind, collection.n_features());
        let output = component_output(kind, collection.outcome());
        let n_comp = n_components(kind);
        let mut bases = Vec::new();
        let mut base_states = Vec::new();
        for c in 0..n_comp {
            let base = fresh_base(spec, d, seed_of!(seed, "mh-base", c))?;
            base_states.push(AdamState::new(&base, spec.train.adam)?);
            bases.push(base);
        }
        let feature_dim = bases[0].layers().last().unwrap().out_dim();
        let mut heads = Vec::new();
        let mut head_states = Vec::new();
        for i in 0..collection.n_experiments() {
            let mut row = Vec::new();
            let mut srow = Vec::new();
            for c in 0..n_comp {
                let head = fresh_head(
                    &spec.arch,
                    spec.k_frozen_layers,
                    feature_dim,
                    output,
                    seed_of!(seed, "mh-head", i, c),
                )?;
                srow.push(AdamState::new(&head, spec.train.adam)?);
                row.push(head);
            }
            heads.push(row);
            head_states.push(srow);
        }
        Ok(MultiHeadState {
            kind,
            bases,
            base_states,
            heads,
            head_states,
        })
    }

    /// `steps` updates on experiment `i`: every step updates the shared
    /// bases and this experiment's heads; no other head is touched.
    fn visit(
        &mut self,
        i: usize,
        view: &ExperimentView,
        steps: usize,
        batch_size: usize,
        rng: &mut Prng,
    ) -> Result<()> {
        for _ in 0..steps {
            let batches =
                component_batches(self.kind, view, &self.bases, &self.heads[i], batch_size, rng)?;
            for (c, batch) in batches.iter().enumerate() {
                let (gb, gh) = composite_grads(&self.bases[c], &self.heads[i][c], batch)?;
                adam_step(&mut self.bases[c], &mut self.base_states[c], &gb)?;
                adam_step(&mut self.heads[i][c], &mut self.head_states[i][c], &gh)?;
            }
        }
        Ok(())
    }

    fn model_for(&self, i: usize, meta: ModelMeta) -> Result<CateModel> {
        composed_model(self.kind, &self.bases, &self.heads[i], meta)
    }
}

fn composed_model(
    kind: BaseLearnerKind,
    bases: &[DenseNetwork],
    heads: &[DenseNetwork],
    meta: ModelMeta,
) -> Result<CateModel> {
    match kind {
        BaseLearnerKind::T => Ok(CateModel::T {
            mu0: Regressor::Net(compose(bases[0].layers(), &heads[0])?),
            mu1: Regressor::Net(compose(bases[1].layers(), &heads[1])?),
            meta,
        }),
        BaseLearnerKind::S => Ok(CateModel::S {
            mu: Regressor::Net(compose(bases[0].layers(), &heads[0])?),
            meta,
        }),
        BaseLearnerKind::Y => Ok(CateModel::Y {
            tau: compose(bases[2].layers(), &heads[2])?,
            meta,
        }),
    }
}

/// Steps per (experiment, component) visit in the round-robin schedule.
const STEPS_PER_VISIT: usize = 10;

/// Multi-head training over the collection; returns one model per
/// experiment, each composing the shared bases with that experiment's heads.
pub fn run_multi_head(
    collection: &ExperimentCollection,
    spec: &TransferSpec,
    seed: u64,
) -> Result<Vec<CateModel>> {
    collection.require(1, "multi-head")?;
    spec.validate()?;
    let views: Vec<ExperimentView> = (0..collection.n_experiments())
        .map(|i| ExperimentView::new(collection.train_data(i)))
        .collect::<Result<_>>()?;
    let mut state = MultiHeadState::init(collection, spec, seed)?;
    let mut rng = rng_from_seed(seed_of!(seed, "mh-train"));
    let rounds = spec.train.max_steps.div_ceil(STEPS_PER_VISIT);
    for _ in 0..rounds {
        for (i, view) in views.iter().enumerate() {
            state.visit(i, view, STEPS_PER_VISIT, spec.train.batch_size, &mut rng)?;
        }
    }
    (0..collection.n_experiments())
        .map(|i| {
            state.model_for(
                i,
                ModelMeta {
                    seed,
                    train_size: views[i].data.n_units(),
                    steps: rounds * STEPS_PER_VISIT,
                },
            )
        })
        .collect()
}

/// Joint training: one shared base, one head per (experiment, component),
/// single summed loss. Returns one model per experiment.
pub fn run_joint(
    collection: &ExperimentCollection,
    spec: &TransferSpec,
    seed: u64,
) -> Result<Vec<CateModel>> {
    collection.require(1, "joint")?;
    spec.validate()?;
    let kind = spec.base_learner;
    let n_exp = collection.n_experiments();
    let n_comp = n_components(kind);
    let d = component_input_dim(kind, collection.n_features());
    let output = component_output(kind, collection.outcome());
    let views: Vec<ExperimentView> = (0..n_exp)
        .map(|i| ExperimentView::new(collection.train_data(i)))
        .collect::<Result<_>>()?;

    let mut base = fresh_base(spec, d, seed_of!(seed, "joint-base"))?;
    let mut base_state = AdamState::new(&base, spec.train.adam)?;
    let feature_dim = base.layers().last().unwrap().out_dim();
    let mut heads: Vec<Vec<DenseNetwork>> = Vec::new();
    let mut head_states: Vec<Vec<AdamState>> = Vec::new();
    for i in 0..n_exp {
        let mut row = Vec::new();
        let mut srow = Vec::new();
        for c in 0..n_comp {
            let head = fresh_head(
                &spec.arch,
                spec.k_frozen_layers,
                feature_dim,
                output,
                seed_of!(seed, "joint-head", i, c),
            )?;
            srow.push(AdamState::new(&head, spec.train.adam)?);
            row.push(head);
        }
        heads.push(row);
        head_states.push(srow);
    }

    let mut rng = rng_from_seed(seed_of!(seed, "joint-train"));
    let bases_of = |base: &DenseNetwork| vec![base.clone(); n_comp];
    for _ in 0..spec.train.max_steps {
        let mut base_sum: Option<Gradients> = None;
        let base_snapshot = base.clone();
        for i in 0..n_exp {
            let batches = component_batches(
                kind,
                &views[i],
                &bases_of(&base_snapshot),
                &heads[i],
                spec.train.batch_size,
                &mut rng,
            )?;
            for (c, batch) in batches.iter().enumerate() {
                let (gb, gh) = composite_grads(&base_snapshot, &heads[i][c], batch)?;
                match &mut base_sum {
                    Some(sum) => sum.add_assign(&gb),
                    None => base_sum = Some(gb),
                }
                adam_step(&mut heads[i][c], &mut head_states[i][c], &gh)?;
            }
        }
        if let Some(sum) = base_sum {
            adam_step(&mut base, &mut base_state, &sum)?;
        }
    }

    (0..n_exp)
        .map(|i| {
            composed_model(
                kind,
                &vec![base.clone(); n_comp],
                &heads[i],
                ModelMeta {
                    seed,
                    train_size: views[i].data.n_units(),
                    steps: spec.train.max_steps,
                },
            )
        })
        .collect()
}
