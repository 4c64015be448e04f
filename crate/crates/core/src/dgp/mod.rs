//! Data-generating processes with attached ground truth.
//!
//! Every process is a pure function of its spec and seed: experiment `i`
//! of a collection draws everything from the seed (spec.seed, "experiment",
//! i), so regenerating any experiment is cheap and exact.

pub mod mnist;
pub mod semi;
pub mod sim;
pub mod voter;

pub use mnist::{
    build_mnist_experiment, mnist_dgp, pool_images, synthetic_digit_images, MnistDgpParams,
    MnistOutcomes, PixelFeatures,
};
pub use semi::{semi_synthetic, SemiSynthBase, SemiSynthOutput};
pub use sim::{lm_surfaces, rf_shifted_surface, sim_lm, sim_lm_from, sim_rf, sim_rft};
pub use voter::{proxy_voter_experiment, sample_voter_covariates, VOTER_DIM};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::data::ExperimentData;
use crate::error::{Error, Result};
use crate::seed::{rng_from_seed, sample_without_replacement};
use crate::seed_of;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DgpKind {
    SemiSynthV1,
    SemiSynthV2,
    SimLm,
    SimRf,
    SimRft,
    Mnist,
}

impl DgpKind {
    pub fn name(&self) -> &'static str {
        match self {
            DgpKind::SemiSynthV1 => "semi-synth-v1",
            DgpKind::SemiSynthV2 => "semi-synth-v2",
            DgpKind::SimLm => "sim-lm",
            DgpKind::SimRf => "sim-rf",
            DgpKind::SimRft => "sim-rft",
            DgpKind::Mnist => "mnist",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "semi-synth-v1" => Ok(DgpKind::SemiSynthV1),
            "semi-synth-v2" => Ok(DgpKind::SemiSynthV2),
            "sim-lm" => Ok(DgpKind::SimLm),
            "sim-rf" => Ok(DgpKind::SimRf),
            "sim-rft" => Ok(DgpKind::SimRft),
            "mnist" => Ok(DgpKind::Mnist),
            other => Err(Error::config(format!(
                "unknown dgp '{other}'; expected one of semi-synth-v1, semi-synth-v2, \
                 sim-lm, sim-rf, sim-rft, mnist"
            ))),
        }
    }
}

/// Where MNIST images come from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum MnistSource {
    /// Label-coded synthetic images; no dataset files needed.
    Synthetic,
    /// Official IDX files (optionally gzipped).
    Idx { images: PathBuf, labels: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MnistOptions {
    pub source: MnistSource,
    pub features: PixelFeatures,
    /// Force t = 0 for every label (zero treatment effect everywhere).
    pub zero_effect: bool,
}

impl Default for MnistOptions {
    fn default() -> Self {
        MnistOptions {
            source: MnistSource::Synthetic,
            features: PixelFeatures::Pooled,
            zero_effect: false,
        }
    }
}

fn default_mnist_options() -> MnistOptions {
    MnistOptions::default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgpSpec {
    pub kind: DgpKind,
    pub n_units: usize,
    pub n_experiments: usize,
    pub seed: u64,
    #[serde(default = "default_mnist_options")]
    pub mnist: MnistOptions,
}

impl DgpSpec {
    pub fn new(kind: DgpKind, n_units: usize, n_experiments: usize, seed: u64) -> Self {
        DgpSpec {
            kind,
            n_units,
            n_experiments,
            seed,
            mnist: MnistOptions::default(),
        }
    }

    pub fn id(&self) -> &'static str {
        self.kind.name()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_units < 2 {
            return Err(Error::config("n_units must be at least 2"));
        }
        if self.n_experiments == 0 {
            return Err(Error::config("n_experiments must be at least 1"));
        }
        Ok(())
    }

    /// Generates experiment `index` with `n_units` overridden, used by the
    /// harness to give sources and targets different sizes.
    pub fn generate_sized(&self, index: usize, n_units: usize) -> Result<ExperimentData> {
        self.validate()?;
        if n_units < 2 {
            return Err(Error::config("n_units must be at least 2"));
        }
        let mut rng = rng_from_seed(seed_of!(self.seed, "experiment", index));
        match self.kind {
            DgpKind::SemiSynthV1 => {
                let input = proxy_voter_experiment(n_units, &mut rng)?;
                Ok(semi_synthetic(SemiSynthBase::Linear, &input, &mut rng)?.data)
            }
            DgpKind::SemiSynthV2 => {
                let input = proxy_voter_experiment(n_units, &mut rng)?;
                Ok(semi_synthetic(SemiSynthBase::Forest, &input, &mut rng)?.data)
            }
            DgpKind::SimLm => sim_lm(n_units, &mut rng),
            DgpKind::SimRf => {
                let input = proxy_voter_experiment(n_units, &mut rng)?;
                sim_rf(&input, &mut rng)
            }
            DgpKind::SimRft => {
                // RFt takes one percent of the input experiment's units, so
                // the proxy is drawn 100x larger.
                let input = proxy_voter_experiment(n_units.saturating_mul(100), &mut rng)?;
                sim_rft(&input, &mut rng)
            }
            DgpKind::Mnist => {
                let (images, labels) = match &self.mnist.source {
                    MnistSource::Synthetic => synthetic_digit_images(n_units, &mut rng)?,
                    MnistSource::Idx {
                        images: ipath,
                        labels: lpath,
                    } => {
                        let images = crate::mnist_io::read_idx(ipath)?.to_normalized_rows()?;
                        let labels = crate::mnist_io::read_idx(lpath)?.to_labels()?;
                        if images.rows() != labels.len() {
                            return Err(Error::dim(
                                images.rows(),
                                labels.len(),
                                "idx image/label counts",
                            ));
                        }
                        if n_units > images.rows() {
                            return Err(Error::config(format!(
                                "requested {n_units} units, dataset has {}",
                                images.rows()
                            )));
                        }
                        let pick =
                            sample_without_replacement(images.rows(), n_units, &mut rng);
                        let sub_images = images.select_rows(&pick);
                        let sub_labels: Vec<u8> = pick.iter().map(|&i| labels[i]).collect();
                        (sub_images, sub_labels)
                    }
                };
                let mut params = MnistDgpParams::sample(&mut rng);
                if self.mnist.zero_effect {
                    params = params.with_zero_effect();
                }
                build_mnist_experiment(&images, &labels, &params, self.mnist.features, &mut rng)
            }
        }
    }

    pub fn generate_experiment(&self, index: usize) -> Result<ExperimentData> {
        self.generate_sized(index, self.n_units)
    }

    pub fn generate_collection(&self) -> Result<Vec<ExperimentData>> {
        (0..self.n_experiments)
            .map(|i| self.generate_experiment(i))
            .collect()
    }
}
