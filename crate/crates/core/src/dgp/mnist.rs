//! The label-conditioned image DGP: response surfaces and propensities
//! depend only on the digit label, while learners see the raw pixels.
//!
//! Per experiment, label weights are drawn as m ~ U(-3,3), t ~ U(-1,1),
//! p ~ U(0.3,0.7), and each unit with label C gets
//!
//! - mu0(C) = m(C) + 3C, mu1(C) = mu0(C) + t(C),
//! - Y(0) = mu0 + eps, Y(1) = mu1 + eps with one shared eps ~ N(0,1), so
//!   the individual effect is exactly t(C),
//! - W ~ Bern(p(C)), keeping every propensity inside [0.3, 0.7].

use rand::Rng;

use crate::data::{ExperimentData, OutcomeKind, Truth};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed::{sample_std_normal, Prng};
use serde::{Deserialize, Serialize};

use super::voter::draw_overlapping_treatment;

pub const IMAGE_SIDE: usize = 28;
pub const IMAGE_PIXELS: usize = IMAGE_SIDE * IMAGE_SIDE;
pub const POOLED_SIDE: usize = 7;
pub const POOLED_PIXELS: usize = POOLED_SIDE * POOLED_SIDE;

/// Per-label DGP weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MnistDgpParams {
    pub m: [f64; 10],
    pub t: [f64; 10],
    pub p: [f64; 10],
}

impl MnistDgpParams {
    pub fn sample(rng: &mut Prng) -> Self {
        MnistDgpParams {
            m: std::array::from_fn(|_| rng.random_range(-3.0..3.0)),
            t: std::array::from_fn(|_| rng.random_range(-1.0..1.0)),
            p: std::array::from_fn(|_| rng.random_range(0.3..0.7)),
        }
    }

    /// Forces a zero treatment effect for every label.
    pub fn with_zero_effect(mut self) -> Self {
        self.t = [0.0; 10];
        self
    }

    pub fn mu0(&self, label: u8) -> f64 {
        self.m[label as usize] + 3.0 * label as f64
    }

    pub fn mu1(&self, label: u8) -> f64 {
        self.mu0(label) + self.t[label as usize]
    }

    pub fn propensity(&self, label: u8) -> f64 {
        self.p[label as usize]
    }
}

/// Potential outcomes, assignment, and truth for a label vector.
#[derive(Debug, Clone)]
pub struct MnistOutcomes {
    pub y0: Vec<f64>,
    pub y1: Vec<f64>,
    pub w: Vec<u8>,
    pub y_obs: Vec<f64>,
    pub mu0: Vec<f64>,
    pub mu1: Vec<f64>,
    pub tau: Vec<f64>,
}

/// Draws the outcome side of the DGP from labels alone.
pub fn mnist_dgp(labels: &[u8], params: &MnistDgpParams, rng: &mut Prng) -> Result<MnistOutcomes> {
    if labels.is_empty() {
        return Err(Error::EmptyInput("labels"));
    }
    if let Some(&bad) = labels.iter().find(|&&c| c > 9) {
        return Err(Error::config(format!("label {bad} out of range 0..=9")));
    }
    let n = labels.len();
    let mu0: Vec<f64> = labels.iter().map(|&c| params.mu0(c)).collect();
    let mu1: Vec<f64> = labels.iter().map(|&c| params.mu1(c)).collect();
    let mut y0 = vec![0.0; n];
    let mut y1 = vec![0.0; n];
    for i in 0..n {
        // One shared noise draw per unit across both potential outcomes.
        let eps = sample_std_normal(rng);
        y0[i] = mu0[i] + eps;
        y1[i] = mu1[i] + eps;
    }
    let propensity: Vec<f64> = labels.iter().map(|&c| params.propensity(c)).collect();
    let w = draw_overlapping_treatment(&propensity, rng)?;
    let y_obs: Vec<f64> = (0..n)
        .map(|i| if w[i] == 0 { y0[i] } else { y1[i] })
        .collect();
    let tau: Vec<f64> = mu1.iter().zip(&mu0).map(|(a, b)| a - b).collect();
    Ok(MnistOutcomes {
        y0,
        y1,
        w,
        y_obs,
        mu0,
        mu1,
        tau,
    })
}

/// How images are presented to the learners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PixelFeatures {
    /// Flattened 28x28 pixels in [0,1].
    Full,
    /// 7x7 average pooling (4x4 windows), 49 features.
    Pooled,
}

/// 4x4 average pooling of flattened 28x28 images down to 7x7.
pub fn pool_images(images: &Matrix) -> Result<Matrix> {
    if images.cols() != IMAGE_PIXELS {
        return Err(Error::dim(IMAGE_PIXELS, images.cols(), "pooling input"));
    }
    let mut out = Matrix::zeros(images.rows(), POOLED_PIXELS);
    for r in 0..images.rows() {
        let src = images.row(r);
        let dst = out.row_mut(r);
        for by in 0..POOLED_SIDE {
            for bx in 0..POOLED_SIDE {
                let mut acc = 0.0;
                for dy in 0..4 {
                    for dx in 0..4 {
                        acc += src[(by * 4 + dy) * IMAGE_SIDE + (bx * 4 + dx)];
                    }
                }
                dst[by * POOLED_SIDE + bx] = acc / 16.0;
            }
        }
    }
    Ok(out)
}

/// Label-coded stand-in images for runs without the real dataset: a bright
/// block whose position encodes the label, over low background noise.
pub fn synthetic_digit_images(n: usize, rng: &mut Prng) -> Result<(Matrix, Vec<u8>)> {
    if n == 0 {
        return Err(Error::EmptyInput("synthetic images"));
    }
    let mut images = Matrix::zeros(n, IMAGE_PIXELS);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label: u8 = rng.random_range(0..10);
        labels.push(label);
        let row0 = 2 + 5 * (label as usize % 5);
        let col0 = 2 + 13 * (label as usize / 5);
        let px = images.row_mut(i);
        for v in px.iter_mut() {
            *v = rng.random_range(0.0..0.2);
        }
        for dy in 0..6 {
            for dx in 0..10 {
                px[(row0 + dy) * IMAGE_SIDE + (col0 + dx)] = rng.random_range(0.75..0.95);
            }
        }
    }
    Ok((images, labels))
}

/// Assembles a full experiment: pixel features, outcomes from the label
/// DGP, truth, and the labels themselves for oracle baselines.
pub fn build_mnist_experiment(
    images: &Matrix,
    labels: &[u8],
    params: &MnistDgpParams,
    features: PixelFeatures,
    rng: &mut Prng,
) -> Result<ExperimentData> {
    if images.rows() != labels.len() {
        return Err(Error::dim(images.rows(), labels.len(), "image labels"));
    }
    let outcomes = mnist_dgp(labels, params, rng)?;
    let x = match features {
        PixelFeatures::Full => images.clone(),
        PixelFeatures::Pooled => pool_images(images)?,
    };
    let mut data = ExperimentData::new(
        x,
        outcomes.w,
        outcomes.y_obs,
        OutcomeKind::Continuous,
        Some(Truth {
            mu0: outcomes.mu0,
            mu1: outcomes.mu1,
            tau: outcomes.tau,
        }),
    )?;
    data.labels = Some(labels.to_vec());
    Ok(data)
}
