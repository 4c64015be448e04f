//! The four-step semi-synthetic recipe: fit response surfaces on observed
//! data, declare those fits the truth, and redraw outcomes from them.
//!
//! 1. Fit the chosen base estimator on the treated and control units
//!    separately, giving surfaces mu0_hat and mu1_hat.
//! 2. Keep the units' covariates and treatment assignments.
//! 3. Attach tau_i = mu1_hat(X_i) - mu0_hat(X_i) as the true CATE.
//! 4. Redraw each observed outcome as Bernoulli(mu_{ W_i }(X_i)).
//!
//! A linear base gives "version 1", a random forest "version 2".

use rand::Rng;

use crate::data::{ExperimentData, OutcomeKind, Truth};
use crate::error::Result;
use crate::forest::{fit_forest, ForestParams};
use crate::matrix::Matrix;
use crate::seed::Prng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SemiSynthBase {
    /// Ordinary least squares on the {0,1} outcomes (version 1).
    Linear,
    /// A bagged regression forest (version 2).
    Forest,
}

/// Output of the recipe: the experiment plus how many fitted probabilities
/// had to be clamped into [0,1].
#[derive(Debug, Clone)]
pub struct SemiSynthOutput {
    pub data: ExperimentData,
    pub clamped: usize,
}

/// Least squares with intercept via normal equations.
#[allow(clippy::needless_range_loop)]
fn least_squares(x: &Matrix, y: &[f64]) -> Vec<f64> {
    let d = x.cols() + 1;
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
    // Gaussian elimination with partial pivoting; a tiny ridge keeps
    // collinear proxy designs solvable.
    for i in 0..d {
        a[i][i] += 1e-9;
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

fn ls_predict(beta: &[f64], x: &Matrix) -> Vec<f64> {
    x.iter_rows()
        .map(|row| {
            let mut acc = beta[beta.len() - 1];
            for (b, v) in beta.iter().zip(row) {
                acc += b * v;
            }
            acc
        })
        .collect()
}

/// Fits one arm's surface with the chosen base and evaluates it on all
/// units.
fn fit_surface(
    base: SemiSynthBase,
    x_arm: &Matrix,
    y_arm: &[f64],
    x_all: &Matrix,
    rng: &mut Prng,
) -> Result<Vec<f64>> {
    match base {
        SemiSynthBase::Linear => {
            let beta = least_squares(x_arm, y_arm);
            Ok(ls_predict(&beta, x_all))
        }
        SemiSynthBase::Forest => {
            let seed: u64 = rng.random();
            let forest = fit_forest(x_arm, y_arm, &ForestParams::default(), seed)?;
            forest.predict(x_all)
        }
    }
}

/// Runs the recipe on observed (or proxy) data that has both arms.
pub fn semi_synthetic(
    base: SemiSynthBase,
    input: &ExperimentData,
    rng: &mut Prng,
) -> Result<SemiSynthOutput> {
    let (x0, y0) = input.arm_data(0)?;
    let (x1, y1) = input.arm_data(1)?;
    let raw_mu0 = fit_surface(base, &x0, &y0, &input.x, rng)?;
    let raw_mu1 = fit_surface(base, &x1, &y1, &input.x, rng)?;

    let mut clamped = 0usize;
    let clamp = |v: f64, clamped: &mut usize| -> f64 {
        if (0.0..=1.0).contains(&v) {
            v
        } else {
            *clamped += 1;
            v.clamp(0.0, 1.0)
        }
    };
    let mu0: Vec<f64> = raw_mu0.into_iter().map(|v| clamp(v, &mut clamped)).collect();
    let mu1: Vec<f64> = raw_mu1.into_iter().map(|v| clamp(v, &mut clamped)).collect();

    let y: Vec<f64> = (0..input.n_units())
        .map(|i| {
            let p = if input.w[i] == 0 { mu0[i] } else { mu1[i] };
            rng.random_bool(p) as u8 as f64
        })
        .collect();
    let data = ExperimentData::new(
        input.x.clone(),
        input.w.clone(),
        y,
        OutcomeKind::Binary,
        Some(Truth::from_surfaces(mu0, mu1)),
    )?;
    Ok(SemiSynthOutput { data, clamped })
}
