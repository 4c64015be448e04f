//! Fully synthetic simulations: logistic-linear surfaces (Simulation LM)
//! and forest-derived surfaces with a logit-scale shift (Simulations RF and
//! RFt).

use rand::Rng;

use crate::data::{ExperimentData, OutcomeKind, Truth};
use crate::error::{Error, Result};
use crate::forest::{fit_forest, ForestParams};
use crate::matrix::Matrix;
use crate::nn::logistic;
use crate::seed::{sample_std_normal, sample_without_replacement, Prng};

use super::voter::{draw_overlapping_treatment, sample_voter_covariates};

/// Forest probabilities are clamped into [DELTA, 1-DELTA] before the logit.
const RF_CLAMP_DELTA: f64 = 0.01;
/// The logit shift is N(0, 4), i.e. standard deviation 2.
const RF_SHIFT_SD: f64 = 2.0;

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Simulation LM surfaces on explicit coefficients: mu_w(x) =
/// logistic(x . beta_w).
pub fn lm_surfaces(x: &Matrix, beta: &[f64]) -> Result<Vec<f64>> {
    if beta.len() != x.cols() {
        return Err(Error::dim(x.cols(), beta.len(), "lm coefficients"));
    }
    Ok(x.iter_rows()
        .map(|row| logistic(row.iter().zip(beta).map(|(a, b)| a * b).sum()))
        .collect())
}

/// Simulation LM with given covariates and coefficient vectors.
pub fn sim_lm_from(
    x: Matrix,
    beta0: &[f64],
    beta1: &[f64],
    rng: &mut Prng,
) -> Result<ExperimentData> {
    let mu0 = lm_surfaces(&x, beta0)?;
    let mu1 = lm_surfaces(&x, beta1)?;
    let n = x.rows();
    let w = draw_overlapping_treatment(&vec![0.5; n], rng)?;
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let p = if w[i] == 0 { mu0[i] } else { mu1[i] };
            rng.random_bool(p) as u8 as f64
        })
        .collect();
    ExperimentData::new(
        x,
        w,
        y,
        OutcomeKind::Binary,
        Some(Truth::from_surfaces(mu0, mu1)),
    )
}

/// Simulation LM: voter-schema covariates, per-experiment coefficients
/// beta_w drawn iid standard normal, W ~ Bern(1/2).
pub fn sim_lm(n: usize, rng: &mut Prng) -> Result<ExperimentData> {
    let x = sample_voter_covariates(n, rng)?;
    let d = x.cols();
    let beta0: Vec<f64> = (0..d).map(|_| sample_std_normal(rng)).collect();
    let beta1: Vec<f64> = (0..d).map(|_| sample_std_normal(rng)).collect();
    sim_lm_from(x, &beta0, &beta1, rng)
}

/// The treated surface of Simulation RF: shift the clamped control surface
/// on the logit scale wherever feature `f` is at or above `v`.
pub fn rf_shifted_surface(mu0: &[f64], feature_col: &[f64], v: f64, s: f64) -> Vec<f64> {
    mu0.iter()
        .zip(feature_col)
        .map(|(&p, &f)| {
            let p = p.clamp(RF_CLAMP_DELTA, 1.0 - RF_CLAMP_DELTA);
            if f >= v {
                logistic(logit(p) + s)
            } else {
                p
            }
        })
        .collect()
}

fn rf_simulation(input: &ExperimentData, keep: usize, rng: &mut Prng) -> Result<ExperimentData> {
    if keep < 2 {
        return Err(Error::config(format!("need at least 2 units, got {keep}")));
    }
    // The control surface is a forest fit to the full observed data.
    let seed: u64 = rng.random();
    let forest = fit_forest(&input.x, &input.y_obs, &ForestParams::default(), seed)?;

    let kept = if keep < input.n_units() {
        let idx = sample_without_replacement(input.n_units(), keep, rng);
        input.subset(&idx)
    } else {
        input.clone()
    };

    let raw_mu0 = forest.predict(&kept.x)?;
    let mu0: Vec<f64> = raw_mu0
        .iter()
        .map(|p| p.clamp(RF_CLAMP_DELTA, 1.0 - RF_CLAMP_DELTA))
        .collect();

    let f = rng.random_range(0..kept.n_features());
    let feature_col = kept.x.column(f);
    // A random value in the observed support of the feature.
    let v = feature_col[rng.random_range(0..feature_col.len())];
    let s = RF_SHIFT_SD * sample_std_normal(rng);
    let mu1 = rf_shifted_surface(&mu0, &feature_col, v, s);

    let n = kept.n_units();
    let w = draw_overlapping_treatment(&vec![0.5; n], rng)?;
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let p = if w[i] == 0 { mu0[i] } else { mu1[i] };
            rng.random_bool(p) as u8 as f64
        })
        .collect();
    ExperimentData::new(
        kept.x,
        w,
        y,
        OutcomeKind::Binary,
        Some(Truth::from_surfaces(mu0, mu1)),
    )
}

/// Simulation RF on all units of the input experiment.
pub fn sim_rf(input: &ExperimentData, rng: &mut Prng) -> Result<ExperimentData> {
    rf_simulation(input, input.n_units(), rng)
}

/// Simulation RFt: as RF but keeping only one percent of the units.
pub fn sim_rft(input: &ExperimentData, rng: &mut Prng) -> Result<ExperimentData> {
    let keep = (input.n_units() / 100).max(2);
    rf_simulation(input, keep, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::voter::proxy_voter_experiment;
    use crate::seed::rng_from_seed;

    #[test]
    fn zero_coefficients_give_half_probabilities_and_zero_tau() {
        let mut rng = rng_from_seed(1);
        let x = sample_voter_covariates(50, &mut rng).unwrap();
        let zeros = vec![0.0; x.cols()];
        let e = sim_lm_from(x, &zeros, &zeros, &mut rng).unwrap();
        let t = e.truth.as_ref().unwrap();
        assert!(t.mu0.iter().all(|&p| p == 0.5));
        assert!(t.tau.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn equal_coefficients_give_zero_tau() {
        let mut rng = rng_from_seed(2);
        let x = sample_voter_covariates(50, &mut rng).unwrap();
        let beta: Vec<f64> = (0..x.cols()).map(|i| 0.1 * i as f64 - 0.4).collect();
        let e = sim_lm_from(x, &beta, &beta, &mut rng).unwrap();
        assert!(e.truth.unwrap().tau.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_row_has_zero_tau_regardless_of_coefficients() {
        let mut rng = rng_from_seed(3);
        let mut x = sample_voter_covariates(10, &mut rng).unwrap();
        for v in x.row_mut(0) {
            *v = 0.0;
        }
        let beta0: Vec<f64> = (0..11).map(|_| sample_std_normal(&mut rng)).collect();
        let beta1: Vec<f64> = (0..11).map(|_| sample_std_normal(&mut rng)).collect();
        let e = sim_lm_from(x, &beta0, &beta1, &mut rng).unwrap();
        let t = e.truth.as_ref().unwrap();
        assert_eq!(t.mu0[0], 0.5);
        assert_eq!(t.mu1[0], 0.5);
        assert_eq!(t.tau[0], 0.0);
    }

    #[test]
    fn zero_shift_keeps_surfaces_identical() {
        let mu0 = vec![0.2, 0.5, 0.9];
        let col = vec![1.0, 2.0, 3.0];
        let mu1 = rf_shifted_surface(&mu0, &col, 2.0, 0.0);
        for (a, b) in mu0.iter().zip(&mu1) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn units_below_the_threshold_have_exactly_zero_tau() {
        let mu0 = vec![0.4];
        let mu1 = rf_shifted_surface(&mu0, &[1.0], 2.0, 1.7);
        assert_eq!(mu1[0], 0.4);
    }

    #[test]
    fn shift_formula_matches_direct_evaluation() {
        // mu0 = 0.5, s = 1, f >= v: mu1 = logistic(1) ~ 0.7311.
        let mu1 = rf_shifted_surface(&[0.5], &[3.0], 2.0, 1.0);
        assert!((mu1[0] - 0.7310585786300049).abs() < 1e-12);
        assert!((mu1[0] - 0.5 - 0.2310585786300049).abs() < 1e-12);
    }

    #[test]
    fn rf_simulations_produce_valid_truth() {
        let mut rng = rng_from_seed(5);
        let input = proxy_voter_experiment(600, &mut rng).unwrap();
        let full = sim_rf(&input, &mut rng).unwrap();
        assert_eq!(full.n_units(), 600);
        let small = sim_rft(&input, &mut rng).unwrap();
        assert_eq!(small.n_units(), 6);
        for e in [full, small] {
            let t = e.truth.as_ref().unwrap();
            for i in 0..e.n_units() {
                assert!((0.0..=1.0).contains(&t.mu0[i]));
                assert!((0.0..=1.0).contains(&t.mu1[i]));
                assert_eq!(t.tau[i], t.mu1[i] - t.mu0[i]);
            }
        }
    }
}
