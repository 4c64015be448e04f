//! Synthetic voter covariates and the proxy turnout experiment.
//!
//! The covariate schema is 11-dimensional:
//!
//! | col | feature        | range                         |
//! |-----|----------------|-------------------------------|
//! | 0   | age            | years / 100, in (0.18, 0.90)  |
//! | 1-7 | turnout 2006, 2008, 2009, 2010, 2011, 2012, 2013 | {0,1} |
//! | 8   | marital status | {0,1}                         |
//! | 9   | race           | {0,1,2,3} category code       |
//! | 10  | gender         | {0,1}                         |
//!
//! Turnout indicators are correlated across years through a per-person
//! civic-engagement latent: turnout_y ~ Bern(logistic(a_y + 1.5 u)) with
//! u ~ N(0,1) and year intercepts a_y higher in presidential years (2008,
//! 2012) than midterms (2006, 2010) and lowest in odd years.

use rand::Rng;

use crate::data::{ExperimentData, OutcomeKind, Truth};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::logistic;
use crate::seed::{sample_std_normal, Prng};

pub const VOTER_DIM: usize = 11;

/// Year intercepts for [2006, 2008, 2009, 2010, 2011, 2012, 2013].
const YEAR_INTERCEPTS: [f64; 7] = [-0.4, 0.8, -1.2, -0.3, -1.3, 0.9, -1.1];
const CIVIC_LOADING: f64 = 1.5;

/// Samples `n` schema-valid voter covariate rows.
pub fn sample_voter_covariates(n: usize, rng: &mut Prng) -> Result<Matrix> {
    if n == 0 {
        return Err(Error::EmptyInput("voter sample"));
    }
    let mut m = Matrix::zeros(n, VOTER_DIM);
    for i in 0..n {
        let civic = sample_std_normal(rng);
        let row = m.row_mut(i);
        row[0] = rng.random_range(18.0..90.0) / 100.0;
        for (y, &a) in YEAR_INTERCEPTS.iter().enumerate() {
            let p = logistic(a + CIVIC_LOADING * civic);
            row[1 + y] = rng.random_bool(p) as u8 as f64;
        }
        row[8] = rng.random_bool(0.55) as u8 as f64;
        row[9] = {
            let u: f64 = rng.random();
            if u < 0.60 {
                0.0
            } else if u < 0.75 {
                1.0
            } else if u < 0.90 {
                2.0
            } else {
                3.0
            }
        };
        row[10] = rng.random_bool(0.5) as u8 as f64;
    }
    Ok(m)
}

/// Draws a treatment vector from per-unit propensities, redrawing until
/// both arms are populated so the empirical treated fraction stays strictly
/// inside (0,1).
pub(crate) fn draw_overlapping_treatment(propensity: &[f64], rng: &mut Prng) -> Result<Vec<u8>> {
    for _ in 0..1000 {
        let w: Vec<u8> = propensity
            .iter()
            .map(|&p| rng.random_bool(p.clamp(0.0, 1.0)) as u8)
            .collect();
        let treated: usize = w.iter().map(|&v| v as usize).sum();
        if treated > 0 && treated < w.len() {
            return Ok(w);
        }
    }
    Err(Error::config(
        "could not draw a treatment vector with both arms populated",
    ))
}

/// Logit of the proxy turnout outcome: a documented linear score over the
/// schema plus a treatment bump that shrinks with recent turnout.
fn proxy_logit(row: &[f64], w: u8, coefs: &ProxyCoefs) -> f64 {
    let mut z = coefs.intercept + coefs.age * row[0];
    for y in 0..7 {
        z += coefs.turnout[y] * row[1 + y];
    }
    z += 0.1 * row[8] - 0.05 * row[9];
    if w == 1 {
        // Larger effect on units that skipped the last midterm-adjacent
        // election (column 6 is turnout 2012).
        z += 0.10 + 0.15 * (1.0 - row[6]);
    }
    z
}

struct ProxyCoefs {
    intercept: f64,
    age: f64,
    turnout: [f64; 7],
}

impl ProxyCoefs {
    /// Base coefficients with a per-experiment jitter, so that a collection
    /// of proxy experiments is related but not identical.
    fn sample(rng: &mut Prng) -> Self {
        let jitter = |rng: &mut Prng| 0.1 * sample_std_normal(rng);
        ProxyCoefs {
            intercept: -1.0 + jitter(rng),
            age: 0.8 + jitter(rng),
            turnout: std::array::from_fn(|_| 0.35 + jitter(rng)),
        }
    }
}

/// A complete proxy turnout experiment: schema covariates, W ~ Bern(1/2),
/// binary outcomes from the documented logistic mechanism, with the exact
/// response surfaces attached as truth.
pub fn proxy_voter_experiment(n: usize, rng: &mut Prng) -> Result<ExperimentData> {
    let x = sample_voter_covariates(n, rng)?;
    let coefs = ProxyCoefs::sample(rng);
    let w = draw_overlapping_treatment(&vec![0.5; n], rng)?;
    let mu0: Vec<f64> = x.iter_rows().map(|r| logistic(proxy_logit(r, 0, &coefs))).collect();
    let mu1: Vec<f64> = x.iter_rows().map(|r| logistic(proxy_logit(r, 1, &coefs))).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let p = if w[i] == 0 { mu0[i] } else { mu1[i] };
            rng.random_bool(p) as u8 as f64
        })
        .collect();
    let mut data = ExperimentData::new(
        x,
        w,
        y,
        OutcomeKind::Binary,
        Some(Truth::from_surfaces(mu0, mu1)),
    )?;
    data.labels = None;
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    #[test]
    fn one_row_matches_the_schema() {
        let mut rng = rng_from_seed(1);
        let m = sample_voter_covariates(1, &mut rng).unwrap();
        assert_eq!(m.rows(), 1);
        assert_eq!(m.cols(), 11);
        let row = m.row(0);
        assert!(row[0] > 0.0);
        for y in 1..8 {
            assert!(row[y] == 0.0 || row[y] == 1.0);
        }
        assert!(row[8] == 0.0 || row[8] == 1.0);
        assert!([0.0, 1.0, 2.0, 3.0].contains(&row[9]));
        assert!(row[10] == 0.0 || row[10] == 1.0);
    }

    #[test]
    fn indicators_are_nondegenerate_at_scale() {
        let mut rng = rng_from_seed(2);
        let n = 10_000;
        let m = sample_voter_covariates(n, &mut rng).unwrap();
        for col in 1..8 {
            let mean = m.column(col).iter().sum::<f64>() / n as f64;
            assert!(mean > 0.0 && mean < 1.0, "col {col} mean {mean}");
        }
    }

    #[test]
    fn turnout_years_are_positively_correlated() {
        let mut rng = rng_from_seed(3);
        let n = 10_000;
        let m = sample_voter_covariates(n, &mut rng).unwrap();
        // Columns 4 and 6 are turnout 2010 and 2012.
        let a = m.column(4);
        let b = m.column(6);
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (ma, mb) = (mean(&a), mean(&b));
        let cov = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - ma) * (y - mb))
            .sum::<f64>()
            / n as f64;
        let sd = |v: &[f64], m: f64| {
            (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
        };
        let corr = cov / (sd(&a, ma) * sd(&b, mb));
        assert!(corr > 0.2, "corr {corr}");
    }

    #[test]
    fn proxy_experiment_is_valid_and_overlapping() {
        let mut rng = rng_from_seed(4);
        let e = proxy_voter_experiment(500, &mut rng).unwrap();
        assert_eq!(e.n_features(), 11);
        let frac = e.treated_fraction();
        assert!(frac > 0.0 && frac < 1.0);
        let t = e.truth.as_ref().unwrap();
        for i in 0..e.n_units() {
            assert!((0.0..=1.0).contains(&t.mu0[i]));
            assert!((0.0..=1.0).contains(&t.mu1[i]));
            assert_eq!(t.tau[i], t.mu1[i] - t.mu0[i]);
        }
    }
}
