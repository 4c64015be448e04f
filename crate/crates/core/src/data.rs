//! Experiment data: covariates, treatment assignments, observed outcomes,
//! and (for generated data) the ground-truth response surfaces.
//!
//! # Columnar text format
//!
//! One experiment serializes to CSV with a header row and one unit per line:
//!
//! ```text
//! x0,...,x{d-1},w,y_obs            # data file
//! x0,...,x{d-1},w,y_obs,mu0,mu1,tau # truth file
//! ```
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! re-read recovers the exact in-memory values and repeated writes are
//! byte-identical.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed::Prng;
use rand::seq::SliceRandom;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutcomeKind {
    /// Outcomes in {0,1}; regressors use a logistic output squash.
    Binary,
    /// Real-valued outcomes; regressors use an identity output.
    Continuous,
}

/// Per-unit ground truth attached by a data-generating process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub mu0: Vec<f64>,
    pub mu1: Vec<f64>,
    pub tau: Vec<f64>,
}

impl Truth {
    /// Builds truth from the two response surfaces; tau is their pointwise
    /// difference by construction.
    pub fn from_surfaces(mu0: Vec<f64>, mu1: Vec<f64>) -> Self {
        let tau = mu1.iter().zip(&mu0).map(|(a, b)| a - b).collect();
        Truth { mu0, mu1, tau }
    }
}

/// One experiment's units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentData {
    pub x: Matrix,
    /// Treatment indicator per unit, 0 or 1.
    pub w: Vec<u8>,
    pub y_obs: Vec<f64>,
    pub outcome: OutcomeKind,
    pub truth: Option<Truth>,
    /// Auxiliary class labels (digit labels for image experiments); used by
    /// oracle baselines, never by the learners themselves.
    pub labels: Option<Vec<u8>>,
}

impl ExperimentData {
    pub fn new(
        x: Matrix,
        w: Vec<u8>,
        y_obs: Vec<f64>,
        outcome: OutcomeKind,
        truth: Option<Truth>,
    ) -> Result<Self> {
        let n = x.rows();
        if n == 0 {
            return Err(Error::EmptyInput("experiment"));
        }
        if w.len() != n {
            return Err(Error::dim(n, w.len(), "treatment vector"));
        }
        if y_obs.len() != n {
            return Err(Error::dim(n, y_obs.len(), "outcome vector"));
        }
        if !x.is_finite() || !y_obs.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("experiment data"));
        }
        if w.iter().any(|&v| v > 1) {
            return Err(Error::DataFormat("treatment indicator not in {0,1}".into()));
        }
        if let Some(t) = &truth {
            for (name, v) in [("mu0", &t.mu0), ("mu1", &t.mu1), ("tau", &t.tau)] {
                if v.len() != n {
                    return Err(Error::dim(n, v.len(), "truth vector"));
                }
                if !v.iter().all(|x| x.is_finite()) {
                    return Err(Error::NonFinite(match name {
                        "mu0" => "truth mu0",
                        "mu1" => "truth mu1",
                        _ => "truth tau",
                    }));
                }
            }
        }
        Ok(ExperimentData {
            x,
            w,
            y_obs,
            outcome,
            truth,
            labels: None,
        })
    }

    #[inline]
    pub fn n_units(&self) -> usize {
        self.x.rows()
    }

    #[inline]
    pub fn n_features(&self) -> usize {
        self.x.cols()
    }

    pub fn treated_fraction(&self) -> f64 {
        self.w.iter().map(|&v| v as f64).sum::<f64>() / self.w.len() as f64
    }

    /// Indices of control (arm 0) and treated (arm 1) units.
    pub fn arm_indices(&self) -> (Vec<usize>, Vec<usize>) {
        let mut control = Vec::new();
        let mut treated = Vec::new();
        for (i, &w) in self.w.iter().enumerate() {
            if w == 0 {
                control.push(i);
            } else {
                treated.push(i);
            }
        }
        (control, treated)
    }

    /// Covariates and outcomes of one arm.
    pub fn arm_data(&self, arm: u8) -> Result<(Matrix, Vec<f64>)> {
        let idx: Vec<usize> = self
            .w
            .iter()
            .enumerate()
            .filter(|(_, &w)| w == arm)
            .map(|(i, _)| i)
            .collect();
        if idx.is_empty() {
            return Err(Error::EmptyArm { arm });
        }
        let x = self.x.select_rows(&idx);
        let y = idx.iter().map(|&i| self.y_obs[i]).collect();
        Ok((x, y))
    }

    /// Copies the selected units into a new experiment.
    pub fn subset(&self, indices: &[usize]) -> ExperimentData {
        ExperimentData {
            x: self.x.select_rows(indices),
            w: indices.iter().map(|&i| self.w[i]).collect(),
            y_obs: indices.iter().map(|&i| self.y_obs[i]).collect(),
            outcome: self.outcome,
            truth: self.truth.as_ref().map(|t| Truth {
                mu0: indices.iter().map(|&i| t.mu0[i]).collect(),
                mu1: indices.iter().map(|&i| t.mu1[i]).collect(),
                tau: indices.iter().map(|&i| t.tau[i]).collect(),
            }),
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i]).collect()),
        }
    }

    /// Swaps arms: W -> 1-W, leaving outcomes attached to their units.
    pub fn with_swapped_arms(&self) -> ExperimentData {
        let mut out = self.clone();
        for w in &mut out.w {
            *w = 1 - *w;
        }
        out.truth = self.truth.as_ref().map(|t| Truth {
            mu0: t.mu1.clone(),
            mu1: t.mu0.clone(),
            tau: t.tau.iter().map(|v| -v).collect(),
        });
        out
    }

    pub fn write_csv(&self, path: &Path, with_truth: bool) -> Result<()> {
        if with_truth && self.truth.is_none() {
            return Err(Error::DataFormat("no truth attached to write".into()));
        }
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        let d = self.n_features();
        let mut header: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
        header.push("w".into());
        header.push("y_obs".into());
        if with_truth {
            header.extend(["mu0".into(), "mu1".into(), "tau".into()]);
        }
        writeln!(f, "{}", header.join(","))?;
        for i in 0..self.n_units() {
            let mut fields: Vec<String> = self.x.row(i).iter().map(|v| format!("{v}")).collect();
            fields.push(format!("{}", self.w[i]));
            fields.push(format!("{}", self.y_obs[i]));
            if with_truth {
                let t = self.truth.as_ref().unwrap();
                fields.push(format!("{}", t.mu0[i]));
                fields.push(format!("{}", t.mu1[i]));
                fields.push(format!("{}", t.tau[i]));
            }
            writeln!(f, "{}", fields.join(","))?;
        }
        Ok(())
    }

    /// Reads the columnar format back. The outcome kind is inferred: all
    /// observed outcomes in {0,1} means binary.
    pub fn read_csv(path: &Path) -> Result<ExperimentData> {
        let f = BufReader::new(std::fs::File::open(path)?);
        let mut lines = f.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::DataFormat("empty file".into()))??;
        let cols: Vec<&str> = header.trim().split(',').collect();
        let w_pos = cols
            .iter()
            .position(|&c| c == "w")
            .ok_or_else(|| Error::DataFormat("missing 'w' column".into()))?;
        let y_pos = cols
            .iter()
            .position(|&c| c == "y_obs")
            .ok_or_else(|| Error::DataFormat("missing 'y_obs' column".into()))?;
        let has_truth = cols.contains(&"tau");
        let d = w_pos;
        for (i, c) in cols.iter().enumerate().take(d) {
            if *c != format!("x{i}") {
                return Err(Error::DataFormat(format!("unexpected column '{c}'")));
            }
        }

        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::DataFormat(format!("bad number '{s}'")))
        };
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut w = Vec::new();
        let mut y = Vec::new();
        let (mut mu0, mut mu1, mut tau) = (Vec::new(), Vec::new(), Vec::new());
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.trim().split(',').collect();
            let expected = if has_truth { d + 5 } else { d + 2 };
            if fields.len() != expected {
                return Err(Error::DataFormat(format!(
                    "expected {expected} fields, got {}",
                    fields.len()
                )));
            }
            rows.push(fields[..d].iter().map(|s| parse(s)).collect::<Result<_>>()?);
            let wv = parse(fields[w_pos])?;
            if wv != 0.0 && wv != 1.0 {
                return Err(Error::DataFormat("w must be 0 or 1".into()));
            }
            w.push(wv as u8);
            y.push(parse(fields[y_pos])?);
            if has_truth {
                mu0.push(parse(fields[d + 2])?);
                mu1.push(parse(fields[d + 3])?);
                tau.push(parse(fields[d + 4])?);
            }
        }
        let outcome = if y.iter().all(|&v| v == 0.0 || v == 1.0) {
            OutcomeKind::Binary
        } else {
            OutcomeKind::Continuous
        };
        let truth = has_truth.then_some(Truth { mu0, mu1, tau });
        ExperimentData::new(Matrix::from_rows(&rows)?, w, y, outcome, truth)
    }
}

/// Disjoint train/test index sets over one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    /// Everything is training data; no held-out units.
    pub fn all_train(n: usize) -> Split {
        Split {
            train: (0..n).collect(),
            test: Vec::new(),
        }
    }
}

/// Random disjoint split with `test_size` held-out units.
pub fn train_test_split(n: usize, test_size: usize, rng: &mut Prng) -> Result<Split> {
    if test_size >= n {
        return Err(Error::config(format!(
            "test_size {test_size} must be < n {n}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let test = idx.split_off(n - test_size);
    Ok(Split { train: idx, test })
}
