//! Gradient descent on the sparse-noise square-loss problem.
//!
//! Samples are `x = eta y e_1 + e_k` with a private coordinate `k` per
//! sample. After multiplying each row by its label, the problem is to fit
//! `X w = 1`. When the private coordinates are distinct, `X X^T = I + s s^T`
//! (`s` the first column of `X`), so the limit of (S)GD from `w0`,
//! `w' = w0 + X^T (X X^T)^{-1} (1 - X w0)`, is available through the
//! Sherman-Morrison inverse `I - s s^T / (n + 1)` without any dense solve.
//!
//! Coordinates are 0-based: coordinate 0 carries the signal, coordinates
//! `1..d` are private noise coordinates.

use std::fmt;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::datagen::{
    dot, sparse_structure, write_atomic, DatasetSpec, LabeledDataset, SparseSample,
};
use crate::models::{
    Activation, CheckpointSchedule, Layer, Loss, ModelParams, SgdTrainer, TrainConfig,
};
use crate::{derive_seed, seeded_rng, Error, Result};

/// One instance of the sparse-noise problem with its initialization.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseProblem {
    pub n: usize,
    pub d: usize,
    pub p: f64,
    /// Label-multiplied rows, `n x d` row-major: row `j` is `s_j e_0 + beta_j e_{k(j)}`.
    pub x: Vec<f64>,
    /// First column of `X` (the signs `eta_j`).
    pub s: Vec<f64>,
    /// Private coordinate of each row.
    pub k: Vec<usize>,
    /// `beta_j = X(j, k(j))`, which equals the label `y_j`.
    pub beta: Vec<f64>,
    pub w0: Vec<f64>,
    /// Nominal signal strength `1 - 2p`.
    pub eta: f64,
}

impl SparseProblem {
    /// Draw an instance with exactly `floor(p n)` noisy rows and distinct private coordinates.
    pub fn generate(n: usize, d: usize, p: f64, w0: Vec<f64>, seed: u64) -> Result<Self> {
        let sample = sparse_structure(n, d, p, true, seed)?;
        Self::from_structure(&sample, d, p, w0)
    }

    fn from_structure(sample: &SparseSample, d: usize, p: f64, w0: Vec<f64>) -> Result<Self> {
        let n = sample.y.len();
        if w0.len() != d {
            return Err(Error::LengthMismatch {
                what: "initialization",
                expected: d,
                actual: w0.len(),
            });
        }
        let mut x = vec![0.0; n * d];
        for j in 0..n {
            x[j * d] = sample.eta[j];
            x[j * d + sample.k[j]] = sample.y[j];
        }
        Ok(Self {
            n,
            d,
            p,
            x,
            s: sample.eta.clone(),
            k: sample.k.clone(),
            beta: sample.y.clone(),
            w0,
            eta: 1.0 - 2.0 * p,
        })
    }

    /// Build from raw (not label-multiplied) features, checking the structural assumptions.
    pub fn from_dataset(ds: &LabeledDataset, p: f64, w0: Vec<f64>) -> Result<Self> {
        let (n, d) = (ds.n, ds.d);
        let mut bad = Vec::new();
        let mut owner = std::collections::HashMap::new();
        let mut sample = SparseSample {
            y: vec![],
            eta: vec![],
            k: vec![],
        };
        for j in 0..n {
            let y = crate::datagen::to_signed(ds.labels[j]);
            let row = ds.row(j);
            let nz: Vec<usize> = (0..d).filter(|&i| row[i] != 0.0).collect();
            let ok =
                nz.len() == 2 && nz[0] == 0 && f64::from(row[0]).abs() == 1.0 && row[nz[1]] == 1.0;
            if !ok {
                bad.push(j);
                continue;
            }
            if let Some(prev) = owner.insert(nz[1], j) {
                bad.extend([prev, j]);
            }
            sample.y.push(y);
            sample.eta.push(f64::from(row[0]) * y);
            sample.k.push(nz[1]);
        }
        if !bad.is_empty() {
            bad.sort_unstable();
            bad.dedup();
            return Err(Error::AssumptionViolation {
                rows: bad,
                reason: "rows must be +-e_0 plus one private coordinate, with private coordinates distinct".into(),
            });
        }
        Self::from_structure(&sample, d, p, w0)
    }

    /// Raw features and labels, exportable through the dataset container.
    pub fn to_dataset(&self, seed: u64) -> Result<LabeledDataset> {
        let mut features = vec![0f32; self.n * self.d];
        for j in 0..self.n {
            features[j * self.d] = (self.s[j] * self.beta[j]) as f32;
            features[j * self.d + self.k[j]] = 1.0;
        }
        let labels = self.beta.iter().map(|&y| u8::from(y > 0.0)).collect();
        let spec = DatasetSpec::SparseNoise {
            d: self.d,
            p: self.p,
            exact_noise: true,
        };
        LabeledDataset::new(features, labels, self.d, spec, seed)
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.x[j * self.d..(j + 1) * self.d]
    }

    /// `X v` for a `d`-vector.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|j| self.s[j] * v[0] + self.beta[j] * v[self.k[j]])
            .collect()
    }

    /// `X^T u` for an `n`-vector.
    pub fn apply_transpose(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.d];
        for j in 0..self.n {
            out[0] += self.s[j] * u[j];
            out[self.k[j]] += self.beta[j] * u[j];
        }
        out
    }

    /// `(X X^T)^{-1} r = r - s (s^T r) / (n + 1)`.
    pub fn gram_inverse_apply(&self, r: &[f64]) -> Vec<f64> {
        let c = dot(&self.s, r) / (self.n as f64 + 1.0);
        r.iter().zip(&self.s).map(|(ri, si)| ri - si * c).collect()
    }

    /// Empirical signal strength `s^T 1 / n`.
    pub fn eta_empirical(&self) -> f64 {
        self.s.iter().sum::<f64>() / self.n as f64
    }

    /// Component of `v` orthogonal to the row span of `X`.
    pub fn off_span(&self, v: &[f64]) -> Vec<f64> {
        let proj = self.apply_transpose(&self.gram_inverse_apply(&self.apply(v)));
        v.iter().zip(&proj).map(|(a, b)| a - b).collect()
    }
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormSolution {
    pub w_prime: Vec<f64>,
    pub first_coord: f64,
    /// `|X w' - 1|`.
    pub residual_norm: f64,
    /// Norm of the part of `w' - w0` outside the row span of `X`.
    pub off_span_norm: f64,
}

/// Limit of (S)GD from `w0`, via the Sherman-Morrison inverse of `X X^T`.
pub fn closed_form_limit(problem: &SparseProblem) -> ClosedFormSolution {
    let xw0 = problem.apply(&problem.w0);
    let r: Vec<f64> = xw0.iter().map(|v| 1.0 - v).collect();
    let u = problem.gram_inverse_apply(&r);
    let step = problem.apply_transpose(&u);
    let w_prime: Vec<f64> = problem.w0.iter().zip(&step).map(|(a, b)| a + b).collect();
    let residual: Vec<f64> = problem.apply(&w_prime).iter().map(|v| v - 1.0).collect();
    let off_span_norm = norm(&problem.off_span(&step));
    ClosedFormSolution {
        first_coord: w_prime[0],
        residual_norm: norm(&residual),
        off_span_norm,
        w_prime,
    }
}

/// `w'(0) = n/(n+1) eta - s^T X w0 / (n+1) + w0(0)` with `eta = s^T 1 / n`.
pub fn first_coord_formula(problem: &SparseProblem) -> f64 {
    let n = problem.n as f64;
    let s_xw0 = dot(&problem.s, &problem.apply(&problem.w0));
    n / (n + 1.0) * problem.eta_empirical() - s_xw0 / (n + 1.0) + problem.w0[0]
}

/// Coordinate `i >= 1` of the limit.
///
/// Untouched coordinates keep `w0(i)`. If row `j` owns coordinate `i` with
/// `beta = X(j, i)`, then
/// `w'(i) = beta (1 + s_j (s^T X w0 - n eta) / (n+1) - x_j^T w0) + w0(i)`.
pub fn other_coord_formula(problem: &SparseProblem, i: usize) -> Result<f64> {
    if i == 0 || i >= problem.d {
        return Err(Error::OutOfRange {
            what: "coordinate index",
            value: i as f64,
            min: 1.0,
            max: (problem.d - 1) as f64,
        });
    }
    let Some(j) = problem.k.iter().position(|&k| k == i) else {
        return Ok(problem.w0[i]);
    };
    let n = problem.n as f64;
    let s_xw0 = dot(&problem.s, &problem.apply(&problem.w0));
    let xj_w0 = dot(problem.row(j), &problem.w0);
    let beta = problem.beta[j];
    Ok(
        beta * (1.0 + problem.s[j] * (s_xw0 - n * problem.eta_empirical()) / (n + 1.0) - xj_w0)
            + problem.w0[i],
    )
}

/// Settings for running square-loss SGD to the closed-form limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SgdCheckConfig {
    /// Minibatch size; `None` means full-batch gradient descent.
    pub batch_size: Option<usize>,
    /// Learning rate on the mean minibatch loss; `None` picks the adaptive default.
    pub learning_rate: Option<f64>,
    pub max_steps: u64,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for SgdCheckConfig {
    fn default() -> Self {
        Self {
            batch_size: None,
            learning_rate: None,
            max_steps: 200_000,
            tolerance: 1e-3,
            seed: 0,
        }
    }
}

/// Learning rate on the mean loss of a `b`-row minibatch equivalent to step
/// `0.5 / lambda_max(X_B X_B^T)` on the summed loss, using `lambda_max <= b + 1`.
pub fn default_sparse_learning_rate(b: usize) -> f64 {
    0.5 * b as f64 / (b as f64 + 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    /// `(step, |w_t - w'|)` after every update, starting with step 0.
    pub distances: Vec<(u64, f64)>,
    pub converged: bool,
    pub final_distance: f64,
    /// Largest norm of `w_t - w0` outside the row span of `X` along the run.
    pub max_off_span: f64,
    pub w_final: Vec<f64>,
}

/// Run square-loss SGD (through the generic trainer) from `w0` and track the distance to `w'`.
pub fn verify_sgd_convergence(
    problem: &SparseProblem,
    config: &SgdCheckConfig,
) -> Result<ConvergenceRecord> {
    let target = closed_form_limit(problem).w_prime;
    // Label-multiplied rows with all targets +1 give the same objective.
    let features = problem.x.iter().map(|&v| v as f32).collect();
    let data = LabeledDataset::new(
        features,
        vec![1; problem.n],
        problem.d,
        DatasetSpec::SparseNoise {
            d: problem.d,
            p: problem.p,
            exact_noise: true,
        },
        0,
    )?;
    let batch = config.batch_size.unwrap_or(problem.n).clamp(1, problem.n);
    let lr = config
        .learning_rate
        .unwrap_or_else(|| default_sparse_learning_rate(batch));
    let train = TrainConfig {
        batch_size: batch,
        learning_rate: lr,
        loss: Loss::Square,
        steps: config.max_steps,
        checkpoint_schedule: CheckpointSchedule::Explicit { steps: vec![] },
        seed: config.seed,
    };
    let params = ModelParams {
        layers: vec![Layer {
            in_dim: problem.d,
            out_dim: 1,
            weights: problem.w0.clone(),
            bias: vec![],
            activation: Activation::Identity,
        }],
    };
    let mut trainer = SgdTrainer::new(params, &data, train)?;
    let dist = |w: &[f64]| {
        norm(
            &w.iter()
                .zip(&target)
                .map(|(a, b)| a - b)
                .collect::<Vec<_>>(),
        )
    };
    let start = dist(&problem.w0);
    let mut distances = vec![(0, start)];
    let mut max_off_span = 0.0f64;
    let mut current = start;
    while current > config.tolerance && trainer.step_index() < config.max_steps {
        trainer.step()?;
        let w = &trainer.params().layers[0].weights;
        current = dist(w);
        let step = trainer.step_index();
        if !current.is_finite() || current > 1e6 * start.max(1.0) {
            return Err(Error::Diverged {
                step,
                distance: current,
            });
        }
        let delta: Vec<f64> = w.iter().zip(&problem.w0).map(|(a, b)| a - b).collect();
        max_off_span = max_off_span.max(norm(&problem.off_span(&delta)));
        distances.push((step, current));
    }
    Ok(ConvergenceRecord {
        converged: current <= config.tolerance,
        final_distance: current,
        max_off_span,
        w_final: trainer.into_params().layers.remove(0).weights,
        distances,
    })
}

/// Initialization for the sparse problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    /// `w0 = e_0`, the simplest perfect-on-clean-data classifier.
    Simplest,
    Zero,
    /// `w0 = first * e_0`.
    FirstCoord {
        first: f64,
    },
    /// `w0(0) = first`, other coordinates uniform in `[-bound, bound]`.
    Uniform {
        first: f64,
        bound: f64,
    },
}

impl fmt::Display for InitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Simplest => write!(f, "e1"),
            Self::Zero => write!(f, "zero"),
            Self::FirstCoord { first } => write!(f, "first={first}"),
            Self::Uniform { first, bound } => write!(f, "uniform(first={first};bound={bound})"),
        }
    }
}

impl InitSpec {
    /// Check the theorem's bounds `w0(0) >= -n^0.99` and `|w0(i)| <= 1 - 2p - epsilon`.
    pub fn check(&self, n: usize, p: f64, epsilon: f64) -> Result<()> {
        let (first, others) = match self {
            Self::Simplest => (1.0, 0.0),
            Self::Zero => (0.0, 0.0),
            Self::FirstCoord { first } => (*first, 0.0),
            Self::Uniform { first, bound } => (*first, *bound),
        };
        if first < -(n as f64).powf(0.99) {
            return Err(Error::InvalidParameter(format!(
                "w0(1) = {first} is below -n^0.99"
            )));
        }
        if others > 1.0 - 2.0 * p - epsilon {
            return Err(Error::InvalidParameter(format!(
                "noise coordinates bounded by {others} exceed 1 - 2p - eps"
            )));
        }
        Ok(())
    }

    pub fn build(&self, d: usize, seed: u64) -> Vec<f64> {
        let mut w = vec![0.0; d];
        match self {
            Self::Simplest => w[0] = 1.0,
            Self::Zero => {}
            Self::FirstCoord { first } => w[0] = *first,
            Self::Uniform { first, bound } => {
                let mut rng = seeded_rng(seed);
                w.iter_mut()
                    .skip(1)
                    .for_each(|v| *v = rng.random_range(-*bound..=*bound));
                w[0] = *first;
            }
        }
        w
    }
}

/// Population accuracy of `sign(<w, x>)` on fresh samples, by Monte Carlo.
///
/// A fresh sample is classified correctly iff `eta w(0) + y w(k) > 0`.
/// The noise decision uses one uniform draw compared against `p`, so runs
/// with the same seed are coupled across noise rates.
pub fn population_accuracy(w: &[f64], p: f64, samples: usize, seed: u64) -> f64 {
    let d = w.len();
    let mut rng = seeded_rng(seed);
    let mut hits = 0usize;
    for _ in 0..samples {
        let u: f64 = rng.random();
        let y = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let k = rng.random_range(1..d);
        let eta = if u < p { -1.0 } else { 1.0 };
        if eta * w[0] + y * w[k] > 0.0 {
            hits += 1;
        }
    }
    hits as f64 / samples as f64
}

/// Fraction of training rows with positive margin `x_j^T w`.
pub fn train_accuracy(problem: &SparseProblem, w: &[f64]) -> f64 {
    problem.apply(w).iter().filter(|&&m| m > 0.0).count() as f64 / problem.n as f64
}

/// An interpolating classifier that ignores the signal.
///
/// It sets `w(0) = -c` and cancels that on each training row's private
/// coordinate, `w(k_j) = (1 + c s_j) / beta_j`, so every training margin is
/// exactly 1 while a fresh sample (whose private coordinate is almost surely
/// unseen) is classified by `-c eta` alone: correct only on noisy samples.
pub fn poor_erm_witness(problem: &SparseProblem, c: f64) -> Vec<f64> {
    let mut w = vec![0.0; problem.d];
    w[0] = -c;
    for j in 0..problem.n {
        w[problem.k[j]] = (1.0 + c * problem.s[j]) / problem.beta[j];
    }
    w
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Theorem1Config {
    pub n: usize,
    pub d: usize,
    pub p: f64,
    pub init: InitSpec,
    pub seeds: Vec<u64>,
    pub mc_samples: usize,
    /// Margin in the bound on the noise coordinates of `w0`.
    pub epsilon: f64,
    /// SGD settings; `None` skips the run and reports distance 0.
    pub sgd: Option<SgdCheckConfig>,
}

impl Theorem1Config {
    pub fn new(n: usize, d: usize, p: f64, init: InitSpec, seeds: Vec<u64>) -> Self {
        Self {
            n,
            d,
            p,
            init,
            seeds,
            mc_samples: 100_000,
            epsilon: 0.05,
            sgd: Some(SgdCheckConfig::default()),
        }
    }
}

/// One row of the theory summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremRow {
    pub seed: u64,
    pub n: usize,
    pub d: usize,
    pub p: f64,
    pub w0_spec: String,
    pub train_acc: f64,
    pub pop_acc: f64,
    pub dist_to_closed_form: f64,
    #[serde(skip)]
    pub witness_train_acc: f64,
    #[serde(skip)]
    pub witness_pop_acc: f64,
}

/// Build instances per seed, solve in closed form, run SGD and measure accuracies.
pub fn theorem1_experiment(config: &Theorem1Config) -> Result<Vec<TheoremRow>> {
    config.init.check(config.n, config.p, config.epsilon)?;
    if config.d < config.n * config.n {
        return Err(Error::InvalidParameter(format!(
            "need d >= n^2, got n = {}, d = {}",
            config.n, config.d
        )));
    }
    config
        .seeds
        .iter()
        .map(|&seed| {
            let w0 = config.init.build(config.d, derive_seed(seed, 11));
            let problem = SparseProblem::generate(config.n, config.d, config.p, w0, seed)?;
            let sol = closed_form_limit(&problem);
            let dist = match &config.sgd {
                Some(sgd) => {
                    let rec = verify_sgd_convergence(
                        &problem,
                        &SgdCheckConfig {
                            seed,
                            ..sgd.clone()
                        },
                    )?;
                    rec.final_distance
                }
                None => 0.0,
            };
            let mc_seed = derive_seed(seed, 12);
            let witness = poor_erm_witness(&problem, 1.0);
            Ok(TheoremRow {
                seed,
                n: config.n,
                d: config.d,
                p: config.p,
                w0_spec: config.init.to_string(),
                train_acc: train_accuracy(&problem, &sol.w_prime),
                pop_acc: population_accuracy(&sol.w_prime, config.p, config.mc_samples, mc_seed),
                dist_to_closed_form: dist,
                witness_train_acc: train_accuracy(&problem, &witness),
                witness_pop_acc: population_accuracy(
                    &witness,
                    config.p,
                    config.mc_samples,
                    mc_seed,
                ),
            })
        })
        .collect()
}

/// Write the summary with columns `seed,n,d,p,w0_spec,train_acc,pop_acc,dist_to_closed_form`.
pub fn write_theory_csv(rows: &[TheoremRow], path: &Path) -> Result<()> {
    write_atomic(path, &theory_csv_bytes(rows)?)
}

/// The CSV encoding written by [`write_theory_csv`].
pub fn theory_csv_bytes(rows: &[TheoremRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner()
        .map_err(|e| Error::io("<memory>", e.into_error()))
}

pub fn read_theory_csv(path: &Path) -> Result<Vec<TheoremRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SparseProblem {
        // n = 1, d = 2, clean sample with y = +1: X = [1, 1].
        let sample = SparseSample {
            y: vec![1.0],
            eta: vec![1.0],
            k: vec![1],
        };
        SparseProblem::from_structure(&sample, 2, 0.0, vec![0.0, 0.0]).unwrap()
    }

    #[test]
    fn one_by_two_system() {
        let p = tiny();
        let sol = closed_form_limit(&p);
        assert!((sol.w_prime[0] - 0.5).abs() < 1e-15);
        assert!((sol.w_prime[1] - 0.5).abs() < 1e-15);
        assert!((first_coord_formula(&p) - 0.5).abs() < 1e-15);
        assert!((other_coord_formula(&p, 1).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn interpolating_init_is_fixed() {
        let mut p = SparseProblem::generate(6, 40, 0.0, vec![0.0; 40], 1).unwrap();
        p.w0 = closed_form_limit(&p).w_prime;
        let again = closed_form_limit(&p);
        for (a, b) in again.w_prime.iter().zip(&p.w0) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_init_no_noise_first_coordinate() {
        let p = SparseProblem::generate(8, 64, 0.0, vec![0.0; 64], 3).unwrap();
        assert!((first_coord_formula(&p) - 8.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn untouched_coordinates_keep_init() {
        let w0: Vec<f64> = (0..50).map(|i| 0.01 * i as f64).collect();
        let p = SparseProblem::generate(5, 50, 0.2, w0.clone(), 2).unwrap();
        let i = (1..50).find(|i| !p.k.contains(i)).unwrap();
        assert_eq!(other_coord_formula(&p, i).unwrap(), w0[i]);
        assert!(other_coord_formula(&p, 0).is_err());
    }

    #[test]
    fn assumption_violations_name_rows() {
        let mut ds = crate::datagen::gen_sparse_problem(4, 16, 0.0, true, 0).unwrap();
        // Give row 2 the same private coordinate as row 0.
        let k0 = (1..16).find(|&i| ds.row(0)[i] != 0.0).unwrap();
        let d = ds.d;
        ds.features[2 * d..3 * d]
            .iter_mut()
            .skip(1)
            .for_each(|v| *v = 0.0);
        ds.features[2 * d + k0] = 1.0;
        match SparseProblem::from_dataset(&ds, 0.0, vec![0.0; 16]) {
            Err(Error::AssumptionViolation { rows, .. }) => assert_eq!(rows, vec![0, 2]),
            other => panic!("expected violation, got {other:?}"),
        }
    }

    #[test]
    fn dataset_round_trip() {
        let p = SparseProblem::generate(5, 30, 0.2, vec![0.0; 30], 4).unwrap();
        let ds = p.to_dataset(4).unwrap();
        assert_eq!(
            SparseProblem::from_dataset(&ds, 0.2, vec![0.0; 30]).unwrap(),
            p
        );
    }

    #[test]
    fn zero_rate_keeps_distance() {
        let p = SparseProblem::generate(5, 40, 0.2, vec![0.0; 40], 5).unwrap();
        let cfg = SgdCheckConfig {
            learning_rate: Some(0.0),
            max_steps: 20,
            ..Default::default()
        };
        let rec = verify_sgd_convergence(&p, &cfg).unwrap();
        assert!(rec.distances.windows(2).all(|w| w[0].1 == w[1].1));
        assert!(!rec.converged);
    }

    #[test]
    fn oversized_step_is_reported() {
        let p = SparseProblem::generate(5, 40, 0.2, vec![0.0; 40], 5).unwrap();
        let cfg = SgdCheckConfig {
            learning_rate: Some(5.0),
            max_steps: 10_000,
            ..Default::default()
        };
        assert!(matches!(
            verify_sgd_convergence(&p, &cfg),
            Err(Error::Diverged { .. } | Error::NonFiniteLoss { .. })
        ));
    }

    #[test]
    fn init_preconditions() {
        assert!(InitSpec::FirstCoord { first: -5.0 }
            .check(20, 0.1, 0.05)
            .is_ok());
        assert!(InitSpec::FirstCoord { first: -50.0 }
            .check(20, 0.1, 0.05)
            .is_err());
        assert!(InitSpec::Uniform {
            first: 0.0,
            bound: 0.9
        }
        .check(20, 0.1, 0.05)
        .is_err());
    }
}
