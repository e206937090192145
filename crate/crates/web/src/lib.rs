//! Browser bindings: three interactive operations returning JSON strings.
//!
//! - [`info_table`]: information decomposition of an 8-cell `(F, Y, L)` table.
//! - [`sparse_theory`]: closed-form limit vs. a poor interpolator on the sparse-noise problem.
//! - [`phase_demo`]: train a small network and track it against a linear model.
//!
//! Each binding is a thin wrapper over a plain Rust function so the logic can
//! be tested natively.

use phaseprobe::datagen::DatasetSpec;
use phaseprobe::infotheory::{accuracy_to_mi, performance_correlation, InfoMetrics, JointCounts3};
use phaseprobe::models::{CheckpointSchedule, ShapeSpec, TrainConfig};
use phaseprobe::probes::{phase_report_for, train_final, train_tracked, MetricSeries, PhaseReport};
use phaseprobe::theory::{theorem1_experiment, InitSpec, Theorem1Config};
use phaseprobe::{derive_seed, Result};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct InfoTable {
    pub metrics: InfoMetrics,
    pub acc_f: f64,
    pub acc_l: f64,
    /// `I(F;Y)` of an unbiased classifier with accuracy `acc_f` (or `1 - acc_f`), for reference.
    pub i_fy_unbiased: f64,
}

/// Decompose a table of counts indexed `f * 4 + y * 2 + l`.
pub fn info_table_rs(counts: &[u64]) -> Result<InfoTable> {
    let counts: [u64; 8] = counts.try_into().map_err(|_| {
        phaseprobe::Error::InvalidParameter(format!("expected 8 counts, got {}", counts.len()))
    })?;
    let joint = JointCounts3::new(counts)?;
    let total = counts.iter().sum::<u64>() as f64;
    let agree = |pick: fn(usize) -> bool| {
        (0..8).filter(|&i| pick(i)).map(|i| counts[i]).sum::<u64>() as f64 / total
    };
    let acc_f = agree(|i| (i >> 2) & 1 == (i >> 1) & 1);
    let acc_l = agree(|i| i & 1 == (i >> 1) & 1);
    Ok(InfoTable {
        metrics: performance_correlation(&joint)?,
        acc_f,
        acc_l,
        i_fy_unbiased: accuracy_to_mi(acc_f.max(1.0 - acc_f))?,
    })
}

#[derive(Debug, Serialize)]
pub struct SparseDemo {
    pub seeds: usize,
    pub p: f64,
    pub train_acc: f64,
    pub pop_acc: f64,
    pub dist_to_closed_form: f64,
    pub witness_train_acc: f64,
    pub witness_pop_acc: f64,
}

/// Mean accuracies of the gradient-descent limit and of the poor interpolator.
pub fn sparse_theory_rs(
    n: usize,
    d: usize,
    p: f64,
    seeds: usize,
    run_sgd: bool,
) -> Result<SparseDemo> {
    let mut cfg = Theorem1Config::new(n, d, p, InitSpec::Simplest, (0..seeds as u64).collect());
    cfg.mc_samples = 20_000;
    if !run_sgd {
        cfg.sgd = None;
    }
    let rows = theorem1_experiment(&cfg)?;
    let k = rows.len() as f64;
    let mean = |f: fn(&phaseprobe::theory::TheoremRow) -> f64| rows.iter().map(f).sum::<f64>() / k;
    Ok(SparseDemo {
        seeds,
        p,
        train_acc: mean(|r| r.train_acc),
        pop_acc: mean(|r| r.pop_acc),
        dist_to_closed_form: rows
            .iter()
            .map(|r| r.dist_to_closed_form)
            .fold(0.0, f64::max),
        witness_train_acc: mean(|r| r.witness_train_acc),
        witness_pop_acc: mean(|r| r.witness_pop_acc),
    })
}

#[derive(Debug, Serialize)]
pub struct PhaseDemo {
    pub series: MetricSeries,
    pub report: PhaseReport,
    pub simple_test_acc: f64,
}

/// Train a ReLU network on a noisy linear task and a linear model beside it.
pub fn phase_demo_rs(
    noise_rate: f64,
    width: usize,
    steps: u64,
    learning_rate: f64,
    seed: u64,
) -> Result<PhaseDemo> {
    let spec = DatasetSpec::gaussian_linear(2, noise_rate, 7)?;
    let train = spec.sample(400, derive_seed(seed, 101))?;
    let test = spec.sample(2000, derive_seed(seed, 202))?;
    let cfg = TrainConfig {
        learning_rate,
        checkpoint_schedule: CheckpointSchedule::LogGrid { per_decade: 10 },
        ..TrainConfig::new(steps, seed)
    };
    let (run, _) = train_tracked(&ShapeSpec::mlp(2, &[width, width]), &train, &test, &cfg)?;
    let linear_cfg = TrainConfig {
        learning_rate: 0.1,
        checkpoint_schedule: CheckpointSchedule::Explicit { steps: vec![] },
        ..TrainConfig::new(2000, derive_seed(seed, 303))
    };
    let simple = train_final(&ShapeSpec::linear(2), &train, &linear_cfg)?;
    let series = run.series(&simple.predict_dataset(&test)?)?;
    let report = phase_report_for(&run, &series, derive_seed(seed, 404))?;
    Ok(PhaseDemo {
        series,
        report,
        simple_test_acc: simple.accuracy(&test)?,
    })
}

fn to_js<T: Serialize>(r: Result<T>) -> std::result::Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn info_table(counts: Vec<u64>) -> std::result::Result<String, JsError> {
    to_js(info_table_rs(&counts))
}

#[wasm_bindgen]
pub fn sparse_theory(
    n: usize,
    d: usize,
    p: f64,
    seeds: usize,
    run_sgd: bool,
) -> std::result::Result<String, JsError> {
    to_js(sparse_theory_rs(n, d, p, seeds, run_sgd))
}

#[wasm_bindgen]
pub fn phase_demo(
    noise_rate: f64,
    width: usize,
    steps: u64,
    learning_rate: f64,
    seed: u64,
) -> std::result::Result<String, JsError> {
    to_js(phase_demo_rs(noise_rate, width, steps, learning_rate, seed))
}
