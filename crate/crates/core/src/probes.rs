//! Checkpoint-tracking protocol: how much of a network's test-set information
//! about the label is explained by a simpler model, step by step.
//!
//! Each checkpoint is evaluated once ([`Evaluated`]: accuracies plus test
//! predictions); series against any explainer are then cheap to build.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datagen::{write_atomic, DatasetSpec, LabeledDataset};
use crate::infotheory::{
    make_null_model, mutual_info, performance_correlation, InfoMetrics, JointCounts2, JointCounts3,
};
use crate::models::{
    accuracy, sgd_train, xavier_init, Checkpoint, ModelParams, SgdTrainer, ShapeSpec, TrainConfig,
};
use crate::{derive_seed, Error, Result};

/// Null-model replicas averaged in [`phase_report`].
pub const NULL_REPLICAS: u64 = 10;

/// Metrics of one checkpoint against one explainer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub step: u64,
    pub train_acc: f64,
    pub test_acc: f64,
    pub i_fy: f64,
    pub mu: f64,
    pub i_fy_given_l: f64,
    pub i_ly_given_f: f64,
    pub i_ly: f64,
}

/// Per-checkpoint metrics; `i_ly` is constant across rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    pub rows: Vec<MetricRow>,
    pub i_ly: f64,
}

impl MetricSeries {
    pub fn steps(&self) -> Vec<u64> {
        self.rows.iter().map(|r| r.step).collect()
    }

    /// Write CSV with columns `step,train_acc,test_acc,i_fy,mu,i_fy_given_l,i_ly_given_f,i_ly`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_csv_bytes()?)
    }

    /// The CSV encoding written by [`Self::write_csv`].
    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.into_inner()
            .map_err(|e| Error::io("<memory>", e.into_error()))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let rows: Vec<MetricRow> = r.deserialize().collect::<std::result::Result<_, _>>()?;
        let i_ly = rows.first().map_or(0.0, |r| r.i_ly);
        Ok(Self { rows, i_ly })
    }
}

/// A checkpoint reduced to what the probes need.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluated {
    pub step: u64,
    pub train_acc: f64,
    pub test_acc: f64,
    pub test_pred: Vec<u8>,
}

/// Evaluate one checkpoint on the train and test splits.
pub fn evaluate_checkpoint(
    ckpt: &Checkpoint,
    train: &LabeledDataset,
    test: &LabeledDataset,
) -> Result<Evaluated> {
    if test.n == 0 {
        return Err(Error::InvalidParameter("empty test split".into()));
    }
    let test_pred = ckpt.params.predict_dataset(test)?;
    Ok(Evaluated {
        step: ckpt.step,
        train_acc: ckpt.params.accuracy(train)?,
        test_acc: accuracy(&test_pred, &test.labels),
        test_pred,
    })
}

/// Evaluated checkpoints of one run plus the test labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackedRun {
    pub evals: Vec<Evaluated>,
    pub y_test: Vec<u8>,
}

impl TrackedRun {
    pub fn new(evals: Vec<Evaluated>, y_test: Vec<u8>) -> Result<Self> {
        if evals.is_empty() {
            return Err(Error::InvalidParameter("no checkpoints".into()));
        }
        if evals.windows(2).any(|w| w[0].step >= w[1].step) {
            return Err(Error::InvalidParameter(
                "checkpoint steps must be strictly increasing".into(),
            ));
        }
        for e in &evals {
            if e.test_pred.len() != y_test.len() {
                return Err(Error::LengthMismatch {
                    what: "checkpoint predictions",
                    expected: y_test.len(),
                    actual: e.test_pred.len(),
                });
            }
        }
        Ok(Self { evals, y_test })
    }

    /// Evaluate every checkpoint on the given splits.
    pub fn from_checkpoints(
        checkpoints: &[Checkpoint],
        train: &LabeledDataset,
        test: &LabeledDataset,
    ) -> Result<Self> {
        let evals = checkpoints
            .iter()
            .map(|c| evaluate_checkpoint(c, train, test))
            .collect::<Result<_>>()?;
        Self::new(evals, test.labels.clone())
    }

    /// Series of `(F_t, Y, L)` metrics for explainer predictions `l_pred` on the test split.
    pub fn series(&self, l_pred: &[u8]) -> Result<MetricSeries> {
        let i_ly = mutual_info(&JointCounts2::from_samples(l_pred, &self.y_test)?);
        let rows = self
            .evals
            .iter()
            .map(|e| {
                let m = performance_correlation(&JointCounts3::from_samples(
                    &e.test_pred,
                    &self.y_test,
                    l_pred,
                )?)?;
                Ok(row(e, &m))
            })
            .collect::<Result<_>>()?;
        Ok(MetricSeries { rows, i_ly })
    }
}

fn row(e: &Evaluated, m: &InfoMetrics) -> MetricRow {
    MetricRow {
        step: e.step,
        train_acc: e.train_acc,
        test_acc: e.test_acc,
        i_fy: m.i_fy,
        mu: m.mu,
        i_fy_given_l: m.i_fy_given_l,
        i_ly_given_f: m.i_ly_given_f,
        i_ly: m.i_ly,
    }
}

/// Evaluate checkpoints and build the series against `simple`'s test predictions.
pub fn track_metrics(
    checkpoints: &[Checkpoint],
    simple: &ModelParams,
    train: &LabeledDataset,
    test: &LabeledDataset,
) -> Result<MetricSeries> {
    let run = TrackedRun::from_checkpoints(checkpoints, train, test)?;
    run.series(&simple.predict_dataset(test)?)
}

/// Position of the first checkpoint whose `I(F_t;Y)` reaches a level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Threshold {
    pub index: usize,
    pub step: u64,
    /// False when the level is never reached; `index` is then the last checkpoint.
    pub reached: bool,
}

/// First checkpoint with `i_fy >= level` (the last one, flagged, if none).
pub fn first_crossing(series: &MetricSeries, level: f64) -> Threshold {
    match series.rows.iter().position(|r| r.i_fy >= level) {
        Some(index) => Threshold {
            index,
            step: series.rows[index].step,
            reached: true,
        },
        None => {
            let index = series.rows.len().saturating_sub(1);
            Threshold {
                index,
                step: series.rows.get(index).map_or(0, |r| r.step),
                reached: false,
            }
        }
    }
}

/// `T0`: the first checkpoint at which the network matches the simple model's information.
pub fn find_t0(series: &MetricSeries) -> Threshold {
    first_crossing(series, series.i_ly)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub t0: u64,
    pub t0_reached: bool,
    pub i_ly: f64,
    pub i_fy_t0: f64,
    pub mu_t0: f64,
    /// `mu(F_T0; L) / I(F_T0; Y)`.
    pub ratio_simple: f64,
    /// Same ratio with a matched-information null model, averaged over replicas.
    pub ratio_null: f64,
    pub ratio_null_std: f64,
    /// `(min, max)` of `mu` over checkpoints strictly after `T0`.
    pub plateau_band: Option<(f64, f64)>,
    /// `min mu(t>T0) / I(L;Y)`; the plateau check requires at least 0.8.
    pub plateau_ratio: Option<f64>,
}

/// Locate `T0`, compute both ratios and the post-`T0` plateau band.
pub fn phase_report(run: &TrackedRun, l_pred: &[u8], null_seed: u64) -> Result<PhaseReport> {
    let series = run.series(l_pred)?;
    phase_report_for(run, &series, null_seed)
}

/// [`phase_report`] with a precomputed series (which must come from `run`).
pub fn phase_report_for(
    run: &TrackedRun,
    series: &MetricSeries,
    null_seed: u64,
) -> Result<PhaseReport> {
    let t0 = find_t0(series);
    let at = series.rows[t0.index];
    if at.i_fy <= 0.0 {
        return Err(Error::ZeroInformation { step: at.step });
    }
    let f_t0 = &run.evals[t0.index].test_pred;
    let null_ratios = (0..NULL_REPLICAS)
        .map(|r| {
            let null = make_null_model(&run.y_test, series.i_ly, derive_seed(null_seed, r))?;
            let m = performance_correlation(&JointCounts3::from_samples(
                f_t0,
                &run.y_test,
                &null.predictions,
            )?)?;
            Ok(m.mu / m.i_fy)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean, std) = mean_std(&null_ratios);
    let after: Vec<f64> = series.rows[t0.index + 1..].iter().map(|r| r.mu).collect();
    let plateau_band = (!after.is_empty()).then(|| {
        (
            after.iter().copied().fold(f64::INFINITY, f64::min),
            after.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        )
    });
    Ok(PhaseReport {
        t0: t0.step,
        t0_reached: t0.reached,
        i_ly: series.i_ly,
        i_fy_t0: at.i_fy,
        mu_t0: at.mu,
        ratio_simple: at.mu / at.i_fy,
        ratio_null: mean,
        ratio_null_std: std,
        plateau_ratio: plateau_band.map(|(lo, _)| lo / series.i_ly),
        plateau_band,
    })
}

/// Sample mean and (n-1) standard deviation; the deviation is 0 for a single value.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl PhaseReport {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        write_atomic(path, serde_json::to_string_pretty(self)?.as_bytes())
    }
}

/// The Xavier initialization used for every run with training seed `seed`.
pub fn initial_params(shape: &ShapeSpec, seed: u64) -> Result<ModelParams> {
    xavier_init(shape, derive_seed(seed, 0x1417))
}

/// Train a model from Xavier init and return the final parameters.
pub fn train_final(
    shape: &ShapeSpec,
    data: &LabeledDataset,
    config: &TrainConfig,
) -> Result<ModelParams> {
    let init = initial_params(shape, config.seed)?;
    let mut trainer = SgdTrainer::new(init, data, config.clone())?;
    while trainer.step_index() < config.steps {
        trainer.step()?;
    }
    Ok(trainer.into_params())
}

/// Fit a student to the teacher's rounded predictions on the training inputs.
pub fn distill_simple(
    teacher: &ModelParams,
    train: &LabeledDataset,
    student: &ShapeSpec,
    config: &TrainConfig,
) -> Result<ModelParams> {
    if teacher.input_dim() != train.d || student.input_dim != train.d {
        return Err(Error::DimensionMismatch {
            expected: train.d,
            actual: teacher.input_dim(),
        });
    }
    let labels = teacher.predict_dataset(train)?;
    let ones = labels.iter().filter(|&&y| y == 1).count();
    if ones == 0 || ones == labels.len() {
        return Err(Error::DegenerateTeacher);
    }
    train_final(student, &train.relabeled(labels)?, config)
}

/// Train and checkpoint a network, evaluating each checkpoint as it is emitted.
///
/// Returns the tracked run and the final parameters; intermediate parameters are not retained.
pub fn train_tracked(
    shape: &ShapeSpec,
    train: &LabeledDataset,
    test: &LabeledDataset,
    config: &TrainConfig,
) -> Result<(TrackedRun, ModelParams)> {
    let init = initial_params(shape, config.seed)?;
    let mut evals = Vec::new();
    let mut last = None;
    let mut trainer = SgdTrainer::new(init, train, config.clone())?;
    trainer.run(|c| {
        evals.push(evaluate_checkpoint(&c, train, test)?);
        last = Some(c.params);
        Ok(())
    })?;
    let last = last.expect("schedule always emits the final step");
    Ok((TrackedRun::new(evals, test.labels.clone())?, last))
}

/// One rung of the complexity ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rung {
    pub shape: ShapeSpec,
    /// The student distilled from the final network.
    pub student: ModelParams,
    pub series: MetricSeries,
    /// First checkpoint at which `I(F_t;Y)` reaches `I(G_i;Y)`.
    pub onset: Threshold,
    /// Mean `mu` after the onset (the last checkpoint's `mu` if none follow).
    pub plateau_level: f64,
    /// `sum mu / sum I(F_t;Y)` over checkpoints before the onset.
    pub tracking_ratio: f64,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderResult {
    pub teacher: TrackedRun,
    pub teacher_final: ModelParams,
    pub rungs: Vec<Rung>,
}

/// Summaries of one rung's series against its onset.
pub fn rung_summary(series: &MetricSeries) -> (Threshold, f64, f64) {
    let onset = first_crossing(series, series.i_ly);
    let after: Vec<f64> = series.rows[onset.index + 1..]
        .iter()
        .map(|r| r.mu)
        .collect();
    let plateau = if after.is_empty() {
        series.rows[onset.index].mu
    } else {
        after.iter().sum::<f64>() / after.len() as f64
    };
    let before = &series.rows[..onset.index.max(1)];
    let tracking =
        before.iter().map(|r| r.mu).sum::<f64>() / before.iter().map(|r| r.i_fy).sum::<f64>();
    (onset, plateau, tracking)
}

/// Distill one student per rung from `f_inf` and track `mu(F_t; G_i)` along the teacher's run.
pub fn ladder_from_run(
    teacher: TrackedRun,
    teacher_final: ModelParams,
    train: &LabeledDataset,
    test: &LabeledDataset,
    rungs: &[ShapeSpec],
    student_config: &TrainConfig,
) -> Result<LadderResult> {
    if rungs.len() < 2 {
        return Err(Error::InvalidParameter(
            "a ladder needs at least two rungs".into(),
        ));
    }
    let tshape = teacher_final.shape();
    let rungs = rungs
        .iter()
        .enumerate()
        .map(|(i, shape)| {
            let cfg = TrainConfig {
                seed: derive_seed(student_config.seed, i as u64),
                ..student_config.clone()
            };
            let g = distill_simple(&teacher_final, train, shape, &cfg)?;
            let series = teacher.series(&g.predict_dataset(test)?)?;
            let (onset, plateau_level, tracking_ratio) = rung_summary(&series);
            let wider = shape.hidden.iter().zip(&tshape.hidden).any(|(a, b)| a > b);
            let warning = (shape.depth() > tshape.depth() || wider)
                .then(|| format!("rung {i} is more expressive than the network it explains"));
            Ok(Rung {
                shape: shape.clone(),
                student: g,
                series,
                onset,
                plateau_level,
                tracking_ratio,
                warning,
            })
        })
        .collect::<Result<_>>()?;
    Ok(LadderResult {
        teacher,
        teacher_final,
        rungs,
    })
}

/// Train the full network, then run the ladder against it.
pub fn complexity_ladder(
    train: &LabeledDataset,
    test: &LabeledDataset,
    teacher_shape: &ShapeSpec,
    rungs: &[ShapeSpec],
    teacher_config: &TrainConfig,
    student_config: &TrainConfig,
) -> Result<LadderResult> {
    let (run, last) = train_tracked(teacher_shape, train, test, teacher_config)?;
    ladder_from_run(run, last, train, test, rungs, student_config)
}

/// Settings for the good- vs. bad-initialization comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BadInitConfig {
    pub hidden: Vec<usize>,
    pub n_train: usize,
    /// Randomly labelled points fitted together with the training set.
    pub n_aux: usize,
    /// Fresh samples used to estimate population accuracy.
    pub n_population: usize,
    pub batch_size: usize,
    /// SGD steps from random init that define the good initialization.
    pub good_steps: u64,
    pub good_learning_rate: f64,
    pub pretrain_learning_rate: f64,
    /// Train-set accuracy the bad initialization must reach.
    pub pretrain_target: f64,
    /// Accuracy on training plus auxiliary points required before pretraining stops.
    pub pretrain_union_target: f64,
    pub pretrain_max_steps: u64,
    pub continue_learning_rate: f64,
    pub continue_max_steps: u64,
    /// Steps between training-accuracy checks.
    pub eval_every: u64,
    /// Steps between recorded trajectory points (a multiple of `eval_every`).
    pub record_every: u64,
    pub seed: u64,
}

impl Default for BadInitConfig {
    fn default() -> Self {
        Self {
            hidden: vec![100, 100],
            n_train: 100,
            n_aux: 200,
            n_population: 20_000,
            batch_size: 32,
            good_steps: 100,
            good_learning_rate: 0.1,
            pretrain_learning_rate: 0.3,
            pretrain_target: 0.88,
            pretrain_union_target: 0.95,
            pretrain_max_steps: 200_000,
            continue_learning_rate: 0.01,
            continue_max_steps: 100_000,
            eval_every: 10,
            record_every: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub step: u64,
    pub train_acc: f64,
    pub pop_acc: f64,
}

/// Accuracy trajectory while continuing training on the training set alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitTrajectory {
    /// Steps spent producing the initialization.
    pub init_steps: u64,
    pub points: Vec<TrajectoryPoint>,
}

impl InitTrajectory {
    pub fn start(&self) -> TrajectoryPoint {
        self.points[0]
    }

    pub fn end(&self) -> TrajectoryPoint {
        *self.points.last().expect("trajectory has a start point")
    }

    pub fn max_pop_acc(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.pop_acc)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BadInitResult {
    pub good: InitTrajectory,
    pub bad: InitTrajectory,
}

fn continue_to_interpolation(
    params: ModelParams,
    train: &LabeledDataset,
    population: &LabeledDataset,
    cfg: &BadInitConfig,
    init_steps: u64,
    seed: u64,
) -> Result<InitTrajectory> {
    let tc = train_config(
        cfg.batch_size,
        cfg.continue_learning_rate,
        cfg.continue_max_steps,
        seed,
    );
    let mut trainer = SgdTrainer::new(params, train, tc)?;
    let point = |t: &SgdTrainer| -> Result<TrajectoryPoint> {
        Ok(TrajectoryPoint {
            step: t.step_index(),
            train_acc: t.params().accuracy(train)?,
            pop_acc: t.params().accuracy(population)?,
        })
    };
    let mut points = vec![point(&trainer)?];
    let mut fitted = points[0].train_acc >= 1.0;
    while !fitted && trainer.step_index() < cfg.continue_max_steps {
        for _ in 0..cfg.eval_every {
            trainer.step()?;
        }
        fitted = trainer.params().accuracy(train)? >= 1.0;
        let at_end = fitted || trainer.step_index() >= cfg.continue_max_steps;
        if at_end || trainer.step_index() % cfg.record_every == 0 {
            points.push(point(&trainer)?);
        }
    }
    Ok(InitTrajectory { init_steps, points })
}

fn train_config(batch: usize, lr: f64, steps: u64, seed: u64) -> TrainConfig {
    TrainConfig {
        batch_size: batch,
        learning_rate: lr,
        steps,
        seed,
        ..TrainConfig::new(steps, seed)
    }
}

/// Compare continuing training from a good and from a bad initialization.
///
/// The good initialization is `good_steps` SGD steps from random init on the
/// training set. The bad one fits the training set together with `n_aux`
/// uniformly labelled points until training accuracy reaches the target.
/// Both are then trained on the training set alone until it is interpolated.
pub fn bad_init_experiment(dataset: &DatasetSpec, cfg: &BadInitConfig) -> Result<BadInitResult> {
    if dataset.dim() != 2 {
        return Err(Error::InvalidParameter(format!(
            "bad-init experiment expects 2-d data, got {}",
            dataset.dim()
        )));
    }
    if cfg.eval_every == 0 || cfg.record_every == 0 || cfg.record_every % cfg.eval_every != 0 {
        return Err(Error::InvalidParameter(
            "record_every must be a positive multiple of eval_every".into(),
        ));
    }
    let train = dataset.sample(cfg.n_train, derive_seed(cfg.seed, 1))?;
    let population = dataset.sample(cfg.n_population, derive_seed(cfg.seed, 2))?;
    let shape = ShapeSpec::mlp(2, &cfg.hidden);
    let init = xavier_init(&shape, derive_seed(cfg.seed, 3))?;

    let good_cfg = train_config(
        cfg.batch_size,
        cfg.good_learning_rate,
        cfg.good_steps,
        derive_seed(cfg.seed, 4),
    );
    let good_init = sgd_train(init.clone(), &train, &good_cfg)?
        .pop()
        .expect("final checkpoint")
        .params;
    let good = continue_to_interpolation(
        good_init,
        &train,
        &population,
        cfg,
        cfg.good_steps,
        derive_seed(cfg.seed, 5),
    )?;

    let union = if cfg.n_aux == 0 {
        train.clone()
    } else {
        let aux = DatasetSpec::RandomLabels { d: 2 }.sample(cfg.n_aux, derive_seed(cfg.seed, 6))?;
        train.concat(&aux)?
    };
    let pre_cfg = train_config(
        cfg.batch_size,
        cfg.pretrain_learning_rate,
        cfg.pretrain_max_steps,
        derive_seed(cfg.seed, 7),
    );
    let mut trainer = SgdTrainer::new(init, &union, pre_cfg)?;
    let fitted = |p: &ModelParams| -> Result<(f64, bool)> {
        let acc = p.accuracy(&train)?;
        Ok((
            acc,
            acc >= cfg.pretrain_target && p.accuracy(&union)? >= cfg.pretrain_union_target,
        ))
    };
    let (mut acc, mut done) = fitted(trainer.params())?;
    while !done && trainer.step_index() < cfg.pretrain_max_steps {
        for _ in 0..cfg.eval_every {
            trainer.step()?;
        }
        (acc, done) = fitted(trainer.params())?;
    }
    if !done {
        return Err(Error::PretrainingFailed {
            reached: acc,
            target: cfg.pretrain_target,
            steps: trainer.step_index(),
        });
    }
    let steps = trainer.step_index();
    let bad = continue_to_interpolation(
        trainer.into_params(),
        &train,
        &population,
        cfg,
        steps,
        derive_seed(cfg.seed, 8),
    )?;
    Ok(BadInitResult { good, bad })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(ify: &[f64], i_ly: f64) -> MetricSeries {
        let rows = ify
            .iter()
            .enumerate()
            .map(|(i, &v)| MetricRow {
                step: i as u64 * 10,
                train_acc: 0.0,
                test_acc: 0.0,
                i_fy: v,
                mu: v,
                i_fy_given_l: 0.0,
                i_ly_given_f: 0.0,
                i_ly,
            })
            .collect();
        MetricSeries { rows, i_ly }
    }

    #[test]
    fn t0_at_first_checkpoint() {
        let t = find_t0(&series(&[0.5, 0.6], 0.3));
        assert_eq!((t.index, t.reached), (0, true));
    }

    #[test]
    fn t0_first_crossing_not_last() {
        let s = series(&[0.0, 0.1, 0.2, 0.25, 0.28, 0.29, 0.31, 0.2, 0.35], 0.3);
        let t = find_t0(&s);
        assert_eq!((t.index, t.step), (6, 60));
    }

    #[test]
    fn t0_never_reached_is_flagged() {
        let t = find_t0(&series(&[0.0, 0.1], 0.3));
        assert_eq!((t.index, t.reached), (1, false));
    }

    #[test]
    fn explainer_equal_to_checkpoint_explains_everything() {
        let y: Vec<u8> = (0..400).map(|i| (i % 2) as u8).collect();
        let f: Vec<u8> = y
            .iter()
            .enumerate()
            .map(|(i, &v)| if i % 5 == 0 { 1 - v } else { v })
            .collect();
        let run = TrackedRun::new(
            vec![Evaluated {
                step: 0,
                train_acc: 0.8,
                test_acc: 0.8,
                test_pred: f.clone(),
            }],
            y,
        )
        .unwrap();
        let s = run.series(&f).unwrap();
        assert!((s.rows[0].mu - s.rows[0].i_fy).abs() < 1e-12);
        let rep = phase_report(&run, &f, 1).unwrap();
        assert!((rep.ratio_simple - 1.0).abs() < 1e-12);
        assert!(rep.plateau_band.is_none());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let s = series(&[0.0, 0.1, 0.123456789012345], 0.3);
        s.write_csv(&path).unwrap();
        let back = MetricSeries::read_csv(&path).unwrap();
        assert_eq!(back, s);
        let first = std::fs::read(&path).unwrap();
        back.write_csv(&path).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), first);
        let header = String::from_utf8(first).unwrap();
        assert!(
            header.starts_with("step,train_acc,test_acc,i_fy,mu,i_fy_given_l,i_ly_given_f,i_ly\n")
        );
    }
}
