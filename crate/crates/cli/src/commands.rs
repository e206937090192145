//! Subcommand implementations.
//!
//! Output layout under the config's `output_dir`:
//!
//! ```text
//! seed-<s>/data/{train,test}.ppds (+ .json sidecar, .csv export)
//! seed-<s>/checkpoints/step-<step>.ppck (+ .json sidecar)
//! seed-<s>/simple/*.ppck          simple models used as explainers
//! seed-<s>/metrics.csv            MetricSeries against the simple model
//! seed-<s>/rung-<i>.csv           ladder protocol: one series per rung
//! seed-<s>/report.json            PhaseReport
//! summary.json, summary.csv       cross-seed mean and standard deviation
//! theory.csv                      sparse-noise theory sweep
//! report.md                       human-readable summary
//! ```
//!
//! Datasets that do not depend on the seed (MNIST) live in `data/`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use phaseprobe::config::{ExperimentConfig, Protocol};
use phaseprobe::datagen::{load_dataset, LabeledDataset};
use phaseprobe::derive_seed;
use phaseprobe::models::{
    load_checkpoint, save_checkpoint, Checkpoint, ModelParams, SgdTrainer, ShapeSpec, TrainConfig,
};
use phaseprobe::plot::render_series_svg;
use phaseprobe::probes::{
    distill_simple, evaluate_checkpoint, find_t0, initial_params, ladder_from_run, mean_std,
    phase_report_for, train_final, MetricRow, MetricSeries, PhaseReport, TrackedRun,
};
use phaseprobe::theory::{
    read_theory_csv, theorem1_experiment, theory_csv_bytes, Theorem1Config, TheoremRow,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::store::{checkpoint_path, list_checkpoints, put, put_checkpoint, put_dataset};
use crate::Common;

/// Seed tags shared with the library's acceptance protocol.
const SIMPLE_TAG: u64 = 303;
const NULL_TAG: u64 = 404;
const STUDENT_TAG: u64 = 505;

pub struct Context {
    cfg: ExperimentConfig,
    seeds: Vec<u64>,
    root: PathBuf,
    force: bool,
    svg: bool,
}

impl Context {
    pub fn new(args: &Common) -> Result<Self> {
        let cfg = ExperimentConfig::load(&args.config)
            .with_context(|| format!("loading config {}", args.config.display()))?;
        let seeds = args
            .seed_override
            .map_or_else(|| cfg.seeds.clone(), |s| vec![s]);
        Ok(Self {
            root: cfg.output_dir.clone(),
            cfg,
            seeds,
            force: args.force,
            svg: args.svg,
        })
    }

    fn seed_dir(&self, seed: u64) -> PathBuf {
        self.root.join(format!("seed-{seed}"))
    }

    fn data_dir(&self, seed: u64) -> PathBuf {
        if self.cfg.seeded_data() {
            self.seed_dir(seed).join("data")
        } else {
            self.root.join("data")
        }
    }

    fn checkpoint_dir(&self, seed: u64) -> PathBuf {
        self.seed_dir(seed).join("checkpoints")
    }

    /// Datasets written by `gen-data` if present, otherwise generated in memory.
    fn datasets(&self, seed: u64) -> Result<(LabeledDataset, LabeledDataset)> {
        let dir = self.data_dir(seed);
        let (tr, te) = (dir.join("train.ppds"), dir.join("test.ppds"));
        if tr.exists() && te.exists() {
            return Ok((load_dataset(&tr)?, load_dataset(&te)?));
        }
        Ok(self.cfg.datasets(seed)?)
    }
}

pub fn gen_data(ctx: &Context) -> Result<()> {
    let seeds: Vec<u64> = if ctx.cfg.seeded_data() {
        ctx.seeds.clone()
    } else {
        ctx.seeds[..1].to_vec()
    };
    let lines = seeds
        .par_iter()
        .map(|&seed| {
            let (train, test) = ctx.cfg.datasets(seed)?;
            let dir = ctx.data_dir(seed);
            put_dataset(&train, &dir.join("train.ppds"), ctx.force)?;
            put_dataset(&test, &dir.join("test.ppds"), ctx.force)?;
            Ok(format!(
                "{}: train {} x {}, test {} x {}",
                dir.display(),
                train.n,
                train.d,
                test.n,
                test.d
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    lines.iter().for_each(|l| println!("{l}"));
    Ok(())
}

pub fn train(ctx: &Context) -> Result<()> {
    let lines = ctx
        .seeds
        .par_iter()
        .map(|&seed| train_seed(ctx, seed))
        .collect::<Result<Vec<_>>>()?;
    lines.iter().for_each(|l| println!("{l}"));
    Ok(())
}

fn train_seed(ctx: &Context, seed: u64) -> Result<String> {
    let (train, _) = ctx.datasets(seed)?;
    let cfg = ctx.cfg.train.with_seed(seed);
    let dir = ctx.checkpoint_dir(seed);
    if ctx.force && dir.exists() {
        std::fs::remove_dir_all(&dir).with_context(|| format!("removing {}", dir.display()))?;
    }
    let mut latest: Option<Checkpoint> = None;
    let existing = list_checkpoints(&dir)?;
    for (_, path) in &existing {
        let (ckpt, meta) = load_checkpoint(path)?;
        if meta.config != cfg {
            bail!(
                "{} was written with a different training config (pass --force to retrain)",
                path.display()
            );
        }
        latest = Some(ckpt);
    }
    let schedule = cfg.checkpoint_schedule.steps(cfg.steps)?;
    if existing.len() == schedule.len() && latest.as_ref().is_some_and(|c| c.step == cfg.steps) {
        return Ok(format!(
            "seed {seed}: {} checkpoints up to date",
            existing.len()
        ));
    }
    let (params, start) = match latest {
        Some(c) => (c.params, c.step),
        None => (initial_params(&ctx.cfg.network_shape(), seed)?, 0),
    };
    let mut trainer = SgdTrainer::resume(params, start, &train, cfg.clone())?;
    let mut written = 0;
    trainer.run(|c| {
        written += 1;
        save_checkpoint(&c, &cfg, &checkpoint_path(&dir, c.step))
    })?;
    let how = if start > 0 {
        format!("resumed at step {start}")
    } else {
        "fresh".into()
    };
    Ok(format!(
        "seed {seed}: {written} checkpoints written ({how}), final step {}",
        cfg.steps
    ))
}

/// Per-rung summary written for the ladder protocol.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RungSummary {
    pub hidden: Vec<usize>,
    pub onset_step: u64,
    pub onset_reached: bool,
    pub plateau_level: f64,
    pub tracking_ratio: f64,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub simple_test_acc: f64,
    pub final_train_acc: f64,
    pub final_test_acc: f64,
    pub report: PhaseReport,
    #[serde(default)]
    pub ladder: Option<Vec<RungSummary>>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    fn of(xs: &[f64]) -> Self {
        let (mean, std) = mean_std(xs);
        Self { mean, std }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub protocol: Protocol,
    pub seeds: Vec<SeedSummary>,
    pub ratio_simple: MeanStd,
    pub ratio_null: MeanStd,
    pub i_ly: MeanStd,
    pub simple_test_acc: MeanStd,
    pub final_test_acc: MeanStd,
    /// Seeds where `I(F_t;Y)` reached `I(L;Y)` at some checkpoint.
    pub t0_reached: usize,
    /// Seeds where every checkpoint after `T0` keeps `mu >= 0.8 I(L;Y)` (our plateau criterion).
    pub plateau_held: usize,
}

pub fn analyze(ctx: &Context) -> Result<()> {
    let per_seed = ctx
        .seeds
        .par_iter()
        .map(|&seed| analyze_seed(ctx, seed))
        .collect::<Result<Vec<_>>>()?;
    let (seeds, series): (Vec<SeedSummary>, Vec<MetricSeries>) = per_seed.into_iter().unzip();
    let pick = |f: fn(&SeedSummary) -> f64| MeanStd::of(&seeds.iter().map(f).collect::<Vec<_>>());
    let summary = Summary {
        protocol: ctx.cfg.simple_model.protocol,
        ratio_simple: pick(|s| s.report.ratio_simple),
        ratio_null: pick(|s| s.report.ratio_null),
        i_ly: pick(|s| s.report.i_ly),
        simple_test_acc: pick(|s| s.simple_test_acc),
        final_test_acc: pick(|s| s.final_test_acc),
        t0_reached: seeds.iter().filter(|s| s.report.t0_reached).count(),
        plateau_held: seeds
            .iter()
            .filter(|s| s.report.t0_reached && s.report.plateau_ratio.is_some_and(|p| p >= 0.8))
            .count(),
        seeds,
    };
    put(
        &ctx.root.join("summary.json"),
        serde_json::to_string_pretty(&summary)?.as_bytes(),
        ctx.force,
    )?;
    if let Some(mean) = write_mean_series(ctx, &series)? {
        if ctx.svg {
            let svg = render_series_svg(&mean, &format!("mean over {} seed(s)", series.len()));
            put(&ctx.root.join("summary.svg"), svg.as_bytes(), ctx.force)?;
        }
    }
    print!("{}", render_summary(&summary));
    Ok(())
}

fn analyze_seed(ctx: &Context, seed: u64) -> Result<(SeedSummary, MetricSeries)> {
    let (train, test) = ctx.datasets(seed)?;
    let ckpts = list_checkpoints(&ctx.checkpoint_dir(seed))?;
    if ckpts.is_empty() {
        bail!(
            "no checkpoints in {} (run `phaseprobe train` first)",
            ctx.checkpoint_dir(seed).display()
        );
    }
    let evals = ckpts
        .par_iter()
        .map(|(_, path)| {
            Ok(evaluate_checkpoint(
                &load_checkpoint(path)?.0,
                &train,
                &test,
            )?)
        })
        .collect::<Result<Vec<_>>>()?;
    let run = TrackedRun::new(evals, test.labels.clone())?;
    let load = |i: usize| -> Result<ModelParams> { Ok(load_checkpoint(&ckpts[i].1)?.0.params) };
    let dir = ctx.seed_dir(seed);
    let simple_cfg = ctx
        .cfg
        .simple_model
        .train
        .with_seed(derive_seed(seed, SIMPLE_TAG));
    let linear = ShapeSpec::linear(train.d);
    let keep = |name: &str, g: &ModelParams, cfg: &TrainConfig| {
        let ck = Checkpoint {
            step: cfg.steps,
            params: g.clone(),
        };
        put_checkpoint(
            &ck,
            cfg,
            &dir.join("simple").join(format!("{name}.ppck")),
            ctx.force,
        )
    };

    let (simple, ladder) = match ctx.cfg.simple_model.protocol {
        Protocol::Direct => {
            let g = train_final(&linear, &train, &simple_cfg)?;
            keep("linear", &g, &simple_cfg)?;
            (g, None)
        }
        Protocol::DistillAtT0 => {
            let probe = train_final(&linear, &train, &simple_cfg)?;
            let t0 = find_t0(&run.series(&probe.predict_dataset(&test)?)?);
            let g = distill_simple(&load(t0.index)?, &train, &linear, &simple_cfg)?;
            keep("probe", &probe, &simple_cfg)?;
            keep("distilled", &g, &simple_cfg)?;
            (g, None)
        }
        Protocol::Ladder => {
            let shapes: Vec<ShapeSpec> = ctx
                .cfg
                .simple_model
                .rungs
                .iter()
                .map(|h| ShapeSpec::mlp(train.d, h))
                .collect();
            let student = ctx
                .cfg
                .simple_model
                .train
                .with_seed(derive_seed(seed, STUDENT_TAG));
            let teacher = load(ckpts.len() - 1)?;
            let result = ladder_from_run(
                run.clone(),
                teacher.clone(),
                &train,
                &test,
                &shapes,
                &student,
            )?;
            let mut rungs = Vec::new();
            for (i, r) in result.rungs.iter().enumerate() {
                put(
                    &dir.join(format!("rung-{i}.csv")),
                    &r.series.to_csv_bytes()?,
                    ctx.force,
                )?;
                if let Some(w) = &r.warning {
                    eprintln!("seed {seed}: warning: {w}");
                }
                rungs.push(RungSummary {
                    hidden: r.shape.hidden.clone(),
                    onset_step: r.onset.step,
                    onset_reached: r.onset.reached,
                    plateau_level: r.plateau_level,
                    tracking_ratio: r.tracking_ratio,
                    warning: r.warning.clone(),
                });
            }
            for (i, r) in result.rungs.iter().enumerate() {
                keep(
                    &format!("rung-{i}"),
                    &r.student,
                    &TrainConfig {
                        seed: derive_seed(student.seed, i as u64),
                        ..student.clone()
                    },
                )?;
            }
            // The lowest rung is the simple model of the phase report.
            (result.rungs[0].student.clone(), Some(rungs))
        }
    };

    let series = run.series(&simple.predict_dataset(&test)?)?;
    let report = phase_report_for(&run, &series, derive_seed(seed, NULL_TAG))?;
    put(&dir.join("metrics.csv"), &series.to_csv_bytes()?, ctx.force)?;
    put(
        &dir.join("report.json"),
        serde_json::to_string_pretty(&report)?.as_bytes(),
        ctx.force,
    )?;
    if ctx.svg {
        put(
            &dir.join("metrics.svg"),
            render_series_svg(&series, &format!("seed {seed}")).as_bytes(),
            ctx.force,
        )?;
    }
    let last = run.evals.last().expect("non-empty run");
    let summary = SeedSummary {
        seed,
        simple_test_acc: simple.accuracy(&test)?,
        final_train_acc: last.train_acc,
        final_test_acc: last.test_acc,
        report,
        ladder,
    };
    Ok((summary, series))
}

const COLUMNS: [&str; 7] = [
    "train_acc",
    "test_acc",
    "i_fy",
    "mu",
    "i_fy_given_l",
    "i_ly_given_f",
    "i_ly",
];

fn columns(r: &MetricRow) -> [f64; 7] {
    [
        r.train_acc,
        r.test_acc,
        r.i_fy,
        r.mu,
        r.i_fy_given_l,
        r.i_ly_given_f,
        r.i_ly,
    ]
}

/// Write `summary.csv` (per-step mean and std across seeds); `None` if seeds disagree on steps.
fn write_mean_series(ctx: &Context, series: &[MetricSeries]) -> Result<Option<MetricSeries>> {
    let steps = series[0].steps();
    if series.iter().any(|s| s.steps() != steps) {
        eprintln!("warning: seeds have different checkpoint steps; skipping summary.csv");
        return Ok(None);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["step".to_string(), "seeds".to_string()];
    for c in COLUMNS {
        header.push(format!("{c}_mean"));
        header.push(format!("{c}_std"));
    }
    w.write_record(&header)?;
    let mut rows = Vec::new();
    for (i, &step) in steps.iter().enumerate() {
        let mut rec = vec![step.to_string(), series.len().to_string()];
        let mut means = [0.0; 7];
        for (k, m) in means.iter_mut().enumerate() {
            let xs: Vec<f64> = series.iter().map(|s| columns(&s.rows[i])[k]).collect();
            let (mean, std) = mean_std(&xs);
            *m = mean;
            rec.push(mean.to_string());
            rec.push(std.to_string());
        }
        w.write_record(&rec)?;
        let [train_acc, test_acc, i_fy, mu, i_fy_given_l, i_ly_given_f, i_ly] = means;
        rows.push(MetricRow {
            step,
            train_acc,
            test_acc,
            i_fy,
            mu,
            i_fy_given_l,
            i_ly_given_f,
            i_ly,
        });
    }
    put(&ctx.root.join("summary.csv"), &w.into_inner()?, ctx.force)?;
    let i_ly = rows.first().map_or(0.0, |r| r.i_ly);
    Ok(Some(MetricSeries { rows, i_ly }))
}

pub fn theory(ctx: &Context) -> Result<()> {
    let grid = ctx.cfg.theory.clone().unwrap_or_default();
    let jobs: Vec<Theorem1Config> = grid
        .expand(&ctx.seeds)
        .into_iter()
        .flat_map(|c| {
            c.seeds
                .iter()
                .map(|&s| Theorem1Config {
                    seeds: vec![s],
                    ..c.clone()
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let rows: Vec<TheoremRow> = jobs
        .par_iter()
        .map(|c| {
            theorem1_experiment(c).with_context(|| {
                format!("n = {}, d = {}, p = {}, init = {}", c.n, c.d, c.p, c.init)
            })
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    put(
        &ctx.root.join("theory.csv"),
        &theory_csv_bytes(&rows)?,
        ctx.force,
    )?;
    print!("{}", render_theory(&rows));
    Ok(())
}

pub fn report(ctx: &Context) -> Result<()> {
    let mut text = String::new();
    let summary_path = ctx.root.join("summary.json");
    let theory_path = ctx.root.join("theory.csv");
    if summary_path.exists() {
        let s: Summary = serde_json::from_slice(&std::fs::read(&summary_path)?)
            .with_context(|| format!("parsing {}", summary_path.display()))?;
        text.push_str(&render_summary(&s));
        if ctx.svg {
            let mean_path = ctx.root.join("summary.csv");
            if let Some(series) = read_mean_series(&mean_path)? {
                put(
                    &ctx.root.join("summary.svg"),
                    render_series_svg(&series, "mean over seeds").as_bytes(),
                    ctx.force,
                )?;
            }
        }
    }
    if theory_path.exists() {
        text.push('\n');
        text.push_str(&render_theory(&read_theory_csv(&theory_path)?));
    }
    if text.is_empty() {
        bail!(
            "nothing to report in {} (run `analyze` or `theory` first)",
            ctx.root.display()
        );
    }
    put(&ctx.root.join("report.md"), text.as_bytes(), ctx.force)?;
    print!("{text}");
    Ok(())
}

fn read_mean_series(path: &Path) -> Result<Option<MetricSeries>> {
    if !path.exists() {
        return Ok(None);
    }
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> { Ok(rec.get(i).context("short row")?.parse()?) };
        // Columns: step, seeds, then (mean, std) pairs in COLUMNS order.
        let m = |k: usize| num(2 + 2 * k);
        rows.push(MetricRow {
            step: rec.get(0).context("short row")?.parse()?,
            train_acc: m(0)?,
            test_acc: m(1)?,
            i_fy: m(2)?,
            mu: m(3)?,
            i_fy_given_l: m(4)?,
            i_ly_given_f: m(5)?,
            i_ly: m(6)?,
        });
    }
    let i_ly = rows.first().map_or(0.0, |r| r.i_ly);
    Ok(Some(MetricSeries { rows, i_ly }))
}

fn render_summary(s: &Summary) -> String {
    let mut t = String::new();
    let _ = writeln!(
        t,
        "## Phase analysis ({:?} protocol, {} seed(s))\n",
        s.protocol,
        s.seeds.len()
    );
    let _ = writeln!(t, "| seed | T0 | I(L;Y) | ratio_simple | ratio_null | min mu/I(L;Y) after T0 | simple acc | final test acc |");
    let _ = writeln!(t, "|---|---|---|---|---|---|---|---|");
    for x in &s.seeds {
        let r = &x.report;
        let t0 = if r.t0_reached {
            r.t0.to_string()
        } else {
            format!("not reached ({})", r.t0)
        };
        let plateau = r.plateau_ratio.map_or("-".into(), |p| format!("{p:.3}"));
        let _ = writeln!(
            t,
            "| {} | {t0} | {:.4} | {:.3} | {:.3} ± {:.3} | {plateau} | {:.4} | {:.4} |",
            x.seed,
            r.i_ly,
            r.ratio_simple,
            r.ratio_null,
            r.ratio_null_std,
            x.simple_test_acc,
            x.final_test_acc
        );
    }
    let ms = |m: MeanStd| format!("{:.3} ± {:.3}", m.mean, m.std);
    let _ = writeln!(
        t,
        "| mean ± std | {}/{} reached | {} | {} | {} | {}/{} held | {} | {} |",
        s.t0_reached,
        s.seeds.len(),
        ms(s.i_ly),
        ms(s.ratio_simple),
        ms(s.ratio_null),
        s.plateau_held,
        s.seeds.len(),
        ms(s.simple_test_acc),
        ms(s.final_test_acc)
    );
    let _ = writeln!(
        t,
        "\nPlateau criterion: every checkpoint after T0 keeps mu >= 0.8 I(L;Y)."
    );
    if let Some(first) = s.seeds.iter().find_map(|x| x.ladder.as_ref()) {
        let _ = writeln!(
            t,
            "\n| rung | hidden | plateau level (mean) | tracking ratio (mean) |"
        );
        let _ = writeln!(t, "|---|---|---|---|");
        for i in 0..first.len() {
            let col = |f: fn(&RungSummary) -> f64| {
                let xs: Vec<f64> = s
                    .seeds
                    .iter()
                    .filter_map(|x| x.ladder.as_ref().map(|l| f(&l[i])))
                    .collect();
                mean_std(&xs).0
            };
            let _ = writeln!(
                t,
                "| {i} | {:?} | {:.4} | {:.3} |",
                first[i].hidden,
                col(|r| r.plateau_level),
                col(|r| r.tracking_ratio)
            );
        }
    }
    t
}

fn render_theory(rows: &[TheoremRow]) -> String {
    let mut groups: BTreeMap<(usize, usize, String, String), Vec<&TheoremRow>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.n, r.d, format!("{:.4}", r.p), r.w0_spec.clone()))
            .or_default()
            .push(r);
    }
    let mut t = String::new();
    let _ = writeln!(t, "## Sparse-noise theory\n");
    let _ = writeln!(t, "| n | d | p | w0 | seeds | train acc (min) | population acc | 1 - p | max distance to limit |");
    let _ = writeln!(t, "|---|---|---|---|---|---|---|---|---|");
    for ((n, d, p, init), g) in &groups {
        let pop: Vec<f64> = g.iter().map(|r| r.pop_acc).collect();
        let (m, s) = mean_std(&pop);
        let train = g.iter().map(|r| r.train_acc).fold(f64::INFINITY, f64::min);
        let dist = g.iter().map(|r| r.dist_to_closed_form).fold(0.0, f64::max);
        let _ = writeln!(
            t,
            "| {n} | {d} | {p} | {init} | {} | {train:.3} | {m:.4} ± {s:.4} | {:.2} | {dist:.2e} |",
            g.len(),
            1.0 - g[0].p
        );
    }
    t
}
