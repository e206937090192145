//! End-to-end runs of the `phaseprobe` binary on tiny configs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn config(dir: &Path, overrides: Value) -> PathBuf {
    let mut cfg = json!({
        "version": 1,
        "task": {"kind": "gaussian_linear", "d": 2, "noise_rate": 0.1, "task_seed": 3},
        "n_train": 300,
        "n_test": 400,
        "model": {"hidden": [8, 8]},
        "train": {"batch_size": 16, "learning_rate": 0.1, "steps": 60, "checkpoint_schedule": {"kind": "fibonacci"}},
        "simple_model": {
            "protocol": "direct",
            "train": {"batch_size": 16, "learning_rate": 0.1, "steps": 200, "checkpoint_schedule": {"kind": "explicit", "steps": []}}
        },
        "seeds": [0, 1],
        "output_dir": dir.join("out"),
    });
    merge(&mut cfg, overrides);
    let path = dir.join(format!("cfg-{}.json", fs::read_dir(dir).unwrap().count()));
    fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    path
}

fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (b, p) => *b = p,
    }
}

fn run(args: &[&str], cfg: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_phaseprobe"));
    cmd.args(args)
        .arg("--config")
        .arg(cfg)
        .env_remove("PHASEPROBE_DATA_DIR");
    cmd.output().unwrap()
}

fn ok(args: &[&str], cfg: &Path) -> String {
    let out = run(args, cfg);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((
                    p.strip_prefix(dir).unwrap().to_path_buf(),
                    fs::read(&p).unwrap(),
                ));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn gen_data_is_idempotent_and_guards_overwrites() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), json!({}));
    ok(&["gen-data"], &cfg);
    let out = tmp.path().join("out");
    let first = tree(&out);
    ok(&["gen-data"], &cfg);
    assert_eq!(tree(&out), first);
    let a = fs::read(out.join("seed-0/data/train.ppds")).unwrap();
    let b = fs::read(out.join("seed-1/data/train.ppds")).unwrap();
    assert_ne!(a, b);
    assert!(out.join("seed-0/data/train.csv").exists());
    assert!(out.join("seed-0/data/train.ppds.json").exists());

    let changed = config(tmp.path(), json!({"n_train": 250}));
    let refused = run(&["gen-data"], &changed);
    assert!(!refused.status.success());
    assert!(String::from_utf8_lossy(&refused.stderr).contains("--force"));
    ok(&["gen-data", "--force"], &changed);
    assert_ne!(fs::read(out.join("seed-0/data/train.ppds")).unwrap(), a);
}

#[test]
fn zero_steps_writes_only_the_initial_checkpoint() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), json!({"train": {"steps": 0}, "seeds": [4]}));
    ok(&["train"], &cfg);
    let files: Vec<_> = tree(&tmp.path().join("out/seed-4/checkpoints"))
        .into_iter()
        .map(|(p, _)| p)
        .collect();
    assert_eq!(
        files,
        vec![
            PathBuf::from("step-0000000000.ppck"),
            PathBuf::from("step-0000000000.ppck.json")
        ]
    );
}

#[test]
fn interrupted_training_resumes_bitwise() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), json!({"seeds": [2]}));
    ok(&["train"], &cfg);
    let dir = tmp.path().join("out/seed-2/checkpoints");
    let full = tree(&dir);
    // Simulate an interruption after step 21.
    for (p, _) in &full {
        let step: u64 = p.to_str().unwrap()[5..15].parse().unwrap();
        if step > 21 {
            fs::remove_file(dir.join(p)).unwrap();
        }
    }
    let msg = ok(&["train"], &cfg);
    assert!(msg.contains("resumed at step 21"), "{msg}");
    assert_eq!(tree(&dir), full);
    assert!(ok(&["train"], &cfg).contains("up to date"));

    let other = config(
        tmp.path(),
        json!({"seeds": [2], "train": {"learning_rate": 0.05}}),
    );
    assert!(!run(&["train"], &other).status.success());
}

#[test]
fn analyze_writes_series_reports_and_summaries() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), json!({}));
    let missing = run(&["analyze"], &cfg);
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("no checkpoints"));

    ok(&["gen-data"], &cfg);
    ok(&["train", "--workers", "2"], &cfg);
    let stdout = ok(&["analyze", "--svg"], &cfg);
    assert!(stdout.contains("ratio_simple"));
    let out = tmp.path().join("out");

    let csv_path = out.join("seed-0/metrics.csv");
    let text = fs::read_to_string(&csv_path).unwrap();
    assert!(text.starts_with("step,train_acc,test_acc,i_fy,mu,i_fy_given_l,i_ly_given_f,i_ly\n"));
    // Fibonacci steps up to 60 plus step 0 and the final step.
    assert_eq!(text.lines().count(), 1 + 11);
    let series = phaseprobe::probes::MetricSeries::read_csv(&csv_path).unwrap();
    assert_eq!(series.to_csv_bytes().unwrap(), text.as_bytes());

    let report: Value =
        serde_json::from_slice(&fs::read(out.join("seed-0/report.json")).unwrap()).unwrap();
    for key in ["ratio_simple", "ratio_null"] {
        let r = report[key].as_f64().unwrap();
        assert!((-1.0..=1.0 + 1e-9).contains(&r), "{key} = {r}");
    }
    let summary: Value =
        serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seeds"].as_array().unwrap().len(), 2);
    assert!(summary["ratio_simple"]["std"].as_f64().unwrap() >= 0.0);
    let mean_csv = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(mean_csv.starts_with("step,seeds,train_acc_mean,train_acc_std,"));
    assert!(fs::read_to_string(out.join("seed-1/metrics.svg"))
        .unwrap()
        .starts_with("<svg"));
    assert!(out.join("summary.svg").exists());
    assert!(out.join("seed-0/simple/linear.ppck").exists());

    // Re-running is a no-op on the outputs.
    let before = tree(&out);
    ok(&["analyze", "--svg"], &cfg);
    assert_eq!(tree(&out), before);

    let rep = ok(&["report"], &cfg);
    assert!(rep.contains("mean ± std"));
    assert!(out.join("report.md").exists());
}

#[test]
fn ladder_and_distill_protocols_run() {
    let tmp = tempfile::tempdir().unwrap();
    for (i, protocol) in ["ladder", "distill_at_t0"].iter().enumerate() {
        let cfg = config(
            tmp.path(),
            json!({"seeds": [0], "output_dir": tmp.path().join(format!("o{i}")), "simple_model": {"protocol": protocol, "rungs": [[], [4]]}}),
        );
        ok(&["train"], &cfg);
        ok(&["analyze"], &cfg);
        let root = tmp.path().join(format!("o{i}/seed-0"));
        assert!(root.join("report.json").exists());
        if *protocol == "ladder" {
            assert!(root.join("rung-1.csv").exists());
            let s: Value =
                serde_json::from_slice(&fs::read(tmp.path().join("o0/summary.json")).unwrap())
                    .unwrap();
            assert_eq!(s["seeds"][0]["ladder"].as_array().unwrap().len(), 2);
        }
    }
}

#[test]
fn theory_sweep_rows_and_monotonicity() {
    let tmp = tempfile::tempdir().unwrap();
    let single = config(
        tmp.path(),
        json!({"seeds": [0], "theory": {"n": [10], "d": [200], "p": [0.1], "init": [{"kind": "simplest"}], "mc_samples": 2000}}),
    );
    ok(&["theory"], &single);
    let rows = phaseprobe::theory::read_theory_csv(&tmp.path().join("out/theory.csv")).unwrap();
    assert_eq!(rows.len(), 1);

    let sweep = config(
        tmp.path(),
        json!({"seeds": [0], "output_dir": tmp.path().join("sweep"), "theory": {"n": [20], "d": [2000], "p": [0.0, 0.1, 0.2, 0.3], "init": [{"kind": "simplest"}], "mc_samples": 20000}}),
    );
    let stdout = ok(&["theory", "--seed-override", "5"], &sweep);
    assert!(stdout.contains("Sparse-noise theory"));
    let path = tmp.path().join("sweep/theory.csv");
    let rows = phaseprobe::theory::read_theory_csv(&path).unwrap();
    assert!(rows.iter().all(|r| r.seed == 5 && r.train_acc == 1.0));
    assert!(rows.windows(2).all(|w| w[0].pop_acc >= w[1].pop_acc));
    // Parsing and re-serializing is byte-identical.
    assert_eq!(
        phaseprobe::theory::theory_csv_bytes(&rows).unwrap(),
        fs::read(&path).unwrap()
    );
}

#[test]
fn bad_configs_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let typo = config(tmp.path(), json!({"learning_rat": 0.1}));
    assert!(!run(&["train"], &typo).status.success());
    let empty = config(tmp.path(), json!({"seeds": []}));
    assert!(!run(&["gen-data"], &empty).status.success());
    let nothing = config(
        tmp.path(),
        json!({"output_dir": tmp.path().join("nothing")}),
    );
    assert!(!run(&["report"], &nothing).status.success());
}

#[test]
fn shipped_configs_validate() {
    use phaseprobe::config::ExperimentConfig;
    let data = tempfile::tempdir().unwrap();
    for f in [
        "train-images-idx3-ubyte",
        "train-labels-idx1-ubyte",
        "t10k-images-idx3-ubyte",
        "t10k-labels-idx1-ubyte",
    ] {
        fs::write(data.path().join(f), b"").unwrap();
    }
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        ExperimentConfig::from_json(&text, Some(data.path()))
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        seen += 1;
    }
    assert!(seen >= 5);
}
