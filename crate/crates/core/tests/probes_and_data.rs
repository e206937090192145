//! Tracking protocol and data generators against direct computations.

use phaseprobe::datagen::*;
use phaseprobe::infotheory::{performance_correlation, JointCounts3};
use phaseprobe::models::*;
use phaseprobe::probes::*;

#[test]
fn track_metrics_matches_materialized_tables() {
    let train = gen_gaussian_linear(400, 2, 0.1, 1).unwrap();
    let test = gen_gaussian_linear(2000, 2, 0.1, 2).unwrap();
    let mut cfg = TrainConfig::new(300, 3);
    cfg.learning_rate = 0.1;
    let ck = sgd_train(
        xavier_init(&ShapeSpec::mlp(2, &[8]), 0).unwrap(),
        &train,
        &cfg,
    )
    .unwrap();
    let simple = train_final(&ShapeSpec::linear(2), &train, &cfg).unwrap();
    let series = track_metrics(&ck, &simple, &train, &test).unwrap();
    let g = simple.predict_dataset(&test).unwrap();
    assert_eq!(series.rows.len(), ck.len());
    for (row, c) in series.rows.iter().zip(&ck) {
        let f = c.params.predict_dataset(&test).unwrap();
        let mut counts = [0u64; 8];
        for i in 0..test.n {
            counts[usize::from(f[i]) * 4 + usize::from(test.labels[i]) * 2 + usize::from(g[i])] +=
                1;
        }
        let m = performance_correlation(&JointCounts3::new(counts).unwrap()).unwrap();
        assert_eq!(row.step, c.step);
        assert_eq!(
            (row.i_fy, row.mu, row.i_fy_given_l),
            (m.i_fy, m.mu, m.i_fy_given_l)
        );
        assert_eq!(row.test_acc, accuracy(&f, &test.labels));
        assert_eq!(row.train_acc, c.params.accuracy(&train).unwrap());
    }
}

#[test]
fn metrics_are_invariant_to_relabelling_classes() {
    // Swapping 0/1 in F, Y and L together leaves every information term unchanged.
    let f: Vec<u8> = (0..997u32).map(|i| u8::from(i % 3 == 0)).collect();
    let y: Vec<u8> = (0..997u32).map(|i| u8::from(i % 5 < 2)).collect();
    let l: Vec<u8> = (0..997u32).map(|i| u8::from(i % 7 < 4)).collect();
    let flip = |v: &[u8]| v.iter().map(|b| 1 - b).collect::<Vec<u8>>();
    let a = performance_correlation(&JointCounts3::from_samples(&f, &y, &l).unwrap()).unwrap();
    let b = performance_correlation(
        &JointCounts3::from_samples(&flip(&f), &flip(&y), &flip(&l)).unwrap(),
    )
    .unwrap();
    assert!((a.mu - b.mu).abs() < 1e-12 && (a.i_fy - b.i_fy).abs() < 1e-12);
}

#[test]
fn self_distillation_recovers_the_teacher() {
    let train = gen_gaussian_linear(2000, 2, 0.1, 4).unwrap();
    let test = gen_gaussian_linear(5000, 2, 0.1, 5).unwrap();
    let mut cfg = TrainConfig::new(3000, 6);
    cfg.learning_rate = 0.1;
    let teacher = train_final(&ShapeSpec::linear(2), &train, &cfg).unwrap();
    let student = distill_simple(
        &teacher,
        &train,
        &ShapeSpec::linear(2),
        &TrainConfig { seed: 7, ..cfg },
    )
    .unwrap();
    let agree = accuracy(
        &student.predict_dataset(&test).unwrap(),
        &teacher.predict_dataset(&test).unwrap(),
    );
    assert!(agree >= 0.98, "agreement {agree}");
}

#[test]
fn constant_teacher_is_rejected() {
    let train = gen_gaussian_linear(100, 2, 0.1, 4).unwrap();
    let mut teacher = xavier_init(&ShapeSpec::linear(2), 0).unwrap();
    teacher.layers[0].weights = vec![0.0, 0.0];
    teacher.layers[0].bias = vec![5.0];
    let err = distill_simple(
        &teacher,
        &train,
        &ShapeSpec::linear(2),
        &TrainConfig::new(10, 0),
    )
    .unwrap_err();
    assert!(matches!(err, phaseprobe::Error::DegenerateTeacher));
}

#[test]
fn generators_are_balanced_and_match_noise_rates() {
    let n = 100_000;
    for spec in [
        DatasetSpec::gaussian_linear(2, 0.1, 1).unwrap(),
        DatasetSpec::disk_sinusoid(0.3, 2.0 * std::f64::consts::PI, 0.1).unwrap(),
        DatasetSpec::sinusoid(20, DEFAULT_SINUSOID_NORM, 3).unwrap(),
    ] {
        let ds = spec.sample(n, 9).unwrap();
        let ones = ds.labels.iter().filter(|&&y| y == 1).count() as f64 / n as f64;
        assert!((ones - 0.5).abs() < 0.01, "{spec:?}: balance {ones}");
        if !matches!(spec, DatasetSpec::SinusoidHighdim { .. }) {
            let clean = (0..n)
                .filter(|&i| {
                    let x: Vec<f64> = ds.row(i).iter().map(|&v| f64::from(v)).collect();
                    spec.clean_label(&x) == Some(ds.labels[i])
                })
                .count() as f64
                / n as f64;
            assert!(
                (clean - 0.9).abs() < 0.01,
                "{spec:?}: clean agreement {clean}"
            );
        }
    }
    assert_eq!(
        DatasetSpec::gaussian_linear(2, 0.1, 1)
            .unwrap()
            .sample(50, 3)
            .unwrap(),
        DatasetSpec::gaussian_linear(2, 0.1, 1)
            .unwrap()
            .sample(50, 3)
            .unwrap()
    );
}

#[test]
fn sinusoid_task_is_about_eighty_percent_linear() {
    let spec = DatasetSpec::sinusoid(100, DEFAULT_SINUSOID_NORM, 7).unwrap();
    let train = spec.sample(10_000, 1).unwrap();
    let test = spec.sample(10_000, 2).unwrap();
    let mut cfg = TrainConfig::new(20_000, 0);
    cfg.learning_rate = 0.01;
    let lin = train_final(&ShapeSpec::linear(100), &train, &cfg).unwrap();
    let acc = lin.accuracy(&test).unwrap();
    assert!((0.76..=0.84).contains(&acc), "linear accuracy {acc}");
}

#[test]
fn containers_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let ds = gen_gaussian_linear(37, 2, 0.1, 3).unwrap();
    let path = dir.path().join("d.ppds");
    save_dataset(&ds, &path).unwrap();
    assert_eq!(load_dataset(&path).unwrap(), ds);
    assert!(sidecar_path(&path).exists());
    write_dataset_csv(&ds, &dir.path().join("d.csv")).unwrap();
    let text = std::fs::read_to_string(dir.path().join("d.csv")).unwrap();
    assert!(text.starts_with("x0,x1,label\n"));
    assert_eq!(text.lines().count(), 38);

    let (ip, lp) = (dir.path().join("i.idx"), dir.path().join("l.idx"));
    let pixels: Vec<u8> = (0..3 * 4).map(|v| (v * 20) as u8).collect();
    write_idx_images(&ip, 2, 2, &pixels).unwrap();
    write_idx_labels(&lp, &[0, 5, 9]).unwrap();
    let m = load_binary_mnist(&ip, &lp).unwrap();
    assert_eq!((m.n, m.d, m.labels.clone()), (3, 4, vec![0, 1, 1]));
    assert!((m.features[1] - 20.0 / 255.0).abs() < 1e-7);
}
