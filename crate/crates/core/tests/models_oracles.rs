//! Backprop, forward pass and SGD checked against naive reimplementations.

mod common;

use common::{fd_check, naive_logit, naive_loss};
use phaseprobe::datagen::gen_gaussian_linear;
use phaseprobe::models::*;
use phaseprobe::seeded_rng;
use rand::Rng;

fn random_net(rng: &mut impl Rng, loss: Loss, seed: u64) -> ModelParams {
    let depth = rng.random_range(0..=3);
    let d = rng.random_range(1..=8);
    let hidden: Vec<usize> = (0..depth).map(|_| rng.random_range(1..=16)).collect();
    let mut shape = ShapeSpec::mlp(d, &hidden);
    if loss == Loss::Square {
        shape.output = Activation::Identity;
        shape.bias = rng.random();
    }
    let mut p = xavier_init(&shape, seed).unwrap();
    // Non-zero biases so their gradients are exercised.
    let mut flat = p.to_flat();
    flat.iter_mut()
        .for_each(|v| *v += rng.random_range(-0.1..0.1));
    p.set_flat(&flat).unwrap();
    p
}

fn batch(rng: &mut impl Rng, d: usize, rows: usize, loss: Loss) -> (Vec<f64>, Vec<f64>) {
    let x = (0..rows * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let t = (0..rows)
        .map(|_| {
            let b: bool = rng.random();
            match (loss, b) {
                (Loss::Bce, b) => f64::from(u8::from(b)),
                (Loss::Square, true) => 1.0,
                (Loss::Square, false) => -1.0,
            }
        })
        .collect();
    (x, t)
}

#[test]
fn backprop_matches_finite_differences() {
    let mut rng = seeded_rng(11);
    for loss in [Loss::Bce, Loss::Square] {
        let mut worst: f64 = 0.0;
        for i in 0..100 {
            let p = random_net(&mut rng, loss, i);
            let rows = rng.random_range(1..=6);
            let (x, t) = batch(&mut rng, p.input_dim(), rows, loss);
            let (value, grad) = loss_and_grad(&p, &x, &t, loss).unwrap();
            let (naive, _) = naive_loss(&p, &x, &t, loss);
            assert!((value - naive).abs() <= 1e-12 * naive.abs().max(1.0));
            let r = fd_check(&p, &grad, &x, &t, loss, 1e-5);
            assert!(r.checked > 0);
            worst = worst.max(r.max_rel_err);
        }
        assert!(worst <= 1e-4, "{loss:?}: max relative error {worst}");
    }
}

#[test]
fn batched_forward_matches_per_sample() {
    let mut rng = seeded_rng(12);
    for i in 0..50 {
        let p = random_net(&mut rng, Loss::Bce, i);
        let (x, _) = batch(&mut rng, p.input_dim(), 37, Loss::Bce);
        let z = p.logits(&x).unwrap();
        for (row, &zi) in x.chunks(p.input_dim()).zip(&z) {
            let (naive, _) = naive_logit(&p, row);
            assert!((zi - naive).abs() <= 1e-12 * naive.abs().max(1.0));
        }
        let pred = p.predict(&x).unwrap();
        let probs = p.forward(&x).unwrap();
        for ((&zi, &pi), &c) in z.iter().zip(&probs).zip(&pred) {
            assert_eq!(c, u8::from(pi >= 0.5));
            assert!((pi - 1.0 / (1.0 + (-zi).exp())).abs() < 1e-12);
        }
    }
}

#[test]
fn square_loss_requires_identity_output() {
    let p = xavier_init(&ShapeSpec::linear(3), 0).unwrap();
    let err = loss_and_grad(&p, &[0.0; 3], &[1.0], Loss::Square).unwrap_err();
    assert!(matches!(
        err,
        phaseprobe::Error::SquareLossNeedsIdentityOutput
    ));
}

#[test]
fn xavier_weights_are_centred_and_bounded() {
    let shape = ShapeSpec::mlp(100, &[256, 256]);
    let p = xavier_init(&shape, 3).unwrap();
    for l in &p.layers {
        let a = (6.0 / (l.in_dim + l.out_dim) as f64).sqrt();
        assert!(l.weights.iter().all(|w| w.abs() <= a));
        let mean = l.weights.iter().sum::<f64>() / l.weights.len() as f64;
        // Uniform on [-a, a] has std a / sqrt(3); allow five standard errors.
        assert!(mean.abs() < 5.0 * a / (3.0 * l.weights.len() as f64).sqrt());
        assert!(l.bias.iter().all(|&b| b == 0.0));
    }
    assert_eq!(p, xavier_init(&shape, 3).unwrap());
    assert_ne!(p, xavier_init(&shape, 4).unwrap());
}

#[test]
fn training_is_deterministic_and_resume_is_bitwise() {
    let data = gen_gaussian_linear(300, 2, 0.1, 5).unwrap();
    let shape = ShapeSpec::mlp(2, &[16, 16]);
    let init = xavier_init(&shape, 1).unwrap();
    let mut cfg = TrainConfig::new(200, 9);
    cfg.learning_rate = 0.1;
    let a = sgd_train(init.clone(), &data, &cfg).unwrap();
    let b = sgd_train(init.clone(), &data, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        a.iter().map(|c| c.step).collect::<Vec<_>>(),
        cfg.checkpoint_schedule.steps(200).unwrap()
    );

    // Interrupt at an arbitrary mid-epoch step and resume.
    let mid = a.iter().find(|c| c.step == 55).unwrap();
    let mut resumed = Vec::new();
    SgdTrainer::resume(mid.params.clone(), 55, &data, cfg.clone())
        .unwrap()
        .run(|c| {
            resumed.push(c);
            Ok(())
        })
        .unwrap();
    let tail: Vec<_> = a.into_iter().filter(|c| c.step > 55).collect();
    assert_eq!(resumed, tail);
}

#[test]
fn full_batch_square_loss_decreases_monotonically() {
    let data = gen_gaussian_linear(64, 2, 0.0, 2).unwrap();
    let p = xavier_init(&ShapeSpec::linear_regressor(2), 0).unwrap();
    let mut cfg = TrainConfig::new(200, 0);
    cfg.loss = Loss::Square;
    cfg.batch_size = data.n;
    cfg.learning_rate = 0.05;
    let mut trainer = SgdTrainer::new(p, &data, cfg).unwrap();
    let mut prev = f64::INFINITY;
    for _ in 0..200 {
        let l = trainer.step().unwrap();
        assert!(l <= prev + 1e-12);
        prev = l;
    }
}

#[test]
fn zero_learning_rate_freezes_parameters() {
    let data = gen_gaussian_linear(50, 2, 0.1, 2).unwrap();
    let p = xavier_init(&ShapeSpec::mlp(2, &[4]), 0).unwrap();
    let mut cfg = TrainConfig::new(20, 0);
    cfg.learning_rate = 0.0;
    let ck = sgd_train(p.clone(), &data, &cfg).unwrap();
    assert!(ck.iter().all(|c| c.params == p));
}

#[test]
fn checkpoint_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.ppck");
    let p = xavier_init(&ShapeSpec::mlp(5, &[7, 3]), 8).unwrap();
    let ck = Checkpoint {
        step: 42,
        params: p,
    };
    let cfg = TrainConfig::new(100, 4);
    save_checkpoint(&ck, &cfg, &path).unwrap();
    let (back, meta) = load_checkpoint(&path).unwrap();
    assert_eq!(back, ck);
    assert_eq!(meta.step, 42);
    assert_eq!(meta.config, cfg);
    let mut bytes = std::fs::read(&path).unwrap();
    bytes.truncate(bytes.len() - 3);
    assert!(decode_checkpoint(&bytes, &path).is_err());
    bytes[0] = b'X';
    assert!(decode_checkpoint(&bytes, &path).is_err());
}

#[test]
fn schedules_include_endpoints() {
    for s in [
        CheckpointSchedule::Fibonacci,
        CheckpointSchedule::LogGrid { per_decade: 10 },
        CheckpointSchedule::Explicit {
            steps: vec![3, 9, 500],
        },
    ] {
        let steps = s.steps(100).unwrap();
        assert_eq!(steps[0], 0);
        assert_eq!(*steps.last().unwrap(), 100);
        assert!(steps.windows(2).all(|w| w[0] < w[1]));
    }
    assert_eq!(
        CheckpointSchedule::Fibonacci.steps(10).unwrap(),
        vec![0, 1, 2, 3, 5, 8, 10]
    );
}
