//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use phaseprobe::models::{Activation, Loss, ModelParams};
use phaseprobe::theory::SparseProblem;

/// Per-sample forward pass written without matrix kernels.
///
/// Returns the output pre-activation and the ReLU on/off pattern, so
/// finite differences can detect when a perturbation crosses a kink.
pub fn naive_logit(params: &ModelParams, x: &[f64]) -> (f64, Vec<bool>) {
    let mut a = x.to_vec();
    let mut pattern = Vec::new();
    for l in &params.layers {
        let mut z = vec![0.0; l.out_dim];
        for (o, zo) in z.iter_mut().enumerate() {
            let mut s = if l.bias.is_empty() { 0.0 } else { l.bias[o] };
            let row = &l.weights[o * l.in_dim..(o + 1) * l.in_dim];
            s += row.iter().zip(&a).map(|(w, v)| w * v).sum::<f64>();
            *zo = s;
        }
        if l.activation == Activation::Relu {
            for v in &mut z {
                pattern.push(*v > 0.0);
                *v = v.max(0.0);
            }
        }
        a = z;
    }
    (a[0], pattern)
}

/// Mean loss from the naive forward pass (BCE in nats via `ln(1 + e^z) - t z`).
pub fn naive_loss(
    params: &ModelParams,
    x: &[f64],
    targets: &[f64],
    loss: Loss,
) -> (f64, Vec<bool>) {
    let d = params.layers[0].in_dim;
    let mut total = 0.0;
    let mut pattern = Vec::new();
    for (row, &t) in x.chunks(d).zip(targets) {
        let (z, p) = naive_logit(params, row);
        pattern.extend(p);
        total += match loss {
            Loss::Bce => {
                if z > 0.0 {
                    z + (-z).exp().ln_1p() - t * z
                } else {
                    z.exp().ln_1p() - t * z
                }
            }
            Loss::Square => (t - z).powi(2),
        };
    }
    (total / targets.len() as f64, pattern)
}

/// Outcome of comparing an analytic gradient with central differences.
pub struct FdReport {
    pub max_rel_err: f64,
    pub checked: usize,
    /// Coordinates skipped because the perturbation flipped a ReLU.
    pub skipped: usize,
}

/// Relative error `|g - fd| / max(|g|, |fd|, floor)` over all parameters.
pub fn fd_check(
    params: &ModelParams,
    grad: &ModelParams,
    x: &[f64],
    t: &[f64],
    loss: Loss,
    h: f64,
) -> FdReport {
    let base = params.to_flat();
    let g = grad.to_flat();
    let (_, pattern0) = naive_loss(params, x, t, loss);
    let mut p = params.clone();
    let mut report = FdReport {
        max_rel_err: 0.0,
        checked: 0,
        skipped: 0,
    };
    let mut w = base.clone();
    for i in 0..base.len() {
        w[i] = base[i] + h;
        p.set_flat(&w).unwrap();
        let (lp, pp) = naive_loss(&p, x, t, loss);
        w[i] = base[i] - h;
        p.set_flat(&w).unwrap();
        let (lm, pm) = naive_loss(&p, x, t, loss);
        w[i] = base[i];
        if pp != pattern0 || pm != pattern0 {
            report.skipped += 1;
            continue;
        }
        let fd = (lp - lm) / (2.0 * h);
        let rel = (g[i] - fd).abs() / g[i].abs().max(fd.abs()).max(1e-6);
        report.max_rel_err = report.max_rel_err.max(rel);
        report.checked += 1;
    }
    report
}

/// Dense oracle for the gradient-descent limit: `w0 + X^+ (1 - X w0)` via SVD.
pub fn dense_least_norm(problem: &SparseProblem) -> Vec<f64> {
    let x = DMatrix::from_row_slice(problem.n, problem.d, &problem.x);
    let w0 = DVector::from_column_slice(&problem.w0);
    let r = DVector::from_element(problem.n, 1.0) - &x * &w0;
    let pinv = x.clone().pseudo_inverse(1e-12).unwrap();
    (w0 + pinv * r).iter().copied().collect()
}

/// Same limit through an explicit dense inverse of `X X^T`.
pub fn dense_inverse_limit(problem: &SparseProblem) -> Vec<f64> {
    let x = DMatrix::from_row_slice(problem.n, problem.d, &problem.x);
    let w0 = DVector::from_column_slice(&problem.w0);
    let r = DVector::from_element(problem.n, 1.0) - &x * &w0;
    let gram_inv = (&x * x.transpose()).try_inverse().unwrap();
    (w0 + x.transpose() * gram_inv * r)
        .iter()
        .copied()
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
