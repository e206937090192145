//! Linear and ReLU MLP binary classifiers, exact backpropagation and vanilla SGD.
//!
//! Parameters are stored row-major in `f64`; a layer's weight matrix is
//! `out x in`. Matrix products go through `matrixmultiply::dgemm`.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::datagen::{sidecar_path, write_atomic, LabeledDataset};
use crate::{derive_seed, seeded_rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Relu,
    Sigmoid,
}

impl Activation {
    fn tag(self) -> u8 {
        match self {
            Self::Identity => 0,
            Self::Relu => 1,
            Self::Sigmoid => 2,
        }
    }

    fn from_tag(tag: u8) -> Option<Self> {
        [Self::Identity, Self::Relu, Self::Sigmoid]
            .into_iter()
            .find(|a| a.tag() == tag)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    /// Binary cross-entropy on `{0,1}` targets; requires a sigmoid output.
    Bce,
    /// Mean squared error on `{-1,+1}` targets; requires an identity output.
    Square,
}

/// One affine layer followed by an activation. `bias` is empty for bias-free layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn has_bias(&self) -> bool {
        !self.bias.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub layers: Vec<Layer>,
}

/// Architecture of a single-output classifier: `input -> hidden... -> 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeSpec {
    pub input_dim: usize,
    /// Widths of the ReLU hidden layers; empty for a linear model.
    #[serde(default)]
    pub hidden: Vec<usize>,
    #[serde(default = "default_output")]
    pub output: Activation,
    #[serde(default = "default_bias")]
    pub bias: bool,
}

fn default_output() -> Activation {
    Activation::Sigmoid
}

fn default_bias() -> bool {
    true
}

impl ShapeSpec {
    pub fn mlp(input_dim: usize, hidden: &[usize]) -> Self {
        Self {
            input_dim,
            hidden: hidden.to_vec(),
            output: Activation::Sigmoid,
            bias: true,
        }
    }

    pub fn linear(input_dim: usize) -> Self {
        Self::mlp(input_dim, &[])
    }

    /// Bias-free linear regressor `x -> <w, x>` used with the square loss.
    pub fn linear_regressor(input_dim: usize) -> Self {
        Self {
            input_dim,
            hidden: vec![],
            output: Activation::Identity,
            bias: false,
        }
    }

    pub fn depth(&self) -> usize {
        self.hidden.len()
    }

    fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden.contains(&0) {
            return Err(Error::InvalidParameter(format!(
                "layer widths must be positive: {self:?}"
            )));
        }
        if self.output == Activation::Relu {
            return Err(Error::InvalidParameter(
                "output activation must be sigmoid or identity".into(),
            ));
        }
        Ok(())
    }

    fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.input_dim];
        dims.extend(&self.hidden);
        dims.push(1);
        dims
    }
}

/// Uniform Xavier initialization: weights in `[-a, a]`, `a = sqrt(6 / (fan_in + fan_out))`, biases zero.
pub fn xavier_init(shape: &ShapeSpec, seed: u64) -> Result<ModelParams> {
    shape.validate()?;
    let mut rng = seeded_rng(seed);
    let dims = shape.dims();
    let last = dims.len() - 2;
    let layers = dims
        .windows(2)
        .enumerate()
        .map(|(l, w)| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            Layer {
                in_dim: fan_in,
                out_dim: fan_out,
                weights: (0..fan_in * fan_out)
                    .map(|_| rng.random_range(-a..=a))
                    .collect(),
                bias: if shape.bias {
                    vec![0.0; fan_out]
                } else {
                    vec![]
                },
                activation: if l == last {
                    shape.output
                } else {
                    Activation::Relu
                },
            }
        })
        .collect();
    Ok(ModelParams { layers })
}

/// `c = alpha * a * b + beta * c` for row/column-strided operands (`m x k` times `k x n`).
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_strides: (isize, isize),
    b: &[f64],
    b_strides: (isize, isize),
    beta: f64,
    c: &mut [f64],
) {
    debug_assert!(c.len() >= m * n);
    // SAFETY: callers pass slices sized for the given shapes and strides.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            a_strides.0,
            a_strides.1,
            b.as_ptr(),
            b_strides.0,
            b_strides.1,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl ModelParams {
    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output(&self) -> Activation {
        self.layers.last().expect("at least one layer").activation
    }

    pub fn shape(&self) -> ShapeSpec {
        ShapeSpec {
            input_dim: self.input_dim(),
            hidden: self.layers[..self.layers.len() - 1]
                .iter()
                .map(|l| l.out_dim)
                .collect(),
            output: self.output(),
            bias: self.layers[0].has_bias(),
        }
    }

    /// Score threshold for predicting class 1 (0.5 for sigmoid, 0 for identity outputs).
    pub fn threshold(&self) -> f64 {
        match self.output() {
            Activation::Sigmoid => 0.5,
            _ => 0.0,
        }
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// All parameters flattened layer by layer (weights then bias).
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend(&l.weights);
            out.extend(&l.bias);
        }
        out
    }

    /// Overwrite all parameters from a flat vector in [`Self::to_flat`] order.
    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::LengthMismatch {
                what: "flat parameters",
                expected: self.num_params(),
                actual: flat.len(),
            });
        }
        let mut at = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&flat[at..at + nw]);
            at += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&flat[at..at + nb]);
            at += nb;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }

    /// Check that layer dimensions compose and buffers match them.
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::InvalidParameter("model has no layers".into()));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.weights.len() != l.in_dim * l.out_dim
                || !(l.bias.is_empty() || l.bias.len() == l.out_dim)
            {
                return Err(Error::InvalidParameter(format!(
                    "layer {i} buffers do not match its shape"
                )));
            }
            if i > 0 && self.layers[i - 1].out_dim != l.in_dim {
                return Err(Error::DimensionMismatch {
                    expected: self.layers[i - 1].out_dim,
                    actual: l.in_dim,
                });
            }
        }
        if !self.is_finite() {
            return Err(Error::InvalidParameter("non-finite parameter".into()));
        }
        Ok(())
    }

    /// Hidden activations and final pre-activations for a batch of `rows` inputs.
    fn forward_cached(&self, x: &[f64], rows: usize) -> Vec<Vec<f64>> {
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for (i, l) in self.layers.iter().enumerate() {
            let input = if i == 0 { x } else { &acts[i - 1] };
            let mut z = vec![0.0; rows * l.out_dim];
            if l.has_bias() {
                for row in z.chunks_exact_mut(l.out_dim) {
                    row.copy_from_slice(&l.bias);
                }
            }
            // Z (rows x out) += X (rows x in) * W^T (in x out)
            let beta = if l.has_bias() { 1.0 } else { 0.0 };
            gemm(
                rows,
                l.in_dim,
                l.out_dim,
                input,
                (l.in_dim as isize, 1),
                &l.weights,
                (1, l.in_dim as isize),
                beta,
                &mut z,
            );
            if l.activation == Activation::Relu {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(z);
        }
        acts
    }

    /// Output-layer pre-activations for a row-major batch.
    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        let d = self.input_dim();
        if x.len() % d != 0 {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: x.len() % d,
            });
        }
        let rows = x.len() / d;
        Ok(self
            .forward_cached(x, rows)
            .pop()
            .expect("at least one layer"))
    }

    /// Model outputs: probabilities for a sigmoid head, raw scores for an identity head.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut z = self.logits(x)?;
        if self.output() == Activation::Sigmoid {
            z.iter_mut().for_each(|v| *v = sigmoid(*v));
        }
        Ok(z)
    }

    /// Predicted `{0,1}` labels: class 1 iff the output reaches [`Self::threshold`].
    pub fn predict(&self, x: &[f64]) -> Result<Vec<u8>> {
        let t = self.threshold();
        Ok(self
            .forward(x)?
            .into_iter()
            .map(|p| u8::from(p >= t))
            .collect())
    }

    /// Predictions on every row of a dataset, evaluated in chunks.
    pub fn predict_dataset(&self, ds: &LabeledDataset) -> Result<Vec<u8>> {
        if ds.d != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: ds.d,
            });
        }
        const CHUNK: usize = 2048;
        let mut out = Vec::with_capacity(ds.n);
        let mut buf = Vec::with_capacity(CHUNK * ds.d);
        for start in (0..ds.n).step_by(CHUNK) {
            let end = (start + CHUNK).min(ds.n);
            buf.clear();
            buf.extend(
                ds.features[start * ds.d..end * ds.d]
                    .iter()
                    .map(|&v| f64::from(v)),
            );
            out.extend(self.predict(&buf)?);
        }
        Ok(out)
    }

    /// Fraction of rows whose prediction matches the label.
    pub fn accuracy(&self, ds: &LabeledDataset) -> Result<f64> {
        Ok(accuracy(&self.predict_dataset(ds)?, &ds.labels))
    }
}

/// Fraction of positions where `pred` equals `labels`.
pub fn accuracy(pred: &[u8], labels: &[u8]) -> f64 {
    let hits = pred.iter().zip(labels).filter(|(a, b)| a == b).count();
    hits as f64 / labels.len().max(1) as f64
}

/// Mean loss over a batch and its exact gradient (same layout as the parameters).
///
/// Targets are `{0,1}` for [`Loss::Bce`] and `{-1,+1}` for [`Loss::Square`].
/// The loss is in nats; BCE is evaluated as `softplus(z) - t z`.
pub fn loss_and_grad(
    params: &ModelParams,
    x: &[f64],
    targets: &[f64],
    loss: Loss,
) -> Result<(f64, ModelParams)> {
    match (loss, params.output()) {
        (Loss::Square, Activation::Sigmoid) => return Err(Error::SquareLossNeedsIdentityOutput),
        (Loss::Bce, a) if a != Activation::Sigmoid => {
            return Err(Error::InvalidParameter(
                "cross-entropy needs a sigmoid output".into(),
            ))
        }
        _ => {}
    }
    let d = params.input_dim();
    let rows = targets.len();
    if x.len() != rows * d {
        return Err(Error::DimensionMismatch {
            expected: rows * d,
            actual: x.len(),
        });
    }
    for &t in targets {
        let ok = match loss {
            Loss::Bce => t == 0.0 || t == 1.0,
            Loss::Square => t == -1.0 || t == 1.0,
        };
        if !ok {
            let name = if loss == Loss::Bce { "bce" } else { "square" };
            return Err(Error::InvalidTarget {
                loss: name,
                value: t,
            });
        }
    }

    let acts = params.forward_cached(x, rows);
    let z = acts.last().expect("at least one layer");
    let scale = 1.0 / rows as f64;
    let mut value = 0.0;
    // Gradient of the mean loss w.r.t. the output pre-activation.
    let mut delta: Vec<f64> = z
        .iter()
        .zip(targets)
        .map(|(&z, &t)| match loss {
            Loss::Bce => {
                value += z.max(0.0) - t * z + (-z.abs()).exp().ln_1p();
                (sigmoid(z) - t) * scale
            }
            Loss::Square => {
                value += (t - z) * (t - z);
                2.0 * (z - t) * scale
            }
        })
        .collect();
    value *= scale;

    let mut grad = params.clone();
    for li in (0..params.layers.len()).rev() {
        let l = &params.layers[li];
        let input = if li == 0 { x } else { &acts[li - 1] };
        let g = &mut grad.layers[li];
        // dW (out x in) = delta^T (out x rows) * input (rows x in)
        gemm(
            l.out_dim,
            rows,
            l.in_dim,
            &delta,
            (1, l.out_dim as isize),
            input,
            (l.in_dim as isize, 1),
            0.0,
            &mut g.weights,
        );
        if l.has_bias() {
            g.bias.iter_mut().for_each(|b| *b = 0.0);
            for row in delta.chunks_exact(l.out_dim) {
                g.bias.iter_mut().zip(row).for_each(|(b, r)| *b += r);
            }
        }
        if li > 0 {
            // delta_prev (rows x in) = delta (rows x out) * W (out x in), masked by ReLU'
            let mut prev = vec![0.0; rows * l.in_dim];
            gemm(
                rows,
                l.out_dim,
                l.in_dim,
                &delta,
                (l.out_dim as isize, 1),
                &l.weights,
                (l.in_dim as isize, 1),
                0.0,
                &mut prev,
            );
            if params.layers[li - 1].activation == Activation::Relu {
                prev.iter_mut().zip(input).for_each(|(p, &a)| {
                    if a <= 0.0 {
                        *p = 0.0;
                    }
                });
            }
            delta = prev;
        }
    }
    Ok((value, grad))
}

/// Steps at which the trainer emits snapshots (step 0 and the final step are always included).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckpointSchedule {
    /// 1, 2, 3, 5, 8, 13, ...
    #[default]
    Fibonacci,
    /// Roughly `per_decade` log-spaced steps per power of ten.
    LogGrid { per_decade: u32 },
    /// Explicit strictly increasing step list.
    Explicit { steps: Vec<u64> },
}

impl CheckpointSchedule {
    /// Checkpoint steps in `[0, total]`, strictly increasing.
    pub fn steps(&self, total: u64) -> Result<Vec<u64>> {
        let mut out = vec![0];
        match self {
            Self::Fibonacci => {
                let (mut a, mut b) = (1u64, 2u64);
                while a <= total {
                    out.push(a);
                    (a, b) = (b, a + b);
                }
            }
            Self::LogGrid { per_decade } => {
                if *per_decade == 0 {
                    return Err(Error::InvalidParameter(
                        "log grid needs per_decade >= 1".into(),
                    ));
                }
                let mut k = 0u32;
                loop {
                    let s = 10f64.powf(f64::from(k) / f64::from(*per_decade)).round() as u64;
                    if s > total {
                        break;
                    }
                    if s > *out.last().expect("non-empty") {
                        out.push(s);
                    }
                    k += 1;
                }
            }
            Self::Explicit { steps } => {
                if steps.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidParameter(
                        "checkpoint steps must be strictly increasing".into(),
                    ));
                }
                out.extend(steps.iter().copied().filter(|&s| s > 0 && s <= total));
            }
        }
        if *out.last().expect("non-empty") != total {
            out.push(total);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub loss: Loss,
    pub steps: u64,
    #[serde(default)]
    pub checkpoint_schedule: CheckpointSchedule,
    pub seed: u64,
}

impl TrainConfig {
    /// Batch 32, learning rate 0.01, cross-entropy, Fibonacci checkpoints.
    pub fn new(steps: u64, seed: u64) -> Self {
        Self {
            batch_size: 32,
            learning_rate: 0.01,
            loss: Loss::Bce,
            steps,
            checkpoint_schedule: CheckpointSchedule::Fibonacci,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter(
                "batch size must be positive".into(),
            ));
        }
        // A zero rate is accepted so frozen runs can be expressed.
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "learning rate {} must be finite and >= 0",
                self.learning_rate
            )));
        }
        self.checkpoint_schedule.steps(self.steps).map(|_| ())
    }
}

/// Immutable parameter snapshot after `step` SGD updates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub step: u64,
    pub params: ModelParams,
}

/// Vanilla SGD over a dataset.
///
/// Minibatch `t` (1-based) is slice `(t-1) mod B` of the permutation for
/// epoch `(t-1) div B`, where `B = floor(n / batch)` and each epoch's
/// permutation is seeded from `(seed, epoch)`. Batches are therefore a pure
/// function of the step index, which makes resuming bitwise exact.
pub struct SgdTrainer<'a> {
    data: &'a LabeledDataset,
    config: TrainConfig,
    targets: Vec<f64>,
    params: ModelParams,
    step: u64,
    batch: usize,
    batches_per_epoch: u64,
    perm_epoch: Option<u64>,
    perm: Vec<usize>,
}

impl<'a> SgdTrainer<'a> {
    pub fn new(params: ModelParams, data: &'a LabeledDataset, config: TrainConfig) -> Result<Self> {
        Self::resume(params, 0, data, config)
    }

    /// Continue a run from `params` taken after `step` updates.
    pub fn resume(
        params: ModelParams,
        step: u64,
        data: &'a LabeledDataset,
        config: TrainConfig,
    ) -> Result<Self> {
        config.validate()?;
        params.validate()?;
        if data.n == 0 {
            return Err(Error::InvalidParameter("empty training set".into()));
        }
        if data.d != params.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: params.input_dim(),
                actual: data.d,
            });
        }
        if config.loss == Loss::Square && params.output() == Activation::Sigmoid {
            return Err(Error::SquareLossNeedsIdentityOutput);
        }
        let targets = match config.loss {
            Loss::Bce => data.labels.iter().map(|&y| f64::from(y)).collect(),
            Loss::Square => data.signed_labels(),
        };
        let batch = config.batch_size.min(data.n);
        Ok(Self {
            data,
            targets,
            params,
            step,
            batch,
            batches_per_epoch: (data.n / batch) as u64,
            perm_epoch: None,
            perm: (0..data.n).collect(),
            config,
        })
    }

    pub fn step_index(&self) -> u64 {
        self.step
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn into_params(self) -> ModelParams {
        self.params
    }

    fn batch_rows(&mut self, t: u64) -> &[usize] {
        let epoch = (t - 1) / self.batches_per_epoch;
        let slot = ((t - 1) % self.batches_per_epoch) as usize;
        if self.perm_epoch != Some(epoch) {
            self.perm.iter_mut().enumerate().for_each(|(i, p)| *p = i);
            self.perm
                .shuffle(&mut seeded_rng(derive_seed(self.config.seed, epoch)));
            self.perm_epoch = Some(epoch);
        }
        &self.perm[slot * self.batch..(slot + 1) * self.batch]
    }

    /// Apply one SGD update; returns the minibatch loss before the update.
    pub fn step(&mut self) -> Result<f64> {
        let t = self.step + 1;
        let d = self.data.d;
        let rows = self.batch_rows(t).to_vec();
        let mut x = Vec::with_capacity(rows.len() * d);
        let mut y = Vec::with_capacity(rows.len());
        for &r in &rows {
            x.extend(self.data.row(r).iter().map(|&v| f64::from(v)));
            y.push(self.targets[r]);
        }
        let (loss, grad) = loss_and_grad(&self.params, &x, &y, self.config.loss)?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { step: t });
        }
        let lr = self.config.learning_rate;
        for (l, g) in self.params.layers.iter_mut().zip(&grad.layers) {
            l.weights
                .iter_mut()
                .zip(&g.weights)
                .for_each(|(w, gw)| *w -= lr * gw);
            l.bias
                .iter_mut()
                .zip(&g.bias)
                .for_each(|(b, gb)| *b -= lr * gb);
        }
        self.step = t;
        Ok(loss)
    }

    /// Train to `config.steps`, passing each scheduled snapshot after the current step to `emit`.
    ///
    /// A fresh run (step 0) also emits the initial parameters.
    pub fn run(&mut self, mut emit: impl FnMut(Checkpoint) -> Result<()>) -> Result<()> {
        let schedule = self.config.checkpoint_schedule.steps(self.config.steps)?;
        for &s in &schedule {
            if s < self.step || (s == self.step && s != 0) {
                continue;
            }
            while self.step < s {
                self.step()?;
            }
            emit(Checkpoint {
                step: s,
                params: self.params.clone(),
            })?;
        }
        Ok(())
    }
}

/// Run SGD from `params` and collect every scheduled checkpoint.
pub fn sgd_train(
    params: ModelParams,
    data: &LabeledDataset,
    config: &TrainConfig,
) -> Result<Vec<Checkpoint>> {
    let mut out = Vec::new();
    SgdTrainer::new(params, data, config.clone())?.run(|c| {
        out.push(c);
        Ok(())
    })?;
    Ok(out)
}

// ---------------------------------------------------------------------------
// Checkpoint files: "PPCK" | version u32 | step u64 | layer count u32 |
// per layer (in u64, out u64, activation u8, has_bias u8) | all parameters as
// little-endian f64 in flat order. A JSON sidecar records the run metadata.

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"PPCK";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointMeta {
    pub version: u32,
    pub step: u64,
    pub seed: u64,
    pub shape: ShapeSpec,
    pub config: TrainConfig,
}

pub fn encode_checkpoint(ckpt: &Checkpoint) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&ckpt.step.to_le_bytes());
    out.extend_from_slice(&(ckpt.params.layers.len() as u32).to_le_bytes());
    for l in &ckpt.params.layers {
        out.extend_from_slice(&(l.in_dim as u64).to_le_bytes());
        out.extend_from_slice(&(l.out_dim as u64).to_le_bytes());
        out.push(l.activation.tag());
        out.push(u8::from(l.has_bias()));
    }
    for v in ckpt.params.to_flat() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_checkpoint(bytes: &[u8], path: &Path) -> Result<Checkpoint> {
    let truncated = |needed: usize| Error::Truncated {
        path: path.into(),
        needed,
        found: bytes.len(),
    };
    let take = |at: usize, len: usize| bytes.get(at..at + len).ok_or_else(|| truncated(at + len));
    if take(0, 4)? != CHECKPOINT_MAGIC {
        let found = u32::from_be_bytes(take(0, 4)?.try_into().expect("4 bytes"));
        return Err(Error::BadMagic {
            path: path.into(),
            found,
            expected: u32::from_be_bytes(CHECKPOINT_MAGIC),
        });
    }
    let version = u32::from_le_bytes(take(4, 4)?.try_into().expect("4 bytes"));
    if version != CHECKPOINT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let step = u64::from_le_bytes(take(8, 8)?.try_into().expect("8 bytes"));
    let count = u32::from_le_bytes(take(16, 4)?.try_into().expect("4 bytes")) as usize;
    let mut at = 20;
    let mut layers = Vec::with_capacity(count);
    for _ in 0..count {
        let in_dim = u64::from_le_bytes(take(at, 8)?.try_into().expect("8 bytes")) as usize;
        let out_dim = u64::from_le_bytes(take(at + 8, 8)?.try_into().expect("8 bytes")) as usize;
        let hdr = take(at + 16, 2)?;
        let activation = Activation::from_tag(hdr[0]).ok_or_else(|| Error::Malformed {
            path: path.into(),
            reason: format!("unknown activation tag {}", hdr[0]),
        })?;
        let bias = if hdr[1] == 1 {
            vec![0.0; out_dim]
        } else {
            vec![]
        };
        layers.push(Layer {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            bias,
            activation,
        });
        at += 18;
    }
    let mut params = ModelParams { layers };
    let n = params.num_params();
    let flat: Vec<f64> = take(at, 8 * n)?
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    if bytes.len() != at + 8 * n {
        return Err(Error::Malformed {
            path: path.into(),
            reason: "trailing bytes".into(),
        });
    }
    params.set_flat(&flat)?;
    params.validate().map_err(|e| Error::Malformed {
        path: path.into(),
        reason: e.to_string(),
    })?;
    Ok(Checkpoint { step, params })
}

/// Write a checkpoint file and its JSON sidecar atomically.
pub fn save_checkpoint(ckpt: &Checkpoint, config: &TrainConfig, path: &Path) -> Result<()> {
    write_atomic(path, &encode_checkpoint(ckpt))?;
    let meta = CheckpointMeta {
        version: CHECKPOINT_VERSION,
        step: ckpt.step,
        seed: config.seed,
        shape: ckpt.params.shape(),
        config: config.clone(),
    };
    write_atomic(
        &sidecar_path(path),
        serde_json::to_string_pretty(&meta)?.as_bytes(),
    )
}

pub fn load_checkpoint(path: &Path) -> Result<(Checkpoint, CheckpointMeta)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let ckpt = decode_checkpoint(&bytes, path)?;
    let side = sidecar_path(path);
    let meta: CheckpointMeta =
        serde_json::from_slice(&fs::read(&side).map_err(|e| Error::io(&side, e))?)?;
    if meta.step != ckpt.step || meta.shape != ckpt.params.shape() {
        return Err(Error::Malformed {
            path: side,
            reason: "sidecar disagrees with checkpoint".into(),
        });
    }
    Ok((ckpt, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::gen_gaussian_linear;

    #[test]
    fn xavier_bound_and_determinism() {
        let shape = ShapeSpec::mlp(3, &[3]);
        let a = xavier_init(&shape, 5).unwrap();
        assert!(a.layers[0].weights.iter().all(|w| w.abs() <= 1.0));
        assert!(a.layers[0].bias.iter().all(|&b| b == 0.0));
        assert_eq!(a, xavier_init(&shape, 5).unwrap());
        assert_ne!(a, xavier_init(&shape, 6).unwrap());
    }

    #[test]
    fn zero_model_outputs_half() {
        let mut m = xavier_init(&ShapeSpec::mlp(4, &[5, 3]), 0).unwrap();
        let zeros = vec![0.0; m.num_params()];
        m.set_flat(&zeros).unwrap();
        assert_eq!(m.forward(&[1.0, -2.0, 3.0, 0.5]).unwrap(), vec![0.5]);
        assert!(m.forward(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn linear_forward_is_sigmoid_of_affine() {
        let mut m = xavier_init(&ShapeSpec::linear(2), 0).unwrap();
        m.set_flat(&[0.5, -1.0, 0.25]).unwrap();
        let out = m.forward(&[2.0, 1.0]).unwrap()[0];
        assert!((out - 1.0 / (1.0 + (-0.25f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn bce_at_half_is_ln2() {
        let mut m = xavier_init(&ShapeSpec::linear(1), 0).unwrap();
        m.set_flat(&[0.0, 0.0]).unwrap();
        let (l, _) = loss_and_grad(&m, &[3.0], &[1.0], Loss::Bce).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn square_loss_rules() {
        let mut m = xavier_init(&ShapeSpec::linear_regressor(3), 0).unwrap();
        m.set_flat(&[1.0, 0.0, 0.0]).unwrap();
        let (l, _) = loss_and_grad(&m, &[1.0, 0.0, 1.0], &[1.0], Loss::Square).unwrap();
        assert_eq!(l, 0.0);
        let sig = xavier_init(&ShapeSpec::mlp(3, &[4]), 0).unwrap();
        assert!(matches!(
            loss_and_grad(&sig, &[0.0; 3], &[1.0], Loss::Square),
            Err(Error::SquareLossNeedsIdentityOutput)
        ));
        assert!(matches!(
            loss_and_grad(&m, &[0.0; 3], &[0.0], Loss::Square),
            Err(Error::InvalidTarget { .. })
        ));
    }

    #[test]
    fn schedules() {
        assert_eq!(
            CheckpointSchedule::Fibonacci.steps(10).unwrap(),
            vec![0, 1, 2, 3, 5, 8, 10]
        );
        assert_eq!(CheckpointSchedule::Fibonacci.steps(0).unwrap(), vec![0]);
        assert_eq!(
            CheckpointSchedule::LogGrid { per_decade: 1 }
                .steps(100)
                .unwrap(),
            vec![0, 1, 10, 100]
        );
        let bad = CheckpointSchedule::Explicit { steps: vec![3, 3] };
        assert!(bad.steps(10).is_err());
    }

    #[test]
    fn zero_learning_rate_freezes_parameters() {
        let ds = gen_gaussian_linear(64, 2, 0.1, 0).unwrap();
        let init = xavier_init(&ShapeSpec::mlp(2, &[8]), 1).unwrap();
        let mut cfg = TrainConfig::new(20, 0);
        cfg.learning_rate = 0.0;
        for c in sgd_train(init.clone(), &ds, &cfg).unwrap() {
            assert_eq!(c.params, init);
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.ppck");
        let params = xavier_init(&ShapeSpec::mlp(3, &[4, 2]), 9).unwrap();
        let ckpt = Checkpoint { step: 17, params };
        save_checkpoint(&ckpt, &TrainConfig::new(20, 3), &path).unwrap();
        let (back, meta) = load_checkpoint(&path).unwrap();
        assert_eq!(back, ckpt);
        assert_eq!(meta.seed, 3);
        let bytes = encode_checkpoint(&ckpt);
        assert!(decode_checkpoint(&bytes[..bytes.len() - 3], &path).is_err());
    }
}
