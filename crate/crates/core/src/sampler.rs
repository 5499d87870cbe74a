//! Learnable correspondence scorer and its policy-gradient training loop.
//!
//! A small per-match MLP maps normalized coordinates to a sampling logit;
//! minimal sets drawn proportionally to `exp(logit - max logit)` feed the
//! estimator, and the score-function (REINFORCE) gradient of the expected
//! hypothesis loss trains the scorer. Gradients are accumulated by
//! reverse-mode passes through the network and the sequential
//! without-replacement log-probability; the optimizer is plain SGD with
//! multiplicative decay, keeping runs exactly reproducible.

use alloc::vec::Vec;
use thiserror::Error;

use crate::estimator::sample_minimal_set;
use crate::geometry::{
    decompose_essential, eight_point, normalize_match, pose_error_deg, Camera, RelativePose,
    FAILURE_POSE_ERROR_DEG,
};
use crate::matchset::Correspondence;
use crate::rng::DetRng;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SamplerError {
    #[error("invalid model: {0}")]
    InvalidModel(&'static str),
    #[error("invalid training config: {0}")]
    InvalidConfig(&'static str),
    #[error("invalid episode: {0}")]
    InvalidEpisode(&'static str),
    #[error("non-finite value in {0}")]
    Numeric(&'static str),
    #[error("training stream was empty")]
    EmptyStream,
}

/// The fixed nonlinearity applied to hidden layers (output stays linear).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Tanh,
}

impl Activation {
    pub fn name(&self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "tanh" => Some(Activation::Tanh),
            _ => None,
        }
    }
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Feed-forward per-match scorer. Weights are row-major `(out, in)` per
/// layer; input is the 4 normalized coordinates, output one logit.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplerModel {
    pub layer_dims: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub activation: Activation,
    pub version: u32,
}

impl SamplerModel {
    /// Zero-initialized model: constant logits, i.e. uniform sampling.
    pub fn zeros(layer_dims: &[usize]) -> Result<Self, SamplerError> {
        let model = Self {
            layer_dims: layer_dims.to_vec(),
            weights: layer_windows(layer_dims)
                .map(|(i, o)| alloc::vec![0.0; i * o])
                .collect(),
            biases: layer_windows(layer_dims).map(|(_, o)| alloc::vec![0.0; o]).collect(),
            activation: Activation::Tanh,
            version: MODEL_FORMAT_VERSION,
        };
        model.validate()?;
        Ok(model)
    }

    /// Random init: weights `N(0, 1/fan_in)`, zero biases.
    pub fn init(layer_dims: &[usize], seed: u64) -> Result<Self, SamplerError> {
        let mut model = Self::zeros(layer_dims)?;
        let mut rng = DetRng::new(seed);
        for (layer, (fan_in, _)) in layer_windows(layer_dims).enumerate() {
            let scale = 1.0 / (fan_in as f64).sqrt();
            for w in model.weights[layer].iter_mut() {
                *w = rng.normal() * scale;
            }
        }
        Ok(model)
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        if self.layer_dims.len() < 2 {
            return Err(SamplerError::InvalidModel("need at least input and output layers"));
        }
        if self.layer_dims[0] != 4 {
            return Err(SamplerError::InvalidModel("input layer must have 4 units"));
        }
        if *self.layer_dims.last().unwrap() != 1 {
            return Err(SamplerError::InvalidModel("output layer must have 1 unit"));
        }
        let n_layers = self.layer_dims.len() - 1;
        if self.weights.len() != n_layers || self.biases.len() != n_layers {
            return Err(SamplerError::InvalidModel("layer count mismatch"));
        }
        for (layer, (i, o)) in layer_windows(&self.layer_dims).enumerate() {
            if self.weights[layer].len() != i * o || self.biases[layer].len() != o {
                return Err(SamplerError::InvalidModel("parameter count mismatch"));
            }
        }
        if self
            .params()
            .any(|p| !p.is_finite())
        {
            return Err(SamplerError::InvalidModel("non-finite parameter"));
        }
        Ok(())
    }

    fn params(&self) -> impl Iterator<Item = f64> + '_ {
        self.weights
            .iter()
            .chain(self.biases.iter())
            .flat_map(|v| v.iter().copied())
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().chain(self.biases.iter()).map(Vec::len).sum()
    }

    /// Forward pass for one input; `trace` receives per-layer
    /// post-activation values when backpropagation needs them.
    fn forward_one(&self, input: [f64; 4], mut trace: Option<&mut Vec<Vec<f64>>>) -> f64 {
        let mut current: Vec<f64> = input.to_vec();
        if let Some(tr) = trace.as_deref_mut() {
            tr.clear();
            tr.push(current.clone());
        }
        let last = self.weights.len() - 1;
        for layer in 0..self.weights.len() {
            let (fan_in, fan_out) =
                (self.layer_dims[layer], self.layer_dims[layer + 1]);
            let mut next = alloc::vec![0.0; fan_out];
            for o in 0..fan_out {
                let mut acc = self.biases[layer][o];
                let row = &self.weights[layer][o * fan_in..(o + 1) * fan_in];
                for (w, x) in row.iter().zip(&current) {
                    acc += w * x;
                }
                next[o] = if layer == last { acc } else { acc.tanh() };
            }
            if let Some(tr) = trace.as_deref_mut() {
                tr.push(next.clone());
            }
            current = next;
        }
        current[0]
    }
}

fn layer_windows(dims: &[usize]) -> impl Iterator<Item = (usize, usize)> + '_ {
    dims.windows(2).map(|w| (w[0], w[1]))
}

/// One sampling logit per normalized match. Pointwise: permuting the
/// input permutes the output.
pub fn forward(model: &SamplerModel, matches: &[Correspondence]) -> Result<Vec<f64>, SamplerError> {
    model.validate()?;
    let logits: Vec<f64> = matches
        .iter()
        .map(|c| model.forward_one(c.to_array(), None))
        .collect();
    if logits.iter().any(|l| !l.is_finite()) {
        return Err(SamplerError::Numeric("forward activations"));
    }
    Ok(logits)
}

/// Shift-invariant positive sampling weights `exp(logit - max logit)`,
/// floored away from zero so log-probabilities stay finite.
pub fn weights_from_logits(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    logits.iter().map(|l| (l - max).exp().max(1e-300)).collect()
}

/// Log-probability of drawing `indices` (in order) by sequential
/// without-replacement sampling proportional to `weights`.
pub fn subset_logprob(weights: &[f64], indices: &[usize]) -> Result<f64, SamplerError> {
    let mut remaining: f64 = weights.iter().sum();
    let mut logprob = 0.0;
    for &i in indices {
        if !(remaining > 0.0) {
            return Err(SamplerError::Numeric("remaining sampling mass"));
        }
        logprob += (weights[i] / remaining).ln();
        remaining -= weights[i];
    }
    if logprob.is_finite() {
        Ok(logprob)
    } else {
        Err(SamplerError::Numeric("subset log-probability"))
    }
}

/// Baseline used for variance reduction in the gradient estimator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Baseline {
    /// Per-episode mean loss in leave-one-out form: sample `k` is
    /// baselined by the mean of the other `K - 1` losses. The plain
    /// same-sample mean would shrink the expected gradient by
    /// `(K - 1) / K`; the leave-one-out form is unbiased and still
    /// cancels exactly on constant losses.
    Mean,
    /// No baseline.
    None,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: u32,
    pub scenes_per_epoch: u32,
    /// K: minimal-set samples per scene.
    pub k_samples: u32,
    /// H: episodes averaged per gradient step.
    pub mc_draws: u32,
    pub learning_rate: f64,
    /// Multiplicative per-epoch learning-rate decay.
    pub lr_decay: f64,
    pub baseline: Baseline,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            scenes_per_epoch: 200,
            k_samples: 8,
            mc_draws: 4,
            learning_rate: 0.02,
            lr_decay: 0.97,
            baseline: Baseline::Mean,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), SamplerError> {
        if self.k_samples < 2 {
            return Err(SamplerError::InvalidConfig("k_samples must be at least 2"));
        }
        if self.mc_draws < 1 {
            return Err(SamplerError::InvalidConfig("mc_draws must be at least 1"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(SamplerError::InvalidConfig("learning_rate must be positive"));
        }
        if !(self.lr_decay > 0.0) {
            return Err(SamplerError::InvalidConfig("lr_decay must be positive"));
        }
        if self.scenes_per_epoch == 0 {
            return Err(SamplerError::InvalidConfig("scenes_per_epoch must be positive"));
        }
        Ok(())
    }
}

/// One scene's worth of policy experience: the model inputs, K sampled
/// minimal sets, their hypothesis losses (pose error, failures at 180),
/// and the log-probabilities under the sampling policy.
#[derive(Clone, Debug, PartialEq)]
pub struct Episode {
    pub inputs: Vec<Correspondence>,
    pub subset_samples: Vec<Vec<usize>>,
    pub losses: Vec<f64>,
    pub logprobs: Vec<f64>,
}

impl Episode {
    fn validate(&self) -> Result<(), SamplerError> {
        let k = self.subset_samples.len();
        if k < 2 {
            return Err(SamplerError::InvalidEpisode("need at least 2 subset samples"));
        }
        if self.losses.len() != k || self.logprobs.len() != k {
            return Err(SamplerError::InvalidEpisode("losses/logprobs length mismatch"));
        }
        if self.losses.iter().any(|l| !l.is_finite()) {
            return Err(SamplerError::InvalidEpisode("non-finite loss"));
        }
        Ok(())
    }
}

/// Diagnostics of one gradient step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepDiagnostics {
    pub grad_norm: f64,
    pub mean_loss: f64,
}

struct Gradients {
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

impl Gradients {
    fn zeros_like(model: &SamplerModel) -> Self {
        Self {
            weights: model.weights.iter().map(|w| alloc::vec![0.0; w.len()]).collect(),
            biases: model.biases.iter().map(|b| alloc::vec![0.0; b.len()]).collect(),
        }
    }

    fn norm(&self) -> f64 {
        self.weights
            .iter()
            .chain(self.biases.iter())
            .flat_map(|v| v.iter())
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }
}

/// Reverse-mode pass for one input, accumulating `coeff * d logit / d theta`.
fn backprop_one(model: &SamplerModel, input: [f64; 4], coeff: f64, grads: &mut Gradients) {
    let mut trace: Vec<Vec<f64>> = Vec::new();
    model.forward_one(input, Some(&mut trace));

    let n_layers = model.weights.len();
    // Output layer is linear, so its delta is the raw coefficient.
    let mut delta = alloc::vec![coeff];
    for layer in (0..n_layers).rev() {
        let (fan_in, fan_out) = (model.layer_dims[layer], model.layer_dims[layer + 1]);
        let activations = &trace[layer];
        for o in 0..fan_out {
            let d = delta[o];
            grads.biases[layer][o] += d;
            let row = &mut grads.weights[layer][o * fan_in..(o + 1) * fan_in];
            for (g, a) in row.iter_mut().zip(activations) {
                *g += d * a;
            }
        }
        if layer == 0 {
            break;
        }
        // Propagate through the hidden tanh of the previous layer.
        let prev = &trace[layer];
        let mut next_delta = alloc::vec![0.0; fan_in];
        for (i, nd) in next_delta.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (o, d) in delta.iter().enumerate() {
                acc += model.weights[layer][o * fan_in + i] * d;
            }
            *nd = acc * (1.0 - prev[i] * prev[i]);
        }
        delta = next_delta;
    }
}

/// One REINFORCE step over a batch of episodes.
///
/// The gradient estimate is
/// `g = 1/(H K) * sum_i sum_k (L_ik - b_i) * d logprob_ik / d theta`
/// with `b_i` the episode mean loss when the baseline is `Mean`;
/// parameters move by plain gradient descent with the configured step.
/// Episodes must have been sampled from `model` for the estimate to be
/// unbiased. A non-finite gradient aborts the step.
pub fn reinforce_step(
    model: &SamplerModel,
    episodes: &[Episode],
    cfg: &TrainConfig,
) -> Result<(SamplerModel, StepDiagnostics), SamplerError> {
    reinforce_step_with_lr(model, episodes, cfg, cfg.learning_rate)
}

fn reinforce_step_with_lr(
    model: &SamplerModel,
    episodes: &[Episode],
    cfg: &TrainConfig,
    lr: f64,
) -> Result<(SamplerModel, StepDiagnostics), SamplerError> {
    model.validate()?;
    if episodes.is_empty() {
        return Err(SamplerError::InvalidEpisode("empty batch"));
    }
    for ep in episodes {
        ep.validate()?;
    }

    let h = episodes.len() as f64;
    let mut grads = Gradients::zeros_like(model);
    let mut loss_sum = 0.0;
    let mut loss_count = 0usize;

    for ep in episodes {
        let logits = forward(model, &ep.inputs)?;
        let weights = weights_from_logits(&logits);
        let k = ep.subset_samples.len() as f64;
        let loss_total: f64 = ep.losses.iter().sum();
        loss_sum += loss_total;
        loss_count += ep.losses.len();

        // A constant-loss episode cancels against the mean baseline;
        // skipping it keeps the cancellation exact instead of leaving
        // summation dust.
        if cfg.baseline == Baseline::Mean && ep.losses.iter().all(|&l| l == ep.losses[0]) {
            continue;
        }

        // d objective / d logit, accumulated over the K subsets: the
        // Plackett-Luce gradient of each sequential draw.
        let mut coeff = alloc::vec![0.0; ep.inputs.len()];
        for (subset, &loss) in ep.subset_samples.iter().zip(&ep.losses) {
            let baseline = match cfg.baseline {
                Baseline::Mean => (loss_total - loss) / (k - 1.0),
                Baseline::None => 0.0,
            };
            let advantage = (loss - baseline) / (h * k);
            if advantage == 0.0 {
                continue;
            }
            let mut taken = alloc::vec![false; ep.inputs.len()];
            let mut z: f64 = weights.iter().sum();
            for &pick in subset {
                for (q, &w) in weights.iter().enumerate() {
                    if !taken[q] {
                        coeff[q] -= advantage * w / z;
                    }
                }
                coeff[pick] += advantage;
                taken[pick] = true;
                z -= weights[pick];
            }
        }

        for (c, input) in ep.inputs.iter().enumerate() {
            if coeff[c] != 0.0 {
                backprop_one(model, input.to_array(), coeff[c], &mut grads);
            }
        }
    }

    let grad_norm = grads.norm();
    if !grad_norm.is_finite() {
        return Err(SamplerError::Numeric("gradient"));
    }

    let mut updated = model.clone();
    for (w, g) in updated.weights.iter_mut().zip(&grads.weights) {
        for (p, g) in w.iter_mut().zip(g) {
            *p -= lr * g;
        }
    }
    for (b, g) in updated.biases.iter_mut().zip(&grads.biases) {
        for (p, g) in b.iter_mut().zip(g) {
            *p -= lr * g;
        }
    }
    updated.validate()?;

    Ok((
        updated,
        StepDiagnostics { grad_norm, mean_loss: loss_sum / loss_count as f64 },
    ))
}

/// One training scene: matches in pixel coordinates plus the ground-truth
/// pose the hypothesis losses are scored against.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainScene {
    pub matches: Vec<Correspondence>,
    pub cam1: Camera,
    pub cam2: Camera,
    pub gt_pose: RelativePose,
}

/// Per-epoch training record.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: u32,
    pub mean_loss: f64,
    pub grad_norm: f64,
    pub lr: f64,
    pub scenes: u32,
    pub truncated: bool,
}

/// Build one episode: score the scene's matches, draw K minimal sets from
/// the induced weights, and evaluate each set's hypothesis pose error
/// against the ground truth (any solver failure costs 180 degrees).
fn build_episode(
    model: &SamplerModel,
    scene: &TrainScene,
    k_samples: u32,
    rng: &mut DetRng,
) -> Result<Episode, SamplerError> {
    let inputs: Vec<Correspondence> = scene
        .matches
        .iter()
        .map(|c| normalize_match(c, &scene.cam1, &scene.cam2))
        .collect();
    let logits = forward(model, &inputs)?;
    let weights = weights_from_logits(&logits);

    let mut subset_samples = Vec::with_capacity(k_samples as usize);
    let mut losses = Vec::with_capacity(k_samples as usize);
    let mut logprobs = Vec::with_capacity(k_samples as usize);
    for _ in 0..k_samples {
        let idx = sample_minimal_set(&weights, 8, rng)
            .map_err(|_| SamplerError::InvalidEpisode("scene has fewer than 8 matches"))?;
        let subset: Vec<Correspondence> = idx.iter().map(|&i| inputs[i]).collect();
        let loss = match eight_point(&subset)
            .and_then(|e| decompose_essential(&e, &subset))
        {
            Ok(pose) => pose_error_deg(&pose, &scene.gt_pose),
            Err(_) => FAILURE_POSE_ERROR_DEG,
        };
        logprobs.push(subset_logprob(&weights, &idx)?);
        subset_samples.push(idx);
        losses.push(loss);
    }
    Ok(Episode { inputs, subset_samples, losses, logprobs })
}

/// Policy-gradient training over a scene stream.
///
/// Runs `epochs x scenes_per_epoch` scenes, stepping every `mc_draws`
/// episodes, with learning rate `learning_rate * lr_decay^epoch`. Scenes
/// with fewer than 8 matches are skipped. Stream exhaustion truncates the
/// epoch (flagged in its record) and ends training.
pub fn train<I>(
    model_init: &SamplerModel,
    mut scenes: I,
    cfg: &TrainConfig,
) -> Result<(SamplerModel, Vec<EpochRecord>), SamplerError>
where
    I: Iterator<Item = TrainScene>,
{
    cfg.validate()?;
    model_init.validate()?;
    let mut model = model_init.clone();
    let mut log = Vec::new();
    let mut rng = DetRng::new(cfg.seed);
    let mut exhausted = false;

    for epoch in 0..cfg.epochs {
        if exhausted {
            break;
        }
        let lr = cfg.learning_rate * cfg.lr_decay.powi(epoch as i32);
        let mut batch: Vec<Episode> = Vec::new();
        let mut losses_sum = 0.0;
        let mut losses_n = 0usize;
        let mut grad_sum = 0.0;
        let mut steps = 0usize;
        let mut seen = 0u32;
        let mut truncated = false;

        while seen < cfg.scenes_per_epoch {
            let Some(scene) = scenes.next() else {
                truncated = seen > 0 || !log.is_empty();
                exhausted = true;
                break;
            };
            seen += 1;
            if scene.matches.len() < 8 {
                continue;
            }
            let ep = build_episode(&model, &scene, cfg.k_samples, &mut rng)?;
            losses_sum += ep.losses.iter().sum::<f64>();
            losses_n += ep.losses.len();
            batch.push(ep);
            if batch.len() as u32 == cfg.mc_draws {
                let (next, diag) = reinforce_step_with_lr(&model, &batch, cfg, lr)?;
                model = next;
                grad_sum += diag.grad_norm;
                steps += 1;
                batch.clear();
            }
        }
        if !batch.is_empty() {
            let (next, diag) = reinforce_step_with_lr(&model, &batch, cfg, lr)?;
            model = next;
            grad_sum += diag.grad_norm;
            steps += 1;
        }
        if losses_n == 0 {
            if log.is_empty() {
                return Err(SamplerError::EmptyStream);
            }
            break;
        }
        log.push(EpochRecord {
            epoch,
            mean_loss: losses_sum / losses_n as f64,
            grad_norm: if steps > 0 { grad_sum / steps as f64 } else { 0.0 },
            lr,
            scenes: seen,
            truncated,
        });
    }
    Ok((model, log))
}
