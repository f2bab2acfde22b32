//! Desk-scale stand-in for a dropout-trained localization network.
//!
//! A synthetic scene generator produces boxes whose observed corners are
//! perturbed by feature-dependent Gaussian noise, and a one-hidden-layer
//! MLP with three heads (coordinate means, log aleatoric variances,
//! class logits) is trained by manual-gradient SGD under the
//! heteroscedastic loss plus cross-entropy. Inference runs either with
//! MC-dropout (stochastic hidden masks) or with deterministic weight
//! scaling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predictive::{GroundTruth, McSample};
use crate::rng::{SplitMix64, Stream};

/// Log-variance head outputs are clamped to this range before `exp`,
/// which bounds the `exp(-s)` factor early in training.
pub const LOGVAR_CLAMP: (f64, f64) = (-10.0, 4.0);

/// Configuration for the synthetic scene generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub num_examples: usize,
    pub feature_dim: usize,
    /// Range of per-example noise standard deviations. The scale is a
    /// smooth function of one feature, so the aleatoric head can learn it.
    pub noise_scale_range: (f64, f64),
    pub seed: u64,
    pub class_count: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            num_examples: 2000,
            feature_dim: 8,
            noise_scale_range: (0.02, 0.05),
            seed: 0,
            class_count: 2,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_examples == 0 {
            return Err(Error::Usage("num_examples must be positive".into()));
        }
        if self.feature_dim == 0 {
            return Err(Error::Usage("feature_dim must be positive".into()));
        }
        if self.class_count == 0 {
            return Err(Error::Usage("class_count must be positive".into()));
        }
        let (lo, hi) = self.noise_scale_range;
        if !(lo.is_finite() && hi.is_finite()) || lo <= 0.0 || hi <= 0.0 || lo > hi {
            return Err(Error::Usage(format!(
                "noise_scale_range must satisfy 0 < low <= high, got ({lo}, {hi})"
            )));
        }
        Ok(())
    }
}

/// One synthetic example: observable features and the labeled truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub features: Vec<f64>,
    pub truth: GroundTruth,
}

/// Generates a deterministic synthetic dataset.
///
/// Latent boxes live well inside the unit square; the observed truth box
/// is the latent box plus zero-mean Gaussian noise whose scale is an
/// affine function of a latent difficulty exposed through the features,
/// which is what makes the data genuinely heteroscedastic.
pub fn synth_generate(cfg: &SynthConfig) -> Result<Vec<LabeledExample>> {
    cfg.validate()?;
    let mut rng = SplitMix64::stream(cfg.seed, Stream::Data, 0);
    let (lo, hi) = cfg.noise_scale_range;

    let mut out = Vec::with_capacity(cfg.num_examples);
    for _ in 0..cfg.num_examples {
        // Corner range [0.125, 0.875]: at the default noise scales the
        // clamp into [0,1] almost never fires, so truth noise stays
        // symmetric.
        let cx = rng.next_range(0.3, 0.7);
        let cy = rng.next_range(0.3, 0.7);
        let w = rng.next_range(0.15, 0.35);
        let h = rng.next_range(0.15, 0.35);
        let class_id = rng.next_usize(cfg.class_count);
        let difficulty = rng.next_f64();
        let sigma = lo + (hi - lo) * difficulty;

        // Class evidence overlaps between classes so softmax confidences
        // spread out instead of saturating.
        let class_signal = if cfg.class_count == 1 {
            0.0
        } else {
            2.0 * class_id as f64 / (cfg.class_count - 1) as f64 - 1.0
        };
        let class_feature = class_signal + 0.5 * rng.next_normal();

        let latent = [cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0];
        // Noise enters through the center and size, normalized so each
        // corner sees zero-mean Gaussian noise of scale exactly sigma.
        // Corner order is then preserved structurally instead of by
        // re-sorting, which would skew the noise.
        let norm = 1.25f64.sqrt();
        let (zcx, zwx) = (rng.next_normal(), rng.next_normal());
        let (zcy, zwy) = (rng.next_normal(), rng.next_normal());
        let noisy = [
            latent[0] + sigma * (zcx - zwx / 2.0) / norm,
            latent[1] + sigma * (zcy - zwy / 2.0) / norm,
            latent[2] + sigma * (zcx + zwx / 2.0) / norm,
            latent[3] + sigma * (zcy + zwy / 2.0) / norm,
        ];
        let (x_min, x_max) = order_into_unit(noisy[0], noisy[2]);
        let (y_min, y_max) = order_into_unit(noisy[1], noisy[3]);

        let features = build_features(cfg.feature_dim, cx, cy, w, h, difficulty, class_feature);
        out.push(LabeledExample {
            features,
            truth: GroundTruth {
                box_coords: [x_min, y_min, x_max, y_max],
                class_id,
            },
        });
    }
    Ok(out)
}

fn build_features(
    dim: usize,
    cx: f64,
    cy: f64,
    w: f64,
    h: f64,
    difficulty: f64,
    class_feature: f64,
) -> Vec<f64> {
    // Centered so the tanh trunk starts in its linear regime.
    let canonical = [
        cx - 0.5,
        cy - 0.5,
        w - 0.25,
        h - 0.25,
        difficulty - 0.5,
        class_feature,
        (2.3 * cx + 1.7 * cy).sin() - 0.5,
        (3.1 * w - 2.9 * h + difficulty).cos() - 0.5,
    ];
    (0..dim)
        .map(|j| {
            if j < canonical.len() {
                canonical[j]
            } else {
                let k = (j - canonical.len() + 1) as f64;
                (k * (cx + 0.7 * cy) + 0.3 * k * (w + h) + 0.11 * k).sin()
            }
        })
        .collect()
}

/// Keeps a perturbed coordinate pair ordered and inside the unit
/// interval. The nudge branch only fires when noise collapses or inverts
/// the pair.
fn order_into_unit(a: f64, b: f64) -> (f64, f64) {
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    lo = lo.clamp(0.0, 1.0);
    hi = hi.clamp(0.0, 1.0);
    if lo >= hi {
        let mid = (0.5 * (lo + hi)).clamp(1e-6, 1.0 - 1e-6);
        lo = mid - 1e-6;
        hi = mid + 1e-6;
    }
    (lo, hi)
}

/// Weights and biases of the toy network:
/// `feature_dim -> hidden (tanh, dropout) -> {4 means, 4 logvars, logits}`.
/// All matrices are row-major `rows x cols = outputs x inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyModelParams {
    pub feature_dim: usize,
    pub hidden_dim: usize,
    pub class_count: usize,
    pub dropout_rate: f64,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w_mean: Vec<f64>,
    pub b_mean: Vec<f64>,
    pub w_logvar: Vec<f64>,
    pub b_logvar: Vec<f64>,
    pub w_class: Vec<f64>,
    pub b_class: Vec<f64>,
}

impl ToyModelParams {
    /// Glorot-uniform initialization, deterministic in `seed`.
    pub fn init(
        feature_dim: usize,
        hidden_dim: usize,
        class_count: usize,
        dropout_rate: f64,
        seed: u64,
    ) -> Result<Self> {
        if feature_dim == 0 || hidden_dim == 0 || class_count == 0 {
            return Err(Error::Usage("network dimensions must be positive".into()));
        }
        if !(0.0..1.0).contains(&dropout_rate) {
            return Err(Error::Usage(format!(
                "dropout rate must lie in [0,1), got {dropout_rate}"
            )));
        }
        let mut rng = SplitMix64::stream(seed, Stream::Init, 0);
        let mut layer = |fan_in: usize, fan_out: usize| -> Vec<f64> {
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            (0..fan_in * fan_out).map(|_| rng.next_range(-bound, bound)).collect()
        };
        Ok(Self {
            feature_dim,
            hidden_dim,
            class_count,
            dropout_rate,
            w1: layer(feature_dim, hidden_dim),
            b1: vec![0.0; hidden_dim],
            w_mean: layer(hidden_dim, 4),
            b_mean: vec![0.0; 4],
            w_logvar: layer(hidden_dim, 4),
            b_logvar: vec![0.0; 4],
            w_class: layer(hidden_dim, class_count),
            b_class: vec![0.0; class_count],
        })
    }

    pub fn validate(&self) -> Result<()> {
        let shapes = [
            (self.w1.len(), self.hidden_dim * self.feature_dim, "w1"),
            (self.b1.len(), self.hidden_dim, "b1"),
            (self.w_mean.len(), 4 * self.hidden_dim, "w_mean"),
            (self.b_mean.len(), 4, "b_mean"),
            (self.w_logvar.len(), 4 * self.hidden_dim, "w_logvar"),
            (self.b_logvar.len(), 4, "b_logvar"),
            (self.w_class.len(), self.class_count * self.hidden_dim, "w_class"),
            (self.b_class.len(), self.class_count, "b_class"),
        ];
        for (got, want, name) in shapes {
            if got != want {
                return Err(Error::Usage(format!("{name} has {got} entries, expected {want}")));
            }
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Usage(format!(
                "dropout rate must lie in [0,1), got {}",
                self.dropout_rate
            )));
        }
        let all = [
            &self.w1, &self.b1, &self.w_mean, &self.b_mean, &self.w_logvar, &self.b_logvar,
            &self.w_class, &self.b_class,
        ];
        if all.iter().any(|v| v.iter().any(|x| !x.is_finite())) {
            return Err(Error::Usage("model parameters must be finite".into()));
        }
        Ok(())
    }

    fn zeros_like(&self) -> ToyModelGrads {
        ToyModelGrads {
            w1: vec![0.0; self.w1.len()],
            b1: vec![0.0; self.b1.len()],
            w_mean: vec![0.0; self.w_mean.len()],
            b_mean: vec![0.0; self.b_mean.len()],
            w_logvar: vec![0.0; self.w_logvar.len()],
            b_logvar: vec![0.0; self.b_logvar.len()],
            w_class: vec![0.0; self.w_class.len()],
            b_class: vec![0.0; self.b_class.len()],
        }
    }
}

/// Per-parameter gradients, same layout as [`ToyModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct ToyModelGrads {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w_mean: Vec<f64>,
    pub b_mean: Vec<f64>,
    pub w_logvar: Vec<f64>,
    pub b_logvar: Vec<f64>,
    pub w_class: Vec<f64>,
    pub b_class: Vec<f64>,
}

/// How the hidden layer is transformed at a given pass.
#[derive(Debug, Clone, Copy)]
pub enum HiddenTransform<'a> {
    /// Per-unit Bernoulli keep mask (training and MC-dropout inference).
    Mask(&'a [bool]),
    /// Deterministic scaling of all hidden activations (weight scaling).
    Scale(f64),
}

/// Outputs of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub coord_means: [f64; 4],
    /// Clamped log-variances, as consumed by the loss and by sampling.
    pub coord_logvars: [f64; 4],
    pub class_probs: Vec<f64>,
    hidden: Vec<f64>,
    hidden_t: Vec<f64>,
    logvars_raw: [f64; 4],
}

/// Runs the network forward on one feature vector.
pub fn forward(
    params: &ToyModelParams,
    features: &[f64],
    transform: HiddenTransform<'_>,
) -> Result<ForwardPass> {
    if features.len() != params.feature_dim {
        return Err(Error::Usage(format!(
            "feature vector has {} entries, model expects {}",
            features.len(),
            params.feature_dim
        )));
    }
    if features.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("features must be finite".into()));
    }
    let hd = params.hidden_dim;

    let mut hidden_pre = vec![0.0; hd];
    for j in 0..hd {
        let row = &params.w1[j * params.feature_dim..(j + 1) * params.feature_dim];
        hidden_pre[j] = params.b1[j] + row.iter().zip(features).map(|(w, x)| w * x).sum::<f64>();
    }
    let hidden: Vec<f64> = hidden_pre.iter().map(|v| v.tanh()).collect();
    let hidden_t: Vec<f64> = match transform {
        HiddenTransform::Mask(mask) => {
            if mask.len() != hd {
                return Err(Error::Usage(format!(
                    "dropout mask has {} entries, expected {hd}",
                    mask.len()
                )));
            }
            hidden.iter().zip(mask).map(|(v, &keep)| if keep { *v } else { 0.0 }).collect()
        }
        HiddenTransform::Scale(k) => hidden.iter().map(|v| v * k).collect(),
    };

    let head = |w: &[f64], b: &[f64], out: &mut [f64]| {
        for (i, o) in out.iter_mut().enumerate() {
            let row = &w[i * hd..(i + 1) * hd];
            *o = b[i] + row.iter().zip(&hidden_t).map(|(wx, hx)| wx * hx).sum::<f64>();
        }
    };

    let mut coord_means = [0.0; 4];
    head(&params.w_mean, &params.b_mean, &mut coord_means);
    let mut logvars_raw = [0.0; 4];
    head(&params.w_logvar, &params.b_logvar, &mut logvars_raw);
    let coord_logvars = logvars_raw.map(|s| s.clamp(LOGVAR_CLAMP.0, LOGVAR_CLAMP.1));
    let mut logits = vec![0.0; params.class_count];
    head(&params.w_class, &params.b_class, &mut logits);

    Ok(ForwardPass {
        coord_means,
        coord_logvars,
        class_probs: softmax(&logits),
        hidden,
        hidden_t,
        logvars_raw,
    })
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Heteroscedastic regression loss summed over the four coordinates:
/// `(b_i - m_i)^2 * exp(-s_i) / 2 + s_i / 2`.
pub fn heteroscedastic_loss(
    pred_means: &[f64; 4],
    pred_logvars: &[f64; 4],
    truth_box: &[f64; 4],
) -> Result<f64> {
    let finite = pred_means.iter().chain(pred_logvars).chain(truth_box).all(|x| x.is_finite());
    if !finite {
        return Err(Error::Domain("heteroscedastic loss inputs must be finite".into()));
    }
    let mut total = 0.0;
    for i in 0..4 {
        let r = truth_box[i] - pred_means[i];
        total += 0.5 * r * r * (-pred_logvars[i]).exp() + 0.5 * pred_logvars[i];
    }
    Ok(total)
}

/// Analytic gradient of [`heteroscedastic_loss`] with respect to the
/// predicted means and log-variances.
pub fn heteroscedastic_loss_grad(
    pred_means: &[f64; 4],
    pred_logvars: &[f64; 4],
    truth_box: &[f64; 4],
) -> ([f64; 4], [f64; 4]) {
    let mut d_means = [0.0; 4];
    let mut d_logvars = [0.0; 4];
    for i in 0..4 {
        let r = truth_box[i] - pred_means[i];
        let inv_var = (-pred_logvars[i]).exp();
        d_means[i] = -r * inv_var;
        d_logvars[i] = -0.5 * r * r * inv_var + 0.5;
    }
    (d_means, d_logvars)
}

/// Total training loss (heteroscedastic + cross-entropy) and its analytic
/// gradient for one example under a fixed hidden transform.
pub fn loss_and_grad(
    params: &ToyModelParams,
    example: &LabeledExample,
    transform: HiddenTransform<'_>,
) -> Result<(f64, ToyModelGrads)> {
    if example.truth.class_id >= params.class_count {
        return Err(Error::Usage(format!(
            "class id {} out of range 0..{}",
            example.truth.class_id, params.class_count
        )));
    }
    let pass = forward(params, &example.features, transform)?;
    let het = heteroscedastic_loss(&pass.coord_means, &pass.coord_logvars, &example.truth.box_coords)?;
    let p_true = pass.class_probs[example.truth.class_id].max(1e-300);
    let loss = het - p_true.ln();

    let (d_means, d_logvars_clamped) =
        heteroscedastic_loss_grad(&pass.coord_means, &pass.coord_logvars, &example.truth.box_coords);
    // The clamp is flat outside its range.
    let mut d_logvars = [0.0; 4];
    for i in 0..4 {
        if pass.logvars_raw[i] > LOGVAR_CLAMP.0 && pass.logvars_raw[i] < LOGVAR_CLAMP.1 {
            d_logvars[i] = d_logvars_clamped[i];
        }
    }
    let mut d_logits: Vec<f64> = pass.class_probs.clone();
    d_logits[example.truth.class_id] -= 1.0;

    let hd = params.hidden_dim;
    let mut grads = params.zeros_like();

    let mut g_hidden_t = vec![0.0; hd];
    let mut head_back = |w: &[f64], dw: &mut [f64], db: &mut [f64], d_out: &[f64]| {
        for (i, &g) in d_out.iter().enumerate() {
            db[i] = g;
            let row_w = &w[i * hd..(i + 1) * hd];
            let row_dw = &mut dw[i * hd..(i + 1) * hd];
            for j in 0..hd {
                row_dw[j] = g * pass.hidden_t[j];
                g_hidden_t[j] += g * row_w[j];
            }
        }
    };
    head_back(&params.w_mean, &mut grads.w_mean, &mut grads.b_mean, &d_means);
    head_back(&params.w_logvar, &mut grads.w_logvar, &mut grads.b_logvar, &d_logvars);
    head_back(&params.w_class, &mut grads.w_class, &mut grads.b_class, &d_logits);

    let g_hidden: Vec<f64> = match transform {
        HiddenTransform::Mask(mask) => g_hidden_t
            .iter()
            .zip(mask)
            .map(|(g, &keep)| if keep { *g } else { 0.0 })
            .collect(),
        HiddenTransform::Scale(k) => g_hidden_t.iter().map(|g| g * k).collect(),
    };
    for j in 0..hd {
        let g_pre = g_hidden[j] * (1.0 - pass.hidden[j] * pass.hidden[j]);
        grads.b1[j] = g_pre;
        let row = &mut grads.w1[j * params.feature_dim..(j + 1) * params.feature_dim];
        for (slot, x) in row.iter_mut().zip(&example.features) {
            *slot = g_pre * x;
        }
    }

    Ok((loss, grads))
}

/// Training hyperparameters. `learning_rate` decays by `lr_decay_factor`
/// once, at `lr_decay_epoch`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub lr_decay_epoch: usize,
    pub lr_decay_factor: f64,
    /// Global gradient-norm cap per batch; keeps plain SGD stable when
    /// the log-variance head drives exp(-s) up.
    pub grad_clip: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            learning_rate: 1e-2,
            batch_size: 32,
            lr_decay_epoch: 150,
            lr_decay_factor: 0.1,
            grad_clip: 5.0,
        }
    }
}

/// Result of a training run: final parameters plus the mean loss per epoch.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ToyModelParams,
    pub epoch_mean_losses: Vec<f64>,
}

/// Minibatch SGD with per-step Bernoulli dropout masks on the hidden
/// layer, deterministic in `seed`.
pub fn train(
    data: &[LabeledExample],
    params: &ToyModelParams,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TrainOutcome> {
    if data.is_empty() {
        return Err(Error::Usage("training requires a non-empty dataset".into()));
    }
    params.validate()?;
    if cfg.batch_size == 0 {
        return Err(Error::Usage("batch size must be positive".into()));
    }
    if !cfg.learning_rate.is_finite() || cfg.learning_rate < 0.0 {
        return Err(Error::Usage("learning rate must be finite and nonnegative".into()));
    }

    let mut params = params.clone();
    let mut dropout_rng = SplitMix64::stream(seed, Stream::Dropout, 0);
    let keep_prob = 1.0 - params.dropout_rate;
    let mut epoch_mean_losses = Vec::with_capacity(cfg.epochs);
    let mut mask = vec![true; params.hidden_dim];

    for epoch in 0..cfg.epochs {
        let lr = if epoch >= cfg.lr_decay_epoch {
            cfg.learning_rate * cfg.lr_decay_factor
        } else {
            cfg.learning_rate
        };

        let mut order: Vec<usize> = (0..data.len()).collect();
        SplitMix64::stream(seed, Stream::Shuffle, epoch as u64).shuffle(&mut order);

        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut total = params.zeros_like();
            let mut batch_loss = 0.0;
            for &idx in batch {
                for slot in mask.iter_mut() {
                    *slot = params.dropout_rate == 0.0 || dropout_rng.next_bool(keep_prob);
                }
                let (loss, grads) =
                    loss_and_grad(&params, &data[idx], HiddenTransform::Mask(&mask))?;
                batch_loss += loss;
                accumulate(&mut total, &grads);
            }
            let scale = 1.0 / batch.len() as f64;
            scale_grads(&mut total, scale);
            clip_grads(&mut total, cfg.grad_clip);
            apply_sgd_step(&mut params, &total, lr);
            epoch_loss += batch_loss;
        }

        let mean_loss = epoch_loss / data.len() as f64;
        if !mean_loss.is_finite() {
            return Err(Error::Training {
                epoch,
                message: format!("mean loss became {mean_loss}"),
            });
        }
        epoch_mean_losses.push(mean_loss);
    }

    Ok(TrainOutcome {
        params,
        epoch_mean_losses,
    })
}

fn for_each_grad_slot<'a>(
    g: &'a mut ToyModelGrads,
) -> impl Iterator<Item = &'a mut Vec<f64>> {
    [
        &mut g.w1, &mut g.b1, &mut g.w_mean, &mut g.b_mean, &mut g.w_logvar, &mut g.b_logvar,
        &mut g.w_class, &mut g.b_class,
    ]
    .into_iter()
}

fn accumulate(total: &mut ToyModelGrads, delta: &ToyModelGrads) {
    let pairs: [(&mut Vec<f64>, &Vec<f64>); 8] = [
        (&mut total.w1, &delta.w1),
        (&mut total.b1, &delta.b1),
        (&mut total.w_mean, &delta.w_mean),
        (&mut total.b_mean, &delta.b_mean),
        (&mut total.w_logvar, &delta.w_logvar),
        (&mut total.b_logvar, &delta.b_logvar),
        (&mut total.w_class, &delta.w_class),
        (&mut total.b_class, &delta.b_class),
    ];
    for (acc, d) in pairs {
        for (a, b) in acc.iter_mut().zip(d) {
            *a += b;
        }
    }
}

fn scale_grads(g: &mut ToyModelGrads, scale: f64) {
    for v in for_each_grad_slot(g) {
        for x in v.iter_mut() {
            *x *= scale;
        }
    }
}

fn clip_grads(g: &mut ToyModelGrads, cap: f64) {
    if !cap.is_finite() || cap <= 0.0 {
        return;
    }
    let mut sq = 0.0;
    for v in for_each_grad_slot(g) {
        for x in v.iter() {
            sq += x * x;
        }
    }
    let norm = sq.sqrt();
    if norm > cap {
        scale_grads(g, cap / norm);
    }
}

fn apply_sgd_step(params: &mut ToyModelParams, g: &ToyModelGrads, lr: f64) {
    let pairs: [(&mut Vec<f64>, &Vec<f64>); 8] = [
        (&mut params.w1, &g.w1),
        (&mut params.b1, &g.b1),
        (&mut params.w_mean, &g.w_mean),
        (&mut params.b_mean, &g.b_mean),
        (&mut params.w_logvar, &g.w_logvar),
        (&mut params.b_logvar, &g.b_logvar),
        (&mut params.w_class, &g.w_class),
        (&mut params.b_class, &g.b_class),
    ];
    for (p, d) in pairs {
        for (x, gx) in p.iter_mut().zip(d) {
            *x -= lr * gx;
        }
    }
}

/// `t` stochastic forward passes with independent dropout masks,
/// deterministic in `seed`.
pub fn mc_predict(
    params: &ToyModelParams,
    features: &[f64],
    t: usize,
    seed: u64,
) -> Result<Vec<McSample>> {
    if t == 0 {
        return Err(Error::Usage("mc_predict needs at least one sample".into()));
    }
    params.validate()?;
    let mut rng = SplitMix64::stream(seed, Stream::Dropout, 0);
    let keep_prob = 1.0 - params.dropout_rate;
    let mut mask = vec![true; params.hidden_dim];
    let mut samples = Vec::with_capacity(t);
    for _ in 0..t {
        for slot in mask.iter_mut() {
            *slot = params.dropout_rate == 0.0 || rng.next_bool(keep_prob);
        }
        let pass = forward(params, features, HiddenTransform::Mask(&mask))?;
        samples.push(McSample {
            coord_means: pass.coord_means,
            coord_logvars: pass.coord_logvars,
            class_probs: pass.class_probs,
        });
    }
    Ok(samples)
}

/// One deterministic pass with hidden activations scaled by the keep
/// probability, the classical test-time approximation of dropout.
pub fn weight_scaled_predict(params: &ToyModelParams, features: &[f64]) -> Result<McSample> {
    params.validate()?;
    let pass = forward(params, features, HiddenTransform::Scale(1.0 - params.dropout_rate))?;
    Ok(McSample {
        coord_means: pass.coord_means,
        coord_logvars: pass.coord_logvars,
        class_probs: pass.class_probs,
    })
}

const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    schema_version: u32,
    #[serde(flatten)]
    params: ToyModelParams,
}

/// Persists the model as a versioned JSON document.
pub fn save_model(path: &std::path::Path, params: &ToyModelParams) -> Result<()> {
    params.validate()?;
    let file = ModelFile {
        schema_version: MODEL_SCHEMA_VERSION,
        params: params.clone(),
    };
    let mut text = serde_json::to_string_pretty(&file)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Loads and validates a model document.
pub fn load_model(path: &std::path::Path) -> Result<ToyModelParams> {
    let text = std::fs::read_to_string(path)?;
    let file: ModelFile = serde_json::from_str(&text).map_err(|e| Error::Schema {
        path: path.display().to_string(),
        line: 1,
        message: e.to_string(),
    })?;
    if file.schema_version != MODEL_SCHEMA_VERSION {
        return Err(Error::Schema {
            path: path.display().to_string(),
            line: 1,
            message: format!(
                "unsupported schema_version {}, expected {MODEL_SCHEMA_VERSION}",
                file.schema_version
            ),
        });
    }
    file.params.validate()?;
    Ok(file.params)
}
