//! Continuous relaxation of band selection and the bilevel search loop.
//!
//! Every band `i` gets two operations, *pass* (identity) and *drop* (zero),
//! each with a logit. The softmax over the pair gives the band's priority
//!
//! ```text
//! g_i = exp(pass_i) / (exp(pass_i) + exp(drop_i))
//! ```
//!
//! and the relaxed input to the recovery model is the sum of the spectrally
//! padded bands weighted by their priorities, i.e. channel `i` is
//! `g_i · B_i`.
//!
//! The search alternates first-order steps: recovery weights descend the
//! training MRAE with the gates frozen, then the gate logits descend the
//! validation MRAE plus an L2 penalty on the logits with the weights frozen.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::correlation::{band_correlation, CorrelationMatrix};
use crate::error::{ensure, Error, Result};
use crate::hypercube::{Planes, SpectralCube, TrainVal};
use crate::recovery::{cosine_lr, ModelDims, ModelKind, RecoveryModel, DEFAULT_HIDDEN, DEFAULT_KERNEL};

/// Pass/drop logits for every band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandGates {
    pass_logits: Vec<f64>,
    drop_logits: Vec<f64>,
}

impl BandGates {
    /// All logits zero, every priority 0.5.
    pub fn uniform(bands: usize) -> Self {
        Self {
            pass_logits: vec![0.0; bands],
            drop_logits: vec![0.0; bands],
        }
    }

    pub fn from_logits(pass_logits: Vec<f64>, drop_logits: Vec<f64>) -> Result<Self> {
        ensure!(
            pass_logits.len() == drop_logits.len(),
            Shape,
            "{} pass logits vs {} drop logits",
            pass_logits.len(),
            drop_logits.len()
        );
        ensure!(
            pass_logits.iter().chain(&drop_logits).all(|x| x.is_finite()),
            NonFinite,
            "gate logits"
        );
        Ok(Self {
            pass_logits,
            drop_logits,
        })
    }

    pub fn len(&self) -> usize {
        self.pass_logits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pass_logits.is_empty()
    }

    pub fn pass_logits(&self) -> &[f64] {
        &self.pass_logits
    }

    pub fn drop_logits(&self) -> &[f64] {
        &self.drop_logits
    }

    /// Softmax weights `(pass, drop)` of band `i`.
    pub fn weights(&self, i: usize) -> (f64, f64) {
        let diff = self.pass_logits[i] - self.drop_logits[i];
        (sigmoid(diff), sigmoid(-diff))
    }

    pub fn priority(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.weights(i).0).collect()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Bands padded to `N` channels: channel `i` holds `B_i`, the rest are zero.
pub fn spectral_pad(cube: &SpectralCube, i: usize) -> Result<Planes> {
    if i >= cube.bands() {
        return Err(Error::OutOfRange(format!("band {i} of {}", cube.bands())));
    }
    let mut out = Planes::zeros(cube.height(), cube.width(), cube.bands());
    out.plane_mut(i).copy_from_slice(cube.band(i));
    Ok(out)
}

/// `Σ_i g_i · spectral_pad(cube, i)`, computed as per-channel scaling.
pub fn gated_cube(cube: &SpectralCube, gates: &BandGates) -> Result<Planes> {
    ensure!(
        gates.len() == cube.bands(),
        Shape,
        "{} gates for {} bands",
        gates.len(),
        cube.bands()
    );
    let mut out = cube.planes().clone();
    for (i, g) in gates.priority().into_iter().enumerate() {
        out.plane_mut(i).iter_mut().for_each(|x| *x *= g);
    }
    Ok(out)
}

/// `weight · Σ logit²` over every logit, with gradient `2 · weight · logit`.
pub fn alpha_l2_penalty(logits: &[f64], weight: f64) -> (f64, Vec<f64>) {
    let penalty = weight * logits.iter().map(|x| x * x).sum::<f64>();
    let grad = logits.iter().map(|x| 2.0 * weight * x).collect();
    (penalty, grad)
}

/// A differentiable map from a cube to the recovery model's input, driven by
/// a flat logit vector.
pub trait Gating: Clone {
    /// Number of channels fed to the recovery model.
    fn channels(&self) -> usize;
    fn apply(&self, cube: &SpectralCube) -> Result<Planes>;
    /// Chain rule from `∂L/∂input` to `∂L/∂logits`.
    fn logit_gradient(&self, cube: &SpectralCube, grad_input: &Planes) -> Vec<f64>;
    fn logits(&self) -> Vec<f64>;
    fn set_logits(&mut self, logits: &[f64]);
    fn priorities(&self) -> Vec<f64>;
}

impl Gating for BandGates {
    fn channels(&self) -> usize {
        self.len()
    }

    fn apply(&self, cube: &SpectralCube) -> Result<Planes> {
        gated_cube(cube, self)
    }

    fn logit_gradient(&self, cube: &SpectralCube, grad_input: &Planes) -> Vec<f64> {
        let n = self.len();
        let mut grad = vec![0.0; 2 * n];
        for i in 0..n {
            let dg: f64 = grad_input.plane(i).iter().zip(cube.band(i)).map(|(a, b)| a * b).sum();
            let (g, _) = self.weights(i);
            let d = dg * g * (1.0 - g);
            grad[i] = d;
            grad[n + i] = -d;
        }
        grad
    }

    /// Pass logits followed by drop logits.
    fn logits(&self) -> Vec<f64> {
        self.pass_logits.iter().chain(&self.drop_logits).copied().collect()
    }

    fn set_logits(&mut self, logits: &[f64]) {
        let n = self.len();
        self.pass_logits.copy_from_slice(&logits[..n]);
        self.drop_logits.copy_from_slice(&logits[n..]);
    }

    fn priorities(&self) -> Vec<f64> {
        self.priority()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    /// Gates feed whichever recovery model the config names.
    Nbs,
    /// Recovery model restricted to per-pixel spectra.
    Spectral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub epochs: usize,
    pub lr_w: f64,
    pub lr_alpha: f64,
    pub l2_alpha: f64,
    pub val_fraction: f64,
    pub beta: f64,
    pub model_kind: ModelKind,
    pub hidden: usize,
    pub kernel: usize,
    pub seed: u64,
    pub batch: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            lr_w: 0.0004,
            lr_alpha: 0.0004,
            l2_alpha: 0.01,
            val_fraction: 0.2,
            beta: 0.5,
            model_kind: ModelKind::ConvSpatial,
            hidden: DEFAULT_HIDDEN,
            kernel: DEFAULT_KERNEL,
            seed: 0,
            batch: 12,
        }
    }
}

impl SearchConfig {
    /// Rates must be positive, except that a zero `lr_alpha` freezes the gates.
    pub fn validate(&self) -> Result<()> {
        ensure!(self.epochs >= 1, Invalid, "epochs must be >= 1");
        ensure!(self.lr_w > 0.0 && self.lr_w.is_finite(), Invalid, "lr_w must be > 0");
        ensure!(self.lr_alpha >= 0.0 && self.lr_alpha.is_finite(), Invalid, "lr_alpha must be >= 0");
        ensure!(self.l2_alpha >= 0.0 && self.l2_alpha.is_finite(), Invalid, "l2_alpha must be >= 0");
        ensure!(
            self.val_fraction > 0.0 && self.val_fraction < 1.0,
            Invalid,
            "val_fraction must be in (0, 1)"
        );
        ensure!(self.beta >= 0.0 && self.beta.is_finite(), Invalid, "beta must be >= 0");
        ensure!(self.batch >= 1, Invalid, "batch must be >= 1");
        Ok(())
    }

    pub fn model_dims(&self, input_channels: usize, bands: usize) -> ModelDims {
        ModelDims::new(input_channels, bands)
            .with_hidden(self.hidden)
            .with_kernel(self.kernel)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub train_loss: f64,
    pub val_loss: f64,
    pub priorities: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub mode: SearchMode,
    pub config: SearchConfig,
    pub gates: BandGates,
    pub correlation: CorrelationMatrix,
    pub history: Vec<EpochRecord>,
    pub model: RecoveryModel,
    pub wavelengths_nm: Vec<f64>,
}

impl SearchResult {
    pub fn priorities(&self) -> Vec<f64> {
        self.gates.priority()
    }
}

/// Result of the alternating loop for any gating scheme.
#[derive(Debug, Clone)]
pub struct LoopOutcome<G> {
    pub gates: G,
    pub model: RecoveryModel,
    pub history: Vec<EpochRecord>,
}

/// Seed offset for the batch-order stream, so it never aliases the model
/// initialization stream drawn from the same user seed.
const SHUFFLE_STREAM: u64 = 0x05ee_d0fb_a7c4;

/// First-order alternating optimization shared by every search variant.
pub fn alternating_search<G: Gating>(
    data: &TrainVal,
    config: &SearchConfig,
    kind: ModelKind,
    mut gates: G,
) -> Result<LoopOutcome<G>> {
    config.validate()?;
    let bands = data.bands();
    let dims = config.model_dims(gates.channels(), bands);
    let mut model = RecoveryModel::new(kind, dims, config.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(SHUFFLE_STREAM));
    let train = data.train.cubes();
    let val = data.val.cubes();
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let lr_w = cosine_lr(epoch, config.epochs, config.lr_w)?;

        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut rng);
        let mut train_losses = Vec::new();
        for batch in order.chunks(config.batch) {
            let mut grad = vec![0.0; model.param_count()];
            let mut loss = 0.0;
            for &i in batch {
                let input = gates.apply(&train[i])?;
                let b = model.loss_and_gradients(&input, &train[i])?;
                loss += b.loss;
                grad.iter_mut().zip(&b.grad_params).for_each(|(a, g)| *a += g);
            }
            let scale = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            train_losses.push(loss * scale);
            model = model.sgd_step_raw(&grad, lr_w)?;
        }

        let mut order: Vec<usize> = (0..val.len()).collect();
        order.shuffle(&mut rng);
        let mut val_losses = Vec::new();
        for batch in order.chunks(config.batch) {
            let logits = gates.logits();
            let mut grad = vec![0.0; logits.len()];
            let mut loss = 0.0;
            for &i in batch {
                let input = gates.apply(&val[i])?;
                let b = model.loss_and_gradients(&input, &val[i])?;
                loss += b.loss;
                let g = gates.logit_gradient(&val[i], &b.grad_input);
                grad.iter_mut().zip(&g).for_each(|(a, g)| *a += g);
            }
            let scale = 1.0 / batch.len() as f64;
            let (_, penalty_grad) = alpha_l2_penalty(&logits, config.l2_alpha);
            let updated: Vec<f64> = logits
                .iter()
                .zip(grad.iter().zip(&penalty_grad))
                .map(|(x, (g, p))| x - config.lr_alpha * (g * scale + p))
                .collect();
            if updated.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!("gate logits diverged at epoch {epoch}")));
            }
            gates.set_logits(&updated);
            val_losses.push(loss * scale);
        }

        let record = EpochRecord {
            train_loss: mean(&train_losses),
            val_loss: mean(&val_losses),
            priorities: gates.priorities(),
        };
        if !record.train_loss.is_finite() || !record.val_loss.is_finite() {
            return Err(Error::NonFinite(format!(
                "loss at epoch {epoch}: train {} val {}",
                record.train_loss, record.val_loss
            )));
        }
        history.push(record);
    }
    Ok(LoopOutcome {
        gates,
        model,
        history,
    })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Learns band priorities with the recovery model named by `config`.
pub fn bilevel_search(data: &TrainVal, config: &SearchConfig) -> Result<SearchResult> {
    run_search(data, config.clone(), SearchMode::Nbs)
}

/// The same search with a per-pixel recovery model, so no spatial context
/// reaches the gates. Any spatial `model_kind` in `config` is replaced by
/// `mlp-per-pixel`.
pub fn spectral_mode_search(data: &TrainVal, config: &SearchConfig) -> Result<SearchResult> {
    let mut config = config.clone();
    if config.model_kind.is_spatial() {
        config.model_kind = ModelKind::MlpPerPixel;
    }
    run_search(data, config, SearchMode::Spectral)
}

fn run_search(data: &TrainVal, config: SearchConfig, mode: SearchMode) -> Result<SearchResult> {
    let correlation = band_correlation(&data.train)?;
    let out = alternating_search(data, &config, config.model_kind, BandGates::uniform(data.bands()))?;
    Ok(SearchResult {
        mode,
        config,
        gates: out.gates,
        correlation,
        history: out.history,
        model: out.model,
        wavelengths_nm: data.wavelengths_nm().to_vec(),
    })
}

/// JSON form of a search run. The correlation matrix is stored next to it as
/// CSV and referenced by path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchRecord {
    pub mode: SearchMode,
    pub config: SearchConfig,
    pub wavelengths_nm: Vec<f64>,
    pub priorities: Vec<f64>,
    pub pass_logits: Vec<f64>,
    pub drop_logits: Vec<f64>,
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub correlation_path: String,
}

impl SearchRecord {
    pub fn from_result(result: &SearchResult, correlation_path: impl Into<String>) -> Self {
        Self {
            mode: result.mode,
            config: result.config.clone(),
            wavelengths_nm: result.wavelengths_nm.clone(),
            priorities: result.priorities(),
            pass_logits: result.gates.pass_logits().to_vec(),
            drop_logits: result.gates.drop_logits().to_vec(),
            train_loss: result.history.iter().map(|h| h.train_loss).collect(),
            val_loss: result.history.iter().map(|h| h.val_loss).collect(),
            correlation_path: correlation_path.into(),
        }
    }

    pub fn gates(&self) -> Result<BandGates> {
        BandGates::from_logits(self.pass_logits.clone(), self.drop_logits.clone())
    }
}
