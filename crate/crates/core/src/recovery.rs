//! Small spectral-recovery models mapping `Cin` input channels to the full
//! `N`-band cube, with analytic gradients of the MRAE loss.
//!
//! Three variants:
//!
//! * `linear-per-pixel`: `y = A·x + b` at every pixel.
//! * `mlp-per-pixel`: `y = W2·tanh(W1·x + b1) + b2` at every pixel; no
//!   spatial receptive field.
//! * `conv-spatial`: a `k×k` same-padded convolution to `hidden` channels,
//!   `tanh`, then the per-pixel linear head `W2·h + b2`.
//!
//! Parameters live in one flat vector. The MLP and convolution layouts match
//! exactly when the kernel is `1×1`, so both variants draw identical initial
//! weights from the same seed.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::hypercube::{cube_paths, Planes, SpectralCube};
use crate::metrics::{mrae_slices, MRAE_EPS};

pub const DEFAULT_HIDDEN: usize = 16;
pub const DEFAULT_KERNEL: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    LinearPerPixel,
    MlpPerPixel,
    ConvSpatial,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::LinearPerPixel, ModelKind::MlpPerPixel, ModelKind::ConvSpatial];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::LinearPerPixel => "linear-per-pixel",
            ModelKind::MlpPerPixel => "mlp-per-pixel",
            ModelKind::ConvSpatial => "conv-spatial",
        }
    }

    pub fn is_spatial(self) -> bool {
        self == ModelKind::ConvSpatial
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown model kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub input_channels: usize,
    pub output_bands: usize,
    pub hidden: usize,
    pub kernel: usize,
}

impl ModelDims {
    pub fn new(input_channels: usize, output_bands: usize) -> Self {
        Self {
            input_channels,
            output_bands,
            hidden: DEFAULT_HIDDEN,
            kernel: DEFAULT_KERNEL,
        }
    }

    pub fn with_hidden(self, hidden: usize) -> Self {
        Self { hidden, ..self }
    }

    pub fn with_kernel(self, kernel: usize) -> Self {
        Self { kernel, ..self }
    }
}

/// Offsets of each parameter block inside the flat vector.
#[derive(Debug, Clone, Copy)]
struct Layout {
    /// first-layer weights (A, W1 or conv kernel)
    w1: usize,
    b1: usize,
    /// head weights; equals `b1` for the linear model
    w2: usize,
    b2: usize,
    end: usize,
}

fn layout(kind: ModelKind, d: &ModelDims) -> Layout {
    let (cin, n, hd, k) = (d.input_channels, d.output_bands, d.hidden, d.kernel);
    match kind {
        ModelKind::LinearPerPixel => Layout {
            w1: 0,
            b1: n * cin,
            w2: n * cin,
            b2: n * cin,
            end: n * cin + n,
        },
        ModelKind::MlpPerPixel | ModelKind::ConvSpatial => {
            let taps = if kind == ModelKind::ConvSpatial { k * k } else { 1 };
            let b1 = hd * cin * taps;
            let w2 = b1 + hd;
            let b2 = w2 + n * hd;
            Layout {
                w1: 0,
                b1,
                w2,
                b2,
                end: b2 + n,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryModel {
    kind: ModelKind,
    dims: ModelDims,
    params: Vec<f64>,
    seed: u64,
}

/// Loss value plus gradients with respect to the parameters and the input.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle {
    pub loss: f64,
    pub grad_params: Vec<f64>,
    pub grad_input: Planes,
}

impl RecoveryModel {
    /// Weights uniform in `±1/sqrt(fan_in)`, biases zero.
    pub fn new(kind: ModelKind, dims: ModelDims, seed: u64) -> Result<Self> {
        validate_dims(kind, &dims)?;
        let l = layout(kind, &dims);
        let mut params = vec![0.0; l.end];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let taps = if kind == ModelKind::ConvSpatial { dims.kernel * dims.kernel } else { 1 };
        let first_fan_in = (dims.input_channels * taps) as f64;
        let s1 = 1.0 / first_fan_in.sqrt();
        params[l.w1..l.b1].iter_mut().for_each(|p| *p = rng.random_range(-s1..s1));
        if kind != ModelKind::LinearPerPixel {
            let s2 = 1.0 / (dims.hidden as f64).sqrt();
            params[l.w2..l.b2].iter_mut().for_each(|p| *p = rng.random_range(-s2..s2));
        }
        Ok(Self {
            kind,
            dims,
            params,
            seed,
        })
    }

    pub fn from_params(kind: ModelKind, dims: ModelDims, params: Vec<f64>, seed: u64) -> Result<Self> {
        validate_dims(kind, &dims)?;
        let expected = layout(kind, &dims).end;
        ensure!(
            params.len() == expected,
            Shape,
            "{} parameters for a model needing {expected}",
            params.len()
        );
        ensure!(params.iter().all(|p| p.is_finite()), NonFinite, "model parameters");
        Ok(Self {
            kind,
            dims,
            params,
            seed,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn dims(&self) -> ModelDims {
        self.dims
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn forward(&self, input: &Planes) -> Result<Planes> {
        self.check_input(input)?;
        Ok(self.forward_cached(input).0)
    }

    /// MRAE of `forward(input)` against `target`, with gradients.
    pub fn loss_and_gradients(&self, input: &Planes, target: &SpectralCube) -> Result<GradientBundle> {
        self.check_input(input)?;
        ensure!(
            target.height() == input.height()
                && target.width() == input.width()
                && target.bands() == self.dims.output_bands,
            Shape,
            "target {:?} does not match model output",
            target.shape()
        );
        let (pred, hidden) = self.forward_cached(input);
        let loss = mrae_slices(target.data(), pred.as_slice());
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("training loss {loss}")));
        }
        let count = pred.as_slice().len() as f64;
        let grad_out: Vec<f64> = target
            .data()
            .iter()
            .zip(pred.as_slice())
            .map(|(&g, &p)| {
                let diff = p - g;
                // subgradient 0 at the kink
                let sign = if diff > 0.0 {
                    1.0
                } else if diff < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                sign / g.abs().max(MRAE_EPS) / count
            })
            .collect();
        let grad_out = Planes::from_vec(input.height(), input.width(), self.dims.output_bands, grad_out)?;
        let (grad_params, grad_input) = self.backward(input, hidden.as_ref(), &grad_out);
        Ok(GradientBundle {
            loss,
            grad_params,
            grad_input,
        })
    }

    fn check_input(&self, input: &Planes) -> Result<()> {
        ensure!(
            input.channels() == self.dims.input_channels,
            Shape,
            "model expects {} input channels, got {}",
            self.dims.input_channels,
            input.channels()
        );
        Ok(())
    }

    fn forward_cached(&self, input: &Planes) -> (Planes, Option<Planes>) {
        let (h, w) = (input.height(), input.width());
        let d = &self.dims;
        let l = layout(self.kind, d);
        let p = &self.params;
        match self.kind {
            ModelKind::LinearPerPixel => {
                let out = dense(input, &p[l.w1..l.b1], &p[l.b2..l.end], d.output_bands);
                (out, None)
            }
            ModelKind::MlpPerPixel | ModelKind::ConvSpatial => {
                let mut hidden = if self.kind == ModelKind::ConvSpatial {
                    conv(input, &p[l.w1..l.b1], &p[l.b1..l.w2], d.hidden, d.kernel)
                } else {
                    dense(input, &p[l.w1..l.b1], &p[l.b1..l.w2], d.hidden)
                };
                hidden.as_mut_slice().iter_mut().for_each(|z| *z = z.tanh());
                let out = dense(&hidden, &p[l.w2..l.b2], &p[l.b2..l.end], d.output_bands);
                debug_assert_eq!(out.shape(), (h, w, d.output_bands));
                (out, Some(hidden))
            }
        }
    }

    fn backward(&self, input: &Planes, hidden: Option<&Planes>, grad_out: &Planes) -> (Vec<f64>, Planes) {
        let d = &self.dims;
        let l = layout(self.kind, d);
        let p = &self.params;
        let mut grads = vec![0.0; l.end];
        match self.kind {
            ModelKind::LinearPerPixel => {
                let (gw, gb) = grads.split_at_mut(l.b1);
                let gx = dense_backward(input, &p[l.w1..l.b1], grad_out, gw, gb);
                (grads, gx)
            }
            ModelKind::MlpPerPixel | ModelKind::ConvSpatial => {
                let hidden = hidden.expect("hidden activations cached by forward");
                let (first, head) = grads.split_at_mut(l.w2);
                let (gw2, gb2) = head.split_at_mut(l.b2 - l.w2);
                let mut gz = dense_backward(hidden, &p[l.w2..l.b2], grad_out, gw2, gb2);
                gz.as_mut_slice()
                    .iter_mut()
                    .zip(hidden.as_slice())
                    .for_each(|(g, &a)| *g *= 1.0 - a * a);
                let (gw1, gb1) = first.split_at_mut(l.b1);
                let gx = if self.kind == ModelKind::ConvSpatial {
                    conv_backward(input, &p[l.w1..l.b1], &gz, d.kernel, gw1, gb1)
                } else {
                    dense_backward(input, &p[l.w1..l.b1], &gz, gw1, gb1)
                };
                (grads, gx)
            }
        }
    }

    /// `params − lr · grads`, returned as a new model.
    pub fn sgd_step(&self, grads: &GradientBundle, lr: f64) -> Result<RecoveryModel> {
        self.sgd_step_raw(&grads.grad_params, lr)
    }

    pub(crate) fn sgd_step_raw(&self, grad_params: &[f64], lr: f64) -> Result<RecoveryModel> {
        ensure!(
            grad_params.len() == self.params.len(),
            Shape,
            "{} gradients for {} parameters",
            grad_params.len(),
            self.params.len()
        );
        ensure!(grad_params.iter().all(|g| g.is_finite()), NonFinite, "parameter gradient");
        ensure!(lr.is_finite(), NonFinite, "learning rate");
        let params = self.params.iter().zip(grad_params).map(|(p, g)| p - lr * g).collect();
        Ok(RecoveryModel {
            params,
            ..self.clone()
        })
    }
}

fn validate_dims(kind: ModelKind, d: &ModelDims) -> Result<()> {
    ensure!(d.input_channels >= 1, Invalid, "model needs at least one input channel");
    ensure!(d.output_bands >= 1, Invalid, "model needs at least one output band");
    if kind != ModelKind::LinearPerPixel {
        ensure!(d.hidden >= 1, Invalid, "hidden width must be >= 1");
    }
    if kind == ModelKind::ConvSpatial {
        ensure!(d.kernel % 2 == 1, Invalid, "convolution kernel must be odd, got {}", d.kernel);
    }
    Ok(())
}

/// `out[o] = bias[o] + Σ_c weights[o, c] · input[c]`, plane-wise.
fn dense(input: &Planes, weights: &[f64], bias: &[f64], outputs: usize) -> Planes {
    let cin = input.channels();
    let mut out = Planes::zeros(input.height(), input.width(), outputs);
    for o in 0..outputs {
        let plane = out.plane_mut(o);
        plane.iter_mut().for_each(|y| *y = bias[o]);
        for c in 0..cin {
            let a = weights[o * cin + c];
            for (y, &x) in plane.iter_mut().zip(input.plane(c)) {
                *y += a * x;
            }
        }
    }
    out
}

/// Accumulates weight and bias gradients, returns the input gradient.
fn dense_backward(input: &Planes, weights: &[f64], grad_out: &Planes, gw: &mut [f64], gb: &mut [f64]) -> Planes {
    let cin = input.channels();
    let outputs = grad_out.channels();
    let mut gx = Planes::zeros(input.height(), input.width(), cin);
    for o in 0..outputs {
        let g = grad_out.plane(o);
        gb[o] += g.iter().sum::<f64>();
        for c in 0..cin {
            let x = input.plane(c);
            gw[o * cin + c] += g.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            let a = weights[o * cin + c];
            for (dx, &go) in gx.plane_mut(c).iter_mut().zip(g) {
                *dx += a * go;
            }
        }
    }
    gx
}

/// Same-padded `k×k` convolution; kernel indexed `[out][in][row][col]`.
fn conv(input: &Planes, kernel: &[f64], bias: &[f64], outputs: usize, k: usize) -> Planes {
    let (h, w, cin) = input.shape();
    let r = (k / 2) as isize;
    let mut out = Planes::zeros(h, w, outputs);
    for j in 0..outputs {
        let plane = out.plane_mut(j);
        plane.iter_mut().for_each(|y| *y = bias[j]);
        for c in 0..cin {
            let x = input.plane(c);
            for a in 0..k {
                for b in 0..k {
                    let wt = kernel[((j * cin + c) * k + a) * k + b];
                    let (da, db) = (a as isize - r, b as isize - r);
                    for_each_tap(h, w, da, db, |dst, src| plane[dst] += wt * x[src]);
                }
            }
        }
    }
    out
}

fn conv_backward(input: &Planes, kernel: &[f64], grad_out: &Planes, k: usize, gk: &mut [f64], gb: &mut [f64]) -> Planes {
    let (h, w, cin) = input.shape();
    let outputs = grad_out.channels();
    let r = (k / 2) as isize;
    let mut gx = Planes::zeros(h, w, cin);
    for (j, bias) in gb.iter_mut().enumerate().take(outputs) {
        let g = grad_out.plane(j);
        *bias += g.iter().sum::<f64>();
        for c in 0..cin {
            let x = input.plane(c);
            for a in 0..k {
                for b in 0..k {
                    let idx = ((j * cin + c) * k + a) * k + b;
                    let (da, db) = (a as isize - r, b as isize - r);
                    let mut acc = 0.0;
                    for_each_tap(h, w, da, db, |dst, src| acc += g[dst] * x[src]);
                    gk[idx] += acc;
                    let wt = kernel[idx];
                    let gxc = gx.plane_mut(c);
                    for_each_tap(h, w, da, db, |dst, src| gxc[src] += wt * g[dst]);
                }
            }
        }
    }
    gx
}

/// Visits `(output pixel, input pixel)` pairs for one kernel offset, skipping
/// taps that fall into the zero padding.
#[inline]
fn for_each_tap(h: usize, w: usize, du: isize, dv: isize, mut f: impl FnMut(usize, usize)) {
    for u in 0..h {
        let su = u as isize + du;
        if su < 0 || su >= h as isize {
            continue;
        }
        for v in 0..w {
            let sv = v as isize + dv;
            if sv < 0 || sv >= w as isize {
                continue;
            }
            f(u * w + v, su as usize * w + sv as usize);
        }
    }
}

/// Cosine annealing: `base · ½ · (1 + cos(π · epoch / total))`.
pub fn cosine_lr(epoch: usize, total_epochs: usize, base_lr: f64) -> Result<f64> {
    ensure!(
        epoch < total_epochs,
        OutOfRange,
        "epoch {epoch} outside 0..{total_epochs}"
    );
    let t = epoch as f64 / total_epochs as f64;
    Ok(base_lr * 0.5 * (1.0 + (std::f64::consts::PI * t).cos()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CheckpointHeader {
    kind: ModelKind,
    dims: ModelDims,
    seed: u64,
    param_count: usize,
    dtype: String,
}

/// Writes `<path>.json` (kind, dims, seed) and `<path>.raw` (f32 parameters).
pub fn save_model(model: &RecoveryModel, path: impl AsRef<Path>) -> Result<()> {
    let (header_path, payload_path) = cube_paths(path.as_ref());
    let header = CheckpointHeader {
        kind: model.kind,
        dims: model.dims,
        seed: model.seed,
        param_count: model.params.len(),
        dtype: "f32le".into(),
    };
    let text = serde_json::to_string_pretty(&header).map_err(|e| Error::json(&header_path, e))?;
    fs::write(&header_path, text).map_err(|e| Error::io(&header_path, e))?;
    let bytes: Vec<u8> = model.params.iter().flat_map(|&p| (p as f32).to_le_bytes()).collect();
    fs::write(&payload_path, bytes).map_err(|e| Error::io(&payload_path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<RecoveryModel> {
    let (header_path, payload_path) = cube_paths(path.as_ref());
    let text = fs::read_to_string(&header_path).map_err(|e| Error::io(&header_path, e))?;
    let header: CheckpointHeader = serde_json::from_str(&text).map_err(|e| Error::json(&header_path, e))?;
    let bytes = fs::read(&payload_path).map_err(|e| Error::io(&payload_path, e))?;
    if bytes.len() != header.param_count * 4 {
        return Err(Error::SizeMismatch {
            expected: header.param_count * 4,
            found: bytes.len(),
        });
    }
    let params = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
        .collect();
    RecoveryModel::from_params(header.kind, header.dims, params, header.seed)
}
