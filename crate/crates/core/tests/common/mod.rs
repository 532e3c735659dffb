#![allow(dead_code)]

use bandsel::hypercube::{even_wavelengths, Planes, SpectralCube};
use bandsel::recovery::{ModelDims, ModelKind, RecoveryModel};
use bandsel::relax_search::{alpha_l2_penalty, Gating};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOLERANCE: f64 = 1e-4;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_planes(rng: &mut impl Rng, h: usize, w: usize, c: usize, lo: f64, hi: f64) -> Planes {
    let data = (0..h * w * c).map(|_| rng.random_range(lo..hi)).collect();
    Planes::from_vec(h, w, c, data).unwrap()
}

pub fn random_cube(rng: &mut impl Rng, h: usize, w: usize, n: usize) -> SpectralCube {
    let data = (0..h * w * n).map(|_| rng.random_range(0.1..1.0)).collect();
    SpectralCube::from_vec(h, w, even_wavelengths(n), data).unwrap()
}

/// `‖a − b‖₂ / max(‖a‖₂, ‖b‖₂)`, or 0 when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = norm(a).max(norm(b));
    if scale == 0.0 {
        0.0
    } else {
        norm(&diff) / scale
    }
}

pub fn central_difference(x: &[f64], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + FD_STEP;
            let up = f(&probe);
            probe[i] = orig - FD_STEP;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * FD_STEP)
        })
        .collect()
}

/// A random small instance for one model kind.
pub struct GradInstance {
    pub model: RecoveryModel,
    pub input: Planes,
    pub target: SpectralCube,
}

pub fn grad_instance(kind: ModelKind, seed: u64) -> GradInstance {
    let mut r = rng(seed);
    let h = r.random_range(1..=4);
    let w = r.random_range(1..=4);
    let n = r.random_range(2..=6);
    let cin = r.random_range(1..=n);
    let dims = ModelDims::new(cin, n)
        .with_hidden(r.random_range(2..=5))
        .with_kernel([1, 3][r.random_range(0..2)]);
    let mut model = RecoveryModel::new(kind, dims, seed).unwrap();
    // nonzero biases so those gradients are exercised away from init
    let params: Vec<f64> = model.params().iter().map(|p| p + r.random_range(-0.2..0.2)).collect();
    model = RecoveryModel::from_params(kind, dims, params, seed).unwrap();
    let input = random_planes(&mut r, h, w, cin, -1.0, 1.0);
    let target = random_cube(&mut r, h, w, n);
    GradInstance { model, input, target }
}

/// Relative errors of (grad_params, grad_input) against central differences.
pub fn model_gradient_errors(inst: &GradInstance) -> (f64, f64) {
    let bundle = inst.model.loss_and_gradients(&inst.input, &inst.target).unwrap();
    let loss_at_params = |p: &[f64]| {
        let m = RecoveryModel::from_params(inst.model.kind(), inst.model.dims(), p.to_vec(), 0).unwrap();
        m.loss_and_gradients(&inst.input, &inst.target).unwrap().loss
    };
    let fd_params = central_difference(inst.model.params(), loss_at_params);
    let (h, w, c) = inst.input.shape();
    let loss_at_input = |x: &[f64]| {
        let input = Planes::from_vec(h, w, c, x.to_vec()).unwrap();
        inst.model.loss_and_gradients(&input, &inst.target).unwrap().loss
    };
    let fd_input = central_difference(inst.input.as_slice(), loss_at_input);
    (
        relative_error(&bundle.grad_params, &fd_params),
        relative_error(bundle.grad_input.as_slice(), &fd_input),
    )
}

/// Relative error of `d(L + penalty)/d logits` through a gating scheme.
pub fn logit_gradient_error<G: Gating>(gates: &G, model: &RecoveryModel, cube: &SpectralCube, l2: f64) -> f64 {
    let logits = gates.logits();
    let input = gates.apply(cube).unwrap();
    let bundle = model.loss_and_gradients(&input, cube).unwrap();
    let (_, pen_grad) = alpha_l2_penalty(&logits, l2);
    let analytic: Vec<f64> = gates
        .logit_gradient(cube, &bundle.grad_input)
        .iter()
        .zip(&pen_grad)
        .map(|(a, b)| a + b)
        .collect();
    let objective = |x: &[f64]| {
        let mut g = gates.clone();
        g.set_logits(x);
        let loss = model.loss_and_gradients(&g.apply(cube).unwrap(), cube).unwrap().loss;
        loss + alpha_l2_penalty(x, l2).0
    };
    relative_error(&analytic, &central_difference(&logits, objective))
}
