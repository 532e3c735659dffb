//! Compare analytic gradients of every recovery model with central differences.

use bandsel::hypercube::{even_wavelengths, Planes, SpectralCube};
use bandsel::recovery::{ModelDims, ModelKind, RecoveryModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-5;

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
    let diff = norm(&mut a.iter().zip(b).map(|(x, y)| x - y));
    diff / norm(&mut a.iter().copied()).max(norm(&mut b.iter().copied())).max(f64::MIN_POSITIVE)
}

fn main() -> bandsel::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (h, w, cin, n) = (4, 3, 3, 6);
    let input = Planes::from_vec(h, w, cin, (0..h * w * cin).map(|_| rng.random_range(-1.0..1.0)).collect())?;
    let target = SpectralCube::from_vec(h, w, even_wavelengths(n), (0..h * w * n).map(|_| rng.random_range(0.1..1.0)).collect())?;

    for kind in ModelKind::ALL {
        let dims = ModelDims::new(cin, n).with_hidden(4).with_kernel(3);
        let model = RecoveryModel::new(kind, dims, 1)?;
        let analytic = model.loss_and_gradients(&input, &target)?.grad_params;
        let mut p = model.params().to_vec();
        let mut numeric = Vec::with_capacity(p.len());
        for i in 0..p.len() {
            let orig = p[i];
            let mut loss_at = |x: f64| {
                p[i] = x;
                let m = RecoveryModel::from_params(kind, dims, p.clone(), 1)?;
                m.loss_and_gradients(&input, &target).map(|b| b.loss)
            };
            let d = (loss_at(orig + STEP)? - loss_at(orig - STEP)?) / (2.0 * STEP);
            p[i] = orig;
            numeric.push(d);
        }
        println!("{:<16} {:>4} params  relative error {:.2e}", kind.name(), p.len(), rel(&analytic, &numeric));
    }
    Ok(())
}
