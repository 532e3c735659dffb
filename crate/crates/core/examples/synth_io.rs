//! Generate a small synthetic dataset, write one cube to disk and read it back.

use bandsel::hypercube::{load_cube, normalize, pixel_spectrum, save_cube, split_train_val, synth_dataset, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = SynthConfig {
        bands: 10,
        height: 12,
        width: 12,
        latents: 3,
        noise_sigma: 0.01,
        duplicate_pairs: vec![(2, 3)],
        seed: 11,
        ..SynthConfig::default()
    };
    let cubes = synth_dataset(&config, 8)?;
    let (h, w, n) = cubes[0].shape();
    println!("{} cubes of {h}x{w}x{n}, bands at {:?} nm", cubes.len(), cubes[0].wavelengths_nm());

    let dir = std::env::temp_dir().join("bandsel-synth-io");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("cube.json");
    save_cube(&cubes[0], &path)?;
    let back = load_cube(&path)?;
    let drift = back.data().iter().zip(cubes[0].data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("round trip through {} drifts by at most {drift:.2e}", path.display());

    let spectrum = pixel_spectrum(&back, 5, 7)?;
    println!("pixel (5, 7): {:.3?}", spectrum.values);
    let peak = normalize(&back)?.data().iter().cloned().fold(0.0, f64::max);
    println!("normalized peak {peak}");

    let split = split_train_val(&cubes, 0.25, config.seed)?;
    println!("train {:?}  val {:?}", split.train.source_indices(), split.val.source_indices());
    Ok(())
}
