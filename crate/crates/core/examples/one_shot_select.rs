//! One search, then selections of every size and several β values without retraining.

use bandsel::hypercube::{split_train_val, synth_dataset, SynthConfig};
use bandsel::recovery::ModelKind;
use bandsel::relax_search::{bilevel_search, SearchConfig};
use bandsel::select::select_multi;

fn main() -> bandsel::Result<()> {
    let synth = SynthConfig {
        bands: 10,
        latents: 4,
        noise_sigma: 0.01,
        duplicate_pairs: vec![(2, 3), (6, 7)],
        seed: 8,
        ..SynthConfig::default()
    };
    let data = split_train_val(&synth_dataset(&synth, 16)?, 0.25, 8)?;
    let config = SearchConfig {
        epochs: 100,
        lr_w: 0.1,
        lr_alpha: 10.0,
        model_kind: ModelKind::LinearPerPixel,
        batch: 4,
        seed: 8,
        ..SearchConfig::default()
    };
    let search = bilevel_search(&data, &config)?;
    let p = search.priorities();
    println!("priorities {p:.3?}");
    let ms: Vec<usize> = (1..data.bands()).collect();
    for beta in [0.0, 0.5, 2.0] {
        println!("beta {beta}");
        for sel in select_multi(&p, &search.correlation, &ms, beta, data.wavelengths_nm())? {
            println!("  M={:<2} {:?}", sel.m, sel.indices);
        }
    }
    Ok(())
}
