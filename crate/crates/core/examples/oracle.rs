//! Exhaustive least-squares reference and where a learned selection ranks in it.

use bandsel::hypercube::{split_train_val, synth_dataset, SynthConfig};
use bandsel::oracle::{exhaustive_search, score_combination};
use bandsel::recovery::ModelKind;
use bandsel::relax_search::{bilevel_search, SearchConfig};
use bandsel::select::select_bands;

fn main() -> bandsel::Result<()> {
    let synth = SynthConfig {
        bands: 10,
        noise_sigma: 0.01,
        duplicate_pairs: vec![(0, 1)],
        seed: 6,
        ..SynthConfig::default()
    };
    let data = split_train_val(&synth_dataset(&synth, 16)?, 0.25, 6)?;
    let config = SearchConfig {
        epochs: 100,
        lr_w: 0.1,
        lr_alpha: 10.0,
        model_kind: ModelKind::LinearPerPixel,
        batch: 4,
        seed: 6,
        ..SearchConfig::default()
    };
    let search = bilevel_search(&data, &config)?;
    for m in 2..=4 {
        let ranking = exhaustive_search(&data, m)?;
        let sel = select_bands(&search.priorities(), &search.correlation, m, config.beta, data.wavelengths_nm())?;
        let ours = score_combination(&data, &sel.indices)?;
        let rank = ranking.iter().position(|s| s.indices == ours.indices).unwrap() + 1;
        println!(
            "M={m}: best {:?} val RMSE {:.5} | selected {:?} val RMSE {:.5}, rank {rank} of {}",
            ranking[0].indices,
            ranking[0].val_error,
            ours.indices,
            ours.val_error,
            ranking.len()
        );
    }
    Ok(())
}
