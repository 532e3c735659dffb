//! The split-softmax baseline: one winner per contiguous group of bands.

use bandsel::hypercube::{split_train_val, synth_dataset, SynthConfig};
use bandsel::recovery::ModelKind;
use bandsel::relax_search::SearchConfig;
use bandsel::select::{equal_splits, m_equal_split_search};

fn main() -> bandsel::Result<()> {
    let synth = SynthConfig {
        bands: 9,
        noise_sigma: 0.01,
        seed: 4,
        ..SynthConfig::default()
    };
    let data = split_train_val(&synth_dataset(&synth, 12)?, 0.25, 4)?;
    let config = SearchConfig {
        epochs: 60,
        lr_w: 0.1,
        lr_alpha: 1.0,
        model_kind: ModelKind::LinearPerPixel,
        batch: 4,
        seed: 4,
        ..SearchConfig::default()
    };
    for m in [2, 3] {
        let sel = m_equal_split_search(&data, m, &config)?;
        println!("M={m} splits {:?} -> bands {:?} at {:?} nm", equal_splits(data.bands(), m)?, sel.indices, sel.wavelengths_nm);
    }
    Ok(())
}
