//! Learned selection against the split baseline, the per-pixel search, an
//! RGB-like manual pick and every band.

use bandsel::eval::compare_methods;
use bandsel::hypercube::{split_train_val, synth_dataset, SynthConfig};
use bandsel::recovery::ModelKind;
use bandsel::relax_search::{bilevel_search, spectral_mode_search, SearchConfig};
use bandsel::select::{m_equal_split_search, manual_selection, select_bands, SelectionMethod, SelectionResult};

fn main() -> bandsel::Result<()> {
    let synth = SynthConfig {
        bands: 8,
        noise_sigma: 0.01,
        duplicate_pairs: vec![(2, 3)],
        seed: 1,
        ..SynthConfig::default()
    };
    let data = split_train_val(&synth_dataset(&synth, 16)?, 0.25, 1)?;
    let config = SearchConfig {
        epochs: 40,
        lr_w: 0.1,
        lr_alpha: 10.0,
        model_kind: ModelKind::ConvSpatial,
        batch: 4,
        seed: 1,
        ..SearchConfig::default()
    };
    let m = 3;
    let wl = data.wavelengths_nm();
    let nbs = bilevel_search(&data, &config)?;
    let spectral = spectral_mode_search(&data, &config)?;
    let mut spectral_sel = select_bands(&spectral.priorities(), &spectral.correlation, m, config.beta, wl)?;
    spectral_sel.method = SelectionMethod::Spectral;
    let methods = [
        ("nbs".to_string(), select_bands(&nbs.priorities(), &nbs.correlation, m, config.beta, wl)?),
        ("spectral".to_string(), spectral_sel),
        ("m-equal-split".to_string(), m_equal_split_search(&data, m, &config)?),
        ("manual".to_string(), manual_selection(wl, &[630.0, 530.0, 470.0])?),
        ("all-bands".to_string(), SelectionResult::all_bands(wl)),
    ];
    for row in compare_methods(&data, &methods, config.model_kind, &config)? {
        let r = &row.run.report;
        println!("{:<14} {:<24} MRAE {:.4}  PSNR {:.2} dB", row.method, format!("{:?}", row.run.selection.indices), r.mrae, r.psnr);
    }
    Ok(())
}
