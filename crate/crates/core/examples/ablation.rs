//! Sweep M and β over one set of learned priorities.

use bandsel::eval::ablation_m_beta;
use bandsel::hypercube::{split_train_val, synth_dataset, SynthConfig};
use bandsel::recovery::ModelKind;
use bandsel::relax_search::{bilevel_search, SearchConfig};

fn main() -> bandsel::Result<()> {
    let synth = SynthConfig {
        bands: 10,
        latents: 4,
        noise_sigma: 0.01,
        duplicate_pairs: vec![(4, 5)],
        seed: 9,
        ..SynthConfig::default()
    };
    let data = split_train_val(&synth_dataset(&synth, 16)?, 0.25, 9)?;
    let config = SearchConfig {
        epochs: 80,
        lr_w: 0.1,
        lr_alpha: 10.0,
        model_kind: ModelKind::LinearPerPixel,
        batch: 4,
        seed: 9,
        ..SearchConfig::default()
    };
    let search = bilevel_search(&data, &config)?;
    let rows = ablation_m_beta(&data, &search.priorities(), &search.correlation, &[2, 3, 4, 6], &[0.0, 0.5, 2.0], config.model_kind, &config)?;
    println!("{:>2} {:>4}  {:<20} {:>8} {:>8}", "M", "beta", "bands", "MRAE", "PSNR");
    for row in rows {
        let r = &row.run.report;
        println!("{:>2} {:>4}  {:<20} {:>8.4} {:>8.2}", row.m, row.beta, format!("{:?}", row.run.selection.indices), r.mrae, r.psnr);
    }
    Ok(())
}
