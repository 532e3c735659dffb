//! Learn band priorities with the bilevel gate search and watch them evolve.

use bandsel::hypercube::{split_train_val, synth_dataset, SynthConfig};
use bandsel::recovery::ModelKind;
use bandsel::relax_search::{bilevel_search, SearchConfig};

fn main() -> bandsel::Result<()> {
    let synth = SynthConfig {
        bands: 8,
        noise_sigma: 0.01,
        duplicate_pairs: vec![(0, 1)],
        seed: 3,
        ..SynthConfig::default()
    };
    let data = split_train_val(&synth_dataset(&synth, 16)?, 0.25, 3)?;
    let config = SearchConfig {
        epochs: 120,
        lr_w: 0.1,
        lr_alpha: 10.0,
        model_kind: ModelKind::LinearPerPixel,
        batch: 4,
        seed: 3,
        ..SearchConfig::default()
    };
    let result = bilevel_search(&data, &config)?;
    for (epoch, rec) in result.history.iter().enumerate().step_by(20) {
        println!("epoch {epoch:>3}  train {:.4}  val {:.4}  p {:.2?}", rec.train_loss, rec.val_loss, rec.priorities);
    }
    println!("final priorities {:.3?}", result.priorities());
    Ok(())
}
