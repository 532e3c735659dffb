//! Band-wise cosine similarity over a training set, with one duplicated band.

use bandsel::correlation::band_correlation;
use bandsel::hypercube::{split_train_val, synth_dataset, SynthConfig};

fn main() -> bandsel::Result<()> {
    let config = SynthConfig {
        bands: 6,
        duplicate_pairs: vec![(1, 4)],
        seed: 2,
        ..SynthConfig::default()
    };
    let data = split_train_val(&synth_dataset(&config, 10)?, 0.2, 2)?;
    let corr = band_correlation(&data.train)?;
    for row in corr.rows() {
        println!("{}", row.iter().map(|c| format!("{c:.3}")).collect::<Vec<_>>().join("  "));
    }
    println!("C[1][4] = {}", corr.get(1, 4));
    Ok(())
}
