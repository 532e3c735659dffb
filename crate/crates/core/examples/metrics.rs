//! Score a perturbed reconstruction against ground truth.

use bandsel::hypercube::{synth_dataset, SynthConfig};
use bandsel::metrics::{aggregate_cubes, mrae, per_wavelength_psnr, psnr, rmse};

fn main() -> bandsel::Result<()> {
    let gts = synth_dataset(&SynthConfig::default(), 4)?;
    // a uniform 2% multiplicative error, then one exact copy
    let mut preds: Vec<_> = gts.iter().map(|c| c.scaled(1.02)).collect::<bandsel::Result<_>>()?;
    preds[3] = gts[3].clone();

    let (gt, pred) = (&gts[0], &preds[0]);
    println!("image 0: MRAE {:.4}  RMSE {:.5}  PSNR {:.2} dB", mrae(gt, pred)?, rmse(gt, pred)?, psnr(gt, pred)?);
    for (nm, db) in per_wavelength_psnr(gt, pred)? {
        println!("  {nm:>5.1} nm  {db:6.2} dB");
    }

    let report = aggregate_cubes(&gts, &preds)?;
    println!(
        "set: MRAE {:.4}  RMSE {:.5}  PSNR {:.2} dB over finite images ({} exact)",
        report.mrae, report.rmse, report.psnr, report.infinite_psnr_images
    );
    Ok(())
}
