//! Reconstruction quality: MRAE (also the training loss), RMSE, PSNR at a
//! fixed peak of 1.0, and PSNR per band.
//!
//! A perfect reconstruction has PSNR `f64::INFINITY`. Aggregates drop those
//! entries from PSNR means and count how many were dropped.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::hypercube::{CubeDataset, SpectralCube};

/// Denominator floor for MRAE.
pub const MRAE_EPS: f64 = 1e-3;

/// Peak signal value assumed by PSNR (cubes are normalized to 1.0).
pub const PSNR_PEAK: f64 = 1.0;

fn check_shapes(gt: &SpectralCube, pred: &SpectralCube) -> Result<()> {
    ensure!(
        gt.shape() == pred.shape(),
        Shape,
        "ground truth {:?} vs prediction {:?}",
        gt.shape(),
        pred.shape()
    );
    Ok(())
}

pub(crate) fn mrae_slices(gt: &[f64], pred: &[f64]) -> f64 {
    let sum: f64 = gt
        .iter()
        .zip(pred)
        .map(|(g, p)| (g - p).abs() / g.abs().max(MRAE_EPS))
        .sum();
    sum / gt.len() as f64
}

pub(crate) fn mse_slices(gt: &[f64], pred: &[f64]) -> f64 {
    let sum: f64 = gt.iter().zip(pred).map(|(g, p)| (g - p) * (g - p)).sum();
    sum / gt.len() as f64
}

pub(crate) fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (PSNR_PEAK * PSNR_PEAK / mse).log10()
    }
}

pub fn mrae(gt: &SpectralCube, pred: &SpectralCube) -> Result<f64> {
    check_shapes(gt, pred)?;
    Ok(mrae_slices(gt.data(), pred.data()))
}

pub fn mse(gt: &SpectralCube, pred: &SpectralCube) -> Result<f64> {
    check_shapes(gt, pred)?;
    Ok(mse_slices(gt.data(), pred.data()))
}

pub fn rmse(gt: &SpectralCube, pred: &SpectralCube) -> Result<f64> {
    Ok(mse(gt, pred)?.sqrt())
}

pub fn psnr(gt: &SpectralCube, pred: &SpectralCube) -> Result<f64> {
    Ok(psnr_from_mse(mse(gt, pred)?))
}

/// Mean squared error of each band plane.
pub fn per_band_mse(gt: &SpectralCube, pred: &SpectralCube) -> Result<Vec<f64>> {
    check_shapes(gt, pred)?;
    Ok((0..gt.bands()).map(|i| mse_slices(gt.band(i), pred.band(i))).collect())
}

pub fn per_wavelength_psnr(gt: &SpectralCube, pred: &SpectralCube) -> Result<Vec<(f64, f64)>> {
    let mses = per_band_mse(gt, pred)?;
    Ok(gt
        .wavelengths_nm()
        .iter()
        .zip(mses)
        .map(|(&wl, m)| (wl, psnr_from_mse(m)))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageMetrics {
    pub image_id: usize,
    pub mrae: f64,
    pub rmse: f64,
    #[serde(with = "inf_sentinel")]
    pub psnr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavelengthPsnr {
    pub wavelength_nm: f64,
    #[serde(with = "inf_sentinel")]
    pub psnr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mrae: f64,
    pub rmse: f64,
    #[serde(with = "inf_sentinel")]
    pub psnr: f64,
    pub per_wavelength_psnr: Vec<WavelengthPsnr>,
    /// Images whose PSNR was infinite and therefore left out of `psnr`.
    pub infinite_psnr_images: usize,
    pub per_image: Vec<ImageMetrics>,
}

impl MetricsReport {
    pub fn has_infinite_psnr(&self) -> bool {
        self.infinite_psnr_images > 0
    }
}

/// Mean of the finite entries; `INFINITY` when every entry is infinite.
fn finite_mean(values: impl IntoIterator<Item = f64>) -> (f64, usize) {
    let (mut sum, mut n, mut skipped) = (0.0, 0usize, 0usize);
    for v in values {
        if v.is_finite() {
            sum += v;
            n += 1;
        } else {
            skipped += 1;
        }
    }
    if n == 0 {
        (f64::INFINITY, skipped)
    } else {
        (sum / n as f64, skipped)
    }
}

/// Per-image metrics averaged over the set.
pub fn aggregate_report(gt_set: &CubeDataset, preds: &[SpectralCube]) -> Result<MetricsReport> {
    aggregate_cubes(gt_set.cubes(), preds)
}

pub fn aggregate_cubes(gts: &[SpectralCube], preds: &[SpectralCube]) -> Result<MetricsReport> {
    ensure!(
        gts.len() == preds.len(),
        Shape,
        "{} ground-truth cubes vs {} predictions",
        gts.len(),
        preds.len()
    );
    ensure!(!gts.is_empty(), Invalid, "no images to aggregate");
    let mut per_image = Vec::with_capacity(gts.len());
    let mut band_psnr: Vec<Vec<f64>> = vec![Vec::with_capacity(gts.len()); gts[0].bands()];
    for (id, (gt, pred)) in gts.iter().zip(preds).enumerate() {
        ensure!(gt.shape() == gts[0].shape(), Shape, "image {id} differs in shape");
        let m = mse(gt, pred)?;
        per_image.push(ImageMetrics {
            image_id: id,
            mrae: mrae_slices(gt.data(), pred.data()),
            rmse: m.sqrt(),
            psnr: psnr_from_mse(m),
        });
        for (i, (_, p)) in per_wavelength_psnr(gt, pred)?.into_iter().enumerate() {
            band_psnr[i].push(p);
        }
    }
    let n = per_image.len() as f64;
    let (psnr, infinite_psnr_images) = finite_mean(per_image.iter().map(|r| r.psnr));
    let per_wavelength_psnr = gts[0]
        .wavelengths_nm()
        .iter()
        .zip(band_psnr)
        .map(|(&wavelength_nm, ps)| WavelengthPsnr {
            wavelength_nm,
            psnr_db: finite_mean(ps).0,
        })
        .collect();
    Ok(MetricsReport {
        mrae: per_image.iter().map(|r| r.mrae).sum::<f64>() / n,
        rmse: per_image.iter().map(|r| r.rmse).sum::<f64>() / n,
        psnr,
        per_wavelength_psnr,
        infinite_psnr_images,
        per_image,
    })
}

/// `image_id,mrae,rmse,psnr`, one row per image.
pub fn write_image_csv(report: &MetricsReport, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["image_id", "mrae", "rmse", "psnr"])?;
    for r in &report.per_image {
        w.write_record([
            r.image_id.to_string(),
            r.mrae.to_string(),
            r.rmse.to_string(),
            r.psnr.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// `wavelength_nm,psnr_db`, one row per band.
pub fn write_per_wavelength_csv(report: &MetricsReport, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["wavelength_nm", "psnr_db"])?;
    for r in &report.per_wavelength_psnr {
        w.write_record([r.wavelength_nm.to_string(), r.psnr_db.to_string()])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// JSON has no infinity; infinite values travel as the string `"inf"`.
pub(crate) mod inf_sentinel {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Str(s) if s == "inf" => Ok(f64::INFINITY),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("expected number or \"inf\", got {s:?}"))),
        }
    }
}
