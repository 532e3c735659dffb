//! Band-wise cosine similarity over a training set.
//!
//! Each band is flattened into one long vector covering every pixel of every
//! training cube, and `C[k][l]` is the cosine of the angle between the two
//! vectors. The diagonal is set to exactly 1.0.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::hypercube::CubeDataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    size: usize,
    values: Vec<f64>,
}

impl CorrelationMatrix {
    /// Checks symmetry, unit diagonal and the `[-1, 1]` range.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let size = rows.len();
        ensure!(size >= 1, Invalid, "empty correlation matrix");
        ensure!(rows.iter().all(|r| r.len() == size), Shape, "correlation matrix must be square");
        let values: Vec<f64> = rows.into_iter().flatten().collect();
        let m = Self { size, values };
        for k in 0..size {
            ensure!(m.get(k, k) == 1.0, Invalid, "diagonal entry {k} is {}, not 1", m.get(k, k));
            for l in 0..size {
                let c = m.get(k, l);
                ensure!(c.is_finite() && c.abs() <= 1.0 + 1e-12, Invalid, "entry ({k},{l}) = {c}");
                ensure!(c == m.get(l, k), Invalid, "matrix not symmetric at ({k},{l})");
            }
        }
        Ok(m)
    }

    pub fn identity(size: usize) -> Self {
        let mut values = vec![0.0; size * size];
        (0..size).for_each(|i| values[i * size + i] = 1.0);
        Self { size, values }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.values[k * self.size + l]
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.size..(k + 1) * self.size]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.size).map(|k| self.row(k).to_vec()).collect()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
        for k in 0..self.size {
            w.write_record(self.row(k).iter().map(|x| x.to_string()))?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Invalid(format!("bad value {s:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::from_rows(rows)
    }
}

pub fn band_correlation(train: &CubeDataset) -> Result<CorrelationMatrix> {
    let n = train.bands();
    let mut gram = vec![0.0; n * n];
    for cube in train.cubes() {
        for k in 0..n {
            let bk = cube.band(k);
            for l in k..n {
                let dot: f64 = bk.iter().zip(cube.band(l)).map(|(a, b)| a * b).sum();
                gram[k * n + l] += dot;
            }
        }
    }
    for k in 0..n {
        if gram[k * n + k] == 0.0 {
            return Err(Error::Invalid(format!("band {k} is zero across the training set")));
        }
    }
    let mut values = vec![0.0; n * n];
    for k in 0..n {
        values[k * n + k] = 1.0;
        for l in k + 1..n {
            // sqrt of the product keeps identical bands at exactly 1.0
            let c = gram[k * n + l] / (gram[k * n + k] * gram[l * n + l]).sqrt();
            let c = c.clamp(-1.0, 1.0);
            values[k * n + l] = c;
            values[l * n + k] = c;
        }
    }
    Ok(CorrelationMatrix { size: n, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypercube::{even_wavelengths, SpectralCube, SplitRole};

    fn dataset(planes: &[&[f64]], h: usize, w: usize) -> CubeDataset {
        let data: Vec<f64> = planes.iter().flat_map(|p| p.iter().copied()).collect();
        let cube = SpectralCube::from_vec(h, w, even_wavelengths(planes.len()), data).unwrap();
        CubeDataset::new(vec![cube], SplitRole::Train).unwrap()
    }

    #[test]
    fn hand_examples() {
        let c = band_correlation(&dataset(&[&[0.3, 0.1], &[0.6, 0.2]], 1, 2)).unwrap();
        assert!((c.get(0, 1) - 1.0).abs() < 1e-15);

        let c = band_correlation(&dataset(&[&[1.0, 0.0], &[0.0, 1.0]], 1, 2)).unwrap();
        assert_eq!(c.get(0, 1), 0.0);

        let c = band_correlation(&dataset(&[&[1.0, 1.0], &[1.0, 0.0]], 1, 2)).unwrap();
        assert!((c.get(0, 1) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(c.get(0, 0), 1.0);
    }

    #[test]
    fn identical_bands_are_exactly_one() {
        let p = [0.137, 0.291, 0.733, 0.5, 0.011, 0.97];
        let c = band_correlation(&dataset(&[&p, &p, &[0.2, 0.1, 0.0, 0.4, 0.3, 0.2]], 2, 3)).unwrap();
        assert_eq!(c.get(0, 1), 1.0);
    }

    #[test]
    fn pools_pixels_across_cubes() {
        // per-image cosines are both 1, pooled cosine is not
        let a = SpectralCube::from_vec(1, 1, even_wavelengths(2), vec![1.0, 1.0]).unwrap();
        let b = SpectralCube::from_vec(1, 1, even_wavelengths(2), vec![1.0, 2.0]).unwrap();
        let set = CubeDataset::new(vec![a, b], SplitRole::Train).unwrap();
        let c = band_correlation(&set).unwrap();
        let expect = 3.0 / (2.0f64.sqrt() * 5.0f64.sqrt());
        assert!((c.get(0, 1) - expect).abs() < 1e-12);
    }

    #[test]
    fn zero_band_is_an_error() {
        assert!(band_correlation(&dataset(&[&[1.0, 2.0], &[0.0, 0.0]], 1, 2)).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let c = band_correlation(&dataset(&[&[1.0, 1.0, 0.2], &[1.0, 0.0, 0.7], &[0.1, 0.5, 0.3]], 1, 3)).unwrap();
        let path = dir.path().join("corr.csv");
        c.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert_eq!(CorrelationMatrix::read_csv(&path).unwrap(), c);
    }

    #[test]
    fn from_rows_validates() {
        assert!(CorrelationMatrix::from_rows(vec![vec![1.0, 0.5], vec![0.4, 1.0]]).is_err());
        assert!(CorrelationMatrix::from_rows(vec![vec![0.9, 0.5], vec![0.5, 1.0]]).is_err());
        assert!(CorrelationMatrix::from_rows(vec![vec![1.0, 1.5], vec![1.5, 1.0]]).is_err());
        assert!(CorrelationMatrix::from_rows(vec![vec![1.0, -0.5], vec![-0.5, 1.0]]).is_ok());
    }
}
