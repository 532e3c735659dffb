//! Brute-force reference for band selection at small `N`.
//!
//! Every `M`-band combination is scored by closed-form linear recovery:
//! ridge least squares `min Σ‖A·x + b − y‖² + λ‖A‖²` over all training pixels,
//! solved through the normal equations. Centered cross products over all
//! bands are accumulated once; each combination solves on its sub-block.

use std::path::Path;

use itertools::Itertools;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::hypercube::{CubeDataset, Planes, TrainVal};
use crate::recovery::{ModelDims, ModelKind, RecoveryModel};

pub const RIDGE_LAMBDA: f64 = 1e-8;

/// Upper bound on the number of combinations `exhaustive_search` will fit.
pub const MAX_COMBINATIONS: u128 = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComboScore {
    /// Sorted ascending.
    pub indices: Vec<usize>,
    pub train_error: f64,
    pub val_error: f64,
}

/// Band means and centered cross products over every training pixel, for all
/// `N` bands at once. Centering leaves the minimizer unchanged (the intercept
/// is not penalized) and keeps the normal equations well conditioned.
#[derive(Debug, Clone)]
pub struct GramCache {
    bands: usize,
    means: Vec<f64>,
    scatter: DMatrix<f64>,
}

impl GramCache {
    pub fn new(train: &CubeDataset) -> Self {
        let n = train.bands();
        let pixels: usize = train.cubes().iter().map(|c| c.height() * c.width()).sum();
        let means: Vec<f64> = (0..n)
            .map(|k| train.cubes().iter().map(|c| c.band(k).iter().sum::<f64>()).sum::<f64>() / pixels as f64)
            .collect();
        let mut scatter = DMatrix::<f64>::zeros(n, n);
        for cube in train.cubes() {
            let centered: Vec<Vec<f64>> = (0..n)
                .map(|k| cube.band(k).iter().map(|x| x - means[k]).collect())
                .collect();
            for k in 0..n {
                for l in k..n {
                    let dot: f64 = centered[k].iter().zip(&centered[l]).map(|(a, b)| a * b).sum();
                    scatter[(k, l)] += dot;
                }
            }
        }
        for k in 0..n {
            for l in 0..k {
                scatter[(k, l)] = scatter[(l, k)];
            }
        }
        Self { bands: n, means, scatter }
    }

    /// Ridge solution for one band subset as a linear per-pixel model.
    pub fn fit(&self, bands: &[usize]) -> Result<RecoveryModel> {
        let n = self.bands;
        ensure!(!bands.is_empty(), Invalid, "no bands to fit from");
        ensure!(bands.iter().all(|&b| b < n), OutOfRange, "band index beyond {n}");
        let m = bands.len();
        let mut lhs = DMatrix::<f64>::zeros(m, m);
        for (i, &ri) in bands.iter().enumerate() {
            for (j, &rj) in bands.iter().enumerate() {
                lhs[(i, j)] = self.scatter[(ri, rj)];
            }
            lhs[(i, i)] += RIDGE_LAMBDA;
        }
        let rhs = DMatrix::<f64>::from_fn(m, n, |i, o| self.scatter[(bands[i], o)]);
        let coef = match lhs.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => lhs
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::Singular(format!("normal equations for bands {bands:?}")))?,
        };
        if coef.iter().any(|x| !x.is_finite()) {
            return Err(Error::Singular(format!("non-finite solution for bands {bands:?}")));
        }
        let mut params = vec![0.0; n * m + n];
        for o in 0..n {
            for c in 0..m {
                params[o * m + c] = coef[(c, o)];
            }
            let fitted: f64 = (0..m).map(|c| coef[(c, o)] * self.means[bands[c]]).sum();
            params[n * m + o] = self.means[o] - fitted;
        }
        RecoveryModel::from_params(ModelKind::LinearPerPixel, ModelDims::new(m, n), params, 0)
    }
}

/// Fits ridge-regularized linear recovery of every band from `bands`.
pub fn linear_lsq_recovery(train: &CubeDataset, bands: &[usize]) -> Result<RecoveryModel> {
    GramCache::new(train).fit(bands)
}

/// Extracts the listed band planes as model input channels.
pub fn band_input(cube: &crate::hypercube::SpectralCube, bands: &[usize]) -> Result<Planes> {
    let mut out = Planes::zeros(cube.height(), cube.width(), bands.len());
    for (c, &b) in bands.iter().enumerate() {
        ensure!(b < cube.bands(), OutOfRange, "band {b} of {}", cube.bands());
        out.plane_mut(c).copy_from_slice(cube.band(b));
    }
    Ok(out)
}

/// RMSE pooled over every entry of every cube in the set.
pub fn recovery_rmse(model: &RecoveryModel, set: &CubeDataset, bands: &[usize]) -> Result<f64> {
    let mut sq = 0.0;
    let mut count = 0usize;
    for cube in set.cubes() {
        let pred = model.forward(&band_input(cube, bands)?)?;
        sq += pred
            .as_slice()
            .iter()
            .zip(cube.data())
            .map(|(p, g)| (p - g) * (p - g))
            .sum::<f64>();
        count += cube.data().len();
    }
    Ok((sq / count as f64).sqrt())
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Scores every `m`-combination; ascending by validation RMSE, ties kept in
/// lexicographic combination order.
pub fn exhaustive_search(data: &TrainVal, m: usize) -> Result<Vec<ComboScore>> {
    let n = data.bands();
    ensure!(m >= 1 && m < n, OutOfRange, "M = {m} must satisfy 1 <= M < N = {n}");
    let total = binomial(n, m);
    ensure!(
        total <= MAX_COMBINATIONS,
        Invalid,
        "C({n}, {m}) = {total} combinations exceeds the limit of {MAX_COMBINATIONS}"
    );
    let cache = GramCache::new(&data.train);
    let combos: Vec<Vec<usize>> = (0..n).combinations(m).collect();
    let mut scores = combos
        .into_par_iter()
        .map(|indices| {
            let model = cache.fit(&indices)?;
            Ok(ComboScore {
                train_error: recovery_rmse(&model, &data.train, &indices)?,
                val_error: recovery_rmse(&model, &data.val, &indices)?,
                indices,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    scores.sort_by(|a, b| a.val_error.total_cmp(&b.val_error));
    Ok(scores)
}

/// Scores one specific combination the same way the exhaustive search does.
pub fn score_combination(data: &TrainVal, bands: &[usize]) -> Result<ComboScore> {
    let mut indices = bands.to_vec();
    indices.sort_unstable();
    let model = linear_lsq_recovery(&data.train, &indices)?;
    Ok(ComboScore {
        train_error: recovery_rmse(&model, &data.train, &indices)?,
        val_error: recovery_rmse(&model, &data.val, &indices)?,
        indices,
    })
}

/// `rank,indices,train_rmse,val_rmse`; indices joined with `;`.
pub fn write_ranking_csv(scores: &[ComboScore], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["rank", "indices", "train_rmse", "val_rmse"])?;
    for (rank, s) in scores.iter().enumerate() {
        w.write_record([
            (rank + 1).to_string(),
            s.indices.iter().join(";"),
            s.train_error.to_string(),
            s.val_error.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypercube::{even_wavelengths, split_train_val, Mixing, synth_dataset, SpectralCube, SplitRole, SynthConfig};

    fn rank_k(n: usize, k: usize, seed: u64) -> TrainVal {
        let cfg = SynthConfig {
            bands: n,
            latents: k,
            height: 5,
            width: 5,
            seed,
            ..Default::default()
        };
        split_train_val(&synth_dataset(&cfg, 8).unwrap(), 0.25, seed).unwrap()
    }

    #[test]
    fn all_bands_recover_exactly() {
        let data = rank_k(6, 6, 1);
        let all: Vec<usize> = (0..6).collect();
        let model = linear_lsq_recovery(&data.train, &all).unwrap();
        assert!(recovery_rmse(&model, &data.train, &all).unwrap() <= 1e-6);
    }

    #[test]
    fn single_band_recovers_itself() {
        let data = rank_k(5, 3, 2);
        let model = linear_lsq_recovery(&data.train, &[3]).unwrap();
        // A is N x 1: the diagonal entry for band 3 is its only column, row 3
        assert!((model.params()[3] - 1.0).abs() < 1e-6);
        let cube = &data.train.cubes()[0];
        let pred = model.forward(&band_input(cube, &[3]).unwrap()).unwrap();
        let err = pred.plane(3).iter().zip(cube.band(3)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6);
    }

    #[test]
    fn spanning_bands_give_exact_recovery_on_low_rank_data() {
        let data = rank_k(7, 3, 3);
        let best = exhaustive_search(&data, 3).unwrap();
        assert!(best[0].train_error <= 1e-6, "{:?}", best[0]);
    }

    #[test]
    fn constructed_generators_win() {
        // bands 1 and 3 are fixed combinations of bands 0 and 2
        let wl = even_wavelengths(4);
        let cubes: Vec<_> = (0..6)
            .map(|s| {
                let b0: Vec<f64> = (0..9).map(|p| 0.1 + ((p * 5 + s * 3) % 7) as f64 / 10.0).collect();
                let b2: Vec<f64> = (0..9).map(|p| 0.2 + ((p * 3 + s * 2) % 5) as f64 / 9.0).collect();
                let b1: Vec<f64> = b0.iter().zip(&b2).map(|(a, b)| 0.3 * a + 0.6 * b).collect();
                let b3: Vec<f64> = b0.iter().zip(&b2).map(|(a, b)| 0.8 * a - 0.2 * b + 0.2).collect();
                let data = [b0, b1, b2, b3].concat();
                SpectralCube::from_vec(3, 3, wl.clone(), data).unwrap()
            })
            .collect();
        let data = split_train_val(&cubes, 0.34, 0).unwrap();
        let ranking = exhaustive_search(&data, 2).unwrap();
        assert_eq!(ranking.len(), 6);
        assert_eq!(ranking[0].indices, vec![0, 2]);
        assert!(ranking[0].val_error <= 1e-6);
        assert_eq!(ranking, exhaustive_search(&data, 2).unwrap());
    }

    #[test]
    fn rank_one_data_ties() {
        let data = rank_k(4, 1, 4);
        let ranking = exhaustive_search(&data, 3).unwrap();
        assert!(ranking.iter().all(|s| s.val_error < 1e-6));
    }

    #[test]
    fn guards() {
        let data = rank_k(4, 2, 5);
        assert!(exhaustive_search(&data, 0).is_err());
        assert!(exhaustive_search(&data, 4).is_err());
        assert_eq!(binomial(31, 3), 4495);
        assert_eq!(binomial(40, 20), 137_846_528_820);
    }

    #[test]
    fn duplicate_bands_survive_ridge() {
        let cfg = SynthConfig {
            bands: 5,
            latents: 5,
            mixing: Mixing::Identity,
            duplicate_pairs: vec![(0, 1)],
            seed: 6,
            ..Default::default()
        };
        let set = CubeDataset::new(synth_dataset(&cfg, 4).unwrap(), SplitRole::Train).unwrap();
        let all: Vec<usize> = (0..5).collect();
        let model = linear_lsq_recovery(&set, &all).unwrap();
        assert!(model.params().iter().all(|p| p.is_finite()));
        assert!(recovery_rmse(&model, &set, &all).unwrap() < 1e-6);
    }

    #[test]
    fn ranking_csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let data = rank_k(4, 2, 7);
        let ranking = exhaustive_search(&data, 2).unwrap();
        let path = dir.path().join("oracle.csv");
        write_ranking_csv(&ranking, &path).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("rank,indices,train_rmse,val_rmse"));
        assert!(lines.next().unwrap().starts_with("1,"));
        assert_eq!(text.lines().count(), 7);
    }
}
