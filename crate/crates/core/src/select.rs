//! Turning learned priorities into concrete band choices.
//!
//! [`select_bands`] is the greedy post-processing: repeatedly take the band
//! with the largest working priority, then damp every band `l` by
//! `(1 − C[k][l])^β` so bands similar to the pick `k` fall back. Because the
//! working vector starts from the learned priorities for every requested `M`,
//! one search yields selections of any size.

use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::correlation::CorrelationMatrix;
use crate::error::{ensure, Error, Result};
use crate::hypercube::{Planes, SpectralCube, TrainVal};
use crate::relax_search::{alternating_search, Gating, SearchConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionMethod {
    Nbs,
    Manual,
    MEqualSplit,
    Spectral,
    /// Every band; only used as the diagnostic upper bound in evaluation.
    AllBands,
}

impl SelectionMethod {
    pub fn name(self) -> &'static str {
        match self {
            SelectionMethod::Nbs => "nbs",
            SelectionMethod::Manual => "manual",
            SelectionMethod::MEqualSplit => "m-equal-split",
            SelectionMethod::Spectral => "spectral",
            SelectionMethod::AllBands => "all-bands",
        }
    }
}

impl std::str::FromStr for SelectionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        use SelectionMethod::*;
        [Nbs, Manual, MEqualSplit, Spectral, AllBands]
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown selection method {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub method: SelectionMethod,
    /// In selection order.
    pub indices: Vec<usize>,
    pub wavelengths_nm: Vec<f64>,
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

impl SelectionResult {
    /// Checks `1 ≤ M < N`, range and distinctness.
    pub fn new(method: SelectionMethod, indices: Vec<usize>, wavelengths: &[f64], beta: Option<f64>) -> Result<Self> {
        let n = wavelengths.len();
        check_m(indices.len(), n)?;
        Self::build(method, indices, wavelengths, beta)
    }

    /// The diagnostic selection holding every band in order.
    pub fn all_bands(wavelengths: &[f64]) -> Self {
        let indices: Vec<usize> = (0..wavelengths.len()).collect();
        Self::build(SelectionMethod::AllBands, indices, wavelengths, None).expect("identity selection is valid")
    }

    fn build(method: SelectionMethod, indices: Vec<usize>, wavelengths: &[f64], beta: Option<f64>) -> Result<Self> {
        let n = wavelengths.len();
        for (pos, &i) in indices.iter().enumerate() {
            ensure!(i < n, OutOfRange, "band index {i} >= {n}");
            ensure!(!indices[..pos].contains(&i), Invalid, "band {i} selected twice");
        }
        Ok(Self {
            method,
            wavelengths_nm: indices.iter().map(|&i| wavelengths[i]).collect(),
            m: indices.len(),
            indices,
            beta,
        })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }
}

fn check_m(m: usize, n: usize) -> Result<()> {
    if m < 1 || m >= n {
        return Err(Error::OutOfRange(format!("M = {m} must satisfy 1 <= M < N = {n}")));
    }
    Ok(())
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// `max(0, 1 − clamp01(c))^β` with `0^0 = 1`.
pub fn suppression_factor(c: f64, beta: f64) -> f64 {
    let base = (1.0 - c.clamp(0.0, 1.0)).max(0.0);
    if beta == 0.0 {
        1.0
    } else {
        base.powf(beta)
    }
}

/// Greedy correlation-suppressed selection of `m` bands. Only indices are
/// returned; see [`select_bands`] for a full [`SelectionResult`].
pub fn select_indices(priorities: &[f64], corr: &CorrelationMatrix, m: usize, beta: f64) -> Result<Vec<usize>> {
    let n = priorities.len();
    ensure!(corr.size() == n, Shape, "{n} priorities vs {0}x{0} correlation", corr.size());
    check_m(m, n)?;
    ensure!(beta >= 0.0 && beta.is_finite(), Invalid, "beta must be finite and >= 0");
    ensure!(
        priorities.iter().all(|p| p.is_finite() && *p >= 0.0),
        Invalid,
        "priorities must be finite and nonnegative"
    );

    let mut work = priorities.to_vec();
    let mut picked = vec![false; n];
    let mut picks = Vec::with_capacity(m);
    for _ in 0..m {
        // once every unpicked entry is suppressed to 0, ties must skip picks
        let k = (0..n)
            .filter(|&i| !picked[i])
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if work[b] >= work[i] => Some(b),
                _ => Some(i),
            })
            .expect("M < N leaves an unpicked band");
        picked[k] = true;
        picks.push(k);
        for (l, w) in work.iter_mut().enumerate() {
            *w *= suppression_factor(corr.get(k, l), beta);
        }
        // needed when beta = 0, a no-op otherwise since C[k][k] = 1
        work[k] = 0.0;
    }
    Ok(picks)
}

pub fn select_bands(
    priorities: &[f64],
    corr: &CorrelationMatrix,
    m: usize,
    beta: f64,
    wavelengths: &[f64],
) -> Result<SelectionResult> {
    ensure!(wavelengths.len() == priorities.len(), Shape, "wavelength count differs from band count");
    let picks = select_indices(priorities, corr, m, beta)?;
    SelectionResult::new(SelectionMethod::Nbs, picks, wavelengths, Some(beta))
}

/// Independent selections for every requested `M`, each starting from the
/// learned priorities.
pub fn select_multi(
    priorities: &[f64],
    corr: &CorrelationMatrix,
    ms: &[usize],
    beta: f64,
    wavelengths: &[f64],
) -> Result<Vec<SelectionResult>> {
    ms.iter()
        .map(|&m| select_bands(priorities, corr, m, beta, wavelengths))
        .collect()
}

/// Maps target wavelengths to the nearest bands (ties go to the shorter
/// wavelength).
pub fn manual_selection(wavelengths: &[f64], targets_nm: &[f64]) -> Result<SelectionResult> {
    ensure!(!targets_nm.is_empty(), Invalid, "no target wavelengths");
    ensure!(wavelengths.len() >= 2, Invalid, "need at least 2 bands");
    let (lo, hi) = (wavelengths[0], wavelengths[wavelengths.len() - 1]);
    let mut picks = Vec::with_capacity(targets_nm.len());
    for &t in targets_nm {
        ensure!(
            t >= lo && t <= hi,
            OutOfRange,
            "target {t} nm outside [{lo}, {hi}] nm"
        );
        let mut best = 0;
        for (i, &w) in wavelengths.iter().enumerate() {
            if (w - t).abs() < (wavelengths[best] - t).abs() {
                best = i;
            }
        }
        if picks.contains(&best) {
            return Err(Error::Invalid(format!(
                "target {t} nm resolves to band {best}, already chosen by another target"
            )));
        }
        picks.push(best);
    }
    SelectionResult::new(SelectionMethod::Manual, picks, wavelengths, None)
}

/// `m` contiguous index ranges covering `0..n`; the first `n mod m` ranges
/// are one band longer.
pub fn equal_splits(n: usize, m: usize) -> Result<Vec<Range<usize>>> {
    ensure!(m >= 1 && m <= n, OutOfRange, "cannot split {n} bands into {m} groups");
    let (base, extra) = (n / m, n % m);
    let mut start = 0;
    Ok((0..m)
        .map(|s| {
            let len = base + usize::from(s < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect())
}

/// One logit per band; a softmax inside each split mixes that split's bands
/// into one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitGates {
    splits: Vec<Range<usize>>,
    logits: Vec<f64>,
}

impl SplitGates {
    pub fn uniform(bands: usize, m: usize) -> Result<Self> {
        Ok(Self {
            splits: equal_splits(bands, m)?,
            logits: vec![0.0; bands],
        })
    }

    pub fn from_logits(logits: Vec<f64>, m: usize) -> Result<Self> {
        Ok(Self {
            splits: equal_splits(logits.len(), m)?,
            logits,
        })
    }

    pub fn splits(&self) -> &[Range<usize>] {
        &self.splits
    }

    /// Softmax weight of every band within its own split.
    pub fn weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.logits.len()];
        for r in &self.splits {
            let top = self.logits[r.clone()].iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let exps: Vec<f64> = self.logits[r.clone()].iter().map(|x| (x - top).exp()).collect();
            let z: f64 = exps.iter().sum();
            for (i, e) in r.clone().zip(exps) {
                w[i] = e / z;
            }
        }
        w
    }

    /// Per split, the band with the largest weight (lowest index on ties).
    pub fn winners(&self) -> Vec<usize> {
        let w = self.weights();
        self.splits.iter().map(|r| r.start + argmax(&w[r.clone()])).collect()
    }
}

impl Gating for SplitGates {
    fn channels(&self) -> usize {
        self.splits.len()
    }

    fn apply(&self, cube: &SpectralCube) -> Result<Planes> {
        ensure!(cube.bands() == self.logits.len(), Shape, "split gates sized for {} bands", self.logits.len());
        let w = self.weights();
        let mut out = Planes::zeros(cube.height(), cube.width(), self.splits.len());
        for (s, r) in self.splits.iter().enumerate() {
            let plane = out.plane_mut(s);
            for i in r.clone() {
                for (y, &x) in plane.iter_mut().zip(cube.band(i)) {
                    *y += w[i] * x;
                }
            }
        }
        Ok(out)
    }

    fn logit_gradient(&self, cube: &SpectralCube, grad_input: &Planes) -> Vec<f64> {
        let w = self.weights();
        let mut grad = vec![0.0; self.logits.len()];
        for (s, r) in self.splits.iter().enumerate() {
            let gs = grad_input.plane(s);
            let dw: Vec<f64> = r
                .clone()
                .map(|i| gs.iter().zip(cube.band(i)).map(|(a, b)| a * b).sum())
                .collect();
            let mean: f64 = r.clone().zip(&dw).map(|(i, d)| w[i] * d).sum();
            for (i, d) in r.clone().zip(&dw) {
                grad[i] = w[i] * (d - mean);
            }
        }
        grad
    }

    fn logits(&self) -> Vec<f64> {
        self.logits.clone()
    }

    fn set_logits(&mut self, logits: &[f64]) {
        self.logits.copy_from_slice(logits);
    }

    fn priorities(&self) -> Vec<f64> {
        self.weights()
    }
}

/// The M-equal-split baseline: trains split gates with the alternating loop
/// and returns each split's winner in split order. Has to be rerun for every
/// `M`.
pub fn m_equal_split_search(data: &TrainVal, m: usize, config: &SearchConfig) -> Result<SelectionResult> {
    let n = data.bands();
    ensure!(m >= 2 && m < n, OutOfRange, "M = {m} must satisfy 2 <= M < N = {n}");
    let out = alternating_search(data, config, config.model_kind, SplitGates::uniform(n, m)?)?;
    SelectionResult::new(SelectionMethod::MEqualSplit, out.gates.winners(), data.wavelengths_nm(), None)
}
