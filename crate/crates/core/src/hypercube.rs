//! Hyperspectral cubes: the in-memory data model, the `.json` + `.raw`
//! band-sequential file pair, normalization, train/validation splitting and
//! the low-rank synthetic generator used throughout the test suite.
//!
//! Data is held at `f64` in band-sequential layout: band 0's full `H×W` plane
//! (row-major), then band 1, and so on. Files store the same layout as
//! little-endian `f32`.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

/// Lowest and highest wavelength assigned to generated cubes, in nm.
pub const SYNTH_WAVELENGTH_RANGE: (f64, f64) = (400.0, 700.0);

/// A dense `H×W×C` tensor stored channel-major (one contiguous plane per
/// channel). Used both for cube payloads and for model inputs and outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Planes {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Planes {
    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Self {
            height,
            width,
            channels,
            data: vec![0.0; height * width * channels],
        }
    }

    pub fn from_vec(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        ensure!(
            data.len() == height * width * channels,
            Shape,
            "{} values cannot fill {height}x{width}x{channels}",
            data.len()
        );
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Pixels per plane.
    #[inline]
    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.pixels();
        &self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn plane_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.pixels();
        &mut self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn get(&self, c: usize, u: usize, v: usize) -> f64 {
        self.data[(c * self.height + u) * self.width + v]
    }

    pub fn same_shape(&self, other: &Planes) -> bool {
        self.height == other.height && self.width == other.width && self.channels == other.channels
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }
}

/// An `H×W×N` reflectance cube with one wavelength per band.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCube {
    planes: Planes,
    wavelengths_nm: Vec<f64>,
}

impl SpectralCube {
    pub fn new(planes: Planes, wavelengths_nm: Vec<f64>) -> Result<Self> {
        ensure!(planes.channels >= 2, Invalid, "a cube needs at least 2 bands, got {}", planes.channels);
        ensure!(planes.height >= 1 && planes.width >= 1, Invalid, "empty spatial extent");
        ensure!(
            wavelengths_nm.len() == planes.channels,
            Shape,
            "{} wavelengths for {} bands",
            wavelengths_nm.len(),
            planes.channels
        );
        check_wavelengths(&wavelengths_nm)?;
        if let Some(pos) = planes.data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("cube value at offset {pos}")));
        }
        Ok(Self {
            planes,
            wavelengths_nm,
        })
    }

    pub fn from_vec(
        height: usize,
        width: usize,
        wavelengths_nm: Vec<f64>,
        data: Vec<f64>,
    ) -> Result<Self> {
        let planes = Planes::from_vec(height, width, wavelengths_nm.len(), data)?;
        Self::new(planes, wavelengths_nm)
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.planes.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.planes.width
    }

    #[inline]
    pub fn bands(&self) -> usize {
        self.planes.channels
    }

    pub fn wavelengths_nm(&self) -> &[f64] {
        &self.wavelengths_nm
    }

    pub fn planes(&self) -> &Planes {
        &self.planes
    }

    pub fn data(&self) -> &[f64] {
        &self.planes.data
    }

    pub fn band(&self, i: usize) -> &[f64] {
        self.planes.plane(i)
    }

    /// `(H, W, N)`
    pub fn shape(&self) -> (usize, usize, usize) {
        self.planes.shape()
    }

    /// Same spatial size, band count and wavelengths.
    pub fn compatible_with(&self, other: &SpectralCube) -> bool {
        self.shape() == other.shape() && self.wavelengths_nm == other.wavelengths_nm
    }

    /// Rewraps a tensor of matching shape as a cube carrying these wavelengths.
    pub fn with_planes(&self, planes: Planes) -> Result<SpectralCube> {
        ensure!(
            planes.shape() == self.shape(),
            Shape,
            "expected {:?}, got {:?}",
            self.shape(),
            planes.shape()
        );
        SpectralCube::new(planes, self.wavelengths_nm.clone())
    }

    /// Multiplies every value by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<SpectralCube> {
        let mut planes = self.planes.clone();
        planes.data.iter_mut().for_each(|x| *x *= factor);
        SpectralCube::new(planes, self.wavelengths_nm.clone())
    }
}

fn check_wavelengths(wl: &[f64]) -> Result<()> {
    ensure!(wl.iter().all(|x| x.is_finite()), NonFinite, "wavelength list");
    ensure!(
        wl.windows(2).all(|w| w[0] < w[1]),
        Invalid,
        "wavelengths must be strictly increasing"
    );
    Ok(())
}

/// The spectrum at one pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelSpectrum {
    pub values: Vec<f64>,
}

/// Spectrum at row `u`, column `v` (0-based).
pub fn pixel_spectrum(cube: &SpectralCube, u: usize, v: usize) -> Result<PixelSpectrum> {
    if u >= cube.height() || v >= cube.width() {
        return Err(Error::OutOfRange(format!(
            "pixel ({u}, {v}) outside {}x{}",
            cube.height(),
            cube.width()
        )));
    }
    let values = (0..cube.bands()).map(|i| cube.planes.get(i, u, v)).collect();
    Ok(PixelSpectrum { values })
}

/// Rescales so the maximum value is exactly 1.0.
pub fn normalize(cube: &SpectralCube) -> Result<SpectralCube> {
    let peak = cube.data().iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
    if peak <= 0.0 {
        // max <= 0 with finite data means there is no positive value to pin to 1.0
        let any_nonzero = cube.data().iter().any(|&x| x != 0.0);
        return Err(Error::Invalid(if any_nonzero {
            "cube has no positive value to normalize against".into()
        } else {
            "cannot normalize an all-zero cube".into()
        }));
    }
    let mut planes = cube.planes.clone();
    planes.data.iter_mut().for_each(|x| *x /= peak);
    SpectralCube::new(planes, cube.wavelengths_nm.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitRole {
    Train,
    Validation,
}

/// A non-empty set of dimensionally identical cubes.
#[derive(Debug, Clone)]
pub struct CubeDataset {
    cubes: Vec<SpectralCube>,
    role: SplitRole,
    /// Position of each cube in the list the split was drawn from.
    source_indices: Vec<usize>,
}

impl CubeDataset {
    pub fn new(cubes: Vec<SpectralCube>, role: SplitRole) -> Result<Self> {
        let idx = (0..cubes.len()).collect();
        Self::with_indices(cubes, role, idx)
    }

    fn with_indices(cubes: Vec<SpectralCube>, role: SplitRole, source_indices: Vec<usize>) -> Result<Self> {
        ensure!(!cubes.is_empty(), Invalid, "empty {role:?} dataset");
        let first = &cubes[0];
        ensure!(
            cubes.iter().all(|c| c.compatible_with(first)),
            Shape,
            "cubes in a dataset must share shape and wavelengths"
        );
        Ok(Self {
            cubes,
            role,
            source_indices,
        })
    }

    pub fn cubes(&self) -> &[SpectralCube] {
        &self.cubes
    }

    pub fn role(&self) -> SplitRole {
        self.role
    }

    pub fn source_indices(&self) -> &[usize] {
        &self.source_indices
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    /// `(H, W, N)` shared by every member.
    pub fn shape(&self) -> (usize, usize, usize) {
        self.cubes[0].shape()
    }

    pub fn bands(&self) -> usize {
        self.cubes[0].bands()
    }

    pub fn wavelengths_nm(&self) -> &[f64] {
        self.cubes[0].wavelengths_nm()
    }

    pub fn map_cubes(&self, f: impl Fn(&SpectralCube) -> Result<SpectralCube>) -> Result<CubeDataset> {
        let cubes = self.cubes.iter().map(f).collect::<Result<Vec<_>>>()?;
        Self::with_indices(cubes, self.role, self.source_indices.clone())
    }
}

/// Train and validation splits of one dataset.
#[derive(Debug, Clone)]
pub struct TrainVal {
    pub train: CubeDataset,
    pub val: CubeDataset,
}

impl TrainVal {
    pub fn new(train: CubeDataset, val: CubeDataset) -> Result<Self> {
        ensure!(
            train.cubes[0].compatible_with(&val.cubes[0]),
            Shape,
            "train and validation cubes differ in shape or wavelengths"
        );
        Ok(Self { train, val })
    }

    pub fn bands(&self) -> usize {
        self.train.bands()
    }

    pub fn wavelengths_nm(&self) -> &[f64] {
        self.train.wavelengths_nm()
    }
}

/// Seeded shuffle, then the first `round(val_fraction · count)` cubes (at
/// least one, at most `count − 1`) go to validation.
pub fn split_train_val(dataset: &[SpectralCube], val_fraction: f64, seed: u64) -> Result<TrainVal> {
    ensure!(dataset.len() >= 2, Invalid, "need at least 2 cubes to split, got {}", dataset.len());
    ensure!(
        val_fraction > 0.0 && val_fraction < 1.0,
        Invalid,
        "val_fraction must be in (0, 1), got {val_fraction}"
    );
    let count = dataset.len();
    let n_val = ((val_fraction * count as f64).round() as usize).clamp(1, count - 1);
    let mut order: Vec<usize> = (0..count).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (val_idx, train_idx) = order.split_at(n_val);
    let pick = |idx: &[usize]| idx.iter().map(|&i| dataset[i].clone()).collect::<Vec<_>>();
    let train = CubeDataset::with_indices(pick(train_idx), SplitRole::Train, train_idx.to_vec())?;
    let val = CubeDataset::with_indices(pick(val_idx), SplitRole::Validation, val_idx.to_vec())?;
    TrainVal::new(train, val)
}

/// How generator bands are mixed from the latent images.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mixing {
    /// Independent `U[0, 1)` weights, shared by every cube in the dataset.
    Random,
    /// Band `i` is latent `i`; requires `latents == bands`.
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub bands: usize,
    pub height: usize,
    pub width: usize,
    pub latents: usize,
    pub noise_sigma: f64,
    #[serde(default)]
    pub duplicate_pairs: Vec<(usize, usize)>,
    pub mixing: Mixing,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            bands: 8,
            height: 8,
            width: 8,
            latents: 3,
            noise_sigma: 0.0,
            duplicate_pairs: Vec::new(),
            mixing: Mixing::Random,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(self.bands >= 2, Invalid, "bands must be >= 2, got {}", self.bands);
        ensure!(self.height >= 1 && self.width >= 1, Invalid, "spatial size must be >= 1");
        ensure!(
            self.latents >= 1 && self.latents <= self.bands,
            Invalid,
            "latents must be in 1..={}, got {}",
            self.bands,
            self.latents
        );
        ensure!(
            self.noise_sigma >= 0.0 && self.noise_sigma.is_finite(),
            Invalid,
            "noise_sigma must be finite and >= 0"
        );
        for &(i, j) in &self.duplicate_pairs {
            ensure!(
                i < self.bands && j < self.bands && i != j,
                Invalid,
                "duplicate pair ({i}, {j}) out of range for {} bands",
                self.bands
            );
        }
        if self.mixing == Mixing::Identity {
            ensure!(self.latents == self.bands, Invalid, "identity mixing needs latents == bands");
        }
        Ok(())
    }

    pub fn wavelengths(&self) -> Vec<f64> {
        even_wavelengths(self.bands)
    }
}

/// `n` wavelengths evenly spaced over 400..=700 nm.
pub fn even_wavelengths(n: usize) -> Vec<f64> {
    let (lo, hi) = SYNTH_WAVELENGTH_RANGE;
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// `bands × latents` mixing matrix, row-major. Rows sum to at most 1 so that
/// latents in `[0, 1]` produce bands in `[0, 1]`.
pub fn mixing_matrix(config: &SynthConfig, rng: &mut impl Rng) -> Vec<f64> {
    let (n, k) = (config.bands, config.latents);
    match config.mixing {
        Mixing::Identity => {
            let mut m = vec![0.0; n * n];
            (0..n).for_each(|i| m[i * n + i] = 1.0);
            m
        }
        Mixing::Random => {
            let mut m: Vec<f64> = (0..n * k).map(|_| rng.random_range(0.0..1.0)).collect();
            let max_row = (0..n)
                .map(|i| m[i * k..(i + 1) * k].iter().sum::<f64>())
                .fold(0.0, f64::max);
            m.iter_mut().for_each(|x| *x /= max_row);
            m
        }
    }
}

/// A smooth positive image with peak exactly 1.0: a few Gaussian blobs over a
/// constant pedestal.
fn latent_image(height: usize, width: usize, rng: &mut impl Rng) -> Vec<f64> {
    let blobs: Vec<(f64, f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.random_range(0.0..height as f64),
                rng.random_range(0.0..width as f64),
                rng.random_range(0.6..2.0) * (height.max(width) as f64 / 3.0).max(0.5),
                rng.random_range(0.3..1.0),
            )
        })
        .collect();
    let pedestal = rng.random_range(0.05..0.3);
    let mut img: Vec<f64> = (0..height * width)
        .map(|p| {
            let (u, v) = ((p / width) as f64, (p % width) as f64);
            pedestal
                + blobs
                    .iter()
                    .map(|&(cu, cv, s, a)| a * (-((u - cu).powi(2) + (v - cv).powi(2)) / (2.0 * s * s)).exp())
                    .sum::<f64>()
        })
        .collect();
    let peak = img.iter().fold(0.0, |m: f64, &x| m.max(x));
    img.iter_mut().for_each(|x| *x /= peak);
    img
}

/// Generates `count` cubes sharing one mixing matrix. Each cube draws its own
/// latent images; bands are mixtures of those latents plus Gaussian noise,
/// duplicate pairs are copied, then values are clipped to `[0, 1]` and the
/// cube is normalized.
pub fn synth_dataset(config: &SynthConfig, count: usize) -> Result<Vec<SpectralCube>> {
    config.validate()?;
    ensure!(count >= 2, Invalid, "count must be >= 2, got {count}");
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mixing = mixing_matrix(config, &mut rng);
    let (n, k) = (config.bands, config.latents);
    let pixels = config.height * config.width;
    let wavelengths = config.wavelengths();

    (0..count)
        .map(|_| {
            let latents: Vec<Vec<f64>> = (0..k)
                .map(|_| latent_image(config.height, config.width, &mut rng))
                .collect();
            let mut data = vec![0.0; n * pixels];
            for i in 0..n {
                let weights = &mixing[i * k..(i + 1) * k];
                let plane = &mut data[i * pixels..(i + 1) * pixels];
                for (p, out) in plane.iter_mut().enumerate() {
                    *out = weights.iter().zip(&latents).map(|(w, l)| w * l[p]).sum();
                }
            }
            for x in data.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *x += config.noise_sigma * z;
            }
            for &(src, dst) in &config.duplicate_pairs {
                let (s, d) = (src * pixels, dst * pixels);
                let copy = data[s..s + pixels].to_vec();
                data[d..d + pixels].copy_from_slice(&copy);
            }
            data.iter_mut().for_each(|x| *x = x.clamp(0.0, 1.0));
            let cube = SpectralCube::from_vec(config.height, config.width, wavelengths.clone(), data)?;
            normalize(&cube)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeHeader {
    pub height: usize,
    pub width: usize,
    pub bands: usize,
    pub wavelengths_nm: Vec<f64>,
    pub dtype: String,
    pub layout: String,
}

pub const CUBE_DTYPE: &str = "f32le";
pub const CUBE_LAYOUT: &str = "bsq";

/// `(header.json, payload.raw)` for a cube path given with or without either
/// extension.
pub fn cube_paths(path: &Path) -> (PathBuf, PathBuf) {
    let base = match path.extension().and_then(|e| e.to_str()) {
        Some("json") | Some("raw") => path.with_extension(""),
        _ => path.to_path_buf(),
    };
    let mut header = base.clone().into_os_string();
    header.push(".json");
    let mut payload = base.into_os_string();
    payload.push(".raw");
    (header.into(), payload.into())
}

pub fn load_cube(path: impl AsRef<Path>) -> Result<SpectralCube> {
    let (header_path, payload_path) = cube_paths(path.as_ref());
    let text = fs::read_to_string(&header_path).map_err(|e| Error::io(&header_path, e))?;
    let header: CubeHeader = serde_json::from_str(&text).map_err(|e| Error::json(&header_path, e))?;
    ensure!(header.dtype == CUBE_DTYPE, Invalid, "unsupported dtype {:?}", header.dtype);
    ensure!(header.layout == CUBE_LAYOUT, Invalid, "unsupported layout {:?}", header.layout);
    ensure!(
        header.wavelengths_nm.len() == header.bands,
        Shape,
        "header lists {} wavelengths for {} bands",
        header.wavelengths_nm.len(),
        header.bands
    );
    check_wavelengths(&header.wavelengths_nm)?;

    let bytes = fs::read(&payload_path).map_err(|e| Error::io(&payload_path, e))?;
    let expected = header.height * header.width * header.bands * 4;
    if bytes.len() != expected {
        return Err(Error::SizeMismatch {
            expected,
            found: bytes.len(),
        });
    }
    let data = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
        .collect();
    SpectralCube::from_vec(header.height, header.width, header.wavelengths_nm, data)
}

pub fn save_cube(cube: &SpectralCube, path: impl AsRef<Path>) -> Result<()> {
    let (header_path, payload_path) = cube_paths(path.as_ref());
    let header = CubeHeader {
        height: cube.height(),
        width: cube.width(),
        bands: cube.bands(),
        wavelengths_nm: cube.wavelengths_nm.clone(),
        dtype: CUBE_DTYPE.into(),
        layout: CUBE_LAYOUT.into(),
    };
    let text = serde_json::to_string_pretty(&header).map_err(|e| Error::json(&header_path, e))?;
    fs::write(&header_path, text).map_err(|e| Error::io(&header_path, e))?;
    let mut bytes = Vec::with_capacity(cube.data().len() * 4);
    for &x in cube.data() {
        bytes.extend_from_slice(&(x as f32).to_le_bytes());
    }
    fs::write(&payload_path, bytes).map_err(|e| Error::io(&payload_path, e))
}
