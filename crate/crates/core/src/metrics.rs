//! Image and point-cloud comparison: Gaussian fits of feature embeddings,
//! the Fréchet distance between them, paired image errors and cloud
//! statistics.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::cloud_synthesis::SparsifyConfig;
use crate::error::{Error, Result};
use crate::kitti_io::PointCloud;
use crate::polar_grid::PolarGridImage;
use crate::raster::IntensityImage;
use crate::scalar::Real;

/// Eigenvalues down to this (relative to the spectrum scale) count as zero.
const PSD_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianSummary<T: Real> {
    pub mean: DVector<T>,
    pub covariance: DMatrix<T>,
}

impl<T: Real> GaussianSummary<T> {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Sample mean and unbiased covariance of `features` (one vector per row).
pub fn fit_gaussian<T: Real>(features: &DMatrix<T>) -> Result<GaussianSummary<T>> {
    let n = features.nrows();
    if n < 2 {
        return Err(Error::InsufficientSamples(n));
    }
    let mean = features.row_mean().transpose();
    let mut centered = features.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let cov = centered.transpose() * &centered / T::lit((n - 1) as f64);
    let covariance = (&cov + cov.transpose()) * T::lit(0.5);
    Ok(GaussianSummary { mean, covariance })
}

/// Like [`fit_gaussian`] for ragged input; every vector must share one
/// dimension.
pub fn fit_gaussian_vecs<T: Real>(features: &[Vec<T>]) -> Result<GaussianSummary<T>> {
    if features.len() < 2 {
        return Err(Error::InsufficientSamples(features.len()));
    }
    let d = features[0].len();
    if let Some(bad) = features.iter().position(|f| f.len() != d) {
        return Err(Error::Shape(format!(
            "feature {bad} has dimension {}, expected {d}",
            features[bad].len()
        )));
    }
    fit_gaussian(&DMatrix::from_fn(features.len(), d, |r, c| features[r][c]))
}

/// Eigen-decompose a symmetric matrix, clamping tiny negative eigenvalues.
fn psd_eigen<T: Real>(m: &DMatrix<T>) -> Result<SymmetricEigen<T, nalgebra::Dyn>> {
    let sym = (m + m.transpose()) * T::lit(0.5);
    let mut eig = SymmetricEigen::new(sym);
    let scale = eig.eigenvalues.iter().fold(1.0f64, |acc, v| acc.max(v.as_f64().abs()));
    for v in eig.eigenvalues.iter_mut() {
        let x = v.as_f64();
        if x < -PSD_TOLERANCE * scale {
            return Err(Error::NotPsd(x));
        }
        if x < 0.0 {
            *v = T::zero();
        }
    }
    Ok(eig)
}

fn psd_sqrt<T: Real>(m: &DMatrix<T>) -> Result<DMatrix<T>> {
    let eig = psd_eigen(m)?;
    let roots = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| v.sqrt()));
    Ok(&eig.eigenvectors * roots * eig.eigenvectors.transpose())
}

/// Squared Fréchet distance between two Gaussians:
/// `|μa − μb|² + tr(Ca) + tr(Cb) − 2 tr((Ca^½ Cb Ca^½)^½)`.
pub fn frechet_distance<T: Real>(a: &GaussianSummary<T>, b: &GaussianSummary<T>) -> Result<T> {
    let d = a.dim();
    for s in [a, b] {
        if s.covariance.shape() != (s.dim(), s.dim()) {
            return Err(Error::Shape(format!(
                "covariance {:?} does not match mean of length {}",
                s.covariance.shape(),
                s.dim()
            )));
        }
    }
    if b.dim() != d {
        return Err(Error::Shape(format!("dimensions differ: {d} vs {}", b.dim())));
    }
    psd_eigen(&b.covariance)?;
    let root_a = psd_sqrt(&a.covariance)?;
    let inner = &root_a * &b.covariance * &root_a;
    let cross: T = psd_eigen(&inner)?
        .eigenvalues
        .iter()
        .fold(T::zero(), |acc, v| acc + v.sqrt());
    let dm = &a.mean - &b.mean;
    let value = dm.dot(&dm) + a.covariance.trace() + b.covariance.trace() - cross * T::lit(2.0);
    Ok(value.max(T::zero()))
}

/// Mean absolute and root-mean-square error over the cells where `truth`
/// is valid.
pub fn image_error<T: Real>(pred: &IntensityImage<T>, truth: &PolarGridImage<T>) -> Result<(T, T)> {
    pred.check_dims(&truth.intensity, "prediction vs. ground truth")?;
    let mut n = 0usize;
    let (mut abs, mut sq) = (0.0f64, 0.0f64);
    for ((p, t), ok) in pred.data().iter().zip(truth.intensity.data()).zip(truth.valid.data()) {
        if *ok {
            let e = p.as_f64() - t.as_f64();
            abs += e.abs();
            sq += e * e;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::EmptyValidMask);
    }
    Ok((T::lit(abs / n as f64), T::lit((sq / n as f64).sqrt())))
}

/// Equal-width bins over `[min, max)`; values outside land in the first or
/// last bin so the total always equals the number of samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub min: f64,
    pub max: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(min: f64, max: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(max > min) {
            return Err(Error::Config(format!("histogram needs bins > 0 and max > min, got {bins} over [{min}, {max})")));
        }
        Ok(Self {
            min,
            max,
            counts: vec![0; bins],
        })
    }

    pub fn bin_of(&self, v: f64) -> usize {
        let n = self.counts.len();
        let t = (v - self.min) / (self.max - self.min) * n as f64;
        if t.is_nan() || t < 0.0 {
            0
        } else {
            (t as usize).min(n - 1)
        }
    }

    pub fn add(&mut self, v: f64) {
        let b = self.bin_of(v);
        self.counts[b] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Add another histogram with identical binning.
    pub fn merge(&mut self, other: &Histogram) -> Result<()> {
        if (self.min, self.max, self.counts.len()) != (other.min, other.max, other.counts.len()) {
            return Err(Error::Shape("histogram binning differs".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HistogramConfig {
    pub intensity_bins: usize,
    pub range_bins: usize,
    /// Meters; the last range bin also collects everything beyond.
    pub max_range: f64,
}

impl Default for HistogramConfig {
    fn default() -> Self {
        Self {
            intensity_bins: 20,
            range_bins: 24,
            max_range: 120.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloudStats {
    pub point_count: u64,
    /// Points per scan line, line 0 on top.
    pub per_line: Vec<u64>,
    /// Points outside the sensor's vertical field of view.
    pub outside_lines: u64,
    pub intensity: Histogram,
    pub range: Histogram,
}

impl CloudStats {
    pub fn empty(lines: &SparsifyConfig, hist: &HistogramConfig) -> Result<Self> {
        Ok(Self {
            point_count: 0,
            per_line: vec![0; lines.n_lines],
            outside_lines: 0,
            intensity: Histogram::new(0.0, 1.0, hist.intensity_bins)?,
            range: Histogram::new(0.0, hist.max_range, hist.range_bins)?,
        })
    }

    /// Accumulate another batch; order of merging does not matter.
    pub fn merge(&mut self, other: &CloudStats) -> Result<()> {
        if self.per_line.len() != other.per_line.len() {
            return Err(Error::Shape("line counts differ".into()));
        }
        self.point_count += other.point_count;
        self.outside_lines += other.outside_lines;
        for (a, b) in self.per_line.iter_mut().zip(&other.per_line) {
            *a += b;
        }
        self.intensity.merge(&other.intensity)?;
        self.range.merge(&other.range)
    }
}

pub fn cloud_stats<T: Real>(cloud: &PointCloud<T>, lines: &SparsifyConfig) -> Result<CloudStats> {
    cloud_stats_with(cloud, lines, &HistogramConfig::default())
}

pub fn cloud_stats_with<T: Real>(
    cloud: &PointCloud<T>,
    lines: &SparsifyConfig,
    hist: &HistogramConfig,
) -> Result<CloudStats> {
    lines.validate()?;
    let mut stats = CloudStats::empty(lines, hist)?;
    for p in cloud.iter() {
        stats.point_count += 1;
        match lines.line_of(p.elevation()) {
            Some(l) => stats.per_line[l] += 1,
            None => stats.outside_lines += 1,
        }
        stats.intensity.add(p.intensity.as_f64());
        stats.range.add(p.range().as_f64());
    }
    Ok(stats)
}

/// Feature file: u32 count, u32 dimension, then count·dimension f32 values,
/// all little-endian, row-major.
pub fn encode_features(features: &DMatrix<f32>) -> Vec<u8> {
    let (n, d) = features.shape();
    let mut out = Vec::with_capacity(8 + 4 * n * d);
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&(d as u32).to_le_bytes());
    for row in features.row_iter() {
        for v in row.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_features(bytes: &[u8]) -> Result<DMatrix<f32>> {
    if bytes.len() < 8 {
        return Err(Error::MalformedFile("feature file shorter than its header".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes")) as usize;
    let (n, d) = (word(0), word(4));
    let expected = n
        .checked_mul(d)
        .and_then(|v| v.checked_mul(4))
        .and_then(|v| v.checked_add(8))
        .ok_or_else(|| Error::MalformedFile(format!("header {n}x{d} overflows")))?;
    if bytes.len() != expected {
        return Err(Error::MalformedFile(format!(
            "header says {n}x{d} ({expected} bytes), file has {} bytes",
            bytes.len()
        )));
    }
    let values: Vec<f32> = bytes[8..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    Ok(DMatrix::from_row_slice(n, d, &values))
}
