//! Domain types and the pure Fuzzy C-Means mathematics.
//!
//! Every pixel is a scalar intensity normalised into `[0, 1]` by the bit-depth
//! maximum. Distances are 1-D Euclidean, `d_ij = |x_i - c_j|`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when validating that membership rows sum to one.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    pub fn bits(self) -> u32 {
        match self {
            BitDepth::Eight => 8,
            BitDepth::Sixteen => 16,
        }
    }

    /// Largest representable sample, `2^bits - 1`.
    pub fn max_value(self) -> u16 {
        match self {
            BitDepth::Eight => u8::MAX as u16,
            BitDepth::Sixteen => u16::MAX,
        }
    }

    pub fn from_bits(bits: u32) -> Result<Self> {
        match bits {
            8 => Ok(BitDepth::Eight),
            16 => Ok(BitDepth::Sixteen),
            other => Err(Error::UnsupportedFormat(format!("bit depth {other}"))),
        }
    }
}

/// A 2-D grayscale raster stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageGrid {
    width: usize,
    height: usize,
    bit_depth: BitDepth,
    samples: Vec<u16>,
}

impl ImageGrid {
    pub fn new(
        width: usize,
        height: usize,
        bit_depth: BitDepth,
        samples: Vec<u16>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        let n = width
            .checked_mul(height)
            .ok_or_else(|| Error::InvalidImage("dimensions overflow".into()))?;
        if samples.len() != n {
            return Err(Error::InvalidImage(format!(
                "expected {n} samples for {width}x{height}, got {}",
                samples.len()
            )));
        }
        let max = bit_depth.max_value();
        if let Some(pos) = samples.iter().position(|&s| s > max) {
            return Err(Error::InvalidImage(format!(
                "sample {} at index {pos} exceeds {max}",
                samples[pos]
            )));
        }
        Ok(Self {
            width,
            height,
            bit_depth,
            samples,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn bit_depth(&self) -> BitDepth {
        self.bit_depth
    }

    pub fn samples(&self) -> &[u16] {
        &self.samples
    }

    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.samples[y * self.width + x]
    }
}

/// Normalised intensities, one per pixel, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(pos) = values
            .iter()
            .position(|v| !v.is_finite() || !(0.0..=1.0).contains(v))
        {
            return Err(Error::param(
                "features",
                format!("value {} at index {pos} outside [0, 1]", values[pos]),
            ));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `(min, max)` of the features, or `None` when empty.
    pub fn range(&self) -> Option<(f64, f64)> {
        let first = *self.0.first()?;
        Some(
            self.0
                .iter()
                .fold((first, first), |(lo, hi), &v| (lo.min(v), hi.max(v))),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Centroids(Vec<f64>);

impl Centroids {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::param(
                "centroids",
                "at least one centroid is required",
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("centroids", "centroids must be finite"));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Largest absolute per-cluster movement between two centroid sets.
    pub fn max_shift(&self, other: &Centroids) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Dense row-major `rows x cols` storage shared by the matrix newtypes.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    fn from_data(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if cols == 0 {
            return Err(Error::param("matrix", "matrix needs at least one column"));
        }
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                expected: (rows, cols),
                found: (data.len() / cols, cols),
            });
        }
        Ok(Self { rows, cols, data })
    }

    fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::ShapeMismatch {
                expected: (rows.len(), cols),
                found: (rows.len(), bad.len()),
            });
        }
        Self::from_data(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Largest absolute element-wise difference.
    pub fn max_abs_diff(&self, other: &Matrix) -> Result<f64> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.shape(),
                found: other.shape(),
            });
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

macro_rules! matrix_newtype {
    ($name:ident) => {
        impl $name {
            pub fn matrix(&self) -> &Matrix {
                &self.0
            }

            pub fn shape(&self) -> (usize, usize) {
                self.0.shape()
            }

            pub fn rows(&self) -> usize {
                self.0.rows()
            }

            pub fn cols(&self) -> usize {
                self.0.cols()
            }

            pub fn get(&self, i: usize, j: usize) -> f64 {
                self.0.get(i, j)
            }

            pub fn row(&self, i: usize) -> &[f64] {
                self.0.row(i)
            }

            pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
                self.0.iter_rows()
            }
        }
    };
}

/// `d_ij = |x_i - c_j|` for every pixel `i` and cluster `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix(Matrix);
matrix_newtype!(DistanceMatrix);

impl DistanceMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = Matrix::from_rows(rows)?;
        if m.data.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::param(
                "distances",
                "entries must be finite and non-negative",
            ));
        }
        Ok(Self(m))
    }
}

/// Row-stochastic `n x c` matrix of membership degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipMatrix(Matrix);
matrix_newtype!(MembershipMatrix);

impl MembershipMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_matrix(Matrix::from_rows(rows)?)
    }

    pub fn from_data(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Self::from_matrix(Matrix::from_data(rows, cols, data)?)
    }

    fn from_matrix(m: Matrix) -> Result<Self> {
        for (i, row) in m.iter_rows().enumerate() {
            if row.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::param(
                    "memberships",
                    format!("row {i} has entries outside [0, 1]"),
                ));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::param(
                    "memberships",
                    format!("row {i} sums to {sum}"),
                ));
            }
        }
        Ok(Self(m))
    }

    /// Every entry set to `1/c`.
    pub fn uniform(rows: usize, cols: usize) -> Self {
        Self(Matrix {
            rows,
            cols,
            data: vec![1.0 / cols as f64; rows * cols],
        })
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self(Matrix { rows, cols, data })
    }

    pub fn max_abs_diff(&self, other: &MembershipMatrix) -> Result<f64> {
        self.0.max_abs_diff(&other.0)
    }

    pub fn into_data(self) -> Vec<f64> {
        self.0.data
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "values")]
pub enum InitSpec {
    /// `c` values drawn uniformly from the feature range using the seed.
    SeededRandom,
    /// Explicit centroids in raw intensity units (e.g. `[25, 50, 75]` for 8-bit).
    Explicit(Vec<f64>),
}

/// Every algorithm knob in one place.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    pub clusters: usize,
    pub fuzziness: f64,
    /// Exponent on the raw membership during spatial modulation.
    pub p: f64,
    /// Exponent on the spatial function during spatial modulation.
    pub q: f64,
    pub radius: usize,
    pub epsilon: f64,
    pub max_iter: usize,
    pub init: InitSpec,
    pub seed: u64,
}

impl ClusterParams {
    pub const DEFAULT_FUZZINESS: f64 = 2.0;
    pub const DEFAULT_EPSILON: f64 = 1e-5;
    pub const DEFAULT_MAX_ITER: usize = 100;

    pub fn new(clusters: usize) -> Self {
        Self {
            clusters,
            fuzziness: Self::DEFAULT_FUZZINESS,
            p: 1.0,
            q: 1.0,
            radius: 1,
            epsilon: Self::DEFAULT_EPSILON,
            max_iter: Self::DEFAULT_MAX_ITER,
            init: InitSpec::SeededRandom,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.clusters < 1 {
            return Err(Error::param("clusters", "must be at least 1"));
        }
        if !(self.fuzziness.is_finite() && self.fuzziness > 1.0) {
            return Err(Error::param(
                "fuzziness",
                format!("must be > 1, got {}", self.fuzziness),
            ));
        }
        if !(self.p.is_finite() && self.p >= 0.0) {
            return Err(Error::param("p", "must be finite and >= 0"));
        }
        if !(self.q.is_finite() && self.q >= 0.0) {
            return Err(Error::param("q", "must be finite and >= 0"));
        }
        if self.p == 0.0 && self.q == 0.0 {
            return Err(Error::param("p", "p and q cannot both be 0"));
        }
        if self.radius < 1 {
            return Err(Error::param("radius", "must be at least 1"));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::param("epsilon", "must be > 0"));
        }
        if self.max_iter < 1 {
            return Err(Error::param("max_iter", "must be at least 1"));
        }
        if let InitSpec::Explicit(values) = &self.init {
            if values.len() != self.clusters {
                return Err(Error::param(
                    "init",
                    format!(
                        "{} values given for {} clusters",
                        values.len(),
                        self.clusters
                    ),
                ));
            }
            if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::param(
                    "init",
                    "values must be finite and non-negative",
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub objective: f64,
    pub max_delta: f64,
}

/// Per-iteration objective and change, indices strictly increasing from 1.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ObjectiveTrace(Vec<TraceRecord>);

impl ObjectiveTrace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends the next iteration; the index is assigned automatically.
    pub fn push(&mut self, objective: f64, max_delta: f64) {
        let iteration = self.0.len() + 1;
        self.0.push(TraceRecord {
            iteration,
            objective,
            max_delta,
        });
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.0.last()
    }
}

pub fn normalize_intensities(image: &ImageGrid) -> FeatureVector {
    let max = f64::from(image.bit_depth().max_value());
    FeatureVector(
        image
            .samples()
            .iter()
            .map(|&s| f64::from(s) / max)
            .collect(),
    )
}

pub fn distance_matrix(features: &FeatureVector, centroids: &Centroids) -> DistanceMatrix {
    let c = centroids.len();
    let mut data = Vec::with_capacity(features.len() * c);
    for &x in features.values() {
        data.extend(centroids.values().iter().map(|&cj| (x - cj).abs()));
    }
    DistanceMatrix(Matrix {
        rows: features.len(),
        cols: c,
        data,
    })
}

/// Membership update `mu_ij = 1 / sum_k (d_ij / d_ik)^(2/(m-1))`.
///
/// A row with one or more zero distances puts all of its mass on the
/// zero-distance clusters, split equally; this is the limit of the formula
/// as the distance vanishes.
pub fn update_membership(dist: &DistanceMatrix, m: f64) -> MembershipMatrix {
    assert!(m > 1.0, "fuzziness must exceed 1, got {m}");
    let exponent = 2.0 / (m - 1.0);
    let (n, c) = dist.shape();
    let mut data = Vec::with_capacity(n * c);
    for row in dist.iter_rows() {
        let zeros = row.iter().filter(|&&d| d == 0.0).count();
        if zeros > 0 {
            let share = 1.0 / zeros as f64;
            data.extend(row.iter().map(|&d| if d == 0.0 { share } else { 0.0 }));
            continue;
        }
        data.extend(row.iter().map(|&dij| {
            let denom: f64 = row.iter().map(|&dik| (dij / dik).powf(exponent)).sum();
            1.0 / denom
        }));
    }
    MembershipMatrix(Matrix {
        rows: n,
        cols: c,
        data,
    })
}

/// Weighted centroid per cluster, `None` where the column carries no weight.
pub(crate) fn weighted_centroids(
    features: &FeatureVector,
    memberships: &MembershipMatrix,
    m: f64,
) -> Vec<Option<f64>> {
    assert_eq!(
        features.len(),
        memberships.rows(),
        "features and memberships disagree on pixel count"
    );
    let c = memberships.cols();
    let mut num = vec![0.0; c];
    let mut den = vec![0.0; c];
    for (&x, row) in features.values().iter().zip(memberships.iter_rows()) {
        for (j, &mu) in row.iter().enumerate() {
            let w = mu.powf(m);
            num[j] += w * x;
            den[j] += w;
        }
    }
    let (lo, hi) = features.range().unwrap_or((0.0, 0.0));
    num.into_iter()
        .zip(den)
        .map(|(s, w)| (w > 0.0).then(|| (s / w).clamp(lo, hi)))
        .collect()
}

/// Centroid update `c_j = sum_i mu_ij^m x_i / sum_i mu_ij^m`.
///
/// Results are clamped into `[min(x), max(x)]` so rounding can never push a
/// centroid outside the data range.
pub fn update_centroids(
    features: &FeatureVector,
    memberships: &MembershipMatrix,
    m: f64,
) -> Result<Centroids> {
    let values = weighted_centroids(features, memberships, m)
        .into_iter()
        .enumerate()
        .map(|(j, v)| v.ok_or(Error::DegenerateCluster(j)))
        .collect::<Result<Vec<_>>>()?;
    Centroids::new(values)
}

/// Objective `J_m = sum_i sum_j mu_ij^m d_ij^2`.
pub fn objective(dist: &DistanceMatrix, memberships: &MembershipMatrix, m: f64) -> f64 {
    assert_eq!(
        dist.shape(),
        memberships.shape(),
        "objective inputs disagree in shape"
    );
    dist.matrix()
        .as_slice()
        .iter()
        .zip(memberships.matrix().as_slice())
        .map(|(&d, &mu)| mu.powf(m) * d * d)
        .sum()
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;

    fn fv(v: &[f64]) -> FeatureVector {
        FeatureVector::new(v.to_vec()).unwrap()
    }

    fn cents(v: &[f64]) -> Centroids {
        Centroids::new(v.to_vec()).unwrap()
    }

    #[test]
    fn image_grid_rejects_bad_inputs() {
        assert!(ImageGrid::new(0, 3, BitDepth::Eight, vec![]).is_err());
        assert!(ImageGrid::new(2, 2, BitDepth::Eight, vec![0; 3]).is_err());
        assert!(ImageGrid::new(1, 1, BitDepth::Eight, vec![256]).is_err());
        assert!(ImageGrid::new(1, 1, BitDepth::Sixteen, vec![65535]).is_ok());
    }

    #[test]
    fn normalize_examples() {
        let zeros = ImageGrid::new(2, 2, BitDepth::Eight, vec![0; 4]).unwrap();
        assert!(
            normalize_intensities(&zeros)
                .values()
                .iter()
                .all(|&v| v == 0.0)
        );

        let ends = ImageGrid::new(2, 1, BitDepth::Eight, vec![0, 255]).unwrap();
        assert_eq!(normalize_intensities(&ends).values(), &[0.0, 1.0]);

        let one = ImageGrid::new(1, 1, BitDepth::Eight, vec![100]).unwrap();
        let oracle = 100.0_f64 / 255.0;
        assert_eq!(normalize_intensities(&one).values()[0], oracle);
        assert!((oracle - 0.392157).abs() < 5e-7);

        let wide = ImageGrid::new(1, 1, BitDepth::Sixteen, vec![65535]).unwrap();
        assert_eq!(normalize_intensities(&wide).values(), &[1.0]);
    }

    #[test]
    fn distance_examples() {
        let d = distance_matrix(&fv(&[0.5]), &cents(&[0.5]));
        assert_eq!(d.row(0), &[0.0]);

        let d = distance_matrix(&fv(&[0.0]), &cents(&[0.2, 0.8]));
        assert_eq!(d.row(0), &[0.2, 0.8]);

        let d = distance_matrix(&fv(&[0.2, 0.9]), &cents(&[0.0, 1.0]));
        let oracle = [[0.2_f64, 0.8], [0.9, (0.9_f64 - 1.0).abs()]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((d.get(i, j) - oracle[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn membership_examples() {
        let d = DistanceMatrix::from_rows(&[vec![0.4, 0.4]]).unwrap();
        assert_eq!(update_membership(&d, 2.0).row(0), &[0.5, 0.5]);

        let d = DistanceMatrix::from_rows(&[vec![0.0, 0.7]]).unwrap();
        for m in [1.5, 2.0, 3.0] {
            assert_eq!(update_membership(&d, m).row(0), &[1.0, 0.0]);
        }

        // 1 / (1 + 0.25^2) and 1 / (1 + 4^2)
        let d = DistanceMatrix::from_rows(&[vec![0.2, 0.8]]).unwrap();
        let u = update_membership(&d, 2.0);
        assert!((u.get(0, 0) - 16.0 / 17.0).abs() < 1e-15);
        assert!((u.get(0, 1) - 1.0 / 17.0).abs() < 1e-15);
        assert!((u.get(0, 0) - 0.941176).abs() < 5e-7);
        assert!((u.get(0, 1) - 0.058824).abs() < 5e-7);
    }

    #[test]
    fn membership_splits_multiple_zero_distances() {
        let d = DistanceMatrix::from_rows(&[vec![0.0, 0.3, 0.0]]).unwrap();
        assert_eq!(update_membership(&d, 2.0).row(0), &[0.5, 0.0, 0.5]);
    }

    #[test]
    fn centroid_examples() {
        let x = fv(&[0.2, 0.4, 0.9]);
        let u =
            MembershipMatrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let c = update_centroids(&x, &u, 2.0).unwrap();
        assert!((c.values()[0] - 0.3).abs() < 1e-15);
        assert!((c.values()[1] - 0.9).abs() < 1e-15);

        let x = fv(&[0.1, 0.5, 0.6]);
        let u = MembershipMatrix::from_rows(&[vec![1.0], vec![1.0], vec![1.0]]).unwrap();
        let c = update_centroids(&x, &u, 2.0).unwrap();
        assert!((c.values()[0] - 1.2 / 3.0).abs() < 1e-15);

        let x = fv(&[0.0, 1.0]);
        let u = MembershipMatrix::from_rows(&[vec![0.8, 0.2], vec![0.2, 0.8]]).unwrap();
        let c = update_centroids(&x, &u, 2.0).unwrap();
        let oracle = (0.64 * 0.0 + 0.04 * 1.0) / (0.64 + 0.04);
        assert!((c.values()[0] - oracle).abs() < 1e-15);
        assert!((c.values()[0] - 0.058824).abs() < 5e-7);
    }

    #[test]
    fn degenerate_cluster_is_named() {
        let x = fv(&[0.2, 0.4]);
        let u = MembershipMatrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert!(matches!(
            update_centroids(&x, &u, 2.0),
            Err(Error::DegenerateCluster(1))
        ));
    }

    #[test]
    fn objective_examples() {
        let d = DistanceMatrix::from_rows(&[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let u = MembershipMatrix::uniform(2, 2);
        assert_eq!(objective(&d, &u, 2.0), 0.0);

        let d = DistanceMatrix::from_rows(&[vec![0.5]]).unwrap();
        let u = MembershipMatrix::from_rows(&[vec![1.0]]).unwrap();
        assert_eq!(objective(&d, &u, 2.0), 0.25);

        // Two pixels with the d = [0.2, 0.8] row and its mirror image.
        let d = DistanceMatrix::from_rows(&[vec![0.2, 0.8], vec![0.8, 0.2]]).unwrap();
        let u = update_membership(&d, 2.0);
        let mut oracle = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                oracle += u.get(i, j).powi(2) * d.get(i, j).powi(2);
            }
        }
        // 2 * ((16/17)^2 * 0.04 + (1/17)^2 * 0.64) = 2 * 10.88 / 289
        assert!((objective(&d, &u, 2.0) - oracle).abs() < 1e-15);
        assert!((oracle - 21.76 / 289.0).abs() < 1e-15);
    }

    #[test]
    fn params_validation() {
        let mut p = ClusterParams::new(3);
        assert!(p.validate().is_ok());
        p.fuzziness = 1.0;
        assert!(p.validate().is_err());
        p = ClusterParams::new(3);
        p.init = InitSpec::Explicit(vec![1.0, 2.0]);
        assert!(matches!(
            p.validate(),
            Err(Error::InvalidParameter { name: "init", .. })
        ));
        p = ClusterParams::new(3);
        p.p = 0.0;
        p.q = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn trace_indices_start_at_one() {
        let mut t = ObjectiveTrace::new();
        t.push(1.0, 0.5);
        t.push(0.5, 0.1);
        let idx: Vec<_> = t.records().iter().map(|r| r.iteration).collect();
        assert_eq!(idx, vec![1, 2]);
    }
}
