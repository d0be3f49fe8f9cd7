//! Iteration drivers for K-Means, FCM and SFCM.
//!
//! Each `run_*` function normalises the image, initialises the centroids from
//! [`ClusterParams::init`] and hands over to the matching `*_from` driver. The
//! drivers take explicit initial centroids so several algorithms can share one
//! initialisation.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fcm::{
    self, BitDepth, Centroids, ClusterParams, FeatureVector, ImageGrid, InitSpec, MembershipMatrix,
    ObjectiveTrace,
};
use crate::spatial;

/// Hard cluster index per pixel, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<usize>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, labels: Vec<usize>) -> Result<Self> {
        if width == 0 || height == 0 || labels.len() != width * height {
            return Err(Error::param(
                "labels",
                format!("{} labels for a {width}x{height} map", labels.len()),
            ));
        }
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, x: usize, y: usize) -> usize {
        self.labels[y * self.width + x]
    }

    /// One past the largest label present.
    pub fn label_count(&self) -> usize {
        self.labels.iter().max().map_or(0, |&m| m + 1)
    }

    /// Applies `f` to every label.
    pub fn relabel(&self, f: impl Fn(usize) -> usize) -> Self {
        Self {
            width: self.width,
            height: self.height,
            labels: self.labels.iter().map(|&l| f(l)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Diagnostics {
    /// Random init could not produce `c` distinct centroids.
    pub duplicate_init: bool,
    /// Rows where spatial modulation underflowed and the raw memberships were kept.
    pub modulation_fallbacks: usize,
    /// Centroid updates that found an empty cluster and carried the previous centroid.
    pub carried_centroids: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationResult {
    pub labels: LabelMap,
    pub centroids: Centroids,
    /// `None` for K-Means.
    pub memberships: Option<MembershipMatrix>,
    pub trace: ObjectiveTrace,
    pub iterations_run: usize,
    pub converged: bool,
    pub params: ClusterParams,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitOutcome {
    pub centroids: Centroids,
    pub duplicates: bool,
}

/// Initial centroids in normalised intensity space.
///
/// Explicit lists are given in raw intensity units and are divided by the
/// bit-depth maximum. Random draws are uniform over `[min(x), max(x)]`,
/// returned in ascending order.
pub fn init_centroids(
    params: &ClusterParams,
    features: &FeatureVector,
    bit_depth: BitDepth,
) -> Result<InitOutcome> {
    let c = params.clusters;
    match &params.init {
        InitSpec::Explicit(values) => {
            if values.len() != c {
                return Err(Error::param(
                    "init",
                    format!("{} values given for {c} clusters", values.len()),
                ));
            }
            let max = f64::from(bit_depth.max_value());
            Ok(InitOutcome {
                centroids: Centroids::new(values.iter().map(|v| v / max).collect())?,
                duplicates: false,
            })
        }
        InitSpec::SeededRandom => {
            let (lo, hi) = features
                .range()
                .ok_or_else(|| Error::param("features", "cannot initialise from an empty image"))?;
            let mut distinct: Vec<f64> = features.values().to_vec();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            let mut values: Vec<f64> = (0..c).map(|_| rng.random_range(lo..=hi)).collect();
            values.sort_by(f64::total_cmp);
            let mut duplicates = distinct.len() < c;
            if lo < hi {
                // Exact float collisions are vanishingly rare; redraw a bounded number of times.
                for _ in 0..64 {
                    let mut sorted = values.clone();
                    sorted.dedup();
                    if sorted.len() == c {
                        break;
                    }
                    values = (0..c).map(|_| rng.random_range(lo..=hi)).collect();
                    values.sort_by(f64::total_cmp);
                }
            }
            let mut check = values.clone();
            check.dedup();
            duplicates |= check.len() < c;
            Ok(InitOutcome {
                centroids: Centroids::new(values)?,
                duplicates,
            })
        }
    }
}

fn nearest(x: f64, centroids: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, &c) in centroids.iter().enumerate() {
        let d = (x - c).abs();
        if d < best_d {
            best = j;
            best_d = d;
        }
    }
    best
}

/// Nearest-centroid labels; ties go to the lowest index.
pub fn kmeans_assign(
    features: &FeatureVector,
    centroids: &Centroids,
    width: usize,
    height: usize,
) -> Result<LabelMap> {
    let labels = features
        .values()
        .iter()
        .map(|&x| nearest(x, centroids.values()))
        .collect();
    LabelMap::new(width, height, labels)
}

/// Mean of each cluster's features. An empty cluster keeps its entry from `previous`.
pub fn kmeans_update(
    features: &FeatureVector,
    labels: &LabelMap,
    previous: &Centroids,
) -> Centroids {
    let c = previous.len();
    let mut sums = vec![0.0; c];
    let mut counts = vec![0usize; c];
    for (&x, &l) in features.values().iter().zip(labels.labels()) {
        sums[l] += x;
        counts[l] += 1;
    }
    let values = sums
        .into_iter()
        .zip(counts)
        .zip(previous.values())
        .map(|((s, n), &prev)| if n == 0 { prev } else { s / n as f64 })
        .collect();
    Centroids::new(values).expect("means of finite features are finite")
}

fn within_cluster_ss(features: &FeatureVector, labels: &LabelMap, centroids: &Centroids) -> f64 {
    features
        .values()
        .iter()
        .zip(labels.labels())
        .map(|(&x, &l)| {
            let d = x - centroids.values()[l];
            d * d
        })
        .sum()
}

/// Hard labels by per-pixel argmax; ties go to the lowest index.
pub fn defuzzify(memberships: &MembershipMatrix, width: usize, height: usize) -> Result<LabelMap> {
    let labels = memberships
        .iter_rows()
        .map(|row| {
            let mut best = 0;
            for (j, &mu) in row.iter().enumerate() {
                if mu > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect();
    LabelMap::new(width, height, labels)
}

/// True iff every membership moved by less than `epsilon`.
pub fn converged(prev: &MembershipMatrix, next: &MembershipMatrix, epsilon: f64) -> Result<bool> {
    Ok(prev.max_abs_diff(next)? < epsilon)
}

fn check_inputs(
    features: &FeatureVector,
    width: usize,
    height: usize,
    init: &Centroids,
    params: &ClusterParams,
) -> Result<()> {
    params.validate()?;
    if features.is_empty() || features.len() != width * height {
        return Err(Error::param(
            "features",
            format!("{} features for a {width}x{height} image", features.len()),
        ));
    }
    if init.len() != params.clusters {
        return Err(Error::param(
            "init",
            format!(
                "{} initial centroids for {} clusters",
                init.len(),
                params.clusters
            ),
        ));
    }
    Ok(())
}

/// Lloyd iterations from explicit initial centroids.
///
/// Each iteration assigns labels, recomputes the means and records the
/// within-cluster sum of squares together with the largest centroid
/// movement. Unchanged labels reproduce the same means, so a stable
/// assignment shows up as zero movement and stops the loop.
pub fn kmeans_from(
    features: &FeatureVector,
    width: usize,
    height: usize,
    init: Centroids,
    params: &ClusterParams,
) -> Result<SegmentationResult> {
    check_inputs(features, width, height, &init, params)?;
    let mut centroids = init;
    let mut trace = ObjectiveTrace::new();
    let mut converged = false;
    let mut carried = 0;
    for _ in 0..params.max_iter {
        let labels = kmeans_assign(features, &centroids, width, height)?;
        let next = kmeans_update(features, &labels, &centroids);
        let mut counts = vec![0usize; params.clusters];
        labels.labels().iter().for_each(|&l| counts[l] += 1);
        carried += counts.iter().filter(|&&n| n == 0).count();
        let movement = next.max_shift(&centroids);
        trace.push(within_cluster_ss(features, &labels, &next), movement);
        centroids = next;
        if movement < params.epsilon {
            converged = true;
            break;
        }
    }
    let labels = kmeans_assign(features, &centroids, width, height)?;
    Ok(SegmentationResult {
        labels,
        centroids,
        memberships: None,
        iterations_run: trace.len(),
        trace,
        converged,
        params: params.clone(),
        diagnostics: Diagnostics {
            carried_centroids: carried,
            ..Diagnostics::default()
        },
    })
}

fn fuzzy_loop(
    features: &FeatureVector,
    width: usize,
    height: usize,
    init: Centroids,
    params: &ClusterParams,
    use_spatial: bool,
) -> Result<SegmentationResult> {
    check_inputs(features, width, height, &init, params)?;
    let m = params.fuzziness;
    let mut centroids = init;
    let mut previous = MembershipMatrix::uniform(features.len(), params.clusters);
    let mut trace = ObjectiveTrace::new();
    let mut converged = false;
    let mut diagnostics = Diagnostics::default();

    for _ in 0..params.max_iter {
        let dist = fcm::distance_matrix(features, &centroids);
        let mut memberships = fcm::update_membership(&dist, m);
        if use_spatial {
            let h = spatial::spatial_function(&memberships, width, height, params.radius);
            let modulated = spatial::modulate(&memberships, &h, params.p, params.q)?;
            diagnostics.modulation_fallbacks += modulated.fallback_rows;
            memberships = modulated.memberships;
        }
        let delta = previous.max_abs_diff(&memberships)?;
        trace.push(fcm::objective(&dist, &memberships, m), delta);

        let next: Vec<f64> = fcm::weighted_centroids(features, &memberships, m)
            .into_iter()
            .zip(centroids.values())
            .map(|(v, &prev)| {
                v.unwrap_or_else(|| {
                    diagnostics.carried_centroids += 1;
                    prev
                })
            })
            .collect();
        centroids = Centroids::new(next)?;
        previous = memberships;
        if delta < params.epsilon {
            converged = true;
            break;
        }
    }

    Ok(SegmentationResult {
        labels: defuzzify(&previous, width, height)?,
        centroids,
        memberships: Some(previous),
        iterations_run: trace.len(),
        trace,
        converged,
        params: params.clone(),
        diagnostics,
    })
}

/// FCM from explicit initial centroids.
///
/// Per iteration: distances, membership update, objective, centroid update.
/// The change is measured against the previous membership matrix, which
/// starts as the uniform `1/c` matrix.
pub fn fcm_from(
    features: &FeatureVector,
    width: usize,
    height: usize,
    init: Centroids,
    params: &ClusterParams,
) -> Result<SegmentationResult> {
    fuzzy_loop(features, width, height, init, params, false)
}

/// SFCM from explicit initial centroids: FCM with the fresh memberships
/// re-weighted by their window sums before the centroid update.
pub fn sfcm_from(
    features: &FeatureVector,
    width: usize,
    height: usize,
    init: Centroids,
    params: &ClusterParams,
) -> Result<SegmentationResult> {
    fuzzy_loop(features, width, height, init, params, true)
}

type Driver =
    fn(&FeatureVector, usize, usize, Centroids, &ClusterParams) -> Result<SegmentationResult>;

fn run_with(
    image: &ImageGrid,
    params: &ClusterParams,
    driver: Driver,
) -> Result<SegmentationResult> {
    params.validate()?;
    let features = fcm::normalize_intensities(image);
    let init = init_centroids(params, &features, image.bit_depth())?;
    let mut result = driver(
        &features,
        image.width(),
        image.height(),
        init.centroids,
        params,
    )?;
    result.diagnostics.duplicate_init = init.duplicates;
    Ok(result)
}

pub fn run_kmeans(image: &ImageGrid, params: &ClusterParams) -> Result<SegmentationResult> {
    run_with(image, params, kmeans_from)
}

pub fn run_fcm(image: &ImageGrid, params: &ClusterParams) -> Result<SegmentationResult> {
    run_with(image, params, fcm_from)
}

pub fn run_sfcm(image: &ImageGrid, params: &ClusterParams) -> Result<SegmentationResult> {
    run_with(image, params, sfcm_from)
}
