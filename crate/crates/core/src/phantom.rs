//! Synthetic ground-truth images, noise injection and segmentation scores.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::engines::LabelMap;
use crate::error::{Error, Result};
use crate::fcm::{BitDepth, ImageGrid};
use crate::spatial::window_indices;

/// Largest cluster count accepted by [`misclassification_rate`].
pub const MAX_MATCHED_CLUSTERS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    /// Horizontal bands split the rows evenly, in declaration order.
    Band,
    /// Disc centred in the image, painted over the bands.
    Disc { radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub shape: Shape,
    pub intensity: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum NoiseModel {
    None,
    /// Fraction of pixels replaced by 0 or the maximum, half each on average.
    Salt(f64),
    /// Additive Gaussian noise, sigma in intensity units.
    Gaussian(f64),
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::None => Ok(()),
            NoiseModel::Salt(f) if (0.0..1.0).contains(&f) => Ok(()),
            NoiseModel::Salt(f) => Err(Error::param(
                "noise",
                format!("salt fraction {f} not in [0, 1)"),
            )),
            NoiseModel::Gaussian(s) if s.is_finite() && s >= 0.0 => Ok(()),
            NoiseModel::Gaussian(s) => {
                Err(Error::param("noise", format!("sigma {s} must be >= 0")))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub width: usize,
    pub height: usize,
    pub regions: Vec<Region>,
    pub noise: NoiseModel,
    pub seed: u64,
}

impl PhantomSpec {
    /// Horizontal bands at the given intensities.
    pub fn bands(
        width: usize,
        height: usize,
        intensities: &[u8],
        noise: NoiseModel,
        seed: u64,
    ) -> Self {
        Self {
            width,
            height,
            regions: intensities
                .iter()
                .map(|&intensity| Region {
                    shape: Shape::Band,
                    intensity,
                })
                .collect(),
            noise,
            seed,
        }
    }

    /// 64x64, bands {60, 120, 200}, 5% salt noise, seed 42.
    pub fn acceptance() -> Self {
        Self::bands(64, 64, &[60, 120, 200], NoiseModel::Salt(0.05), 42)
    }

    pub fn validate(&self) -> Result<()> {
        if self.regions.is_empty() {
            return Err(Error::param(
                "regions",
                "a phantom needs at least one region",
            ));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::param("width", "phantom dimensions must be positive"));
        }
        let bands = self
            .regions
            .iter()
            .filter(|r| r.shape == Shape::Band)
            .count();
        if bands == 0 {
            return Err(Error::param(
                "regions",
                "at least one band is needed to cover the background",
            ));
        }
        if bands > self.height {
            return Err(Error::param(
                "regions",
                format!("{bands} bands do not fit in {} rows", self.height),
            ));
        }
        for (i, a) in self.regions.iter().enumerate() {
            if let Shape::Disc { radius } = a.shape
                && !(radius.is_finite() && radius > 0.0)
            {
                return Err(Error::param(
                    "regions",
                    format!("disc radius {radius} must be positive"),
                ));
            }
            if self.regions[..i].iter().any(|b| b.intensity == a.intensity) {
                return Err(Error::param(
                    "regions",
                    format!("intensity {} used twice", a.intensity),
                ));
            }
        }
        self.noise.validate()
    }
}

/// Paints the regions, then applies the noise model.
///
/// Returns the noisy image and the region index of every pixel.
pub fn generate_phantom(spec: &PhantomSpec) -> Result<(ImageGrid, LabelMap)> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let band_regions: Vec<usize> = spec
        .regions
        .iter()
        .enumerate()
        .filter(|(_, r)| r.shape == Shape::Band)
        .map(|(i, _)| i)
        .collect();

    let mut truth = vec![0usize; w * h];
    for y in 0..h {
        let band = band_regions[y * band_regions.len() / h];
        truth[y * w..(y + 1) * w].fill(band);
    }
    let (cx, cy) = (w as f64 / 2.0, h as f64 / 2.0);
    for (idx, region) in spec.regions.iter().enumerate() {
        if let Shape::Disc { radius } = region.shape {
            for y in 0..h {
                for x in 0..w {
                    let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
                    if dx * dx + dy * dy <= radius * radius {
                        truth[y * w + x] = idx;
                    }
                }
            }
        }
    }

    let samples = truth
        .iter()
        .map(|&r| u16::from(spec.regions[r].intensity))
        .collect();
    let clean = ImageGrid::new(w, h, BitDepth::Eight, samples)?;
    let noisy = add_noise(&clean, &spec.noise, spec.seed)?;
    Ok((noisy, LabelMap::new(w, h, truth)?))
}

pub fn add_noise(image: &ImageGrid, model: &NoiseModel, seed: u64) -> Result<ImageGrid> {
    model.validate()?;
    let max = image.bit_depth().max_value();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = match *model {
        NoiseModel::None => return Ok(image.clone()),
        NoiseModel::Salt(fraction) => image
            .samples()
            .iter()
            .map(|&s| {
                let u: f64 = rng.random();
                if u < fraction / 2.0 {
                    0
                } else if u < fraction {
                    max
                } else {
                    s
                }
            })
            .collect(),
        NoiseModel::Gaussian(sigma) => {
            let normal =
                Normal::new(0.0, sigma).map_err(|e| Error::param("noise", e.to_string()))?;
            image
                .samples()
                .iter()
                .map(|&s| {
                    let v = f64::from(s) + normal.sample(&mut rng);
                    v.round().clamp(0.0, f64::from(max)) as u16
                })
                .collect()
        }
    };
    ImageGrid::new(image.width(), image.height(), image.bit_depth(), samples)
}

/// Smallest fraction of mismatched pixels over all relabelings of `pred`.
pub fn misclassification_rate(pred: &LabelMap, truth: &LabelMap, c: usize) -> Result<f64> {
    if c > MAX_MATCHED_CLUSTERS {
        return Err(Error::UnsupportedSize(format!(
            "label matching supports at most {MAX_MATCHED_CLUSTERS} clusters, got {c}"
        )));
    }
    if (pred.width(), pred.height()) != (truth.width(), truth.height()) {
        return Err(Error::ShapeMismatch {
            expected: (truth.width(), truth.height()),
            found: (pred.width(), pred.height()),
        });
    }
    if let Some(&l) = pred
        .labels()
        .iter()
        .chain(truth.labels())
        .find(|&&l| l >= c)
    {
        return Err(Error::param("labels", format!("label {l} not below {c}")));
    }

    let mut confusion = vec![vec![0usize; c]; c];
    for (&p, &t) in pred.labels().iter().zip(truth.labels()) {
        confusion[p][t] += 1;
    }
    let mut perm: Vec<usize> = (0..c).collect();
    let mut best = 0;
    best_matching(&confusion, &mut perm, 0, &mut best);
    Ok(1.0 - best as f64 / pred.len() as f64)
}

fn best_matching(confusion: &[Vec<usize>], perm: &mut [usize], k: usize, best: &mut usize) {
    if k == perm.len() {
        let agree = perm.iter().enumerate().map(|(p, &t)| confusion[p][t]).sum();
        *best = (*best).max(agree);
        return;
    }
    for i in k..perm.len() {
        perm.swap(k, i);
        best_matching(confusion, perm, k + 1, best);
        perm.swap(k, i);
    }
}

/// Pixels whose label differs from every other pixel in their window.
///
/// A pixel with no neighbours (a 1x1 map) is never counted.
pub fn isolated_pixel_count(labels: &LabelMap, radius: usize) -> usize {
    let (w, h) = (labels.width(), labels.height());
    let ls = labels.labels();
    (0..ls.len())
        .filter(|&i| {
            let window = window_indices(i, w, h, radius);
            window.len() > 1 && window.iter().all(|&k| k == i || ls[k] != ls[i])
        })
        .count()
}
