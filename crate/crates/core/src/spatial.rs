//! Neighbourhood windows and the spatial re-weighting of memberships.
//!
//! For pixel `i` and cluster `j` the spatial function is the window sum
//! `h_ij = sum_{k in window(i)} mu_kj`. Memberships are then re-weighted as
//! `mu'_ij = mu_ij^p h_ij^q / sum_k mu_ik^p h_ik^q`.

use crate::error::{Error, Result};
use crate::fcm::MembershipMatrix;

/// Row-major indices of the `(2r+1)x(2r+1)` window centred on `idx`,
/// clipped at the borders. The centre pixel is included.
pub fn window_indices(idx: usize, width: usize, height: usize, radius: usize) -> Vec<usize> {
    assert!(
        idx < width * height,
        "pixel {idx} outside {width}x{height} image"
    );
    let (x, y) = (idx % width, idx / width);
    let (x0, x1) = (x.saturating_sub(radius), (x + radius).min(width - 1));
    let (y0, y1) = (y.saturating_sub(radius), (y + radius).min(height - 1));
    let mut out = Vec::with_capacity((x1 - x0 + 1) * (y1 - y0 + 1));
    for yy in y0..=y1 {
        out.extend((x0..=x1).map(|xx| yy * width + xx));
    }
    out
}

/// Window sums of memberships, one per pixel and cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl SpatialMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::param("spatial", "ragged rows"));
        }
        if rows.iter().flatten().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::param(
                "spatial",
                "entries must be finite and non-negative",
            ));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
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
}

pub fn spatial_function(
    memberships: &MembershipMatrix,
    width: usize,
    height: usize,
    radius: usize,
) -> SpatialMatrix {
    let (n, c) = memberships.shape();
    assert_eq!(n, width * height, "membership rows do not match image size");
    let mut data = vec![0.0; n * c];
    for (i, out) in data.chunks_exact_mut(c.max(1)).enumerate() {
        for k in window_indices(i, width, height, radius) {
            for (acc, &mu) in out.iter_mut().zip(memberships.row(k)) {
                *acc += mu;
            }
        }
    }
    SpatialMatrix {
        rows: n,
        cols: c,
        data,
    }
}

/// Output of [`modulate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Modulated {
    pub memberships: MembershipMatrix,
    /// Rows whose weighted mass underflowed to zero and kept their raw memberships.
    pub fallback_rows: usize,
}

pub fn modulate(
    memberships: &MembershipMatrix,
    spatial: &SpatialMatrix,
    p: f64,
    q: f64,
) -> Result<Modulated> {
    if memberships.shape() != spatial.shape() {
        return Err(Error::ShapeMismatch {
            expected: memberships.shape(),
            found: spatial.shape(),
        });
    }
    if !(p >= 0.0 && q >= 0.0) || (p == 0.0 && q == 0.0) {
        return Err(Error::param(
            "p",
            format!("need p, q >= 0 and not both 0, got p={p} q={q}"),
        ));
    }
    // mu^1 h^0 is mu itself and the row already sums to one.
    if p == 1.0 && q == 0.0 {
        return Ok(Modulated {
            memberships: memberships.clone(),
            fallback_rows: 0,
        });
    }

    let (n, c) = memberships.shape();
    let mut data = Vec::with_capacity(n * c);
    let mut fallback_rows = 0;
    let mut weighted = vec![0.0; c];
    for i in 0..n {
        let (mu, h) = (memberships.row(i), spatial.row(i));
        for j in 0..c {
            weighted[j] = mu[j].powf(p) * h[j].powf(q);
        }
        let total: f64 = weighted.iter().sum();
        if total > 0.0 && total.is_finite() {
            data.extend(weighted.iter().map(|w| w / total));
        } else {
            fallback_rows += 1;
            data.extend_from_slice(mu);
        }
    }
    Ok(Modulated {
        memberships: MembershipMatrix::from_raw(n, c, data),
        fallback_rows,
    })
}
