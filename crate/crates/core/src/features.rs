//! Gaussian radial basis maps `φ_l(x) = exp(-‖x - c_l‖² / σ²)`.

use nalgebra::DMatrix;
use rand::seq::index;

use crate::error::{invalid, Result, UpliftError};
use crate::rng::seeded;

pub const DEFAULT_BANDWIDTH: f64 = 25.0;
pub const DEFAULT_BASIS_SIZE: usize = 100;

/// Centers plus a shared bandwidth.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBasis {
    centers: DMatrix<f64>,
    bandwidth: f64,
    requested: usize,
}

impl GaussianBasis {
    pub fn new(centers: DMatrix<f64>, bandwidth: f64) -> Result<Self> {
        if centers.nrows() == 0 {
            return invalid("a basis needs at least one center");
        }
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return invalid(format!("bandwidth must be finite and positive, got {bandwidth}"));
        }
        if centers.iter().any(|v| !v.is_finite()) {
            return invalid("basis centers must be finite");
        }
        let requested = centers.nrows();
        Ok(Self {
            centers,
            bandwidth,
            requested,
        })
    }

    pub fn centers(&self) -> &DMatrix<f64> {
        &self.centers
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Number of basis functions.
    pub fn size(&self) -> usize {
        self.centers.nrows()
    }

    pub fn dim(&self) -> usize {
        self.centers.ncols()
    }

    /// Set when fewer distinct rows were available than the requested count.
    pub fn is_truncated(&self) -> bool {
        self.size() < self.requested
    }

    /// Evaluates every basis function on every row of `x` (rows × size).
    pub fn transform(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.dim() {
            return Err(UpliftError::DimensionMismatch {
                context: "basis transform",
                expected: self.dim(),
                got: x.ncols(),
            });
        }
        let inv_sq = 1.0 / (self.bandwidth * self.bandwidth);
        let d = self.dim();
        Ok(DMatrix::from_fn(x.nrows(), self.size(), |i, l| {
            let mut dist = 0.0;
            for j in 0..d {
                let diff = x[(i, j)] - self.centers[(l, j)];
                dist += diff * diff;
            }
            (-dist * inv_sq).exp()
        }))
    }

    /// Evaluates the basis at a single point.
    pub fn transform_point(&self, x: &[f64]) -> Result<Vec<f64>> {
        let m = DMatrix::from_row_slice(1, x.len(), x);
        Ok(self.transform(&m)?.row(0).iter().copied().collect())
    }
}

fn distinct_rows(features: &DMatrix<f64>) -> Vec<usize> {
    let key = |i: usize| -> Vec<u64> { features.row(i).iter().map(|v| (v + 0.0).to_bits()).collect() };
    let mut order: Vec<usize> = (0..features.nrows()).collect();
    order.sort_by_key(|&i| key(i));
    order.dedup_by_key(|i| key(*i));
    order.sort_unstable();
    order
}

/// Picks `count` distinct training rows as centers, without replacement.
///
/// If fewer distinct rows exist, all of them are used and the returned basis
/// reports `is_truncated()`.
pub fn fit_centers(features: &DMatrix<f64>, count: usize, bandwidth: f64, seed: u64) -> Result<GaussianBasis> {
    if features.nrows() == 0 || features.ncols() == 0 {
        return invalid("cannot choose basis centers from an empty feature matrix");
    }
    if count == 0 {
        return invalid("basis size must be at least 1");
    }
    let rows = distinct_rows(features);
    let take = count.min(rows.len());
    if take < count {
        log::warn!(
            "requested {count} basis centers but only {} distinct rows are available",
            rows.len()
        );
    }
    let mut rng = seeded(seed);
    let chosen = index::sample(&mut rng, rows.len(), take);
    let centers = DMatrix::from_fn(take, features.ncols(), |l, j| features[(rows[chosen.index(l)], j)]);
    let mut basis = GaussianBasis::new(centers, bandwidth)?;
    basis.requested = count;
    Ok(basis)
}
