//! Chamfer distance, Earth Mover's distance and the one-sided Chamfer term.
//!
//! Chamfer uses squared distances; EMD uses plain Euclidean distances.
//! Nearest neighbours are found by brute force.

mod assignment;
pub mod letters;

pub use assignment::{assignment_cost, auction, hungarian};
pub use letters::{counterexample_report, letter_grids, CounterexampleReport, LetterGrids, LETTER_SPACING};

use std::fmt;

use crate::error::{Error, Result};
use crate::pointcloud::{aabb, Point3, PointCloud};

/// Largest cloud size for which [`emd`] solves the assignment exactly.
pub const EMD_EXACT_LIMIT: usize = 256;
/// Auction tolerance beyond [`EMD_EXACT_LIMIT`], relative to the bounding-box
/// diagonal of both clouds. The reported mean distance is within this much of
/// the optimum.
pub const EMD_AUCTION_REL_EPS: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Chamfer,
    Emd,
    PreGt,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Chamfer => "cd",
            Metric::Emd => "emd",
            Metric::PreGt => "pregt",
        }
    }

    pub fn compute(self, a: &PointCloud, b: &PointCloud) -> Result<MetricValue> {
        let value = match self {
            Metric::Chamfer => chamfer(a.points(), b.points())?,
            Metric::Emd => emd(a.points(), b.points())?,
            Metric::PreGt => pre_gt(a.points(), b.points())?,
        };
        Ok(MetricValue { value, metric: self })
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricValue {
    pub value: f64,
    pub metric: Metric,
}

fn mean_nearest_sq(from: &[Point3], to: &[Point3]) -> f64 {
    let total: f64 = from
        .iter()
        .map(|x| to.iter().map(|y| x.dist2(y)).fold(f64::INFINITY, f64::min))
        .sum();
    total / from.len() as f64
}

/// Mean squared distance from each predicted point to its nearest
/// ground-truth point.
pub fn pre_gt(pred: &[Point3], gt: &[Point3]) -> Result<f64> {
    if pred.is_empty() || gt.is_empty() {
        return Err(Error::EmptyCloud);
    }
    Ok(mean_nearest_sq(pred, gt))
}

/// Symmetric Chamfer distance: `pre_gt(a, b) + pre_gt(b, a)`.
pub fn chamfer(a: &[Point3], b: &[Point3]) -> Result<f64> {
    Ok(pre_gt(a, b)? + pre_gt(b, a)?)
}

/// Mean Euclidean distance under the optimal bijection between two clouds
/// of equal size.
pub fn emd(a: &[Point3], b: &[Point3]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if a.len() != b.len() {
        return Err(Error::SizeMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let n = a.len();
    let cost: Vec<f64> = a.iter().flat_map(|x| b.iter().map(move |y| x.dist(y))).collect();
    let cols = if n <= EMD_EXACT_LIMIT {
        hungarian(&cost, n)
    } else {
        let (lo_a, hi_a) = aabb(a)?;
        let (lo_b, hi_b) = aabb(b)?;
        let scale = lo_a.min(&lo_b).dist(&hi_a.max(&hi_b)).max(f64::MIN_POSITIVE);
        auction(&cost, n, EMD_AUCTION_REL_EPS * scale)
    };
    Ok(assignment_cost(&cost, n, &cols) / n as f64)
}
