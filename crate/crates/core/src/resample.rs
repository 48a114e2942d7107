//! Densifies a merged structure cloud into a fixed-size completed cloud.
//!
//! Every structure point gets an equal quota of output points (the first
//! `target_n % m` get one extra). Quotas of partial-region structure points
//! are filled with original partial points, nearest first. Quotas of missing
//! structure points are drawn from `N(mu, max(var, floor))`, each from its
//! own RNG stream, so the result does not depend on evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::envelope::DEFAULT_VARIANCE_FLOOR;
use crate::error::{Error, Result};
use crate::pointcloud::{Point3, PointCloud};
use crate::structure::{StructureCloud, StructurePoint};

/// Output size of a completion.
pub const DEFAULT_OUTPUT_POINTS: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Copied verbatim from the partial input.
    RetainedPartial,
    /// Drawn from a structure point's Gaussian.
    Sampled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionOutput {
    pub cloud: PointCloud,
    pub provenance: Vec<Provenance>,
}

impl CompletionOutput {
    pub fn retained(&self) -> usize {
        self.provenance
            .iter()
            .filter(|p| **p == Provenance::RetainedPartial)
            .count()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct UpsampleParams {
    pub target_n: usize,
    pub seed: u64,
    pub floor: f64,
}

impl UpsampleParams {
    pub fn new(target_n: usize, seed: u64) -> Self {
        Self {
            target_n,
            seed,
            floor: DEFAULT_VARIANCE_FLOOR,
        }
    }
}

/// Quota of output points for each of `m` structure points.
pub fn quotas(target_n: usize, m: usize) -> Vec<usize> {
    let base = target_n / m;
    let extra = target_n % m;
    (0..m).map(|i| base + usize::from(i < extra)).collect()
}

fn gaussian_samples(sp: &StructurePoint, count: usize, floor: f64, seed: u64, stream: u64) -> Vec<Point3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let axes = sp
        .var
        .map(|v| Normal::new(0.0, v.max(floor).sqrt()).expect("finite positive sd"));
    (0..count)
        .map(|_| {
            Point3::new(
                sp.mu.x + axes[0].sample(&mut rng),
                sp.mu.y + axes[1].sample(&mut rng),
                sp.mu.z + axes[2].sample(&mut rng),
            )
        })
        .collect()
}

/// Builds a `target_n`-point cloud from `merged`, whose first `partial_count`
/// structure points describe the observed `partial` cloud and the rest the
/// missing region.
///
/// Partial quotas are filled in structure order: first each structure
/// point's own members (partial points nearest to it), nearest first; any
/// shortfall from the still-unused partial points nearest to it; and only if
/// the partial cloud is exhausted, by sampling.
pub fn upsample(
    merged: &StructureCloud,
    partial_count: usize,
    partial: &PointCloud,
    params: &UpsampleParams,
) -> Result<CompletionOutput> {
    let m = merged.k();
    if m == 0 {
        return Err(Error::InvalidParameter("merged structure is empty".into()));
    }
    if params.target_n < m {
        return Err(Error::InvalidParameter(format!(
            "target of {} points is smaller than {} structure points",
            params.target_n, m
        )));
    }
    if partial_count > m {
        return Err(Error::InvalidParameter(format!(
            "partial count {partial_count} exceeds {m} structure points"
        )));
    }
    if !(params.floor > 0.0) {
        return Err(Error::InvalidParameter("variance floor must be > 0".into()));
    }

    let quota = quotas(params.target_n, m);
    let pts = partial.points();

    // Membership of each partial point among the partial-region structure points.
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); partial_count];
    if partial_count > 0 {
        for (i, p) in pts.iter().enumerate() {
            let owner = (0..partial_count)
                .min_by(|&a, &b| {
                    p.dist2(&merged.points[a].mu)
                        .total_cmp(&p.dist2(&merged.points[b].mu))
                        .then(a.cmp(&b))
                })
                .expect("partial_count > 0");
            members[owner].push(i);
        }
    }

    let by_distance = |mu: &Point3, idx: &mut Vec<usize>| {
        idx.sort_by(|&a, &b| pts[a].dist2(mu).total_cmp(&pts[b].dist2(mu)).then(a.cmp(&b)));
    };

    let mut used = vec![false; pts.len()];
    let mut picked: Vec<Vec<usize>> = vec![Vec::new(); partial_count];
    for s in 0..partial_count {
        let mu = merged.points[s].mu;
        let mut own = std::mem::take(&mut members[s]);
        by_distance(&mu, &mut own);
        for i in own.into_iter().take(quota[s]) {
            used[i] = true;
            picked[s].push(i);
        }
    }
    for s in 0..partial_count {
        let short = quota[s] - picked[s].len();
        if short == 0 {
            continue;
        }
        let mu = merged.points[s].mu;
        let mut free: Vec<usize> = (0..pts.len()).filter(|&i| !used[i]).collect();
        by_distance(&mu, &mut free);
        for i in free.into_iter().take(short) {
            used[i] = true;
            picked[s].push(i);
        }
    }

    let mut out = Vec::with_capacity(params.target_n);
    let mut provenance = Vec::with_capacity(params.target_n);
    for (s, sp) in merged.points.iter().enumerate() {
        let mut need = quota[s];
        if s < partial_count {
            for &i in &picked[s] {
                out.push(pts[i]);
                provenance.push(Provenance::RetainedPartial);
            }
            need -= picked[s].len();
        }
        if need > 0 {
            out.extend(gaussian_samples(sp, need, params.floor, params.seed, s as u64));
            provenance.extend(std::iter::repeat_n(Provenance::Sampled, need));
        }
    }

    let cloud = PointCloud::new(out, format!("{}-completed", partial.id))?;
    Ok(CompletionOutput { cloud, provenance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::pre_gt;
    use crate::retrieval::merge_structure;
    use crate::structure::extract_structure;
    use crate::synth::{half_space_crop, ShapeGenerator, SynthConfig};

    fn shape() -> PointCloud {
        ShapeGenerator::new(SynthConfig::default(), 4).next_shape()
    }

    #[test]
    fn quota_arithmetic() {
        assert_eq!(quotas(2048, 64), vec![32; 64]);
        let q = quotas(10, 4);
        assert_eq!(q, vec![3, 3, 2, 2]);
    }

    #[test]
    fn exact_count_and_retention() {
        let full = shape();
        let crop = half_space_crop(&full, Point3::new(0.0, 0.0, 1.0), 0.5);
        let partial = extract_structure(&crop, 32, 0).unwrap();
        let rest = extract_structure(&full, 64, 0).unwrap();
        let merged = merge_structure(&partial, &rest.points[..32]);
        for n in [64, 1000, 2048, 4096] {
            let out = upsample(&merged, 32, &crop, &UpsampleParams::new(n, 3)).unwrap();
            assert_eq!(out.cloud.len(), n);
            assert_eq!(out.provenance.len(), n);
            for (p, tag) in out.cloud.points().iter().zip(&out.provenance) {
                if *tag == Provenance::RetainedPartial {
                    assert!(crop.points().contains(p));
                }
            }
            let again = upsample(&merged, 32, &crop, &UpsampleParams::new(n, 3)).unwrap();
            assert_eq!(out, again);
        }
    }

    #[test]
    fn no_missing_stays_inside_partial() {
        let full = shape();
        let s = extract_structure(&full, 64, 1).unwrap();
        let out = upsample(&s, 64, &full, &UpsampleParams::new(2048, 0)).unwrap();
        assert_eq!(out.retained(), 2048);
        let mut got: Vec<_> = out
            .cloud
            .points()
            .iter()
            .map(|p| p.to_array().map(f64::to_bits))
            .collect();
        got.sort_unstable();
        got.dedup();
        assert_eq!(got.len(), 2048, "each partial point used once");
    }

    #[test]
    fn zero_variance_samples_hug_center() {
        let mu = Point3::new(0.3, 0.2, 0.1);
        let merged = StructureCloud {
            points: vec![StructurePoint { mu, var: [0.0; 3] }],
            source_id: "m".into(),
        };
        let partial = PointCloud::new(vec![Point3::ORIGIN], "p").unwrap();
        let out = upsample(&merged, 0, &partial, &UpsampleParams::new(500, 42)).unwrap();
        let bound = 5.0 * 1e-6f64.sqrt();
        assert!(out
            .cloud
            .points()
            .iter()
            .all(|p| (*p - mu).to_array().iter().all(|d| d.abs() <= bound)));
        assert_eq!(out.retained(), 0);
    }

    #[test]
    fn rejects_too_small_target() {
        let full = shape();
        let s = extract_structure(&full, 64, 1).unwrap();
        assert!(upsample(&s, 64, &full, &UpsampleParams::new(63, 0)).is_err());
        assert!(upsample(&s, 65, &full, &UpsampleParams::new(100, 0)).is_err());
    }

    #[test]
    fn every_structure_point_is_covered() {
        let full = shape();
        let crop = half_space_crop(&full, Point3::new(1.0, 0.0, 0.0), 0.5);
        let partial = extract_structure(&crop, 32, 0).unwrap();
        let whole = extract_structure(&full, 64, 0).unwrap();
        let merged = merge_structure(&partial, &whole.points[40..]);
        let out = upsample(&merged, 32, &crop, &UpsampleParams::new(2048, 5)).unwrap();
        let max_r2 = merged
            .points
            .iter()
            .map(|s| s.var.iter().sum::<f64>())
            .fold(0.0, f64::max);
        assert!(pre_gt(&merged.centroids(), out.cloud.points()).unwrap() <= max_r2);
    }
}
