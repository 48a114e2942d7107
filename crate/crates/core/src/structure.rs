//! K-means clustering and reduction of clusters to structure points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::pointcloud::{Point3, PointCloud};

/// Complete-shape cluster count used throughout.
pub const DEFAULT_K: usize = 64;
pub const DEFAULT_MAX_ITER: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-6;

/// Result of Lloyd's algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Cluster index of each input point, in `0..k`.
    pub labels: Vec<usize>,
    pub centroids: Vec<Point3>,
    /// Sum of squared point-to-centroid distances for the final state.
    pub sse: f64,
    /// SSE after every completed sweep; non-increasing.
    pub sse_trace: Vec<f64>,
}

impl Clustering {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }
}

/// A cluster reduced to its mean and per-axis population variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructurePoint {
    pub mu: Point3,
    pub var: [f64; 3],
}

/// The structure points of one shape.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureCloud {
    pub points: Vec<StructurePoint>,
    pub source_id: String,
}

impl StructureCloud {
    pub fn k(&self) -> usize {
        self.points.len()
    }

    pub fn centroids(&self) -> Vec<Point3> {
        self.points.iter().map(|s| s.mu).collect()
    }
}

fn sse_of(points: &[Point3], labels: &[usize], centroids: &[Point3]) -> f64 {
    points.iter().zip(labels).map(|(p, &l)| p.dist2(&centroids[l])).sum()
}

/// k-means++ seeding: first center uniform, the rest drawn proportional to the
/// squared distance to the nearest chosen center.
fn seed_centroids(points: &[Point3], k: usize, rng: &mut ChaCha8Rng) -> Vec<Point3> {
    let n = points.len();
    let mut centroids = Vec::with_capacity(k);
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    centroids.push(points[first]);
    let mut d2: Vec<f64> = points.iter().map(|p| p.dist2(&points[first])).collect();

    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                acc += w;
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
            pick.expect("positive total weight")
        } else {
            // Every remaining point coincides with a center.
            (0..n).find(|&i| !chosen[i]).expect("k <= n")
        };
        chosen[pick] = true;
        let c = points[pick];
        centroids.push(c);
        for (w, p) in d2.iter_mut().zip(points) {
            *w = w.min(p.dist2(&c));
        }
    }
    centroids
}

fn nearest(p: &Point3, centroids: &[Point3]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centroids.iter().enumerate() {
        let d = p.dist2(c);
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    best
}

/// Gives every empty cluster a point: the point farthest from its own
/// centroid (among clusters that can spare one) becomes the new centroid.
fn repair_empty(points: &[Point3], labels: &mut [usize], centroids: &mut [Point3]) {
    let k = centroids.len();
    let mut counts = vec![0usize; k];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        let mut far = None;
        let mut far_d = -1.0;
        for (i, p) in points.iter().enumerate() {
            let l = labels[i];
            if counts[l] < 2 {
                continue;
            }
            let d = p.dist2(&centroids[l]);
            if d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        let i = far.expect("k <= n guarantees a donor cluster");
        counts[labels[i]] -= 1;
        labels[i] = empty;
        counts[empty] = 1;
        centroids[empty] = points[i];
    }
}

fn update_centroids(points: &[Point3], labels: &[usize], k: usize) -> Vec<Point3> {
    let mut sums = vec![[0.0f64; 3]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        sums[l][0] += p.x;
        sums[l][1] += p.y;
        sums[l][2] += p.z;
        counts[l] += 1;
    }
    sums.iter()
        .zip(&counts)
        .map(|(s, &c)| {
            let n = c as f64;
            Point3::new(s[0] / n, s[1] / n, s[2] / n)
        })
        .collect()
}

/// Lloyd's algorithm with k-means++ seeding.
///
/// Stops when no centroid moves by `tol` or more, or after `max_iter` sweeps.
/// The result is a pure function of `(cloud, k, seed, max_iter, tol)`.
pub fn kmeans(cloud: &PointCloud, k: usize, seed: u64, max_iter: usize, tol: f64) -> Result<Clustering> {
    let points = cloud.points();
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::InvalidClusterCount { k, points: n });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be > 0, got {tol}")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_centroids(points, k, &mut rng);
    let mut labels = vec![0usize; n];
    let mut sse_trace = Vec::new();

    for _ in 0..max_iter.max(1) {
        for (l, p) in labels.iter_mut().zip(points) {
            *l = nearest(p, &centroids);
        }
        repair_empty(points, &mut labels, &mut centroids);
        let updated = update_centroids(points, &labels, k);
        let shift = centroids
            .iter()
            .zip(&updated)
            .map(|(a, b)| a.dist(b))
            .fold(0.0_f64, f64::max);
        centroids = updated;
        sse_trace.push(sse_of(points, &labels, &centroids));
        if shift < tol {
            break;
        }
    }

    let sse = *sse_trace.last().expect("at least one sweep");
    Ok(Clustering {
        labels,
        centroids,
        sse,
        sse_trace,
    })
}

/// Per-cluster mean and population variance (divide by member count).
pub fn cluster_stats(cloud: &PointCloud, clustering: &Clustering) -> StructureCloud {
    let k = clustering.k();
    let mut members: Vec<Vec<Point3>> = vec![Vec::new(); k];
    for (p, &l) in cloud.points().iter().zip(&clustering.labels) {
        members[l].push(*p);
    }
    let points = members.iter().map(|m| stats_of(m)).collect();
    StructureCloud {
        points,
        source_id: cloud.id.clone(),
    }
}

fn stats_of(members: &[Point3]) -> StructurePoint {
    let n = members.len() as f64;
    let mut mean = [0.0; 3];
    for p in members {
        for (m, v) in mean.iter_mut().zip(p.to_array()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = [0.0; 3];
    for p in members {
        for ((s, v), m) in var.iter_mut().zip(p.to_array()).zip(mean) {
            let d = v - m;
            *s += d * d;
        }
    }
    var.iter_mut().for_each(|s| *s /= n);
    StructurePoint {
        mu: Point3::from_array(mean),
        var,
    }
}

/// Clusters `cloud` into `k` structure points with the default iteration
/// settings.
pub fn extract_structure(cloud: &PointCloud, k: usize, seed: u64) -> Result<StructureCloud> {
    let clustering = kmeans(cloud, k, seed, DEFAULT_MAX_ITER, DEFAULT_TOL)?;
    Ok(cluster_stats(cloud, &clustering))
}

/// Number of clusters for a partial cloud: `(1 - missing_rate) * k`, rounded
/// half up and clamped to `[1, k]`.
pub fn partial_cluster_count(k: usize, missing_rate: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&missing_rate) {
        return Err(Error::InvalidParameter(format!(
            "missing rate must be in [0, 1), got {missing_rate}"
        )));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    let raw = ((1.0 - missing_rate) * k as f64 + 0.5).floor() as usize;
    Ok(raw.clamp(1, k))
}
