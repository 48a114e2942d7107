//! Seeded synthetic shapes (boxes, L-shapes, tables, chairs, blob clusters)
//! and half-space cropping, for building test databases and partial queries.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, UnitSphere};

use crate::pointcloud::{Point3, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShapeKind {
    Box,
    LShape,
    Table,
    Chair,
    Blobs,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 5] = [
        ShapeKind::Box,
        ShapeKind::LShape,
        ShapeKind::Table,
        ShapeKind::Chair,
        ShapeKind::Blobs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ShapeKind::Box => "box",
            ShapeKind::LShape => "lshape",
            ShapeKind::Table => "table",
            ShapeKind::Chair => "chair",
            ShapeKind::Blobs => "blobs",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthConfig {
    /// Points sampled per shape.
    pub points: usize,
    pub kinds: Vec<ShapeKind>,
    /// Uniform size multiplier. At 1.5 the largest shapes reach about unit
    /// distance from the origin.
    pub scale: f64,
    /// Standard deviation of isotropic Gaussian jitter added to every
    /// sampled point, mimicking scanner noise. Zero gives exact surfaces.
    pub noise: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            points: 2048,
            kinds: ShapeKind::ALL.to_vec(),
            scale: 1.5,
            noise: 0.01,
        }
    }
}

/// Axis-aligned box given by its minimum corner and size.
#[derive(Debug, Clone, Copy)]
struct Cuboid {
    lo: Point3,
    size: Point3,
}

impl Cuboid {
    fn centered(center: Point3, size: Point3) -> Self {
        Cuboid {
            lo: center - size * 0.5,
            size,
        }
    }

    fn area(&self) -> f64 {
        let s = self.size;
        2.0 * (s.x * s.y + s.y * s.z + s.x * s.z)
    }

    fn sample_surface(&self, rng: &mut ChaCha8Rng) -> Point3 {
        let s = self.size;
        let faces = [s.y * s.z, s.x * s.z, s.x * s.y];
        let total: f64 = faces.iter().sum();
        let mut t = rng.random::<f64>() * total;
        let mut axis = 2;
        for (i, a) in faces.iter().enumerate() {
            if t < *a {
                axis = i;
                break;
            }
            t -= a;
        }
        let mut u = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
        u[axis] = if rng.random::<bool>() { 1.0 } else { 0.0 };
        Point3::new(self.lo.x + u[0] * s.x, self.lo.y + u[1] * s.y, self.lo.z + u[2] * s.z)
    }
}

enum Part {
    Cuboid(Cuboid),
    Blob { center: Point3, radius: f64 },
}

impl Part {
    fn weight(&self) -> f64 {
        match self {
            Part::Cuboid(c) => c.area(),
            Part::Blob { radius, .. } => 4.0 * PI * radius * radius,
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Point3 {
        match self {
            Part::Cuboid(c) => c.sample_surface(rng),
            Part::Blob { center, radius } => {
                let d: [f64; 3] = UnitSphere.sample(rng);
                let jitter = Normal::new(1.0, 0.05).unwrap().sample(rng);
                *center + Point3::from_array(d) * (radius * jitter)
            }
        }
    }
}

/// Deterministic stream of synthetic complete shapes.
pub struct ShapeGenerator {
    cfg: SynthConfig,
    rng: ChaCha8Rng,
    count: usize,
}

impl ShapeGenerator {
    pub fn new(cfg: SynthConfig, seed: u64) -> Self {
        assert!(!cfg.kinds.is_empty(), "at least one shape kind");
        assert!(cfg.points > 0, "points must be positive");
        Self {
            cfg,
            rng: ChaCha8Rng::seed_from_u64(seed),
            count: 0,
        }
    }

    /// Next shape; kinds are cycled in order and ids are `<kind>-<nnnn>`.
    pub fn next_shape(&mut self) -> PointCloud {
        let kind = self.cfg.kinds[self.count % self.cfg.kinds.len()];
        let id = format!("{}-{:04}", kind.name(), self.count);
        self.count += 1;
        let parts = self.parts(kind);
        let mut points = sample_parts(&parts, self.cfg.points, &mut self.rng);
        let scale = self.cfg.scale;
        if self.cfg.noise > 0.0 {
            let jitter = Normal::new(0.0, self.cfg.noise).expect("finite noise");
            let rng = &mut self.rng;
            for p in points.iter_mut() {
                let d = Point3::new(jitter.sample(rng), jitter.sample(rng), jitter.sample(rng));
                *p = *p * scale + d;
            }
        } else {
            points.iter_mut().for_each(|p| *p = *p * scale);
        }
        PointCloud::new(points, id)
            .expect("generated points are finite")
            .with_category(kind.name())
    }

    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    fn parts(&mut self, kind: ShapeKind) -> Vec<Part> {
        let p = Point3::new;
        match kind {
            ShapeKind::Box => {
                let size = p(self.uniform(0.3, 1.0), self.uniform(0.3, 1.0), self.uniform(0.3, 1.0));
                vec![Part::Cuboid(Cuboid::centered(Point3::ORIGIN, size))]
            }
            ShapeKind::LShape => {
                let (w, h, d) = (self.uniform(0.6, 1.0), self.uniform(0.6, 1.0), self.uniform(0.2, 0.5));
                let (tw, th) = (self.uniform(0.15, 0.35), self.uniform(0.15, 0.35));
                let lo = p(-w / 2.0, -h / 2.0, -d / 2.0);
                vec![
                    Part::Cuboid(Cuboid { lo, size: p(tw, h, d) }),
                    Part::Cuboid(Cuboid {
                        lo: p(lo.x + tw, lo.y, lo.z),
                        size: p(w - tw, th, d),
                    }),
                ]
            }
            ShapeKind::Table => {
                let (w, d, h) = (self.uniform(0.5, 1.2), self.uniform(0.3, 1.0), self.uniform(0.3, 0.9));
                let top = self.uniform(0.03, 0.08);
                let mut parts = vec![Part::Cuboid(Cuboid::centered(
                    p(0.0, h / 2.0 - top / 2.0, 0.0),
                    p(w, top, d),
                ))];
                if self.rng.random_bool(0.3) {
                    // pedestal: column on a base plate
                    let col = self.uniform(0.06, 0.15);
                    let plate = self.uniform(0.3, 0.7) * w.min(d);
                    parts.push(Part::Cuboid(Cuboid::centered(p(0.0, 0.0, 0.0), p(col, h - top, col))));
                    parts.push(Part::Cuboid(Cuboid {
                        lo: p(-plate / 2.0, -h / 2.0, -plate / 2.0),
                        size: p(plate, 0.03, plate),
                    }));
                } else {
                    let leg = self.uniform(0.04, 0.1);
                    let inset = self.uniform(0.0, 0.12);
                    parts.extend(self.legs(w, d, h - top, leg, inset, -h / 2.0));
                }
                parts
            }
            ShapeKind::Chair => {
                let (w, d) = (self.uniform(0.35, 0.8), self.uniform(0.35, 0.8));
                let seat_h = self.uniform(0.25, 0.55);
                let back_h = self.uniform(0.2, 0.7);
                let seat = self.uniform(0.04, 0.08);
                let leg = self.uniform(0.03, 0.07);
                let base = -(seat_h + back_h) / 2.0;
                let top = base + seat_h;
                let mut parts = vec![Part::Cuboid(Cuboid::centered(
                    p(0.0, top - seat / 2.0, 0.0),
                    p(w, seat, d),
                ))];
                if self.rng.random_bool(0.5) {
                    parts.push(Part::Cuboid(Cuboid {
                        lo: p(-w / 2.0, top, -d / 2.0),
                        size: p(w, back_h, seat),
                    }));
                } else {
                    // two posts and a top rail
                    let rail = self.uniform(0.05, 0.15);
                    for x in [-w / 2.0, w / 2.0 - leg] {
                        parts.push(Part::Cuboid(Cuboid {
                            lo: p(x, top, -d / 2.0),
                            size: p(leg, back_h, leg),
                        }));
                    }
                    parts.push(Part::Cuboid(Cuboid {
                        lo: p(-w / 2.0, top + back_h - rail, -d / 2.0),
                        size: p(w, rail, seat),
                    }));
                }
                if self.rng.random_bool(0.4) {
                    let arm_h = self.uniform(0.15, 0.3).min(back_h);
                    for x in [-w / 2.0, w / 2.0 - leg] {
                        parts.push(Part::Cuboid(Cuboid {
                            lo: p(x, top + arm_h - leg, -d / 2.0),
                            size: p(leg, leg, d),
                        }));
                    }
                }
                parts.extend(self.legs(w, d, seat_h - seat, leg, 0.0, base));
                parts
            }
            ShapeKind::Blobs => {
                let n = self.rng.random_range(3..=6);
                (0..n)
                    .map(|_| Part::Blob {
                        center: p(
                            self.uniform(-0.4, 0.4),
                            self.uniform(-0.4, 0.4),
                            self.uniform(-0.4, 0.4),
                        ),
                        radius: self.uniform(0.08, 0.2),
                    })
                    .collect()
            }
        }
    }

    fn legs(&mut self, w: f64, d: f64, height: f64, leg: f64, inset: f64, base: f64) -> Vec<Part> {
        let xs = [-w / 2.0 + inset, w / 2.0 - inset - leg];
        let zs = [-d / 2.0 + inset, d / 2.0 - inset - leg];
        xs.iter()
            .flat_map(|&x| zs.iter().map(move |&z| (x, z)))
            .map(|(x, z)| {
                Part::Cuboid(Cuboid {
                    lo: Point3::new(x, base, z),
                    size: Point3::new(leg, height, leg),
                })
            })
            .collect()
    }
}

fn sample_parts(parts: &[Part], n: usize, rng: &mut ChaCha8Rng) -> Vec<Point3> {
    let total: f64 = parts.iter().map(Part::weight).sum();
    (0..n)
        .map(|_| {
            let mut t = rng.random::<f64>() * total;
            let part = parts
                .iter()
                .find(|p| {
                    let w = p.weight();
                    if t < w {
                        true
                    } else {
                        t -= w;
                        false
                    }
                })
                .unwrap_or_else(|| parts.last().expect("non-empty parts"));
            part.sample(rng)
        })
        .collect()
}

/// Keeps the `round(keep_fraction * n)` points (at least one) with the
/// smallest projection onto `direction`; ties keep input order.
pub fn half_space_crop(cloud: &PointCloud, direction: Point3, keep_fraction: f64) -> PointCloud {
    let n = cloud.len();
    let keep = ((keep_fraction.clamp(0.0, 1.0) * n as f64).round() as usize).clamp(1, n);
    let pts = cloud.points();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        pts[a]
            .dot(&direction)
            .total_cmp(&pts[b].dot(&direction))
            .then(a.cmp(&b))
    });
    let mut kept: Vec<usize> = order[..keep].to_vec();
    kept.sort_unstable();
    let mut out = PointCloud::new(kept.iter().map(|&i| pts[i]).collect(), format!("{}-crop", cloud.id))
        .expect("at least one point kept");
    out.category = cloud.category.clone();
    out.source = cloud.source.clone();
    out
}

/// Uniformly random unit direction.
pub fn random_direction(rng: &mut impl Rng) -> Point3 {
    let d: [f64; 3] = UnitSphere.sample(rng);
    Point3::from_array(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_is_deterministic() {
        let mut a = ShapeGenerator::new(SynthConfig::default(), 3);
        let mut b = ShapeGenerator::new(SynthConfig::default(), 3);
        for _ in 0..6 {
            let (x, y) = (a.next_shape(), b.next_shape());
            assert_eq!(x, y);
            assert_eq!(x.len(), 2048);
            let (lo, hi) = x.aabb();
            assert!(lo.x >= -1.0 && hi.x <= 1.0, "{lo:?} {hi:?}");
        }
    }

    #[test]
    fn kinds_cycle() {
        let mut g = ShapeGenerator::new(SynthConfig::default(), 0);
        let cats: Vec<_> = (0..5).map(|_| g.next_shape().category.unwrap()).collect();
        assert_eq!(cats, ["box", "lshape", "table", "chair", "blobs"]);
    }

    #[test]
    fn crop_keeps_lower_half() {
        let mut g = ShapeGenerator::new(SynthConfig::default(), 1);
        let c = g.next_shape();
        let dir = Point3::new(1.0, 0.0, 0.0);
        let half = half_space_crop(&c, dir, 0.5);
        assert_eq!(half.len(), 1024);
        let cut = half.points().iter().map(|p| p.x).fold(f64::MIN, f64::max);
        let dropped = c.points().iter().filter(|p| p.x > cut).count();
        assert_eq!(dropped, 1024);
    }
}
