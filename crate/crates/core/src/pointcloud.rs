//! Point types, XYZ / ASCII-PLY reading and writing, and bounding boxes.
//!
//! Coordinates are kept exactly as read. Nothing here rescales a cloud unless
//! [`PointCloud::normalized_unit_cube`] is called explicitly, because retrieval
//! scores depend on absolute scale.

use std::fmt::Write as _;
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

/// A point in model space.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3 { x: 0.0, y: 0.0, z: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    #[inline]
    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Squared Euclidean distance.
    #[inline]
    pub fn dist2(&self, other: &Point3) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        dx * dx + dy * dy + dz * dz
    }

    #[inline]
    pub fn dist(&self, other: &Point3) -> f64 {
        self.dist2(other).sqrt()
    }

    #[inline]
    pub fn dot(&self, other: &Point3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    #[inline]
    pub fn min(&self, other: &Point3) -> Point3 {
        Point3::new(self.x.min(other.x), self.y.min(other.y), self.z.min(other.z))
    }

    #[inline]
    pub fn max(&self, other: &Point3) -> Point3 {
        Point3::new(self.x.max(other.x), self.y.max(other.y), self.z.max(other.z))
    }
}

impl Add for Point3 {
    type Output = Point3;
    #[inline]
    fn add(self, rhs: Point3) -> Point3 {
        Point3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    #[inline]
    fn sub(self, rhs: Point3) -> Point3 {
        Point3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    #[inline]
    fn mul(self, rhs: f64) -> Point3 {
        Point3::new(self.x * rhs, self.y * rhs, self.z * rhs)
    }
}

/// A non-empty, finite, ordered set of points plus where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Point3>,
    pub id: String,
    pub category: Option<String>,
    pub source: Option<String>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>, id: impl Into<String>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite(format!("point {i} of cloud")));
        }
        Ok(Self {
            points,
            id: id.into(),
            category: None,
            source: None,
        })
    }

    pub fn with_category(mut self, category: impl Into<String>) -> Self {
        self.category = Some(category.into());
        self
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = Some(source.into());
        self
    }

    #[inline]
    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Always false; kept for API symmetry with slices.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_points(self) -> Vec<Point3> {
        self.points
    }

    pub fn aabb(&self) -> (Point3, Point3) {
        aabb(&self.points).expect("point cloud is non-empty")
    }

    /// Returns a copy translated and uniformly scaled so the bounding box is
    /// centered on the origin with its longest side equal to 1.
    pub fn normalized_unit_cube(&self) -> PointCloud {
        let (lo, hi) = self.aabb();
        let center = (lo + hi) * 0.5;
        let extent = (hi - lo).to_array().into_iter().fold(0.0_f64, f64::max);
        let scale = if extent > 0.0 { 1.0 / extent } else { 1.0 };
        let points = self.points.iter().map(|p| (*p - center) * scale).collect();
        PointCloud {
            points,
            id: self.id.clone(),
            category: self.category.clone(),
            source: self.source.clone(),
        }
    }
}

/// Componentwise bounding box.
pub fn aabb(points: &[Point3]) -> Result<(Point3, Point3)> {
    let first = points.first().ok_or(Error::EmptyCloud)?;
    Ok(points
        .iter()
        .skip(1)
        .fold((*first, *first), |(lo, hi), p| (lo.min(p), hi.max(p))))
}

fn parse_coord(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok.parse().map_err(|_| Error::Parse {
        line,
        message: format!("`{tok}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("`{tok}` is not finite"),
        });
    }
    Ok(v)
}

/// Parses whitespace-separated `x y z` lines. Blank lines and lines starting
/// with `#` are skipped. Line numbers in errors are 1-based.
pub fn parse_xyz(text: &str, id: impl Into<String>) -> Result<PointCloud> {
    let mut points = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(Error::Parse {
                line,
                message: format!("expected 3 values, found {}", toks.len()),
            });
        }
        points.push(Point3::new(
            parse_coord(toks[0], line)?,
            parse_coord(toks[1], line)?,
            parse_coord(toks[2], line)?,
        ));
    }
    PointCloud::new(points, id)
}

/// One point per line. `f64`'s `Display` is the shortest string that parses
/// back to the same value, so the round trip is exact.
pub fn write_xyz(cloud: &PointCloud) -> String {
    let mut out = String::with_capacity(cloud.len() * 32);
    for p in cloud.points() {
        let _ = writeln!(out, "{} {} {}", p.x, p.y, p.z);
    }
    out
}

/// ASCII PLY 1.0 with a single vertex element.
pub fn write_ply(cloud: &PointCloud, colors: Option<&[[u8; 3]]>) -> Result<String> {
    if let Some(c) = colors {
        if c.len() != cloud.len() {
            return Err(Error::ColorCountMismatch {
                points: cloud.len(),
                colors: c.len(),
            });
        }
    }
    let mut out = String::with_capacity(cloud.len() * 40 + 200);
    out.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(out, "comment id {}", cloud.id);
    let _ = writeln!(out, "element vertex {}", cloud.len());
    out.push_str("property float x\nproperty float y\nproperty float z\n");
    if colors.is_some() {
        out.push_str("property uchar red\nproperty uchar green\nproperty uchar blue\n");
    }
    out.push_str("end_header\n");
    for (i, p) in cloud.points().iter().enumerate() {
        match colors {
            Some(c) => {
                let [r, g, b] = c[i];
                let _ = writeln!(out, "{} {} {} {} {} {}", p.x, p.y, p.z, r, g, b);
            }
            None => {
                let _ = writeln!(out, "{} {} {}", p.x, p.y, p.z);
            }
        }
    }
    Ok(out)
}

/// Reads the vertex positions of an ASCII PLY file. Other elements and
/// vertex properties are skipped.
pub fn parse_ply(text: &str, id: impl Into<String>) -> Result<PointCloud> {
    let mut lines = text.lines().enumerate();
    let malformed = |line: usize, message: &str| Error::Parse {
        line,
        message: message.to_string(),
    };

    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(malformed(1, "missing `ply` magic")),
    }

    // (element name, count, property names)
    let mut elements: Vec<(String, usize, Vec<String>)> = Vec::new();
    let mut header_end = None;
    for (idx, raw) in lines.by_ref() {
        let line = idx + 1;
        let toks: Vec<&str> = raw.split_whitespace().collect();
        match toks.as_slice() {
            ["format", fmt, ..] => {
                if *fmt != "ascii" {
                    return Err(malformed(line, "only ascii PLY is supported"));
                }
            }
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => {
                let count = count.parse().map_err(|_| malformed(line, "bad element count"))?;
                elements.push((name.to_string(), count, Vec::new()));
            }
            ["property", "list", ..] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| malformed(line, "property before element"))?;
                el.2.push("<list>".to_string());
            }
            ["property", _ty, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| malformed(line, "property before element"))?;
                el.2.push(name.to_string());
            }
            ["end_header"] => {
                header_end = Some(line);
                break;
            }
            _ => return Err(malformed(line, "unrecognized header line")),
        }
    }
    let header_end = header_end.ok_or_else(|| malformed(1, "missing end_header"))?;

    let mut points = Vec::new();
    let mut body = lines.filter(|(_, l)| !l.trim().is_empty());
    for (name, count, props) in &elements {
        let is_vertex = name == "vertex";
        let axis = |n: &str| props.iter().position(|p| p == n);
        let (ix, iy, iz) = match (axis("x"), axis("y"), axis("z")) {
            (Some(x), Some(y), Some(z)) => (x, y, z),
            _ if is_vertex => return Err(malformed(header_end, "vertex element lacks x/y/z")),
            _ => (0, 0, 0),
        };
        for _ in 0..*count {
            let (idx, raw) = body
                .next()
                .ok_or_else(|| malformed(header_end, "fewer data lines than declared"))?;
            if !is_vertex {
                continue;
            }
            let line = idx + 1;
            let toks: Vec<&str> = raw.split_whitespace().collect();
            if toks.len() < props.len() {
                return Err(malformed(line, "too few vertex properties"));
            }
            points.push(Point3::new(
                parse_coord(toks[ix], line)?,
                parse_coord(toks[iy], line)?,
                parse_coord(toks[iz], line)?,
            ));
        }
    }
    PointCloud::new(points, id)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(points: &[[f64; 3]]) -> PointCloud {
        PointCloud::new(points.iter().copied().map(Point3::from_array).collect(), "t").unwrap()
    }

    #[test]
    fn parse_two_points() {
        let c = parse_xyz("0 0 0\n1 0 0\n", "a").unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.points()[1], Point3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn parse_skips_comments() {
        let c = parse_xyz("# c\n0.5 -0.5 0.25\n", "a").unwrap();
        assert_eq!(c.points(), &[Point3::new(0.5, -0.5, 0.25)]);
    }

    #[test]
    fn parse_arity_error_reports_line() {
        match parse_xyz("0 0\n", "a") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
        match parse_xyz("# header\n\n1 2 3\n4 5 x\n", "a") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_empty_is_error() {
        assert!(matches!(parse_xyz("# nothing\n\n", "a"), Err(Error::EmptyCloud)));
        assert!(matches!(parse_xyz("nan 0 0\n", "a"), Err(Error::Parse { .. })));
    }

    #[test]
    fn write_single_origin() {
        assert_eq!(write_xyz(&cloud(&[[0.0, 0.0, 0.0]])), "0 0 0\n");
    }

    #[test]
    fn empty_cloud_is_unconstructible() {
        assert!(matches!(PointCloud::new(vec![], "e"), Err(Error::EmptyCloud)));
        assert!(matches!(
            PointCloud::new(vec![Point3::new(f64::INFINITY, 0.0, 0.0)], "e"),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn ply_header_and_colors() {
        let two = cloud(&[[0.0, 0.0, 0.0], [1.0, 2.0, 3.0]]);
        let text = write_ply(&two, None).unwrap();
        assert!(text.contains("element vertex 2\n"));
        assert!(!text.contains("red"));

        let one = cloud(&[[0.0, 0.0, 0.0]]);
        let text = write_ply(&one, Some(&[[255, 0, 0]])).unwrap();
        assert!(text.ends_with("end_header\n0 0 0 255 0 0\n"));
        assert!(text.contains("property uchar red\nproperty uchar green\nproperty uchar blue\n"));

        let three = cloud(&[[0.0; 3], [1.0; 3], [2.0; 3]]);
        assert!(matches!(
            write_ply(&three, Some(&[[0, 0, 0], [1, 1, 1]])),
            Err(Error::ColorCountMismatch { points: 3, colors: 2 })
        ));
    }

    #[test]
    fn ply_reads_back() {
        let c = cloud(&[[0.125, -3.5, 1e-7], [1.0, 2.0, 3.0]]);
        let colors = [[1, 2, 3], [4, 5, 6]];
        let back = parse_ply(&write_ply(&c, Some(&colors)).unwrap(), "t").unwrap();
        assert_eq!(back.points(), c.points());
        assert!(matches!(
            parse_ply("ply\nformat binary_little_endian 1.0\n", "t"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn bounding_boxes() {
        let c = cloud(&[[0.0, 0.0, 0.0]]);
        assert_eq!(c.aabb(), (Point3::ORIGIN, Point3::ORIGIN));
        let c = cloud(&[[0.0, 0.0, 0.0], [1.0, -1.0, 2.0]]);
        assert_eq!(c.aabb(), (Point3::new(0.0, -1.0, 0.0), Point3::new(1.0, 0.0, 2.0)));
        let c = cloud(&[[-0.5, -0.5, -0.5], [0.5, 0.5, 0.5]]);
        assert_eq!(c.aabb(), (Point3::new(-0.5, -0.5, -0.5), Point3::new(0.5, 0.5, 0.5)));
        assert!(matches!(aabb(&[]), Err(Error::EmptyCloud)));
    }

    #[test]
    fn unit_cube_normalization() {
        let c = cloud(&[[1.0, 1.0, 1.0], [5.0, 3.0, 2.0]]);
        let n = c.normalized_unit_cube();
        let (lo, hi) = n.aabb();
        assert_eq!(hi.x - lo.x, 1.0);
        assert_eq!(lo.x, -0.5);
        assert_eq!(lo.y + hi.y, 0.0);
    }
}
