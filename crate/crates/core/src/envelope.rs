//! Structure clouds as continuous fields of normalized Gaussians.
//!
//! Each structure point becomes an axis-aligned Gaussian whose variances are
//! rescaled so that `σ'₁σ'₂σ'₃ = (λ/√(2π))³` while keeping the axis ratios
//! of the original cluster. The normalized kernel is
//! `G(x) = Π_i λ⁻¹ exp(-(x_i - μ_i)² / 2σ'_i²)`, so every component peaks at
//! exactly `λ⁻³` regardless of how spread out its cluster was.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::pointcloud::{Point3, PointCloud};
use crate::structure::StructureCloud;

pub const DEFAULT_LAMBDA: f64 = 0.2;
/// Applied to raw variances before normalization (squared model units).
pub const DEFAULT_VARIANCE_FLOOR: f64 = 1e-6;

/// Heat ramp end that the highest value maps to.
pub const HEAT_DEEP: [u8; 3] = [255, 0, 0];
/// Heat ramp end that the lowest value maps to.
pub const HEAT_SHALLOW: [u8; 3] = [255, 230, 230];

/// One normalized Gaussian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    pub mu: Point3,
    /// Normalized per-axis variances σ'².
    pub nvar: [f64; 3],
}

impl Component {
    /// `exp` argument for the distance from `x` to this component's center.
    #[inline]
    fn exponent(&self, x: &Point3) -> f64 {
        let dx = x.x - self.mu.x;
        let dy = x.y - self.mu.y;
        let dz = x.z - self.mu.z;
        dx * dx / (2.0 * self.nvar[0]) + dy * dy / (2.0 * self.nvar[1]) + dz * dz / (2.0 * self.nvar[2])
    }
}

/// Additive Gaussian field of one structure cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub components: Vec<Component>,
    pub lambda: f64,
    pub source_id: String,
}

impl Envelope {
    /// Value of the field at `x`.
    pub fn eval(&self, x: &Point3) -> f64 {
        envelope_eval(self, x)
    }

    /// Peak value of a single component, `λ⁻³`.
    pub fn peak(&self) -> f64 {
        peak_value(self.lambda)
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

#[inline]
pub fn peak_value(lambda: f64) -> f64 {
    1.0 / (lambda * lambda * lambda)
}

/// Rescales cluster variances so their standard deviations multiply to
/// `(λ/√(2π))³` with unchanged axis ratios. Each input is first raised to
/// `floor`.
///
/// `σ'_i² = (λ²/2π) · (σ_i² / (σ_j σ_k))^(2/3)`, computed here through the
/// equivalent `(λ²/2π) · σ_i² / (σ₁²σ₂²σ₃²)^(1/3)`.
pub fn normalize_variances(var: [f64; 3], lambda: f64, floor: f64) -> Result<[f64; 3]> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda must be > 0, got {lambda}")));
    }
    if !(floor > 0.0) || !floor.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "variance floor must be > 0, got {floor}"
        )));
    }
    if var.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("variance {var:?}")));
    }
    let v = var.map(|s| s.max(floor));
    let geo = v[0].cbrt() * v[1].cbrt() * v[2].cbrt();
    let scale = lambda * lambda / (2.0 * PI);
    Ok(v.map(|s| scale * (s / geo)))
}

/// One normalized Gaussian evaluated at `x`; peaks at `λ⁻³` when `x == mu`.
#[inline]
pub fn gaussian_eval(x: &Point3, mu: &Point3, nvar: &[f64; 3], lambda: f64) -> f64 {
    let c = Component { mu: *mu, nvar: *nvar };
    (-c.exponent(x)).exp() * peak_value(lambda)
}

pub fn build_envelope(sc: &StructureCloud, lambda: f64, floor: f64) -> Result<Envelope> {
    let components = sc
        .points
        .iter()
        .map(|p| {
            if !p.mu.is_finite() {
                return Err(Error::NonFinite(format!("structure point {:?}", p.mu)));
            }
            Ok(Component {
                mu: p.mu,
                nvar: normalize_variances(p.var, lambda, floor)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Envelope {
        components,
        lambda,
        source_id: sc.source_id.clone(),
    })
}

/// Sum of all component Gaussians at `x`.
pub fn envelope_eval(e: &Envelope, x: &Point3) -> f64 {
    let sum: f64 = e.components.iter().map(|c| (-c.exponent(x)).exp()).sum();
    sum * e.peak()
}

/// Field values at a set of points plus a heat color for each.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatMap {
    pub values: Vec<f64>,
    pub colors: Vec<[u8; 3]>,
}

/// Evaluates the field at every point and maps the value range linearly
/// onto [`HEAT_SHALLOW`]..[`HEAT_DEEP`] (maximum is deepest).
pub fn heat_samples(e: &Envelope, points: &PointCloud) -> HeatMap {
    let values: Vec<f64> = points.points().iter().map(|p| envelope_eval(e, p)).collect();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let colors = values
        .iter()
        .map(|&v| {
            let t = if span > 0.0 { (v - lo) / span } else { 1.0 };
            heat_color(t)
        })
        .collect();
    HeatMap { values, colors }
}

/// `t = 0` is shallow, `t = 1` is deep.
pub fn heat_color(t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0);
    let mut out = [0u8; 3];
    for i in 0..3 {
        let a = HEAT_SHALLOW[i] as f64;
        let b = HEAT_DEEP[i] as f64;
        out[i] = (a + (b - a) * t).round() as u8;
    }
    out
}
