//! Convex analytic domains (balls and axis-aligned ellipsoids) with exact
//! ray-boundary queries, plus the sphere and chord quadratures used by every
//! transport operator.
//!
//! A ray query at `(x, n)` follows the backward trajectory `x - t n` until it
//! leaves the domain; the exit distance `s(x, n)` and exit point
//! `y(x, n) = x - s n` solve a quadratic in closed form, so the chord algebra
//! introduces no geometric discretization error.

use crate::real::Real;
use crate::vec3::Vec3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("point {0:?} is not strictly inside the domain")]
    PointOutsideDomain([f64; 3]),
    #[error("direction has non-unit norm {0}")]
    NonUnitDirection(f64),
    #[error("point {0:?} is not on the boundary (level-set residual {1})")]
    NotOnBoundary([f64; 3], f64),
    #[error("sphere quadrature order {0} unsupported (need order >= 2)")]
    UnsupportedOrder(usize),
    #[error("chord step must be positive, got {0}")]
    NonPositiveStep(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Ball,
    Ellipsoid,
}

/// Convex body with strictly positive curvature: a ball or an axis-aligned
/// ellipsoid, `sum_i ((p_i - c_i)/a_i)^2 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvexDomain<R> {
    pub kind: DomainKind,
    pub center: Vec3<R>,
    pub semi_axes: Vec3<R>,
}

impl<R: Real> ConvexDomain<R> {
    pub fn ball(center: Vec3<R>, radius: R) -> Self {
        assert!(radius > R::zero(), "ball radius must be positive");
        Self {
            kind: DomainKind::Ball,
            center,
            semi_axes: Vec3::splat(radius),
        }
    }

    pub fn ellipsoid(center: Vec3<R>, semi_axes: Vec3<R>) -> Self {
        assert!(
            semi_axes.x > R::zero() && semi_axes.y > R::zero() && semi_axes.z > R::zero(),
            "semi-axes must be strictly positive"
        );
        Self {
            kind: DomainKind::Ellipsoid,
            center,
            semi_axes,
        }
    }

    pub fn unit_ball() -> Self {
        Self::ball(Vec3::zero(), R::one())
    }

    /// Diameter `D = 2 max(semi-axes)`.
    pub fn diameter(&self) -> R {
        R::two() * self.semi_axes.max_component()
    }

    /// Level-set value `|(p - c)/a|^2 - 1`: negative inside, zero on the boundary.
    pub fn level(&self, p: Vec3<R>) -> R {
        (p - self.center).div_comp(self.semi_axes).norm_sq() - R::one()
    }

    pub fn contains(&self, p: Vec3<R>) -> bool {
        self.level(p) < R::zero()
    }

    /// Axis-aligned bounding box `(lo, hi)`.
    pub fn bounding_box(&self) -> (Vec3<R>, Vec3<R>) {
        (self.center - self.semi_axes, self.center + self.semi_axes)
    }

    fn check_ray(&self, x: Vec3<R>, n: Vec3<R>) -> Result<(), GeometryError> {
        let norm_err = (n.norm() - R::one()).abs();
        if norm_err > R::of(1e-9) {
            return Err(GeometryError::NonUnitDirection(
                n.norm().to_f64().unwrap_or(f64::NAN),
            ));
        }
        if self.level(x) >= R::zero() {
            return Err(GeometryError::PointOutsideDomain(to_f64_array(x)));
        }
        Ok(())
    }
}

fn to_f64_array<R: Real>(v: Vec3<R>) -> [f64; 3] {
    [
        v.x.to_f64().unwrap_or(f64::NAN),
        v.y.to_f64().unwrap_or(f64::NAN),
        v.z.to_f64().unwrap_or(f64::NAN),
    ]
}

/// Distance `s(x, n) > 0` from the interior point `x` to the boundary along
/// the backward direction `-n`, so that `x - s n` lies on the boundary.
///
/// In scaled coordinates `w = (x-c)/a`, `d = n/a` the exit solves
/// `|w - s d|^2 = 1`; with `|w| < 1` the quadratic has exactly one positive
/// root.
pub fn exit_length<R: Real>(
    domain: &ConvexDomain<R>,
    x: Vec3<R>,
    n: Vec3<R>,
) -> Result<R, GeometryError> {
    domain.check_ray(x, n)?;
    let w = (x - domain.center).div_comp(domain.semi_axes);
    let d = n.div_comp(domain.semi_axes);
    let dd = d.norm_sq();
    let wd = w.dot(d);
    let disc = wd * wd + dd * (R::one() - w.norm_sq());
    Ok((wd + disc.sqrt()) / dd)
}

/// Boundary point `y(x, n) = x - s(x, n) n` hit by the backward trajectory.
pub fn boundary_point<R: Real>(
    domain: &ConvexDomain<R>,
    x: Vec3<R>,
    n: Vec3<R>,
) -> Result<Vec3<R>, GeometryError> {
    let s = exit_length(domain, x, n)?;
    Ok(x - n * s)
}

/// Outward unit normal at a boundary point (gradient of the level set).
pub fn outward_normal<R: Real>(
    domain: &ConvexDomain<R>,
    y: Vec3<R>,
) -> Result<Vec3<R>, GeometryError> {
    let lv = domain.level(y);
    if lv.abs() > R::of(1e-9) {
        return Err(GeometryError::NotOnBoundary(
            to_f64_array(y),
            lv.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let g = (y - domain.center)
        .div_comp(domain.semi_axes)
        .div_comp(domain.semi_axes);
    Ok(g.normalized())
}

/// Quadrature rule on the unit sphere with positive weights summing to 4π
/// and an antipodally symmetric node set.
#[derive(Debug, Clone)]
pub struct SphereQuadrature<R> {
    pub nodes: Vec<Vec3<R>>,
    pub weights: Vec<R>,
    pub order: usize,
}

impl<R: Real> SphereQuadrature<R> {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `sum_i w_i f(n_i)`, approximating the surface integral over the sphere.
    pub fn integrate<F: Fn(Vec3<R>) -> R>(&self, f: F) -> R {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&n, &w)| w * f(n))
            .sum()
    }

    pub fn total_weight(&self) -> R {
        self.weights.iter().copied().sum()
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre<R: Real>(n: usize) -> (Vec<R>, Vec<R>) {
    assert!(n >= 1);
    let mut nodes = vec![R::zero(); n];
    let mut weights = vec![R::zero(); n];
    for i in 0..(n + 1) / 2 {
        // Chebyshev-based initial guess.
        let guess = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut x = R::of(guess);
        // Legendre P_n(x) and derivative via the three-term recurrence.
        let eval = |x: R| {
            let mut p0 = R::one();
            let mut p1 = x;
            for k in 2..=n {
                let kf = R::of_usize(k);
                let p2 = ((R::two() * kf - R::one()) * x * p1 - (kf - R::one()) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let dp = R::of_usize(n) * (x * p1 - p0) / (x * x - R::one());
            (p1, dp)
        };
        for _ in 0..100 {
            let (p, dp) = eval(x);
            let dx = p / dp;
            x = x - dx;
            if dx.abs() <= R::epsilon() * R::of(4.0) {
                break;
            }
        }
        let (_, dp) = eval(x);
        let w = R::two() / ((R::one() - x * x) * dp * dp);
        nodes[i] = -x;
        weights[i] = w;
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Product rule: `order` Gauss-Legendre nodes in the polar cosine times
/// `2 * order` midpoint nodes in azimuth. Antipodal symmetry is exact since
/// the azimuth count is even, and the rule integrates spherical polynomials
/// of degree up to `2 * order - 1` exactly.
pub fn build_sphere_quadrature<R: Real>(
    order: usize,
) -> Result<SphereQuadrature<R>, GeometryError> {
    if order < 2 {
        return Err(GeometryError::UnsupportedOrder(order));
    }
    let n_polar = order;
    let n_azim = 2 * order;
    let (mu, wmu) = gauss_legendre::<R>(n_polar);
    let mut nodes = Vec::with_capacity(n_polar * n_azim);
    let mut weights = Vec::with_capacity(n_polar * n_azim);
    let dphi = R::two() * R::PI() / R::of_usize(n_azim);
    for (i, &m) in mu.iter().enumerate() {
        let sin_theta = (R::one() - m * m).sqrt();
        for j in 0..n_azim {
            let phi = dphi * (R::of_usize(j) + R::half());
            nodes.push(Vec3::new(sin_theta * phi.cos(), sin_theta * phi.sin(), m));
            weights.push(wmu[i] * dphi);
        }
    }
    Ok(SphereQuadrature {
        nodes,
        weights,
        order,
    })
}

/// Ordered abscissae `0 = t_0 < ... < t_M = s(x, n)` along the backward
/// chord, uniformly spaced except for a clamped final subinterval.
pub fn chord_samples<R: Real>(
    domain: &ConvexDomain<R>,
    x: Vec3<R>,
    n: Vec3<R>,
    step: R,
) -> Result<Vec<R>, GeometryError> {
    if step <= R::zero() {
        return Err(GeometryError::NonPositiveStep(
            step.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let s = exit_length(domain, x, n)?;
    Ok(chord_samples_for_length(s, step))
}

/// Sample abscissae for a chord of known length; shared by the transport
/// sweeps which already carry `s(x, n)`.
pub fn chord_samples_for_length<R: Real>(s: R, step: R) -> Vec<R> {
    let mut ts = Vec::with_capacity((s / step).to_usize().unwrap_or(0).saturating_add(2));
    let mut t = R::zero();
    while t < s {
        ts.push(t);
        t = t + step;
    }
    // Clamp the tail; merge a final subinterval shorter than step/1e6 into
    // the previous node to avoid a degenerate sliver.
    if let Some(&last) = ts.last() {
        if ts.len() > 1 && s - last < step * R::of(1e-6) {
            ts.pop();
        }
    }
    ts.push(s);
    ts
}
