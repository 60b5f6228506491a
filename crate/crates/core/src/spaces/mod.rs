//! Model metric spaces with closed-form geodesic geometry.
//!
//! Every space is described by a [`SpaceDescriptor`]; points are plain
//! coordinate arrays in the space's chart:
//!
//! | space | coordinates |
//! |-------|-------------|
//! | `circle` | `[θ]` |
//! | `sphere` | unit vector in `ℝ^{d+1}` (the radius is applied by the space) |
//! | `hyperbolic` | Poincaré ball point, `‖x‖ < 1` |
//! | `euclidean` | `[x₁..x_d]` |
//! | `cylinder` | `[θ, z]` |
//! | `flat_torus` | `[θ₁..θ_k]` |
//! | `warped` | `[θ, z]` with metric `f(z) dθ² + dz²` |
//!
//! Angles are 2π-periodic whatever the circumference; the circumference only
//! scales lengths.

mod poincare;
mod warp;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use warp::WarpFunction;

const TAU: f64 = 2.0 * PI;

/// Relative distance to the half-circumference below which two points count as antipodal.
pub const ANTIPODE_REL_TOL: f64 = 1e-9;

/// Relative singular-value cut used for numeric rank.
pub const RANK_REL_TOL: f64 = 1e-8;

const SPHERE_NORM_TOL: f64 = 1e-12;

/// Tagged description of a model metric space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "space", rename_all = "snake_case")]
pub enum SpaceDescriptor {
    Circle {
        #[serde(rename = "L")]
        circumference: f64,
    },
    Sphere {
        d: usize,
        #[serde(default = "unit_radius")]
        r: f64,
    },
    /// Poincaré ball of curvature −1.
    Hyperbolic { d: usize },
    Euclidean { d: usize },
    /// `S¹(L) × ℝ` with the product metric.
    Cylinder {
        #[serde(rename = "L")]
        circumference: f64,
    },
    FlatTorus {
        #[serde(rename = "L")]
        circumferences: Vec<f64>,
    },
    /// `S¹ × ℝ` with metric `f(z) dθ² + dz²`.
    Warped { warp: WarpFunction },
}

fn unit_radius() -> f64 {
    1.0
}

/// A point in chart coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn new(coords: impl Into<Vec<f64>>) -> Self {
        Point(coords.into())
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

/// A tangent vector in chart components, with its Riemannian norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    pub base: Point,
    pub components: Vec<f64>,
    pub norm: f64,
}

/// The designated minimal closed geodesic of a space carrying one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleFactor {
    /// Length of the closed geodesic.
    pub length: f64,
}

#[derive(Debug, Clone, Copy)]
enum Factor {
    Angle { scale: f64 },
    Line,
}

/// Wrapped angular difference `b − a` in `(−π, π]`.
pub fn wrap_diff(a: f64, b: f64) -> f64 {
    let d = (b - a).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

/// Angle wrapped into `[0, 2π)`.
pub fn wrap_angle(t: f64) -> f64 {
    let w = t.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

impl SpaceDescriptor {
    pub fn circle(circumference: f64) -> Self {
        SpaceDescriptor::Circle { circumference }
    }

    pub fn sphere(d: usize, r: f64) -> Self {
        SpaceDescriptor::Sphere { d, r }
    }

    pub fn hyperbolic(d: usize) -> Self {
        SpaceDescriptor::Hyperbolic { d }
    }

    pub fn euclidean(d: usize) -> Self {
        SpaceDescriptor::Euclidean { d }
    }

    pub fn cylinder(circumference: f64) -> Self {
        SpaceDescriptor::Cylinder { circumference }
    }

    pub fn flat_torus(circumferences: Vec<f64>) -> Self {
        SpaceDescriptor::FlatTorus { circumferences }
    }

    pub fn warped(warp: WarpFunction) -> Self {
        SpaceDescriptor::Warped { warp }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let space: SpaceDescriptor = serde_json::from_str(s)
            .map_err(|e| Error::InvalidParameter(format!("space descriptor: {e}")))?;
        space.validate()?;
        Ok(space)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
            }
        };
        let dimension = |d: usize| {
            if d >= 1 {
                Ok(())
            } else {
                Err(Error::InvalidParameter("dimension must be >= 1".into()))
            }
        };
        match self {
            SpaceDescriptor::Circle { circumference } | SpaceDescriptor::Cylinder { circumference } => {
                positive("L", *circumference)
            }
            SpaceDescriptor::Sphere { d, r } => {
                dimension(*d)?;
                positive("r", *r)
            }
            SpaceDescriptor::Hyperbolic { d } | SpaceDescriptor::Euclidean { d } => dimension(*d),
            SpaceDescriptor::FlatTorus { circumferences } => {
                if circumferences.is_empty() {
                    return Err(Error::InvalidParameter("flat torus needs >= 1 factor".into()));
                }
                circumferences.iter().try_for_each(|l| positive("L", *l))
            }
            SpaceDescriptor::Warped { warp } => warp.validate(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SpaceDescriptor::Circle { .. } => "circle",
            SpaceDescriptor::Sphere { .. } => "sphere",
            SpaceDescriptor::Hyperbolic { .. } => "hyperbolic",
            SpaceDescriptor::Euclidean { .. } => "euclidean",
            SpaceDescriptor::Cylinder { .. } => "cylinder",
            SpaceDescriptor::FlatTorus { .. } => "flat_torus",
            SpaceDescriptor::Warped { .. } => "warped",
        }
    }

    /// Manifold dimension.
    pub fn dim(&self) -> usize {
        match self {
            SpaceDescriptor::Circle { .. } => 1,
            SpaceDescriptor::Sphere { d, .. }
            | SpaceDescriptor::Hyperbolic { d }
            | SpaceDescriptor::Euclidean { d } => *d,
            SpaceDescriptor::Cylinder { .. } | SpaceDescriptor::Warped { .. } => 2,
            SpaceDescriptor::FlatTorus { circumferences } => circumferences.len(),
        }
    }

    /// Number of chart coordinates per point.
    pub fn coord_len(&self) -> usize {
        match self {
            SpaceDescriptor::Sphere { d, .. } => d + 1,
            _ => self.dim(),
        }
    }

    /// Whether distances, exponentials and minimal directions have closed forms.
    pub fn is_analytic(&self) -> bool {
        !matches!(self, SpaceDescriptor::Warped { .. })
    }

    fn factors(&self) -> Option<Vec<Factor>> {
        let angle = |l: f64| Factor::Angle { scale: l / TAU };
        match self {
            SpaceDescriptor::Circle { circumference } => Some(vec![angle(*circumference)]),
            SpaceDescriptor::Cylinder { circumference } => {
                Some(vec![angle(*circumference), Factor::Line])
            }
            SpaceDescriptor::FlatTorus { circumferences } => {
                Some(circumferences.iter().map(|l| angle(*l)).collect())
            }
            SpaceDescriptor::Euclidean { d } => Some(vec![Factor::Line; *d]),
            _ => None,
        }
    }

    /// Validates coordinates and returns a normalized point (angles wrapped).
    pub fn point(&self, coords: impl Into<Vec<f64>>) -> Result<Point> {
        let mut p = Point(coords.into());
        self.check_point(&p)?;
        match self {
            SpaceDescriptor::Circle { .. } | SpaceDescriptor::FlatTorus { .. } => {
                p.0.iter_mut().for_each(|t| *t = wrap_angle(*t));
            }
            SpaceDescriptor::Cylinder { .. } | SpaceDescriptor::Warped { .. } => {
                p.0[0] = wrap_angle(p.0[0]);
            }
            _ => {}
        }
        Ok(p)
    }

    pub fn check_point(&self, p: &Point) -> Result<()> {
        if p.dim() != self.coord_len() {
            return Err(Error::OutOfChart(format!(
                "{} expects {} coordinates, got {}",
                self.name(),
                self.coord_len(),
                p.dim()
            )));
        }
        if p.0.iter().any(|x| !x.is_finite()) {
            return Err(Error::OutOfChart("non-finite coordinate".into()));
        }
        match self {
            SpaceDescriptor::Sphere { .. } => {
                let n = norm(&p.0);
                if (n - 1.0).abs() > SPHERE_NORM_TOL {
                    return Err(Error::OutOfChart(format!(
                        "sphere coordinates must have unit norm, got {n}"
                    )));
                }
            }
            SpaceDescriptor::Hyperbolic { .. } if poincare::norm_sq(&p.0) >= 1.0 => {
                return Err(Error::OutOfChart(
                    "hyperbolic coordinates must lie in the open unit ball".into(),
                ));
            }
            _ => {}
        }
        Ok(())
    }

    /// Geodesic distance.
    pub fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        if !self.is_analytic() {
            return Err(Error::AnalyticUnavailable("warped"));
        }
        self.check_point(p)?;
        self.check_point(q)?;
        Ok(self.distance_unchecked(p, q))
    }

    /// Distance without coordinate validation. Returns NaN for warped spaces.
    pub(crate) fn distance_unchecked(&self, p: &Point, q: &Point) -> f64 {
        if let Some(factors) = self.factors() {
            let sq: f64 = factors
                .iter()
                .zip(p.0.iter().zip(&q.0))
                .map(|(f, (a, b))| {
                    let delta = match f {
                        Factor::Angle { scale } => scale * wrap_diff(*a, *b).abs(),
                        Factor::Line => b - a,
                    };
                    delta * delta
                })
                .sum();
            return sq.sqrt();
        }
        match self {
            SpaceDescriptor::Sphere { r, .. } => {
                // 2·atan2(‖p−q‖, ‖p+q‖) equals arccos(⟨p,q⟩) and stays accurate
                // near coincidence and near antipodes.
                let (mut minus, mut plus) = (0.0, 0.0);
                for (a, b) in p.0.iter().zip(&q.0) {
                    minus += (a - b) * (a - b);
                    plus += (a + b) * (a + b);
                }
                r * 2.0 * minus.sqrt().atan2(plus.sqrt())
            }
            SpaceDescriptor::Hyperbolic { .. } => poincare::distance(&p.0, &q.0),
            _ => f64::NAN,
        }
    }

    /// Chart components mapped into an orthonormal frame of the metric at `base`.
    pub fn metric_frame(&self, base: &Point, components: &[f64]) -> Result<Vec<f64>> {
        self.check_point(base)?;
        if components.len() != self.coord_len() {
            return Err(Error::InvalidParameter(format!(
                "tangent vector needs {} components, got {}",
                self.coord_len(),
                components.len()
            )));
        }
        if let Some(factors) = self.factors() {
            return Ok(factors
                .iter()
                .zip(components)
                .map(|(f, c)| match f {
                    Factor::Angle { scale } => scale * c,
                    Factor::Line => *c,
                })
                .collect());
        }
        Ok(match self {
            SpaceDescriptor::Sphere { r, .. } => components.iter().map(|c| r * c).collect(),
            SpaceDescriptor::Hyperbolic { .. } => {
                let lambda = poincare::conformal_factor(&base.0);
                components.iter().map(|c| lambda * c).collect()
            }
            SpaceDescriptor::Warped { warp } => {
                vec![warp.eval(base.0[1]).sqrt() * components[0], components[1]]
            }
            _ => unreachable!("product spaces handled above"),
        })
    }

    /// Riemannian inner product of two chart vectors at `base`.
    pub fn metric_inner(&self, base: &Point, u: &[f64], v: &[f64]) -> Result<f64> {
        Ok(dot(&self.metric_frame(base, u)?, &self.metric_frame(base, v)?))
    }

    /// Builds a tangent vector at `base`, checking tangency on the sphere.
    pub fn tangent(&self, base: &Point, components: Vec<f64>) -> Result<TangentVector> {
        if let SpaceDescriptor::Sphere { .. } = self {
            let radial = dot(&base.0, &components);
            if radial.abs() > 1e-10 * norm(&components).max(1.0) {
                return Err(Error::InvalidParameter(format!(
                    "vector is not tangent to the sphere (radial part {radial:e})"
                )));
            }
        }
        let frame = self.metric_frame(base, &components)?;
        Ok(TangentVector {
            base: base.clone(),
            components,
            norm: norm(&frame),
        })
    }

    /// Unit-norm tangent vector in the direction of `components`.
    pub fn unit_tangent(&self, base: &Point, components: Vec<f64>) -> Result<TangentVector> {
        let t = self.tangent(base, components)?;
        if t.norm == 0.0 {
            return Err(Error::InvalidParameter("zero tangent vector".into()));
        }
        let comps = t.components.iter().map(|c| c / t.norm).collect();
        self.tangent(base, comps)
    }

    /// Exponential map `exp_p(v)` for chart components `v`.
    ///
    /// On warped products only meridian directions (`dθ = 0`) are supported,
    /// where the geodesic is the coordinate line itself.
    pub fn exp(&self, p: &Point, v: &[f64]) -> Result<Point> {
        self.check_point(p)?;
        if v.len() != self.coord_len() {
            return Err(Error::InvalidParameter("tangent dimension mismatch".into()));
        }
        if let Some(factors) = self.factors() {
            let coords = factors
                .iter()
                .zip(p.0.iter().zip(v))
                .map(|(f, (x, dx))| match f {
                    Factor::Angle { .. } => wrap_angle(x + dx),
                    Factor::Line => x + dx,
                })
                .collect();
            return Ok(Point(coords));
        }
        match self {
            SpaceDescriptor::Sphere { .. } => {
                let t = norm(v);
                if t == 0.0 {
                    return Ok(p.clone());
                }
                let (s, c) = t.sin_cos();
                let mut q: Vec<f64> = p.0.iter().zip(v).map(|(x, vi)| c * x + s * vi / t).collect();
                let n = norm(&q);
                q.iter_mut().for_each(|x| *x /= n);
                Ok(Point(q))
            }
            SpaceDescriptor::Hyperbolic { .. } => {
                let q = Point(poincare::exp(&p.0, v));
                self.check_point(&q)?;
                Ok(q)
            }
            SpaceDescriptor::Warped { .. } => {
                if v[0] != 0.0 {
                    return Err(Error::AnalyticUnavailable("warped exponential off meridians"));
                }
                Ok(Point(vec![p.0[0], p.0[1] + v[1]]))
            }
            _ => unreachable!("product spaces handled above"),
        }
    }

    /// The designated minimal closed geodesic: the circle itself, the waist of a
    /// cylinder or warped product, the first factor of a flat torus, or the
    /// equator of a sphere.
    pub fn circle_factor(&self) -> Result<CircleFactor> {
        let length = match self {
            SpaceDescriptor::Circle { circumference } | SpaceDescriptor::Cylinder { circumference } => {
                *circumference
            }
            SpaceDescriptor::FlatTorus { circumferences } => circumferences[0],
            SpaceDescriptor::Warped { warp } => warp.waist_length(),
            SpaceDescriptor::Sphere { r, .. } => TAU * r,
            SpaceDescriptor::Hyperbolic { .. } | SpaceDescriptor::Euclidean { .. } => {
                return Err(Error::NoCircleFactor)
            }
        };
        Ok(CircleFactor { length })
    }

    /// Point at angle `t` on the designated closed geodesic.
    pub fn waist_point(&self, t: f64) -> Result<Point> {
        self.circle_factor()?;
        let t = wrap_angle(t);
        Ok(Point(match self {
            SpaceDescriptor::Circle { .. } => vec![t],
            SpaceDescriptor::Cylinder { .. } => vec![t, 0.0],
            SpaceDescriptor::FlatTorus { circumferences } => {
                let mut c = vec![0.0; circumferences.len()];
                c[0] = t;
                c
            }
            SpaceDescriptor::Warped { warp } => vec![t, warp.minimizer()],
            SpaceDescriptor::Sphere { d, .. } => {
                let mut c = vec![0.0; d + 1];
                c[0] = t.cos();
                c[1] = t.sin();
                c
            }
            _ => unreachable!(),
        }))
    }

    /// Antipodal point of `p` along the designated closed geodesic.
    pub fn antipode(&self, p: &Point) -> Result<Point> {
        self.circle_factor()?;
        self.check_point(p)?;
        match self {
            SpaceDescriptor::Sphere { .. } => Ok(Point(p.0.iter().map(|x| -x).collect())),
            SpaceDescriptor::Warped { warp } => {
                let z0 = warp.minimizer();
                if (p.0[1] - z0).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "point z={} is not on the waist z0={z0}",
                        p.0[1]
                    )));
                }
                Ok(Point(vec![wrap_angle(p.0[0] + PI), p.0[1]]))
            }
            _ => {
                let mut q = p.clone();
                q.0[0] = wrap_angle(q.0[0] + PI);
                Ok(q)
            }
        }
    }

    /// Unit initial velocities of the minimal geodesics from `p` to `q`.
    ///
    /// When the set is infinite (sphere antipodes) a basis of its span is returned.
    pub fn minimal_direction_set(&self, p: &Point, q: &Point) -> Result<Vec<TangentVector>> {
        if !self.is_analytic() {
            return Err(Error::AnalyticUnavailable("warped"));
        }
        let dist = self.distance(p, q)?;
        if dist < 1e-12 {
            return Err(Error::CoincidentPoints);
        }
        if let Some(factors) = self.factors() {
            // Each antipodal angle factor contributes both arc orientations.
            let mut deltas: Vec<Vec<f64>> = vec![Vec::with_capacity(factors.len())];
            for (f, (a, b)) in factors.iter().zip(p.0.iter().zip(&q.0)) {
                let options = match f {
                    Factor::Angle { .. } => {
                        let d = wrap_diff(*a, *b);
                        if d.abs() >= PI * (1.0 - ANTIPODE_REL_TOL) {
                            vec![PI, -PI]
                        } else {
                            vec![d]
                        }
                    }
                    Factor::Line => vec![b - a],
                };
                deltas = deltas
                    .into_iter()
                    .flat_map(|prefix| {
                        options.iter().map(move |o| {
                            let mut next = prefix.clone();
                            next.push(*o);
                            next
                        })
                    })
                    .collect();
            }
            return deltas
                .into_iter()
                .map(|d| self.unit_tangent(p, d))
                .collect();
        }
        match self {
            SpaceDescriptor::Sphere { r, .. } => {
                if dist >= PI * r * (1.0 - ANTIPODE_REL_TOL) {
                    tangent_basis(&p.0)
                        .into_iter()
                        .map(|v| self.unit_tangent(p, v))
                        .collect()
                } else {
                    let pq = dot(&p.0, &q.0);
                    let w: Vec<f64> = p.0.iter().zip(&q.0).map(|(a, b)| b - pq * a).collect();
                    Ok(vec![self.unit_tangent(p, w)?])
                }
            }
            SpaceDescriptor::Hyperbolic { .. } => {
                let u = poincare::unit_direction(&p.0, &q.0);
                Ok(vec![self.unit_tangent(p, u)?])
            }
            _ => unreachable!(),
        }
    }

    fn is_sphere_antipodal(&self, p: &Point, q: &Point) -> bool {
        match self {
            SpaceDescriptor::Sphere { r, .. } => {
                self.distance_unchecked(p, q) >= PI * r * (1.0 - ANTIPODE_REL_TOL)
            }
            _ => false,
        }
    }

    /// Dimension of the span of minimal-geodesic initial directions from `p`
    /// to every target.
    pub fn shortest_direction_span_dim(&self, p: &Point, targets: &[Point]) -> Result<usize> {
        if targets.is_empty() {
            return Err(Error::InvalidParameter("targets must be nonempty".into()));
        }
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for t in targets {
            for v in self.minimal_direction_set(p, t)? {
                rows.push(self.metric_frame(p, &v.components)?);
            }
        }
        Ok(numeric_rank(&rows).min(self.dim()))
    }

    /// Compares finite-difference slopes of `ε ↦ d(p_i, exp_{p_n}(ε·v))` at `ε = 0`
    /// with the first-variation value `⟨v, g′(d)⟩` for the minimal geodesic `g`
    /// from `p_i` to `p_n`. Returns `(lhs, rhs)` per epsilon.
    ///
    /// When several minimal geodesics reach `p_n`, the right derivative is the
    /// minimum of the inner product over them.
    pub fn first_variation_probe(
        &self,
        p_i: &Point,
        p_n: &Point,
        direction: &TangentVector,
        epsilons: &[f64],
    ) -> Result<Vec<(f64, f64)>> {
        if !self.is_analytic() {
            return Err(Error::AnalyticUnavailable("warped"));
        }
        if direction.base != *p_n {
            return Err(Error::InvalidParameter("direction must be based at p_n".into()));
        }
        let dir = self.tangent(p_n, direction.components.clone())?;
        if (dir.norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "direction must be unit-norm, got {}",
                dir.norm
            )));
        }
        if epsilons.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(Error::InvalidParameter("epsilons must be positive".into()));
        }

        // Terminal velocity of g at p_n is minus the initial velocity from p_n back to p_i.
        let rhs = if self.is_sphere_antipodal(p_n, p_i) {
            -dir.norm
        } else {
            self.minimal_direction_set(p_n, p_i)?
                .iter()
                .map(|w| self.metric_inner(p_n, &dir.components, &w.components).map(|x| -x))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(f64::INFINITY, f64::min)
        };

        let base = self.distance(p_i, p_n)?;
        epsilons
            .iter()
            .map(|&eps| {
                let step: Vec<f64> = dir.components.iter().map(|c| eps * c).collect();
                let moved = self.exp(p_n, &step)?;
                let lhs = (self.distance(p_i, &moved)? - base) / eps;
                Ok((lhs, rhs))
            })
            .collect()
    }

    /// Draws a point from a fixed reference distribution on the space:
    /// uniform angles, uniform sphere, `z`/line coordinates uniform in `[−1, 1]`,
    /// and hyperbolic points uniform in the Euclidean ball of radius 0.9.
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let angle = |rng: &mut R| rng.random_range(0.0..TAU);
        let line = |rng: &mut R| rng.random_range(-1.0..=1.0);
        Point(match self {
            SpaceDescriptor::Circle { .. } => vec![angle(rng)],
            SpaceDescriptor::FlatTorus { circumferences } => {
                circumferences.iter().map(|_| angle(rng)).collect()
            }
            SpaceDescriptor::Cylinder { .. } => vec![angle(rng), line(rng)],
            SpaceDescriptor::Warped { warp } => vec![angle(rng), warp.minimizer() + line(rng)],
            SpaceDescriptor::Euclidean { d } => (0..*d).map(|_| line(rng)).collect(),
            SpaceDescriptor::Sphere { d, .. } => loop {
                let g: Vec<f64> = (0..=*d).map(|_| rng.sample(StandardNormal)).collect();
                let n = norm(&g);
                if n > 1e-8 {
                    break g.into_iter().map(|x| x / n).collect();
                }
            },
            SpaceDescriptor::Hyperbolic { d } => loop {
                let g: Vec<f64> = (0..*d).map(|_| rng.sample(StandardNormal)).collect();
                let n = norm(&g);
                if n > 1e-8 {
                    let u: f64 = rng.random();
                    let radius = 0.9 * u.powf(1.0 / *d as f64);
                    break g.into_iter().map(|x| radius * x / n).collect();
                }
            },
        })
    }
}

/// Orthonormal basis of the orthogonal complement of the unit vector `p`.
fn tangent_basis(p: &[f64]) -> Vec<Vec<f64>> {
    let n = p.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    // Start from the axes least aligned with p.
    order.sort_by(|&a, &b| p[a].abs().total_cmp(&p[b].abs()));
    for k in order {
        if basis.len() == n - 1 {
            break;
        }
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        for _ in 0..2 {
            let along = dot(&v, p);
            v.iter_mut().zip(p).for_each(|(x, y)| *x -= along * y);
            for b in &basis {
                let c = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let nv = norm(&v);
        if nv > 1e-6 {
            basis.push(v.into_iter().map(|x| x / nv).collect());
        }
    }
    basis
}

/// Numeric rank: singular values above `RANK_REL_TOL` times the largest.
pub fn numeric_rank(rows: &[Vec<f64>]) -> usize {
    if rows.is_empty() || rows[0].is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
    let sv = m.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > RANK_REL_TOL * max).count()
}

/// Inclusion `H^d → H^{d+1}` appending a zero coordinate.
pub fn embed_hyperbolic(p: &Point) -> Result<Point> {
    SpaceDescriptor::hyperbolic(p.dim().max(1)).check_point(p)?;
    let mut c = p.0.clone();
    c.push(0.0);
    Ok(Point(c))
}

/// Quasi-uniform points on the unit sphere `S²` (Fibonacci lattice).
pub fn fibonacci_sphere(n: usize) -> Vec<Point> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - (2.0 * k as f64 + 1.0) / n as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * k as f64;
            let v = [rho * phi.cos(), rho * phi.sin(), z];
            let nv = norm(&v);
            Point(v.iter().map(|x| x / nv).collect())
        })
        .collect()
}
