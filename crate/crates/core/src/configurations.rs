//! Critical configurations and perturbation witnesses.
//!
//! A configuration is *H-critical* when its form `Σ c_i c_j d^{2H}(P_i, P_j)`
//! vanishes. If some point `P_i` of a critical configuration has minimal
//! geodesics to the others spanning less than the whole tangent space, moving
//! a copy of `P_i` a distance `ε` in a perpendicular direction and splitting
//! its coefficient in half produces a form `c_i²/2 · ε^{2H} + o(ε^{2H})`, which
//! is positive for small `ε`: `d^{2H}` is then not negative definite.
//!
//! On a minimal closed geodesic of length `L`, two pairs of antipodal points
//! with coefficients `(1, −1, 1, −1)` form a 1/2-critical configuration whose
//! shortest directions all run along the geodesic.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::definiteness::{
    form_scale, form_value, power_matrix, quadratic_form, zero_sum_extremes, Configuration,
};
use crate::discrete_geodesics::{build_graph, ParametricChart, DEFAULT_STENCIL_RADIUS};
use crate::error::{Error, Result};
use crate::spaces::{wrap_angle, wrap_diff, Point, SpaceDescriptor, TangentVector, WarpFunction};

/// Default ε schedule for perturbation witnesses.
pub const DEFAULT_EPS_SCHEDULE: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

/// Criticality tolerance relative to `n · max d^{2H}`.
pub const CRITICAL_REL_TOL: f64 = 1e-8;

/// Maximum metric inner product between the perturbation direction and any
/// shortest direction.
pub const PERPENDICULAR_TOL: f64 = 1e-8;

/// Positive forms must exceed this multiple of the rounding tolerance.
pub const CERTIFY_FACTOR: f64 = 10.0;

/// Four points at angles `(t, t+a, t+π, t+π+a)` on the designated closed
/// geodesic, with coefficients `(1, −1, 1, −1)`.
pub fn antipodal_quadruple(space: &SpaceDescriptor, base: f64, offset: f64) -> Result<Configuration> {
    space.circle_factor()?;
    if !(offset.is_finite() && offset > 0.0 && offset < PI) {
        return Err(Error::DegenerateOffset(offset));
    }
    let points = [base, base + offset, base + PI, base + PI + offset]
        .iter()
        .map(|t| space.waist_point(*t))
        .collect::<Result<Vec<_>>>()?;
    Configuration::new(space, points, vec![1.0, -1.0, 1.0, -1.0])
}

/// Per-point dimensions of the spaces of shortest directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionGReport {
    pub span_dims: Vec<usize>,
    pub dim: usize,
    pub passes: bool,
}

impl ConditionGReport {
    /// Indices whose span is smaller than the manifold dimension.
    pub fn failing(&self) -> Vec<usize> {
        (0..self.span_dims.len())
            .filter(|&i| self.span_dims[i] < self.dim)
            .collect()
    }
}

pub fn check_condition_g(space: &SpaceDescriptor, config: &Configuration) -> Result<ConditionGReport> {
    if !space.is_analytic() {
        return Err(Error::AnalyticUnavailable("warped"));
    }
    let dim = space.dim();
    let span_dims = (0..config.len())
        .map(|i| {
            let others: Vec<Point> = config
                .points
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, p)| p.clone())
                .collect();
            space.shortest_direction_span_dim(&config.points[i], &others)
        })
        .collect::<Result<Vec<_>>>()?;
    let passes = span_dims.iter().all(|&d| d == dim);
    Ok(ConditionGReport { span_dims, dim, passes })
}

/// Base configuration echoed in a certificate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaseConfig {
    pub points: Vec<Point>,
    pub coeffs: Vec<f64>,
    pub form: f64,
}

/// Record of a perturbation witness.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WitnessCertificate {
    pub space: SpaceDescriptor,
    #[serde(rename = "H")]
    pub h: f64,
    pub base_config: BaseConfig,
    pub span_dims: Vec<usize>,
    /// Index of the point whose copy is moved.
    pub failing_index: usize,
    /// Chart components of the unit perpendicular direction at the failing point.
    pub direction: Vec<f64>,
    pub eps_values: Vec<f64>,
    /// Perturbed forms; certified lower bounds when distances are only bracketed.
    pub forms: Vec<f64>,
    /// Upper bounds of the perturbed forms when distances are only bracketed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forms_upper: Option<Vec<f64>>,
    /// Perturbed configurations, one per ε.
    pub perturbed: Vec<Configuration>,
    /// Rounding tolerance per ε.
    pub tolerances: Vec<f64>,
    pub certified: bool,
    /// Smallest scheduled ε with a certified positive form.
    pub certified_epsilon: Option<f64>,
    /// `form / ε^{2H}` per ε.
    pub slope_estimates: Vec<f64>,
    /// `c_i² / 2`, the limit of the slope when all first variations vanish.
    pub expected_slope: f64,
}

/// Perturbed configuration: a copy of point `index` moved to `moved`, the
/// coefficient of `index` split equally between the two.
pub fn split_configuration(config: &Configuration, index: usize, moved: Point) -> Configuration {
    let mut points = config.points.clone();
    let mut coefficients = config.coefficients.clone();
    let half = coefficients[index] / 2.0;
    coefficients[index] = half;
    points.push(moved);
    coefficients.push(half);
    Configuration { points, coefficients }
}

/// Worst-case rounding bound for a double sum of `n²` terms.
fn rounding_tolerance(a: &nalgebra::DMatrix<f64>, c: &[f64]) -> f64 {
    let n = c.len();
    let mut abs_sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            abs_sum += (c[i] * c[j] * a[(i, j)]).abs();
        }
    }
    (n * n) as f64 * f64::EPSILON * abs_sum
}

fn check_schedule(eps_schedule: &[f64]) -> Result<()> {
    if eps_schedule.is_empty() || eps_schedule.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(Error::InvalidParameter("epsilon schedule must be nonempty and positive".into()));
    }
    Ok(())
}

fn check_witness_hurst(h: f64) -> Result<()> {
    if h > 0.0 && h < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "perturbation witnesses need H in (0, 1), got {h}"
        )))
    }
}

/// Largest `|⟨v, w⟩|` over shortest directions `w` from `config[index]` to the others.
fn perpendicular_residual(
    space: &SpaceDescriptor,
    config: &Configuration,
    index: usize,
    v: &[f64],
) -> Result<f64> {
    let p = &config.points[index];
    let mut worst = 0.0f64;
    for (j, q) in config.points.iter().enumerate() {
        if j == index {
            continue;
        }
        for w in space.minimal_direction_set(p, q)? {
            worst = worst.max(space.metric_inner(p, v, &w.components)?.abs());
        }
    }
    Ok(worst)
}

/// Moves a copy of `config[index]` along `direction` for each ε and records
/// the perturbed forms.
pub fn perturb_witness(
    space: &SpaceDescriptor,
    config: &Configuration,
    index: usize,
    direction: &TangentVector,
    h: f64,
    eps_schedule: &[f64],
) -> Result<WitnessCertificate> {
    check_witness_hurst(h)?;
    check_schedule(eps_schedule)?;
    if !space.is_analytic() {
        return Err(Error::AnalyticUnavailable("warped"));
    }
    if index >= config.len() {
        return Err(Error::InvalidParameter(format!("point index {index} out of range")));
    }
    let base_point = &config.points[index];
    if direction.base != *base_point {
        return Err(Error::InvalidParameter("direction must be based at the moved point".into()));
    }
    let dir = space.tangent(base_point, direction.components.clone())?;
    if (dir.norm - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter(format!(
            "direction must be unit-norm, got {}",
            dir.norm
        )));
    }

    let a = power_matrix(space, &config.points, h)?;
    let base_form = form_value(&a, &config.coefficients);
    let crit_tol = CRITICAL_REL_TOL * form_scale(&a);
    if base_form.abs() >= crit_tol {
        return Err(Error::NotCritical { form: base_form, tol: crit_tol });
    }
    let residual = perpendicular_residual(space, config, index, &dir.components)?;
    if residual > PERPENDICULAR_TOL {
        return Err(Error::DirectionNotPerpendicular(residual));
    }
    let span_dims = check_condition_g(space, config)?.span_dims;

    let mut perturbed = Vec::with_capacity(eps_schedule.len());
    let mut forms = Vec::with_capacity(eps_schedule.len());
    let mut tolerances = Vec::with_capacity(eps_schedule.len());
    for &eps in eps_schedule {
        let step: Vec<f64> = dir.components.iter().map(|c| eps * c).collect();
        let moved = space.exp(base_point, &step)?;
        let next = split_configuration(config, index, moved);
        let a = power_matrix(space, &next.points, h)?;
        forms.push(form_value(&a, &next.coefficients));
        tolerances.push(rounding_tolerance(&a, &next.coefficients));
        perturbed.push(next);
    }

    finish_certificate(
        space.clone(),
        h,
        config,
        base_form,
        span_dims,
        index,
        dir.components,
        eps_schedule,
        forms,
        None,
        perturbed,
        tolerances,
    )
}

#[allow(clippy::too_many_arguments)]
fn finish_certificate(
    space: SpaceDescriptor,
    h: f64,
    config: &Configuration,
    base_form: f64,
    span_dims: Vec<usize>,
    index: usize,
    direction: Vec<f64>,
    eps_schedule: &[f64],
    forms: Vec<f64>,
    forms_upper: Option<Vec<f64>>,
    perturbed: Vec<Configuration>,
    tolerances: Vec<f64>,
) -> Result<WitnessCertificate> {
    let certified_epsilon = eps_schedule
        .iter()
        .zip(forms.iter().zip(&tolerances))
        .filter(|(_, (f, tol))| **f > CERTIFY_FACTOR * **tol)
        .map(|(e, _)| *e)
        .fold(None, |acc: Option<f64>, e| Some(acc.map_or(e, |a| a.min(e))));
    if certified_epsilon.is_none() {
        return Err(Error::NoPositivityFound);
    }
    let slope_estimates = eps_schedule
        .iter()
        .zip(&forms)
        .map(|(e, f)| f / e.powf(2.0 * h))
        .collect();
    let ci = config.coefficients[index];
    Ok(WitnessCertificate {
        space,
        h,
        base_config: BaseConfig {
            points: config.points.clone(),
            coeffs: config.coefficients.clone(),
            form: base_form,
        },
        span_dims,
        failing_index: index,
        direction,
        eps_values: eps_schedule.to_vec(),
        forms,
        forms_upper,
        perturbed,
        tolerances,
        certified: true,
        certified_epsilon,
        slope_estimates,
        expected_slope: ci * ci / 2.0,
    })
}

/// Unit chart axis at `config[index]` perpendicular to every shortest direction.
fn canonical_perpendicular(
    space: &SpaceDescriptor,
    config: &Configuration,
    index: usize,
) -> Result<TangentVector> {
    let p = &config.points[index];
    for k in 0..space.coord_len() {
        let mut e = vec![0.0; space.coord_len()];
        e[k] = 1.0;
        let Ok(v) = space.unit_tangent(p, e) else { continue };
        if perpendicular_residual(space, config, index, &v.components)? <= PERPENDICULAR_TOL {
            return Ok(v);
        }
    }
    Err(Error::InvalidParameter(
        "no chart axis is perpendicular to the shortest directions".into(),
    ))
}

/// Outcome of checking that the waist of a warped product is minimal.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaistCheck {
    pub graph_distance: f64,
    pub waist_half_length: f64,
    pub path_deviation: f64,
    pub z_spacing: f64,
    pub verified: bool,
}

/// Shortest path between antipodal waist points of `f(z) dθ² + dz²` on a grid
/// graph over `z ∈ [z0 − 1, z0 + 1]`: it must stay within one grid row of the
/// waist and match the waist half-length within 1%.
pub fn verify_waist_minimality(warp: &WarpFunction) -> Result<WaistCheck> {
    warp.validate()?;
    let z0 = warp.minimizer();
    let chart = ParametricChart::Warped {
        z_min: z0 - 1.0,
        z_max: z0 + 1.0,
        warp: warp.clone(),
    };
    let g = build_graph(&chart, 128, 33, DEFAULT_STENCIL_RADIUS)?;
    let u = g.nearest_vertex(0.0, z0)?;
    let v = g.nearest_vertex(PI, z0)?;
    let (len, path) = g.graph_distance(u, v)?;
    let dev = g.path_deviation(&path, z0)?;
    let half = warp.waist_length() / 2.0;
    let spacing = g.z_spacing();
    Ok(WaistCheck {
        graph_distance: len,
        waist_half_length: half,
        path_deviation: dev,
        z_spacing: spacing,
        verified: dev <= spacing + 1e-12 && (len - half).abs() <= 0.01 * half,
    })
}

/// Lower and upper bounds on warped-product distances.
///
/// Lower: `f ≥ f(z0)` makes the metric dominate the flat cylinder of waist
/// circumference. Upper: length of the straight chart segment. Both are exact
/// for pairs on the waist and for pairs on a common meridian.
fn warped_distance_bounds(warp: &WarpFunction, p: &Point, q: &Point) -> (f64, f64) {
    let z0 = warp.minimizer();
    let f0 = warp.eval(z0);
    let dt = wrap_diff(p.0[0], q.0[0]);
    let (zp, dz) = (p.0[1], q.0[1] - p.0[1]);
    if dt == 0.0 {
        return (dz.abs(), dz.abs());
    }
    if zp == z0 && dz == 0.0 {
        let d = f0.sqrt() * dt.abs();
        return (d, d);
    }
    let lower = (f0 * dt * dt + dz * dz).sqrt();
    // composite Simpson on the straight chart segment
    const M: usize = 512;
    let speed = |t: f64| (warp.eval(zp + t * dz) * dt * dt + dz * dz).sqrt();
    let h = 1.0 / M as f64;
    let mut s = speed(0.0) + speed(1.0);
    for k in 1..M {
        s += speed(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    let upper = (s * h / 3.0).max(lower);
    (lower, upper)
}

fn warped_form_bounds(warp: &WarpFunction, config: &Configuration) -> (f64, f64, f64) {
    let n = config.len();
    let c = &config.coefficients;
    let (mut lo, mut hi, mut abs_sum) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (dl, du) = warped_distance_bounds(warp, &config.points[i], &config.points[j]);
            let w = c[i] * c[j];
            if w > 0.0 {
                lo += w * dl;
                hi += w * du;
            } else {
                lo += w * du;
                hi += w * dl;
            }
            abs_sum += (w * du).abs();
        }
    }
    (lo, hi, (n * n) as f64 * f64::EPSILON * abs_sum)
}

/// Witness on a warped product at `H = 1/2`, using bracketed distances.
fn warped_witness(warp: &WarpFunction, eps_schedule: &[f64]) -> Result<WitnessCertificate> {
    let space = SpaceDescriptor::warped(warp.clone());
    let check = verify_waist_minimality(warp)?;
    if !check.verified {
        return Err(Error::InvalidParameter(format!(
            "waist minimality not verified (deviation {}, spacing {})",
            check.path_deviation, check.z_spacing
        )));
    }
    let config = antipodal_quadruple(&space, 0.0, PI / 2.0)?;
    // Minimal geodesics between waist points stay on the waist, so every
    // point sees only ±∂θ: span 1 of 2.
    let span_dims = vec![1; config.len()];
    let index = config.len() - 1;
    let (base_lo, base_hi, _) = warped_form_bounds(warp, &config);
    let base_form = 0.5 * (base_lo + base_hi);

    let mut perturbed = Vec::new();
    let (mut forms, mut uppers, mut tolerances) = (Vec::new(), Vec::new(), Vec::new());
    for &eps in eps_schedule {
        let moved = space.exp(&config.points[index], &[0.0, eps])?;
        let next = split_configuration(&config, index, moved);
        let (lo, hi, tol) = warped_form_bounds(warp, &next);
        forms.push(lo);
        uppers.push(hi);
        tolerances.push(tol);
        perturbed.push(next);
    }
    finish_certificate(
        space,
        0.5,
        &config,
        base_form,
        span_dims,
        index,
        vec![0.0, 1.0],
        eps_schedule,
        forms,
        Some(uppers),
        perturbed,
        tolerances,
    )
}

/// Antipodal quadruple on the designated closed geodesic, condition (G), and
/// a perpendicular perturbation witness when (G) fails. Only `H = 1/2`.
pub fn witness_pipeline(space: &SpaceDescriptor, h: f64) -> Result<WitnessCertificate> {
    witness_pipeline_with(space, h, &DEFAULT_EPS_SCHEDULE)
}

pub fn witness_pipeline_with(
    space: &SpaceDescriptor,
    h: f64,
    eps_schedule: &[f64],
) -> Result<WitnessCertificate> {
    if (h - 0.5).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "the antipodal witness pipeline is specific to H = 1/2, got {h}"
        )));
    }
    space.validate()?;
    check_schedule(eps_schedule)?;
    space.circle_factor()?;
    if let SpaceDescriptor::Warped { warp } = space {
        return warped_witness(warp, eps_schedule);
    }
    let config = antipodal_quadruple(space, 0.0, PI / 2.0)?;
    let g = check_condition_g(space, &config)?;
    let index = *g.failing().last().ok_or(Error::GNotFailing)?;
    let direction = canonical_perpendicular(space, &config, index)?;
    perturb_witness(space, &config, index, &direction, 0.5, eps_schedule)
}

/// Budget for [`search_critical`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub restarts: usize,
    /// Sweeps over all coordinates per restart.
    pub max_sweeps: usize,
    /// Moves bringing two points closer than this fraction of the largest
    /// pairwise distance are rejected.
    pub min_separation_ratio: f64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            restarts: 8,
            max_sweeps: 400,
            min_separation_ratio: 1e-2,
        }
    }
}

/// Best configuration found by [`search_critical`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticalSearch {
    pub configuration: Configuration,
    pub form: f64,
    /// `|form| / (n · max d^{2H})` of the returned configuration.
    pub relative_form: f64,
    /// Largest form over unit zero-sum coefficients at the returned points.
    pub max_form: f64,
    /// `max_form / (n · max d^{2H})`; the search objective is `max(0, −relative_max_form)`.
    pub relative_max_form: f64,
    pub critical: bool,
    pub restart: usize,
}

struct Evaluation {
    objective: f64,
    max_value: f64,
    scale: f64,
}

fn evaluate(space: &SpaceDescriptor, points: &[Point], h: f64) -> Result<Evaluation> {
    let a = power_matrix(space, points, h)?;
    let scale = form_scale(&a);
    let ex = zero_sum_extremes(&a)?;
    Ok(Evaluation {
        objective: if ex.max_value >= 0.0 { 0.0 } else { -ex.max_value / scale },
        max_value: ex.max_value,
        scale,
    })
}

/// Projects chart coordinates back onto the space; `None` when the move leaves it.
fn project(space: &SpaceDescriptor, mut coords: Vec<f64>) -> Option<Point> {
    match space {
        SpaceDescriptor::Sphere { .. } => {
            let n = coords.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n < 1e-8 {
                return None;
            }
            coords.iter_mut().for_each(|x| *x /= n);
        }
        SpaceDescriptor::Hyperbolic { .. } => {
            if coords.iter().map(|x| x * x).sum::<f64>() >= 0.95 * 0.95 {
                return None;
            }
        }
        SpaceDescriptor::Circle { .. } | SpaceDescriptor::FlatTorus { .. } => {
            coords.iter_mut().for_each(|t| *t = wrap_angle(*t));
        }
        SpaceDescriptor::Cylinder { .. } => coords[0] = wrap_angle(coords[0]),
        _ => {}
    }
    Some(Point(coords))
}

fn well_separated(space: &SpaceDescriptor, points: &[Point], ratio: f64) -> bool {
    let mut min = f64::INFINITY;
    let mut max = 0.0f64;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = space.distance_unchecked(&points[i], &points[j]);
            min = min.min(d);
            max = max.max(d);
        }
    }
    max > 0.0 && min >= ratio * max
}

fn local_search(
    space: &SpaceDescriptor,
    mut points: Vec<Point>,
    h: f64,
    budget: &SearchBudget,
) -> Result<(Vec<Point>, Evaluation)> {
    let mut current = evaluate(space, &points, h)?;
    let mut step = 0.25;
    let trial = |points: &[Point], i: usize, k: usize, delta: f64| -> Option<(Point, Evaluation)> {
        let mut coords = points[i].0.clone();
        coords[k] += delta;
        let p = project(space, coords)?;
        let mut moved = points.to_vec();
        moved[i] = p.clone();
        if !well_separated(space, &moved, budget.min_separation_ratio) {
            return None;
        }
        evaluate(space, &moved, h).ok().map(|e| (p, e))
    };
    for _ in 0..budget.max_sweeps {
        if current.objective == 0.0 || step < 1e-12 {
            break;
        }
        let mut improved = false;
        for i in 0..points.len() {
            for k in 0..points[i].dim() {
                let f0 = current.objective;
                let plus = trial(&points, i, k, step);
                let minus = trial(&points, i, k, -step);
                let mut best: Option<(Point, Evaluation)> = None;
                let mut consider = |cand: Option<(Point, Evaluation)>| {
                    if let Some((p, e)) = cand {
                        let better = best.as_ref().map_or(e.objective < f0, |(_, b)| e.objective < b.objective);
                        if better {
                            best = Some((p, e));
                        }
                    }
                };
                // coordinate-wise quadratic probe through (−step, 0, +step)
                if let (Some((_, fp)), Some((_, fm))) = (&plus, &minus) {
                    let curvature = fp.objective + fm.objective - 2.0 * f0;
                    if curvature > 0.0 {
                        let t = step * (fm.objective - fp.objective) / (2.0 * curvature);
                        if t.abs() <= 2.0 * step && t != 0.0 {
                            consider(trial(&points, i, k, t));
                        }
                    }
                }
                consider(plus);
                consider(minus);
                if let Some((p, e)) = best {
                    points[i] = p;
                    current = e;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok((points, current))
}

/// Zero-form coefficients at the given points: the top zero-sum eigenvector
/// when the form is nonpositive, else a rotation between the top and bottom
/// eigenvectors on which the form vanishes.
fn critical_coefficients(space: &SpaceDescriptor, points: &[Point], h: f64) -> Result<Vec<f64>> {
    let a = power_matrix(space, points, h)?;
    let ex = zero_sum_extremes(&a)?;
    let candidates: Vec<Vec<f64>> = if ex.max_value <= 0.0 || ex.min_value >= 0.0 {
        vec![ex.max_vector.clone()]
    } else {
        let t = (-ex.max_value / ex.min_value).sqrt().atan();
        let (s, c) = t.sin_cos();
        [1.0, -1.0]
            .iter()
            .map(|sign| {
                ex.max_vector
                    .iter()
                    .zip(&ex.min_vector)
                    .map(|(u, v)| c * u + sign * s * v)
                    .collect()
            })
            .collect()
    };
    candidates
        .into_iter()
        .find(|c| {
            let max = c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            c.iter().all(|x| x.abs() > 1e-9 * max)
        })
        .ok_or_else(|| Error::InvalidConfiguration("critical coefficients contain zeros".into()))
}

/// Multistart derivative-free search for an `n`-point configuration with
/// vanishing form at exponent `H`.
///
/// For fixed points the zero-sum unit `c` closest to criticality is the top
/// eigenvector of the restricted power matrix; the points then move by
/// coordinate-wise compass and quadratic probes to push that top eigenvalue
/// up to zero.
pub fn search_critical(
    space: &SpaceDescriptor,
    n: usize,
    h: f64,
    budget: &SearchBudget,
    seed: u64,
) -> Result<CriticalSearch> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!(
            "critical search needs n >= 3 (two-point forms are strictly negative), got {n}"
        )));
    }
    if !space.is_analytic() {
        return Err(Error::AnalyticUnavailable("warped"));
    }
    crate::definiteness::check_hurst(h)?;
    if budget.restarts == 0 {
        return Err(Error::BudgetExhausted("zero restarts".into()));
    }

    let results: Vec<(usize, Vec<Point>, Evaluation)> = (0..budget.restarts)
        .into_par_iter()
        .filter_map(|restart| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(restart as u64);
            let start = (0..64).find_map(|_| {
                let pts: Vec<Point> = (0..n).map(|_| space.random_point(&mut rng)).collect();
                well_separated(space, &pts, budget.min_separation_ratio).then_some(pts)
            })?;
            let (pts, e) = local_search(space, start, h, budget).ok()?;
            Some((restart, pts, e))
        })
        .collect();

    let mut ordered = results;
    ordered.sort_by(|a, b| a.2.objective.total_cmp(&b.2.objective).then(a.0.cmp(&b.0)));
    for (restart, points, eval) in ordered {
        let Ok(coefficients) = critical_coefficients(space, &points, h) else { continue };
        let Ok(configuration) = Configuration::new(space, points, coefficients) else { continue };
        let form = quadratic_form(space, &configuration, h)?;
        let relative_form = form.abs() / eval.scale;
        return Ok(CriticalSearch {
            configuration,
            form,
            relative_form,
            max_form: eval.max_value,
            relative_max_form: eval.max_value / eval.scale,
            critical: relative_form < CRITICAL_REL_TOL,
            restart,
        });
    }
    Err(Error::BudgetExhausted(format!(
        "no valid configuration in {} restarts",
        budget.restarts
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::definiteness::quadratic_form;
    use rand::Rng;

    const TAU: f64 = 2.0 * PI;

    #[test]
    fn quadruple_on_circle_and_cylinder_is_critical() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for space in [SpaceDescriptor::circle(TAU), SpaceDescriptor::cylinder(TAU), SpaceDescriptor::circle(2.0)] {
            for _ in 0..50 {
                let base = rng.random_range(0.0..TAU);
                let a = rng.random_range(0.01..PI - 0.01);
                let q = antipodal_quadruple(&space, base, a).unwrap();
                assert!(quadratic_form(&space, &q, 0.5).unwrap().abs() < 1e-12);
            }
        }
        let cyl = SpaceDescriptor::cylinder(TAU);
        assert!(quadratic_form(&cyl, &antipodal_quadruple(&cyl, 0.0, 1.0).unwrap(), 0.5).unwrap().abs() < 1e-12);
    }

    #[test]
    fn quadruple_rejects_degenerate_offsets() {
        let c = SpaceDescriptor::circle(TAU);
        assert_eq!(antipodal_quadruple(&c, 0.0, PI), Err(Error::DegenerateOffset(PI)));
        assert_eq!(antipodal_quadruple(&c, 0.0, 0.0), Err(Error::DegenerateOffset(0.0)));
        assert_eq!(
            antipodal_quadruple(&SpaceDescriptor::euclidean(2), 0.0, 1.0),
            Err(Error::NoCircleFactor)
        );
    }

    #[test]
    fn condition_g_examples() {
        let cyl = SpaceDescriptor::cylinder(TAU);
        let q = antipodal_quadruple(&cyl, 0.0, PI / 2.0).unwrap();
        let g = check_condition_g(&cyl, &q).unwrap();
        assert_eq!(g.span_dims, vec![1, 1, 1, 1]);
        assert!(!g.passes);

        let s = SpaceDescriptor::sphere(2, 1.0);
        let q = antipodal_quadruple(&s, 0.0, PI / 2.0).unwrap();
        let g = check_condition_g(&s, &q).unwrap();
        assert_eq!(g.span_dims, vec![2, 2, 2, 2]);
        assert!(g.passes);

        let e = SpaceDescriptor::euclidean(2);
        let c = Configuration::new(
            &e,
            vec![Point::new([0.0, 0.0]), Point::new([1.0, 0.0]), Point::new([0.0, 1.0])],
            vec![1.0, -0.5, -0.5],
        )
        .unwrap();
        let g = check_condition_g(&e, &c).unwrap();
        assert!(g.passes);
        assert!(g.span_dims.iter().all(|&d| d <= e.dim()));
    }

    #[test]
    fn cylinder_witness_matches_pairwise_oracle() {
        let cyl = SpaceDescriptor::cylinder(TAU);
        let q = antipodal_quadruple(&cyl, 0.0, PI / 2.0).unwrap();
        let dir = cyl.tangent(&q.points[3], vec![0.0, 1.0]).unwrap();
        let cert = perturb_witness(&cyl, &q, 3, &dir, 0.5, &[1e-2, 1e-3, 1e-4]).unwrap();
        assert!(cert.certified);
        assert_eq!(cert.certified_epsilon, Some(1e-4));
        assert_eq!(cert.expected_slope, 0.5);
        for (k, eps) in [1e-2f64, 1e-3, 1e-4].iter().enumerate() {
            let c = &cert.perturbed[k].coefficients;
            assert_eq!(c.iter().sum::<f64>(), 0.0);
            assert_eq!(c[3], -0.5);
            assert_eq!(c[4], -0.5);
            // P5 sees the waist points at arcs π/2, π, π/2, 0 plus height ε
            let arcs = [PI / 2.0, PI, PI / 2.0];
            let mut oracle = 0.0;
            let base = [1.0, -1.0, 1.0];
            for (ci, arc) in base.iter().zip(arcs) {
                oracle += -ci * ((arc * arc + eps * eps).sqrt() - arc);
            }
            oracle += eps / 2.0;
            assert!((cert.forms[k] - oracle).abs() < 1e-12, "{} vs {}", cert.forms[k], oracle);
        }
        assert!((cert.slope_estimates[2] - 0.5).abs() < 1e-3);
    }

    #[test]
    fn witness_preconditions() {
        let e = SpaceDescriptor::euclidean(1);
        let c = Configuration::new(&e, vec![Point::new([0.0]), Point::new([2.0])], vec![1.0, -1.0]).unwrap();
        let dir = e.tangent(&c.points[1], vec![1.0]).unwrap();
        assert!(matches!(
            perturb_witness(&e, &c, 1, &dir, 0.5, &DEFAULT_EPS_SCHEDULE),
            Err(Error::NotCritical { .. })
        ));

        let cyl = SpaceDescriptor::cylinder(TAU);
        let q = antipodal_quadruple(&cyl, 0.0, PI / 2.0).unwrap();
        let along = cyl.tangent(&q.points[3], vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            perturb_witness(&cyl, &q, 3, &along, 0.5, &DEFAULT_EPS_SCHEDULE),
            Err(Error::DirectionNotPerpendicular(_))
        ));
        let up = cyl.tangent(&q.points[3], vec![0.0, 1.0]).unwrap();
        assert!(perturb_witness(&cyl, &q, 3, &up, 1.0, &DEFAULT_EPS_SCHEDULE).is_err());
    }

    #[test]
    fn pipeline_outcomes() {
        let cert = witness_pipeline(&SpaceDescriptor::cylinder(TAU), 0.5).unwrap();
        assert!(cert.certified);
        assert_eq!(cert.direction, vec![0.0, 1.0]);

        let torus = witness_pipeline(&SpaceDescriptor::flat_torus(vec![TAU, TAU]), 0.5).unwrap();
        assert!(torus.certified);
        assert!(torus.forms.iter().all(|f| *f > 0.0));

        assert_eq!(witness_pipeline(&SpaceDescriptor::sphere(2, 1.0), 0.5).unwrap_err(), Error::GNotFailing);
        assert_eq!(witness_pipeline(&SpaceDescriptor::circle(TAU), 0.5).unwrap_err(), Error::GNotFailing);
        assert_eq!(witness_pipeline(&SpaceDescriptor::hyperbolic(2), 0.5).unwrap_err(), Error::NoCircleFactor);
        assert!(witness_pipeline(&SpaceDescriptor::cylinder(TAU), 0.4).is_err());
    }

    #[test]
    fn warped_pipeline_certifies_with_bounds() {
        let warp = WarpFunction::Quadratic { a: 1.0 };
        let check = verify_waist_minimality(&warp).unwrap();
        assert!(check.verified, "{check:?}");
        let cert = witness_pipeline(&SpaceDescriptor::warped(warp), 0.5).unwrap();
        assert!(cert.certified);
        let upper = cert.forms_upper.as_ref().unwrap();
        for (lo, hi) in cert.forms.iter().zip(upper) {
            assert!(lo <= hi);
        }
        assert!(cert.base_config.form.abs() < 1e-12);
    }

    #[test]
    fn split_keeps_zero_sum() {
        let c = SpaceDescriptor::circle(TAU);
        let q = antipodal_quadruple(&c, 0.3, 1.1).unwrap();
        let s = split_configuration(&q, 2, Point::new([5.0]));
        assert_eq!(s.coefficients, vec![1.0, -1.0, 0.5, -1.0, 0.5]);
        assert_eq!(s.coefficients.iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn search_rejects_small_n() {
        assert!(search_critical(&SpaceDescriptor::circle(TAU), 2, 0.5, &SearchBudget::default(), 1).is_err());
    }

    #[test]
    fn search_finds_circle_critical_quadruple() {
        let r = search_critical(&SpaceDescriptor::circle(TAU), 4, 0.5, &SearchBudget::default(), 42).unwrap();
        assert!(r.critical, "relative form {}", r.relative_form);
        assert!(r.relative_form < 1e-8);
    }

    #[test]
    fn search_on_plane_stays_negative() {
        let r = search_critical(&SpaceDescriptor::euclidean(2), 4, 0.5, &SearchBudget::default(), 42).unwrap();
        assert!(!r.critical);
        assert!(r.max_form < 0.0);
        assert!(r.relative_max_form < -1e-6, "{}", r.relative_max_form);
    }
}
