//! Grid bracketing of the fractional index `β = sup{2H : d^{2H} negative definite}`.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{centered_gram, Configuration, DEFAULT_TOL_SCALE};
use crate::configurations::{antipodal_quadruple, search_critical, witness_pipeline, SearchBudget};
use crate::error::{Error, Result};
use crate::spaces::{fibonacci_sphere, Point, SpaceDescriptor};

/// How candidate point sets are drawn at each grid exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PointSampler {
    /// `n` points from [`SpaceDescriptor::random_point`].
    Uniform { n: usize },
    /// `n` equally spaced points on the designated closed geodesic, or a
    /// Fibonacci lattice on `S²`.
    Equispaced { n: usize },
}

impl PointSampler {
    fn draw(&self, space: &SpaceDescriptor, rng: &mut ChaCha8Rng) -> Result<Vec<Point>> {
        match *self {
            PointSampler::Uniform { n } => Ok((0..n).map(|_| space.random_point(rng)).collect()),
            PointSampler::Equispaced { n } => match space {
                SpaceDescriptor::Sphere { d: 2, r } => Ok(fibonacci_sphere(n)
                    .into_iter()
                    .map(|p| Point(p.0.iter().map(|x| x * r).collect()))
                    .collect()),
                _ => (0..n)
                    .map(|k| space.waist_point(2.0 * PI * k as f64 / n as f64))
                    .collect(),
            },
        }
    }
}

/// Parameters of [`estimate_fractional_index`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexSearch {
    pub h_min: f64,
    pub h_max: f64,
    pub step: f64,
    pub sampler: PointSampler,
    /// Sampled point sets per grid exponent.
    pub point_sets: usize,
    /// Restarts of the critical-configuration search per grid exponent; 0 disables it.
    pub search_restarts: usize,
    pub search_points: usize,
    pub tol_scale: f64,
    pub seed: u64,
}

impl Default for IndexSearch {
    fn default() -> Self {
        IndexSearch {
            h_min: 0.05,
            h_max: 1.0,
            step: 0.05,
            sampler: PointSampler::Uniform { n: 40 },
            point_sets: 4,
            search_restarts: 4,
            search_points: 4,
            tol_scale: DEFAULT_TOL_SCALE,
            seed: 0,
        }
    }
}

/// Which candidate produced the certified violation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationSource {
    SampledSet,
    AntipodalQuadruple,
    PerturbationWitness,
    CriticalSearch,
}

/// One-sided evidence about the fractional index on a grid of exponents.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndexBracket {
    /// Largest grid exponent below `violation_H` where no candidate exceeded tolerance.
    #[serde(rename = "evidence_H")]
    pub evidence_h: Option<f64>,
    /// Smallest grid exponent with a certified positive form.
    #[serde(rename = "violation_H")]
    pub violation_h: Option<f64>,
    pub step: f64,
    /// `[2·evidence_H, 2·violation_H]`.
    pub beta_bracket: [Option<f64>; 2],
    /// Grid exponents where some eigenvalue exceeded tolerance without clearing
    /// the certification margin.
    #[serde(rename = "inconclusive_H")]
    pub inconclusive_h: Vec<f64>,
    /// Configuration with positive form at `violation_H`.
    pub witness: Option<Configuration>,
    pub witness_form: Option<f64>,
    pub source: Option<ViolationSource>,
    pub caveat: String,
}

const CAVEAT: &str = "evidence_H only records that no violation was found among the sampled \
and searched configurations; it is not a proof of negative definiteness";

enum Outcome {
    Clean,
    Inconclusive,
    Violation(Configuration, f64, ViolationSource),
}

fn round_grid(h: f64) -> f64 {
    (h * 1e9).round() / 1e9
}

fn grid(search: &IndexSearch) -> Result<Vec<f64>> {
    if !(search.step.is_finite() && search.step >= 1e-3) {
        return Err(Error::InvalidParameter(format!(
            "grid step must be >= 1e-3, got {}",
            search.step
        )));
    }
    if !(search.h_min > 0.0 && search.h_min <= search.h_max && search.h_max <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < h_min <= h_max <= 1, got [{}, {}]",
            search.h_min, search.h_max
        )));
    }
    let count = ((search.h_max - search.h_min) / search.step + 1e-9).floor() as usize;
    Ok((0..=count)
        .map(|k| round_grid(search.h_min + k as f64 * search.step))
        .filter(|h| *h <= 1.0)
        .collect())
}

/// Certified violation on `points`, or whether the test was inconclusive.
fn check_points(
    space: &SpaceDescriptor,
    points: &[Point],
    h: f64,
    tol_scale: f64,
    source: ViolationSource,
) -> Result<Outcome> {
    let report = centered_gram(space, points, h, tol_scale)?;
    let inconclusive = report.is_inconclusive();
    if report.is_certified() {
        if let (Some(c), Some(f)) = (report.violating_coefficients, report.violating_form) {
            if let Ok(config) = Configuration::new(space, points.to_vec(), c) {
                return Ok(Outcome::Violation(config, f, source));
            }
        }
    }
    Ok(if inconclusive { Outcome::Inconclusive } else { Outcome::Clean })
}

fn classify(space: &SpaceDescriptor, search: &IndexSearch, h: f64, grid_index: usize) -> Result<(Outcome, bool)> {
    let mut inconclusive = false;
    let mut evaluated = false;
    let mut note = |o: Outcome| -> Option<Outcome> {
        evaluated = true;
        match o {
            Outcome::Clean => None,
            Outcome::Inconclusive => {
                inconclusive = true;
                None
            }
            v => Some(v),
        }
    };

    if space.circle_factor().is_ok() && space.is_analytic() {
        let q = antipodal_quadruple(space, 0.0, PI / 2.0)?;
        if let Some(v) = note(check_points(space, &q.points, h, search.tol_scale, ViolationSource::AntipodalQuadruple)?) {
            return Ok((v, true));
        }
    }

    if (h - 0.5).abs() < 1e-12 {
        match witness_pipeline(space, 0.5) {
            Ok(cert) => {
                let k = cert
                    .eps_values
                    .iter()
                    .position(|e| Some(*e) == cert.certified_epsilon)
                    .unwrap_or(0);
                let config = cert.perturbed[k].clone();
                return Ok((
                    Outcome::Violation(config, cert.forms[k], ViolationSource::PerturbationWitness),
                    true,
                ));
            }
            Err(e) => log::debug!("witness pipeline at H=0.5: {e}"),
        }
    }

    let stream_seed = search.seed.wrapping_add(grid_index as u64);
    for set in 0..search.point_sets {
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed);
        rng.set_stream(set as u64);
        let points = search.sampler.draw(space, &mut rng)?;
        if let Some(v) = note(check_points(space, &points, h, search.tol_scale, ViolationSource::SampledSet)?) {
            return Ok((v, true));
        }
        if matches!(search.sampler, PointSampler::Equispaced { .. }) {
            break;
        }
    }

    if search.search_restarts > 0 && space.is_analytic() {
        let budget = SearchBudget {
            restarts: search.search_restarts,
            ..SearchBudget::default()
        };
        match search_critical(space, search.search_points, h, &budget, stream_seed) {
            Ok(found) => {
                let pts = found.configuration.points;
                if let Some(v) = note(check_points(space, &pts, h, search.tol_scale, ViolationSource::CriticalSearch)?) {
                    return Ok((v, true));
                }
            }
            Err(e) => log::debug!("critical search at H={h}: {e}"),
        }
    }

    if !evaluated {
        return Ok((Outcome::Clean, false));
    }
    Ok((if inconclusive { Outcome::Inconclusive } else { Outcome::Clean }, true))
}

/// Scans the grid upward and stops at the first certified violation.
pub fn estimate_fractional_index(space: &SpaceDescriptor, search: &IndexSearch) -> Result<IndexBracket> {
    space.validate()?;
    let hs = grid(search)?;
    let mut evidence_h = None;
    let mut inconclusive_h = Vec::new();
    let mut any_evaluated = false;
    for (k, &h) in hs.iter().enumerate() {
        let (outcome, evaluated) = classify(space, search, h, k)?;
        any_evaluated |= evaluated;
        match outcome {
            Outcome::Clean if evaluated => evidence_h = Some(h),
            Outcome::Clean => {}
            Outcome::Inconclusive => inconclusive_h.push(h),
            Outcome::Violation(config, form, source) => {
                log::info!("certified violation at H={h} from {source:?}");
                return Ok(IndexBracket {
                    evidence_h,
                    violation_h: Some(h),
                    step: search.step,
                    beta_bracket: [evidence_h.map(|e| round_grid(2.0 * e)), Some(round_grid(2.0 * h))],
                    inconclusive_h,
                    witness: Some(config),
                    witness_form: Some(form),
                    source: Some(source),
                    caveat: CAVEAT.into(),
                });
            }
        }
    }
    if !any_evaluated {
        return Err(Error::BudgetExhausted(
            "no candidate configuration could be evaluated on the grid".into(),
        ));
    }
    Ok(IndexBracket {
        evidence_h,
        violation_h: None,
        step: search.step,
        beta_bracket: [evidence_h.map(|e| round_grid(2.0 * e)), None],
        inconclusive_h,
        witness: None,
        witness_form: None,
        source: None,
        caveat: CAVEAT.into(),
    })
}
